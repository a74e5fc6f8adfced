"""Versioned JSON model format.

Layout (schema 1)::

    {"format": "ppforest-model", "schema": 1,
     "config": {...constructor parameters...},
     "classes": [...], "feature_names": [...], "n_features": p, "m_vars": m,
     "n_train": n, "training_fingerprint": "<sha256>",
     "standardization": {"mean": [...], "scale": [...]} | null,
     "tree_oob_accuracy": [...], "oob_error": x | null,
     "trees": [{"seed": s, "oob": [row ids], "nodes": [node, ...]}, ...]}

A leaf node is ``{"leaf": class_id, "classes": [...], "forced": bool}``; a
split node carries ``alpha`` as a ``{"col": coef}`` map over the sampled
columns plus cutoff, rule, left_sign, child ids and bookkeeping. Floats
are written with ``repr`` precision so a reload predicts bit-identically.
"""

import json
import math

import numpy as np

from .dataio import BootstrapSample, Standardization
from .exceptions import ModelFormatError
from .forest import PPForestClassifier, TreeRandomness
from .tree import Leaf, PPTree, Split

FORMAT = "ppforest-model"
SCHEMA_VERSION = 1


def _f(x):
    x = float(x)
    return None if math.isnan(x) else x


def _node_to_dict(nd):
    if isinstance(nd, Leaf):
        return {"leaf": nd.label, "classes": list(nd.classes), "forced": nd.forced}
    return {
        "alpha": {str(int(c)): float(a) for c, a in zip(nd.cols, nd.coef)},
        "cutoff": float(nd.cutoff),
        "rule": nd.rule,
        "left_sign": nd.left_sign,
        "projected_mean_g1": float(nd.projected_mean_g1),
        "index_first": float(nd.index_first),
        "index_second": float(nd.index_second),
        "classes": list(nd.classes),
        "g1": list(nd.g1),
        "g2": list(nd.g2),
        "left": nd.left,
        "right": nd.right,
    }


def _node_from_dict(d):
    if "leaf" in d:
        return Leaf(int(d["leaf"]), tuple(d["classes"]), bool(d.get("forced", False)))
    alpha = d["alpha"]
    return Split(cols=np.array([int(c) for c in alpha], dtype=np.intp),
                 coef=np.array(list(alpha.values()), dtype=float),
                 cutoff=float(d["cutoff"]), rule=int(d["rule"]), left_sign=d["left_sign"],
                 projected_mean_g1=float(d["projected_mean_g1"]),
                 index_first=float(d["index_first"]), index_second=float(d["index_second"]),
                 classes=tuple(d["classes"]), g1=tuple(d["g1"]), g2=tuple(d["g2"]),
                 left=int(d["left"]), right=int(d["right"]))


def model_to_dict(model: PPForestClassifier, feature_names=None):
    if feature_names is None:
        feature_names = getattr(model, "feature_names_", None)
    params = model.get_params()
    params.pop("n_jobs")
    stats = model.stats_
    return {
        "format": FORMAT,
        "schema": SCHEMA_VERSION,
        "config": params,
        "classes": model.classes_.tolist(),
        "feature_names": list(feature_names) if feature_names is not None else None,
        "n_features": model.n_features_in_,
        "m_vars": model.m_vars_,
        "n_train": model.n_train_,
        "training_fingerprint": model.training_fingerprint_,
        "standardization": None if stats is None else {
            "mean": stats.mean.tolist(), "scale": stats.scale.tolist()},
        "tree_oob_accuracy": model.tree_oob_accuracy_.tolist(),
        "oob_error": _f(model.oob_error_),
        "trees": [{"seed": r.tree_seed,
                   "oob": np.flatnonzero(r.bootstrap.oob_mask).tolist(),
                   "nodes": [_node_to_dict(nd) for nd in t.nodes]}
                  for t, r in zip(model.trees_, model.randomness_)],
    }


def model_from_dict(doc) -> PPForestClassifier:
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise ModelFormatError("not a ppforest model document")
    if doc.get("schema") != SCHEMA_VERSION:
        raise ModelFormatError(f"unsupported model schema {doc.get('schema')!r}")
    try:
        model = PPForestClassifier(**doc["config"])
        p, n = int(doc["n_features"]), int(doc["n_train"])
        G = len(doc["classes"])
        model.classes_ = np.array(doc["classes"])
        model.n_features_in_ = p
        model.feature_names_ = doc.get("feature_names")
        model.m_vars_ = int(doc["m_vars"])
        model.n_train_ = n
        model.training_fingerprint_ = doc["training_fingerprint"]
        st = doc["standardization"]
        model.stats_ = None if st is None else Standardization(
            np.array(st["mean"], dtype=float), np.array(st["scale"], dtype=float))
        model.trees_, model.randomness_ = [], []
        masks = np.zeros((len(doc["trees"]), n), dtype=bool)
        for k, td in enumerate(doc["trees"]):
            nodes = [_node_from_dict(nd) for nd in td["nodes"]]
            tree = PPTree(nodes, p, G, [nd.cols for nd in nodes if isinstance(nd, Split)])
            masks[k, td["oob"]] = True
            model.trees_.append(tree)
            # bootstrap indices are not stored; replay tree_seed on the training labels to recover them
            model.randomness_.append(TreeRandomness(int(td["seed"]), BootstrapSample(None, masks[k]),
                                                    tree.column_draws))
        model.oob_masks_ = masks
        model.tree_oob_accuracy_ = np.array(doc["tree_oob_accuracy"], dtype=float)
        oe = doc["oob_error"]
        model.oob_error_ = float("nan") if oe is None else float(oe)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ModelFormatError(f"corrupted model document: {exc}") from exc
    return model


def dumps(model, feature_names=None):
    return json.dumps(model_to_dict(model, feature_names), separators=(",", ":"))


def loads(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file is not valid JSON: {exc}") from exc
    return model_from_dict(doc)


def save_model(model, path, feature_names=None):
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps(model, feature_names))
        f.write("\n")


def load_model(path):
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as exc:
        raise ModelFormatError(f"cannot read model file: {exc}") from exc
    return loads(text)

