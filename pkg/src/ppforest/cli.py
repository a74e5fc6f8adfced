"""Command-line interface: ``ppforest <command> [options]``.

Commands
--------
train      fit a forest on a labelled CSV and write a JSON model
predict    predicted class and vote proportions for every row of a CSV
diagnose   importance, vote, proximity and MDS tables for a model's training data
simulate   rotated-triangle sweep comparing PPF with the axis-aligned baseline
bench      repeated train/test resampling on a dataset
sweep      OOB error against tree count, or test error against var fraction

Every forest option can also be set through an environment variable named
``PPF_<OPTION>`` (``PPF_TREES``, ``PPF_VAR_FRACTION``, ``PPF_INDEX``,
``PPF_LAMBDA``, ``PPF_RULE``, ``PPF_SEED``, ``PPF_THREADS``, ``PPF_LABEL``).
Command-line flags take precedence over the environment.

Failures print a single line ``ppforest: <CODE>: <message>`` to stderr and
exit with the status listed in ``EXIT_CODES``.
"""

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import diagnostics, serialize, simbench
from ._validation import normalize_var_fraction
from .dataio import LABEL_COLUMN, load_csv, load_predictors, resolve_dataset
from .exceptions import (DataError, DataMismatchError, ModelFormatError, PPForestError,
                         TreeFitError)
from .forest import PPForestClassifier
from .pp_index import check_lambda
from .simbench import ExperimentError

EXIT_CODES = {
    "E_USAGE": 2,
    "E_DATA": 3,
    "E_MODEL": 4,
    "E_MISMATCH": 5,
    "E_EXPERIMENT": 6,
    "E_FIT": 7,
    "E_PPF": 1,
}
ENV_PREFIX = "PPF_"
DEFAULT_ANGLES = "0,15,30,45,60,75,90"


class CommandError(Exception):
    def __init__(self, code, message):
        self.code = code
        super().__init__(message)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CommandError("E_USAGE", message)


def _env(name, default):
    return os.environ.get(ENV_PREFIX + name, default)


def _lambda(text):
    try:
        v = float(text)
        check_lambda(v)
    except (ValueError, DataError) as exc:
        raise argparse.ArgumentTypeError(f"lambda must lie in [0, 1): {text!r}") from exc
    return v


def _rule(text):
    try:
        v = int(text)
    except ValueError:
        v = 0
    if not 1 <= v <= 8:
        raise argparse.ArgumentTypeError(f"rule must be an integer in 1..8: {text!r}")
    return v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        v = 0
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer: {text!r}")
    return v


def _var_fraction(text):
    try:
        return normalize_var_fraction(text)
    except (ValueError, TypeError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _var_fraction_list(text):
    return [_var_fraction(t.strip()) for t in text.split(",") if t.strip()]


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from exc


def _int_list(text):
    return [_positive_int(t.strip()) for t in text.split(",") if t.strip()]


def _add_common(p, var_fraction=True):
    p.add_argument("--trees", type=_positive_int, default=_env("TREES", "500"),
                   help="trees per forest (default 500)")
    if var_fraction:
        p.add_argument("--var-fraction", type=_var_fraction,
                       default=_env("VAR_FRACTION", "rf-default"),
                       help="share of variables sampled per node, or rf-default "
                            "(round(sqrt(p)) variables; default)")
    p.add_argument("--index", choices=("lda", "pda"), default=_env("INDEX", "lda"),
                   help="projection pursuit index (default lda)")
    p.add_argument("--lambda", dest="lambda_", type=_lambda, default=_env("LAMBDA", "0.1"),
                   help="PDA shrinkage in [0, 1) (default 0.1)")
    p.add_argument("--rule", type=_rule, default=_env("RULE", "1"),
                   help="cutoff rule 1..8 (default 1)")
    p.add_argument("--seed", type=int, default=_env("SEED", "0"), help="master seed (default 0)")
    p.add_argument("--threads", type=_positive_int, default=_env("THREADS", "1"),
                   help="worker threads (default 1); results do not depend on it")


def build_parser():
    parser = _Parser(prog="ppforest", description="Projection pursuit random forests.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="fit a forest and write a model file")
    p.add_argument("--data", required=True, help="labelled CSV file or bundled dataset name")
    p.add_argument("--label", default=_env("LABEL", LABEL_COLUMN),
                   help="label column name or index (default 'class')")
    p.add_argument("--out", required=True, help="model file to write")
    _add_common(p)

    p = sub.add_parser("predict", help="predict rows of a CSV with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="CSV of predictors; a label column is ignored")
    p.add_argument("--label", default=_env("LABEL", LABEL_COLUMN))
    p.add_argument("--out", required=True, help="predictions CSV to write")

    p = sub.add_parser("diagnose", help="write diagnostics for a model's training data")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="the CSV the model was trained on")
    p.add_argument("--label", default=_env("LABEL", LABEL_COLUMN))
    p.add_argument("--out", "--outdir", dest="out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=_env("SEED", "0"),
                   help="seed for permutation importance (default 0)")
    p.add_argument("--oob-proximity", action="store_true",
                   help="count proximity only over trees where both rows are out of bag")
    p.add_argument("--mds-dims", type=_positive_int, default=2)

    p = sub.add_parser("simulate", help="rotated-triangle comparison with the baseline")
    p.add_argument("--angles", type=_float_list, default=DEFAULT_ANGLES)
    p.add_argument("--reps", type=_positive_int, default=20)
    p.add_argument("--n-per-class", type=_positive_int, default=50)
    p.add_argument("--raster", type=_positive_int, default=0, metavar="RES",
                   help="also write RES x RES decision rasters of replicate 0 at each angle")
    p.add_argument("--out", "--outdir", dest="out", required=True, help="output directory")
    _add_common(p, var_fraction=False)
    p.add_argument("--var-fraction", type=_var_fraction,
                   default=_env("VAR_FRACTION", str(simbench.SIM_PPF_DEFAULTS["var_fraction"])),
                   help="PPF var fraction (default 1.0: both predictors at every node)")

    p = sub.add_parser("bench", help="resampled test error on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--label", default=_env("LABEL", LABEL_COLUMN))
    p.add_argument("--reps", type=_positive_int, default=50)
    p.add_argument("--var-fractions", type=_var_fraction_list, default="0.6,0.9,rf-default",
                   help="PPF var fractions to try; the best is reported")
    p.add_argument("--out", "--outdir", dest="out", required=True, help="output directory")
    _add_common(p, var_fraction=False)

    p = sub.add_parser("sweep", help="parameter sweeps")
    p.add_argument("--kind", choices=("trees", "vars"), required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--label", default=_env("LABEL", LABEL_COLUMN))
    p.add_argument("--reps", type=_positive_int, default=10)
    p.add_argument("--counts", type=_int_list, default="10,25,50,100,200,300,400,500",
                   help="tree counts for --kind trees")
    p.add_argument("--fractions", type=_var_fraction_list,
                   default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0",
                   help="var fractions for --kind vars")
    p.add_argument("--out", "--outdir", dest="out", required=True, help="output directory")
    _add_common(p)
    return parser


def _forest_params(args):
    params = dict(n_estimators=args.trees, index=args.index, lambda_=args.lambda_,
                  rule=args.rule, random_state=args.seed, n_jobs=args.threads)
    if hasattr(args, "var_fraction"):
        params["var_fraction"] = args.var_fraction
    return params


def _fmt(x):
    x = float(x)
    return "" if math.isnan(x) else repr(x)


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _outdir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_train(args):
    d = resolve_dataset(args.data, args.label)
    labels = np.asarray(d.class_names)[d.y]
    model = PPForestClassifier(**_forest_params(args)).fit(d.X, labels)
    serialize.save_model(model, args.out, d.feature_names)
    config = model.get_params()
    config.pop("n_jobs")
    print(json.dumps({"oob_error": model.oob_error_, "n_train": model.n_train_,
                      "m_vars": model.m_vars_, "classes": d.class_names, "config": config}))


def _label_for(path, label):
    with open(path, newline="", encoding="utf-8") as f:
        header = next(csv.reader(f), [])
    return label if label in [h.strip() for h in header] else None


def cmd_predict(args):
    model = serialize.load_model(args.model)
    X = load_predictors(args.data, drop_column=_label_for(args.data, args.label))
    if X.shape[1] != model.n_features_in_:
        raise DataMismatchError(f"model expects {model.n_features_in_} predictors, "
                                f"{args.data} has {X.shape[1]}")
    votes = model.predict_proba(X)
    pred = model.classes_[np.argmax(votes, axis=1)] if len(X) else []
    header = ["row", "predicted"] + [f"vote_{c}" for c in model.classes_]
    _write_rows(args.out, header,
                ([i, pred[i]] + [_fmt(v) for v in votes[i]] for i in range(len(X))))


def cmd_diagnose(args):
    model = serialize.load_model(args.model)
    classes = [str(c) for c in model.classes_]
    extra = sorted(set(load_csv(args.data, args.label).class_names) - set(classes))
    if extra:
        raise DataMismatchError(f"labels {extra} are not classes of this model")
    d = load_csv(args.data, args.label, class_names=classes)
    if d.n_samples != model.n_train_ or d.n_features != model.n_features_in_:
        raise DataMismatchError("data shape differs from the model's training data")
    if d.fingerprint() != model.training_fingerprint_:
        raise DataMismatchError("data does not match the model's training fingerprint")
    rep = diagnostics.diagnose(model, d.X, model.classes_[d.y], seed=args.seed,
                               oob_proximity=args.oob_proximity)
    out = _outdir(args.out)
    names = model.feature_names_ or d.feature_names or [f"X{j + 1}" for j in range(d.n_features)]
    coef_first = rep.imp_pptree_per_tree[0]
    _write_rows(out / "importance.csv",
                ["variable", "permuted", "coef_first_tree", "coef_forest_avg", "coef_forest_weighted"],
                ([names[j], _fmt(rep.imp_permuted[j]), _fmt(coef_first[j]),
                  _fmt(rep.imp_forest_avg[j]), _fmt(rep.imp_forest_weighted[j])]
                 for j in range(d.n_features)))
    _write_rows(out / "importance_per_tree.csv", ["tree"] + list(names),
                ([k] + [_fmt(v) for v in row] for k, row in enumerate(rep.imp_pptree_per_tree)))
    _write_rows(out / "votes.csv", ["row", "class"] + [f"vote_{c}" for c in classes],
                ([i, classes[d.y[i]]] + [_fmt(v) for v in rep.vote_matrix[i]]
                 for i in range(d.n_samples)))
    _write_rows(out / "proximity.csv", ["row"] + [str(i) for i in range(d.n_samples)],
                ([i] + [_fmt(v) for v in row] for i, row in enumerate(rep.proximity)))
    summary = {"oob_error": rep.oob_error, "n_rows": d.n_samples, "n_trees": len(model.trees_),
               "classes": classes, "never_oob_rows": rep.never_oob.tolist(),
               "top_variable_forest_avg": names[int(np.argmax(rep.imp_forest_avg))]}
    try:
        coords = diagnostics.classical_mds(rep.proximity, args.mds_dims)
        _write_rows(out / "mds.csv", ["row", "class"] + [f"mds{c + 1}" for c in range(coords.shape[1])],
                    ([i, classes[d.y[i]]] + [_fmt(v) for v in coords[i]]
                     for i in range(d.n_samples)))
    except ValueError as exc:
        summary["mds_skipped"] = str(exc)
    if len(classes) >= 3:
        seen = ~np.isnan(rep.vote_matrix).any(axis=1)
        tern = np.full((d.n_samples, len(classes) - 1), np.nan)
        tern[seen] = diagnostics.ternary_coords(rep.vote_matrix[seen])
        _write_rows(out / "ternary.csv", ["row", "class"] + [f"h{c + 1}" for c in range(tern.shape[1])],
                    ([i, classes[d.y[i]]] + [_fmt(v) for v in tern[i]]
                     for i in range(d.n_samples)))
    with open(out / "summary.json", "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2)
        f.write("\n")
    print(json.dumps({"oob_error": rep.oob_error, "out": str(out)}))


def _print_summary(result):
    for s in result.summary():
        key = "oob" if math.isnan(s["mean_test_error"]) else "test"
        print(f"{s['method']} {s['axis']}={s['value']} reps={s['reps']} "
              f"{key}_error={s[f'mean_{key}_error']:.4f} se={s[f'se_{key}_error']:.4f}")


def cmd_simulate(args):
    out = _outdir(args.out)
    ppf = _forest_params(args)
    ppf.pop("n_jobs")
    seed = ppf.pop("random_state")
    rf = {"n_estimators": args.trees}
    sim = {"n_per_class": args.n_per_class}
    result = simbench.run_angle_sweep(args.angles, args.reps, seed=seed, ppf_params=ppf,
                                      rf_params=rf, sim=sim, n_jobs=args.threads)
    result.to_csv(out / "results.csv")
    result.summary_csv(out / "summary.csv")
    if args.raster:
        for angle in args.angles:
            d = simbench.gen_triangle(simbench.TriangleSimConfig(
                angle_deg=angle, seed=simbench.derive_seed(seed, 0), **sim))
            lo, hi = d.X.min(axis=0), d.X.max(axis=0)
            pad = 0.05 * (hi - lo)
            bounds = (lo[0] - pad[0], hi[0] + pad[0], lo[1] - pad[1], hi[1] + pad[1])
            models = {simbench.PPF: PPForestClassifier(random_state=seed, **ppf),
                      simbench.RF: simbench.AxisForestClassifier(random_state=seed, **rf)}
            for name, m in models.items():
                m.fit(d.X, d.y)
                xs, ys, grid = simbench.rasterize_boundary(m, bounds, args.raster)
                simbench.write_raster_csv(out / f"raster_{name}_{angle:g}.csv", xs, ys, grid,
                                          d.class_names)
    _print_summary(result)


def cmd_bench(args):
    d = resolve_dataset(args.data, args.label)
    out = _outdir(args.out)
    ppf = _forest_params(args)
    ppf.pop("n_jobs")
    seed = ppf.pop("random_state")
    result = simbench.run_benchmark(d, args.reps, seed=seed, var_fractions=args.var_fractions,
                                    ppf_params=ppf, rf_params={"n_estimators": args.trees},
                                    n_jobs=args.threads)
    result.to_csv(out / "results.csv")
    result.summary_csv(out / "summary.csv")
    _print_summary(result)
    vf, err = simbench.best_ppf(result)
    print(f"best PPF var_fraction={vf} test_error={err:.4f}")


def cmd_sweep(args):
    d = resolve_dataset(args.data, args.label)
    out = _outdir(args.out)
    ppf = _forest_params(args)
    ppf.pop("n_jobs")
    seed = ppf.pop("random_state")
    if args.kind == "trees":
        ppf.pop("n_estimators")
        result = simbench.run_tree_count_sweep(d, args.counts, args.reps, seed=seed,
                                               ppf_params=ppf, n_jobs=args.threads)
    else:
        ppf.pop("var_fraction")
        result = simbench.run_var_fraction_sweep(d, args.fractions, args.reps, seed=seed,
                                                 ppf_params=ppf, n_jobs=args.threads)
    result.to_csv(out / "results.csv")
    result.summary_csv(out / "summary.csv")
    _print_summary(result)


COMMANDS = {"train": cmd_train, "predict": cmd_predict, "diagnose": cmd_diagnose,
            "simulate": cmd_simulate, "bench": cmd_bench, "sweep": cmd_sweep}


def _code_for(exc):
    if isinstance(exc, CommandError):
        return exc.code
    if isinstance(exc, (ExperimentError, TreeFitError, DataError, ModelFormatError,
                        DataMismatchError, PPForestError)):
        return exc.code
    if isinstance(exc, OSError):
        return "E_DATA"
    return "E_PPF"


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        COMMANDS[args.command](args)
    except (CommandError, PPForestError, OSError, ValueError) as exc:
        code = _code_for(exc)
        msg = " ".join(str(exc).split())
        print(f"ppforest: {code}: {msg}", file=sys.stderr)
        return EXIT_CODES[code]
    return 0


if __name__ == "__main__":
    sys.exit(main())
