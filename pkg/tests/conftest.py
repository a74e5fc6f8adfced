import numpy as np
import pytest

from ppforest.dataio import load_bundled

# Acceptance tests append "AC-k PASS|FAIL ..." lines here; they are echoed in
# the terminal summary so they show up even when output capture is on.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][3:])):
            terminalreporter.write_line(line)


def gaussian_blobs(n_per_class, centers, sd=1.0, seed=0):
    rng = np.random.default_rng(seed)
    centers = np.asarray(centers, dtype=float)
    X = np.concatenate([c + sd * rng.standard_normal((n_per_class, len(c))) for c in centers])
    y = np.repeat(np.arange(len(centers)), n_per_class)
    return X, y


@pytest.fixture(scope="session")
def wine():
    return load_bundled("wine")


@pytest.fixture(scope="session")
def crab():
    return load_bundled("crab")


@pytest.fixture(scope="session")
def glass():
    return load_bundled("glass")
