import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mcgrowth import CountTensor, Params, SimConfig, build_grid, simulate  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_instance(rng, n=4, T=3, k=2, seed_count=3):
    """Random parameters in a tame region and data simulated from them."""
    while True:
        params = Params(rng.uniform(-0.2, 0.6, k), rng.uniform(-0.3, 0.3, (k, k)))
        y = simulate(SimConfig(params, build_grid(n), T, seed_count, int(rng.integers(2**32))))
        # every color needs variation at t >= 1 for a finite MLE
        resp = y.counts[1:]
        if all(resp[:, c].sum() > 0 for c in range(k)):
            return params, y


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def model1_data():
    from mcgrowth.experiments import preset_params

    geom = build_grid(25)
    y = simulate(SimConfig(preset_params(1), geom, 10, 10, 11))
    return geom, y


def zeros_tensor(T, k, n_tiles):
    return CountTensor(np.zeros((T + 1, k, n_tiles), dtype=np.int64))
