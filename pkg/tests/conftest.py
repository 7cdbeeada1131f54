import numpy as np
import pytest

from compsim import formats
from compsim.kinematics import geometric_jacobian


@pytest.fixture(scope="session")
def config():
    return formats.load_config()


@pytest.fixture(scope="session")
def model(config):
    return config.model


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_config(model, rng, margin=0.05):
    return rng.uniform(model.pos_min + margin, model.pos_max - margin)


def well_conditioned_configs(model, rng, count, rows=slice(0, 3), sigma_floor=0.05):
    """Random in-limit configurations whose selected Jacobian rows are well conditioned."""
    out = []
    while len(out) < count:
        theta = random_config(model, rng)
        J = geometric_jacobian(model, theta)[rows]
        if np.linalg.svd(J, compute_uv=False)[-1] > sigma_floor:
            out.append(theta)
    return out


# one PASS/FAIL line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
