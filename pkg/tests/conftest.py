import numpy as np
import pytest

from holoangle.scenegen import generate_dataset, pair_scene

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_torus_data(tmp_path_factory):
    """32 views of the torus pair at 48x48, enough for levels 2..4."""
    root = tmp_path_factory.mktemp("small_data")
    generate_dataset(pair_scene("torus"), 32, root, resolution=(48, 48))
    return root
