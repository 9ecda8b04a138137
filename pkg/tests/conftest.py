import numpy as np
import pytest

from qlinv import pde_core as pc


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def grid9():
    return pc.build_grid(3, 9)


@pytest.fixture(scope="session")
def grid13():
    return pc.build_grid(3, 13)



def pytest_terminal_summary(terminalreporter):
    import sys
    mod = next((m for n, m in list(sys.modules.items()) if n.endswith("test_acceptance")), None)
    lines = getattr(mod, "ACCEPTANCE_LINES", {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for cid in sorted(lines):
            terminalreporter.write_line(lines[cid])
