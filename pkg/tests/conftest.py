import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from phasemoments.kernels import kernel_tables  # noqa: E402
from phasemoments.quantum_state import squeezed_coherent_state  # noqa: E402

import numpy as np  # noqa: E402


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("kernel_cache")


@pytest.fixture(scope="session")
def tables(cache_dir):
    """Kernel tables k = 1..8 on the default grid, built once per session."""
    return kernel_tables(8, cache_dir=cache_dir)


@pytest.fixture(scope="session")
def squeezed_state():
    """Displaced phase-squeezed state with alpha = 5 exp(0.6 i), s = 6."""
    return squeezed_coherent_state(5.0 * np.exp(0.6j), 6.0, 160).density_matrix()


ACCEPTANCE_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_LINES] = []


@pytest.fixture
def report(request, capsys):
    """Print one PASS/FAIL line for an acceptance criterion and keep it for the summary."""

    def emit(label, passed, detail):
        line = f"{label}: {'PASS' if passed else 'FAIL'} | {detail}"
        request.config.stash[ACCEPTANCE_LINES].append(line)
        with capsys.disabled():
            print("\n" + line)
        return passed

    return emit


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
