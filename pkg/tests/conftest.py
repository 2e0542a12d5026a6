import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ddlsff import _backend  # noqa: E402
from ddlsff._parallel import get_threads, set_threads  # noqa: E402

BACKENDS = ["python"] + (["cython"] if _backend.compiled_kernels is not None else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def threads():
    """Restore the global thread count after a test changes it."""
    before = get_threads()
    yield set_threads
    set_threads(before)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed in the terminal summary
_ACCEPTANCE = {}
N_CRITERIA = 10


@pytest.fixture
def criterion():
    def record(num, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'} criterion {num:2d}: {detail}"
        _ACCEPTANCE[num] = line
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in range(1, N_CRITERIA + 1):
        terminalreporter.write_line(_ACCEPTANCE.get(num, f"FAIL criterion {num:2d}: no result recorded"))
