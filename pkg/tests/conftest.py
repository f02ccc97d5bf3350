import time

import pytest

from pdm_ladder.catalog import CATALOG, get_profile
from pdm_ladder.ladder import ModelParams, build_system


@pytest.fixture(scope="session")
def catalog_systems():
    """Default-grid system per catalog profile at lambda = 1/5."""
    out = {}
    for name, entry in CATALOG.items():
        out[name] = build_system(get_profile(name), ModelParams(lam=0.2), n=entry.grid,
                                 decay_tol=entry.decay_tol)
    return out


@pytest.fixture(scope="session")
def quadratic_system(catalog_systems):
    return catalog_systems["quadratic"]


# --- acceptance summary ----------------------------------------------------------

ACCEPTANCE = pytest.StashKey[dict]()
_START = pytest.StashKey[float]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = {}
    config.stash[_START] = time.perf_counter()


@pytest.fixture
def acceptance_log(request):
    """Callable recording (criterion number, passed, detail) for the summary."""
    log = request.config.stash[ACCEPTANCE]

    def record(number, passed, detail):
        log[number] = (bool(passed), detail)

    return record


def pytest_terminal_summary(terminalreporter, config):
    log = config.stash.get(ACCEPTANCE, {})
    if not log:
        return
    elapsed = time.perf_counter() - config.stash[_START]
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(log):
        passed, detail = log[number]
        tr.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
    tr.write_line(f"suite wall time: {elapsed:.1f} s (limit 60 s): {'PASS' if elapsed < 60 else 'FAIL'}")
