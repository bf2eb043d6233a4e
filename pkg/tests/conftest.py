import os
from pathlib import Path

import numpy as np
import pytest

from chaoselm import data as D
from chaoselm.ckks import PAPER_PARAMS, TEST_PARAMS, build_context, keygen

# Datasets come from CHAOSELM_DATA_DIR when set, otherwise a cache next to the tests
# populated offline from the bundled copies.
DATA_DIR = Path(os.environ.get(D.DATA_DIR_ENV) or Path(__file__).parent / ".data")


def _populate():
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    missing = [n for n in D.schema_names() if not D.dataset_available(n, DATA_DIR)]
    if missing:
        D.fetch_all(DATA_DIR, missing, offline=True)


_populate()


def available(name: str) -> bool:
    return D.dataset_available(name, DATA_DIR)


def needs_dataset(name: str):
    """Strict xfail when the canonical file could not be obtained."""
    return pytest.mark.xfail(not available(name), strict=True, raises=D.DataError,
                             reason=f"{name} data file not available offline")


@pytest.fixture(scope="session")
def data_dir():
    return DATA_DIR


@pytest.fixture(scope="session")
def test_ctx():
    return build_context(TEST_PARAMS)


@pytest.fixture(scope="session")
def test_keys(test_ctx):
    return keygen(test_ctx, np.random.default_rng(1))


@pytest.fixture(scope="session")
def paper_ctx():
    return build_context(PAPER_PARAMS)


@pytest.fixture(scope="session")
def paper_keys(paper_ctx):
    return keygen(paper_ctx, np.random.default_rng(2))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance report --------------------------------------------------------------
# test_acceptance records one line per criterion; the lines are echoed at once and
# repeated in the terminal summary so they survive output capturing.

ACCEPTANCE: list = []


def record(criterion, ok: bool, detail: str):
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
