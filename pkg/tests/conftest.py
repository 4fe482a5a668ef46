"""Shared fixtures: the generated photographic corpus and its access profiles."""
from __future__ import annotations

import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import corpus  # noqa: E402

CORPUS_DIR = Path(os.environ.get("LEPTONSTORE_CORPUS", Path(__file__).parent / ".corpus"))
N_STAT = 200
N_TEST = 200


@pytest.fixture(scope="session")
def corpus_splits():
    return corpus.generate(CORPUS_DIR, N_STAT, N_TEST)


@pytest.fixture(scope="session")
def stat_paths(corpus_splits):
    from leptonstore.analysis import list_jpegs
    return list_jpegs(corpus_splits["stat"])


@pytest.fixture(scope="session")
def test_paths(corpus_splits):
    from leptonstore.analysis import list_jpegs
    return list_jpegs(corpus_splits["test"])


@pytest.fixture(scope="session")
def sample_paths(stat_paths, test_paths):
    """A dozen corpus images spread over both splits."""
    return stat_paths[::40] + test_paths[5::40]


@pytest.fixture(scope="session")
def profiles(corpus_splits):
    from leptonstore.analysis import profile_corpus
    jobs = min(8, os.cpu_count() or 1)
    return profile_corpus(corpus_splits["stat"], jobs), profile_corpus(corpus_splits["test"], jobs)


@pytest.fixture(scope="session")
def stat_hist(profiles):
    return profiles[0].histogram()


# -- acceptance report -----------------------------------------------------------------

ACCEPTANCE_LINES: dict = {}


@pytest.fixture(scope="session")
def acceptance_log():
    """Record one summary line per acceptance criterion: log(number, passed, detail)."""
    def log(number, passed, detail):
        status = "PASS" if passed else "FAIL"
        if passed is None:
            status = "REPORT"
        ACCEPTANCE_LINES[number] = f"[{status}] criterion {number}: {detail}"
        print(ACCEPTANCE_LINES[number])
    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
