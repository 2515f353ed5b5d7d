import json
import os
import sys
from pathlib import Path

from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))


def letters(rank: int):
    return st.integers(1, rank).flatmap(lambda g: st.sampled_from([g, -g]))


def raw_words(rank: int = 2, max_size: int = 10):
    return st.lists(letters(rank), max_size=max_size).map(tuple)


def generator_sets(rank: int = 2, max_gens: int = 3, max_len: int = 5):
    return st.lists(raw_words(rank, max_len), min_size=1, max_size=max_gens)


INVARIANT_OUTCOMES: dict[str, str] = {}


def pytest_collection_modifyitems(session, config, items):
    # acceptance checks read the results of the other suites, so run them last
    items.sort(key=lambda item: item.fspath.basename == "test_acceptance.py")


def pytest_runtest_logreport(report):
    if report.when == "call" and "invariant" in report.keywords:
        INVARIANT_OUTCOMES[report.nodeid] = report.outcome


def pytest_sessionfinish(session, exitstatus):
    out = os.environ.get("GHNCLAB_CASES_OUT")
    mod = sys.modules.get("test_invariants")
    if out and mod is not None:
        Path(out).write_text(json.dumps({"cases": mod.CASES, "outcomes": INVARIANT_OUTCOMES}))
