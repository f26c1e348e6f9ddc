from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from crowdagg.case_model import DecisionCase, Response, make_case, validate_case  # noqa: E402

CASE_X_TRIPLES = [
    ("A", 0.9, (0.6, 0.4)),
    ("A", 0.5, (0.7, 0.3)),
    ("A", 0.6, (0.8, 0.2)),
    ("B", 1.0, (0.3, 0.7)),
    ("B", 0.9, (0.5, 0.5)),
]


def case_x(case_id: str = "case-x") -> DecisionCase:
    return make_case(case_id, ("A", "B"), CASE_X_TRIPLES, "B")


@pytest.fixture
def cx() -> DecisionCase:
    return case_x()


def random_case(rng: np.random.Generator, n: int, k: int = 2, case_id: str = "r", grid: int | None = None) -> DecisionCase:
    """Random validated case. ``grid`` snaps confidences and predictions to
    multiples of 1/grid, which makes ties common."""
    answers = tuple("ABCDEFGH"[:k])
    votes = rng.integers(k, size=n)
    if grid:
        conf = rng.integers(0, grid + 1, size=n) / grid
        raw = rng.integers(1, grid + 1, size=(n, k)).astype(float)
    else:
        conf = rng.random(n)
        raw = rng.random((n, k)) + 1e-3
    ps = raw / raw.sum(axis=1, keepdims=True)
    resp = tuple(Response(answers[v], float(c), tuple(float(p) for p in row)) for v, c, row in zip(votes, conf, ps))
    correct = answers[int(rng.integers(k))]
    return validate_case(DecisionCase(case_id, answers, resp, correct))


@st.composite
def cases(draw, min_n=1, max_n=12, min_k=2, max_k=4, coarse=None):
    """Hypothesis strategy for validated cases.

    ``coarse`` draws confidences and predictions from a small grid so that
    ties between answers actually happen.
    """
    k = draw(st.integers(min_k, max_k))
    n = draw(st.integers(min_n, max_n))
    answers = tuple(f"a{i}" for i in range(k))
    use_grid = draw(st.booleans()) if coarse is None else coarse
    if use_grid:
        conf_st = st.integers(0, 4).map(lambda x: x / 4)
        ps_st = st.integers(1, 4).map(float)
    else:
        conf_st = st.floats(0.0, 1.0, allow_nan=False)
        ps_st = st.floats(0.001, 1.0, allow_nan=False)
    resp = []
    for _ in range(n):
        v = draw(st.integers(0, k - 1))
        c = draw(conf_st)
        raw = [draw(ps_st) for _ in range(k)]
        total = sum(raw)
        resp.append(Response(answers[v], c, tuple(x / total for x in raw)))
    correct = answers[draw(st.integers(0, k - 1))]
    return validate_case(DecisionCase("h", answers, tuple(resp), correct))


# acceptance reporting ------------------------------------------------------

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")
    config.addinivalue_line("markers", "slow: long-running end-to-end test")


@pytest.fixture
def detail(request):
    """Attach a one-line measurement to the criterion the test covers."""
    marker = request.node.get_closest_marker("criterion")

    def add(text: str) -> None:
        if marker is not None:
            _CRITERIA.setdefault(marker.args[0], {"title": marker.args[1], "ok": True, "ran": False, "notes": []})["notes"].append(text)

    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    entry = _CRITERIA.setdefault(marker.args[0], {"title": marker.args[1], "ok": True, "ran": False, "notes": []})
    entry["ran"] = True
    if rep.failed or rep.skipped:
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        e = _CRITERIA[num]
        status = "PASS" if e["ok"] and e["ran"] else "FAIL"
        notes = "; ".join(e["notes"])
        tr.write_line(f"criterion {num:>2} {status}  {e['title']}" + (f"  [{notes}]" if notes else ""))
