"""Line-delimited JSON datasets and feature-matrix export.

The first line is a header ``{"schema": "crowdagg.dataset", "schema_version": 1}``;
every following non-blank line is one case::

    {"case_id": "q17", "answers": ["A", "B"], "correct_answer": "B",
     "responses": [{"vote": "A", "confidence": 0.9, "predicted_support": [0.6, 0.4]}, ...]}
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .. import errors
from ..aggregators import METHODS, MethodId, canonical, run_methods
from ..case_model import DecisionCase, Response, validate_case
from ..features import ALL_GROUPS, SubgroupPlan, featurize_case
from ..pipelines import AMP, amp_feature_names, amp_label_names, build_amp_instance, build_dap_instance, dap_feature_names, parse_approach

SCHEMA = "crowdagg.dataset"
SCHEMA_VERSION = 1
SUPPORTED_VERSIONS = (1,)


def header() -> dict:
    return {"schema": SCHEMA, "schema_version": SCHEMA_VERSION}


def case_to_record(case: DecisionCase) -> dict:
    rec = {"case_id": case.case_id, "answers": list(case.answers)}
    if case.correct_answer is not None:
        rec["correct_answer"] = case.correct_answer
    rec["responses"] = [
        {"vote": r.vote, "confidence": r.confidence, "predicted_support": list(r.predicted_support)} for r in case.responses
    ]
    return rec


def _answer(x, line: int, what: str):
    if isinstance(x, bool) or not isinstance(x, (str, int)):
        raise errors.ParseError(f"{what} must be a string or integer, got {x!r}", line=line)
    return x


def _number(x, line: int, what: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise errors.ParseError(f"{what} must be a number, got {x!r}", line=line)
    return float(x)


def record_to_case(rec, line: int = 0) -> DecisionCase:
    if not isinstance(rec, dict):
        raise errors.ParseError("case record must be an object", line=line)
    unknown = set(rec) - {"case_id", "answers", "correct_answer", "responses"}
    if unknown:
        raise errors.ParseError(f"unknown fields {sorted(unknown)}", line=line)
    for key in ("case_id", "answers", "responses"):
        if key not in rec:
            raise errors.ParseError(f"missing field {key!r}", line=line)
    cid = rec["case_id"]
    if not isinstance(cid, str):
        raise errors.ParseError("case_id must be a string", line=line)
    if not isinstance(rec["answers"], list) or not isinstance(rec["responses"], list):
        raise errors.ParseError("answers and responses must be arrays", line=line, case_id=cid)
    answers = tuple(_answer(a, line, "answer") for a in rec["answers"])
    correct = rec.get("correct_answer")
    if correct is not None:
        correct = _answer(correct, line, "correct_answer")
    responses = []
    for j, r in enumerate(rec["responses"]):
        if not isinstance(r, dict) or set(r) != {"vote", "confidence", "predicted_support"}:
            raise errors.ParseError(
                f"response {j} needs exactly vote, confidence and predicted_support", line=line, case_id=cid
            )
        if not isinstance(r["predicted_support"], list):
            raise errors.ParseError(f"response {j}: predicted_support must be an array", line=line, case_id=cid)
        responses.append(
            Response(
                _answer(r["vote"], line, "vote"),
                _number(r["confidence"], line, "confidence"),
                tuple(_number(p, line, "predicted_support") for p in r["predicted_support"]),
            )
        )
    case = DecisionCase(cid, answers, tuple(responses), correct)
    try:
        return validate_case(case)
    except errors.InvalidCase as e:
        e.message = f"line {line}: {e.message}"
        e.args = (e.message,)
        raise


def _check_header(obj, line: int) -> None:
    if not isinstance(obj, dict) or obj.get("schema") != SCHEMA or "schema_version" not in obj:
        raise errors.SchemaVersionUnsupported(f"line {line}: missing {SCHEMA} header with schema_version")
    if obj["schema_version"] not in SUPPORTED_VERSIONS:
        raise errors.SchemaVersionUnsupported(
            f"schema_version {obj['schema_version']!r} not supported (supported: {list(SUPPORTED_VERSIONS)})"
        )


def read_dataset(path: str | os.PathLike) -> list[DecisionCase]:
    cases = []
    seen_header = False
    ids = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as e:
                raise errors.ParseError(f"invalid JSON: {e.msg}", line=lineno) from None
            if not seen_header:
                _check_header(obj, lineno)
                seen_header = True
                continue
            case = record_to_case(obj, lineno)
            if case.case_id in ids:
                raise errors.ParseError(f"duplicate case_id {case.case_id!r}", line=lineno, case_id=case.case_id)
            ids.add(case.case_id)
            cases.append(case)
    if not seen_header:
        raise errors.SchemaVersionUnsupported("empty file: no schema header")
    return cases


def write_dataset(cases: Iterable[DecisionCase], path: str | os.PathLike) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(header()) + "\n")
            for c in cases:
                fh.write(json.dumps(case_to_record(c)) + "\n")
    except OSError as e:
        raise errors.WriteError(f"cannot write {path}: {e.strerror}") from None


def correct_share(case: DecisionCase) -> float | None:
    if case.correct_answer is None:
        return None
    return sum(1 for r in case.responses if r.vote == case.correct_answer) / case.n


@dataclass(frozen=True)
class ExcludedCase:
    case_id: str
    share: float
    reason: str = "degenerate"

    def to_dict(self) -> dict:
        return {"case_id": self.case_id, "share": self.share, "reason": self.reason}


def filter_degenerate(cases: Sequence[DecisionCase]) -> tuple[list[DecisionCase], list[ExcludedCase]]:
    """Drop cases that every voter, or no voter, answered correctly."""
    kept, log = [], []
    for c in cases:
        share = correct_share(c)
        if share is not None and share in (0.0, 1.0):
            log.append(ExcludedCase(c.case_id, share))
        else:
            kept.append(c)
    return kept, log


def load_and_filter(path: str | os.PathLike, exclude_degenerate: bool = True) -> tuple[list[DecisionCase], list[ExcludedCase]]:
    cases = read_dataset(path)
    if not exclude_degenerate:
        return cases, []
    return filter_degenerate(cases)


def feature_matrix_rows(
    cases: Sequence[DecisionCase],
    approach: str,
    plan: SubgroupPlan = SubgroupPlan(),
    included_methods: Iterable[MethodId | str] = METHODS,
    mask: Iterable[str] = ALL_GROUPS,
) -> tuple[list[str], list[list]]:
    approach = parse_approach(approach)
    methods = canonical(included_methods)
    mask = frozenset(mask)
    if not cases:
        return ["case_id"] + amp_feature_names(mask), []
    if approach == AMP:
        head = ["case_id"] + amp_feature_names(mask) + amp_label_names(methods)
    else:
        answers = cases[0].answers
        if any(len(c.answers) != len(answers) for c in cases):
            raise errors.WidthMismatch("answer-prediction export needs every case to have the same number of answers")
        head = ["case_id"] + dap_feature_names(mask, methods, answers) + ["target"]
    rows = []
    for c in cases:
        inst = featurize_case(c, plan)
        if approach == AMP:
            a = build_amp_instance(c, plan, methods, mask, inst)
            rows.append([c.case_id, *a.features, *a.labels])
        else:
            d = build_dap_instance(c, plan, methods, mask, inst)
            rows.append([c.case_id, *d.features, d.label])
    return head, rows


def export_feature_matrix(
    cases: Sequence[DecisionCase],
    approach: str,
    path: str | os.PathLike,
    plan: SubgroupPlan = SubgroupPlan(),
    included_methods: Iterable[MethodId | str] = METHODS,
    mask: Iterable[str] = ALL_GROUPS,
) -> Path:
    head, rows = feature_matrix_rows(cases, approach, plan, included_methods, mask)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(head)
            for r in rows:
                w.writerow([repr(x) if isinstance(x, float) else x for x in r])
    except OSError as e:
        raise errors.WriteError(f"cannot write {path}: {e.strerror}") from None
    return Path(path)


def aggregate_corpus(cases: Sequence[DecisionCase], methods: Iterable[MethodId | str] = METHODS) -> dict:
    """Each method's chosen answer per case, plus success rates where ground truth exists."""
    methods = canonical(methods)
    per_case = []
    hits = {str(m): 0 for m in methods}
    labelled = 0
    for c in cases:
        res = run_methods(c, methods)
        per_case.append({"case_id": c.case_id, "chosen": {str(m): res[m].chosen for m in methods}})
        if c.correct_answer is not None:
            labelled += 1
            for m in methods:
                hits[str(m)] += res[m].outcome
    rates = {m: (hits[m] / labelled if labelled else None) for m in hits}
    return {"kind": "aggregation", "methods": [str(m) for m in methods], "labelled_cases": labelled, "success": rates, "per_case": per_case}
