"""Evaluation reports: success rates, selection behaviour, coverage, significance."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from ..aggregators import METHODS, MethodId, canonical
from .stats import mcnemar_test, proportion_test

UNDEFINED = "UNDEFINED"


def fmt(x, digits: int = 6) -> str:
    """Display form of a number: 6 significant digits; ``UNDEFINED`` for None."""
    if x is None:
        return UNDEFINED
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return f"{float(x):.{digits}g}"


def rate(successes: int, n: int) -> float:
    return float(Fraction(successes, n)) if n else 0.0


def aligned(rows: Sequence[Sequence[str]], header: Sequence[str] | None = None) -> str:
    table = ([list(header)] if header else []) + [list(r) for r in rows]
    if not table:
        return ""
    widths = [max(len(r[i]) for r in table if i < len(r)) for i in range(max(len(r) for r in table))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in table]
    if header:
        lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def region_name(members: Sequence[str]) -> str:
    return "+".join(members) if members else "none"


@dataclass
class CoverageReport:
    """Which cases each method solves, and the Venn regions those sets form."""

    methods: tuple[str, ...]
    case_ids: list[str]
    solved: dict[str, list[str]]
    regions: dict[str, int]
    union_with_da: int
    union_without_da: int

    @property
    def n_cases(self) -> int:
        return len(self.case_ids)

    @classmethod
    def from_outcomes(cls, case_ids: Sequence[str], outcomes: Mapping) -> "CoverageReport":
        methods = tuple(str(m) for m in canonical(outcomes))
        bits = {str(MethodId.parse(m)): list(map(int, v)) for m, v in outcomes.items()}
        solved = {m: [cid for cid, b in zip(case_ids, bits[m]) if b] for m in methods}
        regions = {}
        for r in range(len(methods) + 1):
            for combo in itertools.combinations(methods, r):
                regions[region_name(combo)] = 0
        with_da = without_da = 0
        for i in range(len(case_ids)):
            members = tuple(m for m in methods if bits[m][i])
            regions[region_name(members)] += 1
            with_da += bool(members)
            without_da += any(m != "DA" for m in members)
        return cls(methods, list(case_ids), solved, regions, with_da, without_da)

    def to_dict(self) -> dict:
        n = self.n_cases
        return {
            "n_cases": n,
            "methods": list(self.methods),
            "solved_counts": {m: len(v) for m, v in self.solved.items()},
            "solved": self.solved,
            "regions": self.regions,
            "union_with_da": {"count": self.union_with_da, "rate": rate(self.union_with_da, n)},
            "union_without_da": {"count": self.union_without_da, "rate": rate(self.union_without_da, n)},
        }

    def to_table(self) -> str:
        n = self.n_cases
        rows = [[m, str(len(self.solved[m])), fmt(rate(len(self.solved[m]), n))] for m in self.methods]
        out = aligned(rows, ["method", "solved", "rate"])
        regs = [[k, str(v)] for k, v in self.regions.items() if v]
        out += "\n" + aligned(regs, ["region", "cases"])
        out += (
            f"\nunion with DA     {self.union_with_da}/{n} = {fmt(rate(self.union_with_da, n))}"
            f"\nunion without DA  {self.union_without_da}/{n} = {fmt(rate(self.union_without_da, n))}\n"
        )
        return out


@dataclass(frozen=True)
class ConditionalRow:
    method: str
    p_success: float
    p_success_given_selected: float | None
    selected: int
    share: float

    def to_dict(self) -> dict:
        d = {
            "method": self.method,
            "p_success": self.p_success,
            "p_success_given_selected": self.p_success_given_selected,
            "selected": self.selected,
            "share": self.share,
        }
        if self.p_success_given_selected is None:
            d["p_success_given_selected"] = UNDEFINED
        return d


@dataclass
class EvaluationReport:
    """Leave-one-out results for one approach on one corpus.

    Everything derived (rates, coverage, tests) is recomputed from the raw
    per-case choices, so the structured form is a pure function of them.
    """

    approach: str
    technique: dict
    seed: int
    methods: tuple[str, ...]
    feature_mask: tuple[str, ...]
    case_ids: list[str]
    correct: list[int]
    method_choices: dict[str, list[int]]
    predictions: list[int]
    selected: list[str | None]
    exact_mcnemar: bool = False
    config_hash: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def n_cases(self) -> int:
        return len(self.case_ids)

    def method_outcomes(self, method) -> list[int]:
        return [int(c == k) for c, k in zip(self.method_choices[str(MethodId.parse(method))], self.correct)]

    @property
    def outcomes(self) -> list[int]:
        return [int(p == k) for p, k in zip(self.predictions, self.correct)]

    @property
    def successes(self) -> int:
        return sum(self.outcomes)

    @property
    def success_rate(self) -> float:
        return rate(self.successes, self.n_cases)

    def uniform_success(self) -> dict[str, float]:
        return {m: rate(sum(self.method_outcomes(m)), self.n_cases) for m in self.methods}

    def best_uniform(self) -> tuple[str, float]:
        rates = self.uniform_success()
        best = max(self.methods, key=lambda m: (rates[m], -self.methods.index(m)))
        return best, rates[best]

    def selection_distribution(self) -> dict[str, float] | None:
        if self.approach != "AMP":
            return None
        return {m: rate(sum(1 for s in self.selected if s == m), self.n_cases) for m in self.methods}

    def conditional(self) -> list[ConditionalRow]:
        return conditional_rows(self)

    def coverage(self) -> CoverageReport:
        return CoverageReport.from_outcomes(self.case_ids, {m: self.method_outcomes(m) for m in self.methods})

    def significance(self) -> dict[str, dict]:
        mine = self.outcomes
        n = self.n_cases
        out = {}
        for m in self.methods:
            theirs = self.method_outcomes(m)
            mc = mcnemar_test(mine, theirs, exact=self.exact_mcnemar)
            pt = proportion_test(sum(mine), n, sum(theirs), n)
            out[m] = {
                "mcnemar": {"statistic": mc.statistic, "p_value": mc.p_value, "b": mc.b, "c": mc.c, "exact": mc.exact},
                "proportion": {"z": pt.z, "p_value": pt.p_value},
            }
        return out

    def to_dict(self) -> dict:
        d = {
            "kind": "evaluation",
            "approach": self.approach,
            "technique": self.technique,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "n_cases": self.n_cases,
            "methods": list(self.methods),
            "feature_mask": list(self.feature_mask),
            "success": {"successes": self.successes, "cases": self.n_cases, "rate": self.success_rate},
            "uniform_success": self.uniform_success(),
            "selection_distribution": self.selection_distribution(),
            "conditional": [r.to_dict() for r in self.conditional()] if self.approach == "AMP" else None,
            "coverage": self.coverage().to_dict(),
            "significance": self.significance(),
            "per_case": [
                {
                    "case_id": cid,
                    "correct": self.correct[i],
                    "predicted": self.predictions[i],
                    "selected": self.selected[i],
                    "choices": {m: self.method_choices[m][i] for m in self.methods},
                }
                for i, cid in enumerate(self.case_ids)
            ],
        }
        if self.extra:
            d["extra"] = self.extra
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluationReport":
        per = d["per_case"]
        methods = tuple(d["methods"])
        return cls(
            d["approach"],
            d["technique"],
            d["seed"],
            methods,
            tuple(d["feature_mask"]),
            [r["case_id"] for r in per],
            [r["correct"] for r in per],
            {m: [r["choices"][m] for r in per] for m in methods},
            [r["predicted"] for r in per],
            [r["selected"] for r in per],
            d["significance"][methods[0]]["mcnemar"]["exact"] if methods else False,
            d.get("config_hash"),
            d.get("extra", {}),
        )

    def to_table(self) -> str:
        name = self.technique.get("scheme")
        name = f"{name}+{self.technique['classifier']}" if name else self.technique["classifier"]
        head = (
            f"{self.approach} ({name}) leave-one-out on {self.n_cases} cases, seed {self.seed}"
            + (f", config {self.config_hash}" if self.config_hash else "")
            + f"\nsuccess rate {fmt(self.success_rate)} ({self.successes}/{self.n_cases})\n\n"
        )
        uni = self.uniform_success()
        sig = self.significance()
        rows = [
            [
                m,
                fmt(uni[m]),
                fmt(sig[m]["mcnemar"]["p_value"]),
                fmt(sig[m]["proportion"]["p_value"]) if sig[m]["proportion"]["p_value"] >= 1e-15 else "0",
            ]
            for m in self.methods
        ]
        out = head + aligned(rows, ["method", "uniform", "mcnemar p", "proportion p"])
        if self.approach == "AMP":
            crow = [
                [r.method, fmt(r.p_success), fmt(r.p_success_given_selected), str(r.selected), fmt(r.share)]
                for r in self.conditional()
            ]
            out += "\n" + aligned(crow, ["method", "P(success)", "P(success|selected)", "selected", "share"])
        out += "\n" + self.coverage().to_table()
        return out


def conditional_rows(report: EvaluationReport) -> list[ConditionalRow]:
    n = report.n_cases
    rows = []
    for m in report.methods:
        oc = report.method_outcomes(m)
        sel = [i for i, s in enumerate(report.selected) if s == m]
        given = rate(sum(oc[i] for i in sel), len(sel)) if sel else None
        rows.append(ConditionalRow(m, rate(sum(oc), n), given, len(sel), rate(len(sel), n)))
    return rows


def conditional_success_report(report: EvaluationReport) -> list[ConditionalRow]:
    """P(success), P(success | selected by AMP) and selection share per method."""
    if report.approach != "AMP":
        raise ValueError("conditional success needs an AMP evaluation")
    return conditional_rows(report)


def methods_in_order(methods) -> tuple[str, ...]:
    return tuple(str(m) for m in canonical(methods or METHODS))
