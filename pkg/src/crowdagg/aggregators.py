"""Rule-based aggregation methods.

MR, WC, HAC and SP read the response set directly; DA (devil's advocate)
only looks at the answers chosen by other methods and returns the one they
chose least often. Argmax decisions are taken in exact rational arithmetic so
that ties are real ties; the reported ``score_per_answer`` values are floats.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from . import errors
from .case_model import Answer, DecisionCase, first_argmax


class MethodId(str, enum.Enum):
    MR = "MR"
    HAC = "HAC"
    WC = "WC"
    SP = "SP"
    DA = "DA"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, name: str | "MethodId") -> "MethodId":
        if isinstance(name, MethodId):
            return name
        try:
            return cls(str(name).strip().upper())
        except ValueError:
            raise ValueError(f"unknown aggregation method {name!r}") from None


# canonical order, also the label order of the method-prediction pipeline
METHODS: tuple[MethodId, ...] = (MethodId.MR, MethodId.HAC, MethodId.WC, MethodId.SP, MethodId.DA)
STANDARD_METHODS: tuple[MethodId, ...] = METHODS[:4]


def canonical(methods: Iterable[MethodId | str]) -> tuple[MethodId, ...]:
    wanted = {MethodId.parse(m) for m in methods}
    return tuple(m for m in METHODS if m in wanted)


@dataclass(frozen=True)
class AggregationResult:
    method: MethodId
    chosen: Answer
    score_per_answer: dict
    outcome: int | None = None


def outcome(result: AggregationResult, correct: Answer) -> int:
    return int(result.chosen == correct)


def _finish(method: MethodId, case: DecisionCase, idx: int, scores: dict) -> AggregationResult:
    chosen = case.answers[idx]
    out = None if case.correct_answer is None else int(chosen == case.correct_answer)
    return AggregationResult(method, chosen, scores, out)


def _tallies(case: DecisionCase):
    m = len(case.answers)
    counts = [0] * m
    conf_sums = [Fraction(0)] * m
    for r, vi in zip(case.responses, case.vote_indices):
        counts[vi] += 1
        conf_sums[vi] += Fraction(r.confidence)
    return counts, conf_sums


def aggregate_mr(case: DecisionCase) -> AggregationResult:
    counts, _ = _tallies(case)
    n = case.n
    scores = {a: counts[i] / n for i, a in enumerate(case.answers)}
    return _finish(MethodId.MR, case, first_argmax(counts), scores)


def aggregate_wc(case: DecisionCase) -> AggregationResult:
    # S(a) * Average(C(a)) == (sum of supporter confidences) / N; 0 without supporters
    _, conf_sums = _tallies(case)
    n = case.n
    scores = {a: float(conf_sums[i] / n) for i, a in enumerate(case.answers)}
    return _finish(MethodId.WC, case, first_argmax(conf_sums), scores)


def aggregate_hac(case: DecisionCase) -> AggregationResult:
    counts, conf_sums = _tallies(case)
    best = None
    best_val = None
    scores = {}
    for i, a in enumerate(case.answers):
        if counts[i] == 0:
            continue
        val = conf_sums[i] / counts[i]
        scores[a] = float(val)
        if best is None or val > best_val:
            best, best_val = i, val
    return _finish(MethodId.HAC, case, best, scores)


def aggregate_sp(case: DecisionCase) -> AggregationResult:
    m = len(case.answers)
    counts = [0] * m
    ps_sums = [Fraction(0)] * m
    for r, vi in zip(case.responses, case.vote_indices):
        counts[vi] += 1
        for i, p in enumerate(r.predicted_support):
            ps_sums[i] += Fraction(p)
    n = case.n
    # S(a) - Average(PS(a)), both over the same N
    surprise = [(counts[i] - ps_sums[i]) / n for i in range(m)]
    scores = {a: float(surprise[i]) for i, a in enumerate(case.answers)}
    return _finish(MethodId.SP, case, first_argmax(surprise), scores)


def aggregate_da(
    answers: Sequence[Answer],
    inputs: Sequence[tuple[MethodId, Answer]] | Mapping[MethodId, Answer],
    mr_choice: Answer,
    correct_answer: Answer | None = None,
) -> AggregationResult:
    """Pick the answer chosen by the fewest input methods.

    Ties go to an answer other than ``mr_choice`` when one exists, then to
    the lowest answer index.
    """
    if isinstance(inputs, Mapping):
        inputs = list(inputs.items())
    if not inputs:
        raise errors.EmptyInputMethods("devil's advocate needs at least one input method")
    counter = {a: 0 for a in answers}
    for method, chosen in inputs:
        if chosen not in counter:
            raise ValueError(f"{method}: chosen answer {chosen!r} not in answer set")
        counter[chosen] += 1
    low = min(counter.values())
    tied = [a for a in answers if counter[a] == low]
    away = [a for a in tied if a != mr_choice]
    chosen = (away or tied)[0]
    out = None if correct_answer is None else int(chosen == correct_answer)
    return AggregationResult(MethodId.DA, chosen, dict(counter), out)


_STANDARD_FUNCS = {
    MethodId.MR: aggregate_mr,
    MethodId.HAC: aggregate_hac,
    MethodId.WC: aggregate_wc,
    MethodId.SP: aggregate_sp,
}


def run_methods(case: DecisionCase, included: Iterable[MethodId | str] = METHODS) -> dict[MethodId, AggregationResult]:
    """Apply every included method, in canonical order.

    DA's inputs are the included standard methods only, so dropping a method
    from ``included`` also removes its choice from DA's counter.
    """
    included = canonical(included)
    results: dict[MethodId, AggregationResult] = {}
    for m in included:
        if m is not MethodId.DA:
            results[m] = _STANDARD_FUNCS[m](case)
    if MethodId.DA in included:
        mr = results[MethodId.MR] if MethodId.MR in results else aggregate_mr(case)
        inputs = [(m, results[m].chosen) for m in STANDARD_METHODS if m in results]
        results[MethodId.DA] = aggregate_da(case.answers, inputs, mr.chosen, case.correct_answer)
    return results


def apply_method(method: MethodId | str, case: DecisionCase, included: Iterable[MethodId | str] = METHODS) -> AggregationResult:
    method = MethodId.parse(method)
    if method is MethodId.DA:
        return run_methods(case, set(canonical(included)) | {MethodId.DA})[MethodId.DA]
    return _STANDARD_FUNCS[method](case)
