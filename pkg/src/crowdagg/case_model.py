"""Decision-case data model and the per-case aggregate statistics.

A case is one problem with an ordered answer set, the responses collected for
it and, when known, the correct answer. Everything downstream (aggregators,
features, pipelines) consumes the three statistics bundles defined here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Hashable, Mapping, Sequence

from . import errors

Answer = Hashable


@dataclass(frozen=True)
class Response:
    vote: Answer
    confidence: float
    predicted_support: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "predicted_support", tuple(float(p) for p in self.predicted_support))
        object.__setattr__(self, "confidence", float(self.confidence))


@dataclass(frozen=True)
class DecisionCase:
    case_id: str
    answers: tuple[Answer, ...]
    responses: tuple[Response, ...]
    correct_answer: Answer | None = None

    def __post_init__(self):
        object.__setattr__(self, "answers", tuple(self.answers))
        object.__setattr__(self, "responses", tuple(self.responses))

    @property
    def n(self) -> int:
        return len(self.responses)

    @cached_property
    def answer_index(self) -> dict:
        return {a: i for i, a in enumerate(self.answers)}

    @cached_property
    def vote_indices(self) -> tuple[int, ...]:
        idx = self.answer_index
        return tuple(idx[r.vote] for r in self.responses)

    @property
    def correct_index(self) -> int | None:
        if self.correct_answer is None:
            return None
        return self.answer_index[self.correct_answer]

    def with_responses(self, responses: Sequence[Response]) -> "DecisionCase":
        """Same case restricted to (or reordered as) ``responses``."""
        return replace(self, responses=tuple(responses))


@dataclass(frozen=True)
class SupportStats:
    support: dict
    a_max: Answer
    a_min: Answer
    supporters: dict
    counts: dict = field(repr=False)


@dataclass(frozen=True)
class ConfidenceStats:
    all_conf: tuple[float, ...]
    per_answer_avg: dict  # answer -> float, or None when the answer has no supporters
    min: float
    max: float
    mean: float
    variance: float


@dataclass(frozen=True)
class PredictedSupportStats:
    per_answer_avg: dict
    own_vote_ps: tuple[float, ...]


def mean(xs: Sequence[float]) -> float:
    # fsum is correctly rounded, so the result does not depend on input order
    return math.fsum(xs) / len(xs)


def pvariance(xs: Sequence[float]) -> float:
    """Population variance, sum((x - mean)^2) / n."""
    m = math.fsum(xs) / len(xs)
    return math.fsum((x - m) ** 2 for x in xs) / len(xs)


def first_argmax(values: Sequence) -> int:
    """Index of the first maximal element (lowest index wins ties)."""
    best = 0
    for i in range(1, len(values)):
        if values[i] > values[best]:
            best = i
    return best


def first_argmin(values: Sequence) -> int:
    best = 0
    for i in range(1, len(values)):
        if values[i] < values[best]:
            best = i
    return best


def validate_case(case: DecisionCase) -> DecisionCase:
    """Check well-formedness and rescale each predicted-support array to sum 1.

    Raises one of the ``InvalidCase`` subclasses in :mod:`crowdagg.errors`.
    """
    cid = case.case_id
    answers = case.answers
    if len(answers) < 2:
        raise errors.TooFewAnswers(f"need at least 2 answers, got {len(answers)}", case_id=cid)
    if len(set(answers)) != len(answers):
        raise errors.DuplicateAnswers(f"answers are not distinct: {list(answers)}", case_id=cid)
    if not case.responses:
        raise errors.EmptyResponses("case has no responses", case_id=cid)
    if case.correct_answer is not None and case.correct_answer not in answers:
        raise errors.CorrectAnswerOutsideAnswerSet(
            f"correct answer {case.correct_answer!r} not in {list(answers)}", case_id=cid
        )
    aset = set(answers)
    m = len(answers)
    fixed = []
    for j, r in enumerate(case.responses):
        if r.vote not in aset:
            raise errors.VoteOutsideAnswerSet(f"response {j}: vote {r.vote!r} not in {list(answers)}", case_id=cid)
        c = r.confidence
        if not (math.isfinite(c) and 0.0 <= c <= 1.0):
            raise errors.ConfidenceOutOfRange(f"response {j}: confidence {c!r} outside [0, 1]", case_id=cid)
        ps = r.predicted_support
        if len(ps) != m:
            raise errors.PredictedSupportLengthMismatch(
                f"response {j}: {len(ps)} predicted-support values for {m} answers", case_id=cid
            )
        if any(not math.isfinite(p) or p < 0.0 for p in ps):
            raise errors.PredictedSupportOutOfRange(f"response {j}: negative or non-finite predicted support", case_id=cid)
        total = sum(ps)
        if total <= 0.0:
            raise errors.PredictedSupportAllZero(f"response {j}: predicted support sums to 0", case_id=cid)
        # already-normalized arrays are left alone so validation is idempotent
        if abs(total - 1.0) > 1e-12:
            r = Response(r.vote, c, tuple(p / total for p in ps))
        fixed.append(r)
    return replace(case, responses=tuple(fixed))


def support_stats(case: DecisionCase) -> SupportStats:
    n = case.n
    counts = [0] * len(case.answers)
    members: list[list[Response]] = [[] for _ in case.answers]
    for r, vi in zip(case.responses, case.vote_indices):
        counts[vi] += 1
        members[vi].append(r)
    answers = case.answers
    return SupportStats(
        support={a: counts[i] / n for i, a in enumerate(answers)},
        a_max=answers[first_argmax(counts)],
        a_min=answers[first_argmin(counts)],
        supporters={a: tuple(members[i]) for i, a in enumerate(answers)},
        counts={a: counts[i] for i, a in enumerate(answers)},
    )


def confidence_stats(case: DecisionCase, stats: SupportStats | None = None) -> ConfidenceStats:
    if stats is None:
        stats = support_stats(case)
    conf = tuple(r.confidence for r in case.responses)
    per_answer = {}
    for a in case.answers:
        sup = stats.supporters[a]
        per_answer[a] = mean([r.confidence for r in sup]) if sup else None
    return ConfidenceStats(
        all_conf=conf,
        per_answer_avg=per_answer,
        min=min(conf),
        max=max(conf),
        mean=mean(conf),
        variance=pvariance(conf),
    )


def predicted_support_stats(case: DecisionCase) -> PredictedSupportStats:
    resp = case.responses
    per_answer = {a: mean([r.predicted_support[i] for r in resp]) for i, a in enumerate(case.answers)}
    own = tuple(r.predicted_support[vi] for r, vi in zip(resp, case.vote_indices))
    return PredictedSupportStats(per_answer_avg=per_answer, own_vote_ps=own)


def make_case(
    case_id: str,
    answers: Sequence[Answer],
    responses: Sequence[tuple[Answer, float, Sequence[float]] | Response],
    correct_answer: Answer | None = None,
    validate: bool = True,
) -> DecisionCase:
    """Convenience constructor from ``(vote, confidence, predicted_support)`` triples."""
    resp = tuple(r if isinstance(r, Response) else Response(r[0], r[1], tuple(r[2])) for r in responses)
    case = DecisionCase(case_id, tuple(answers), resp, correct_answer)
    return validate_case(case) if validate else case


def relabel(case: DecisionCase, mapping: Mapping[Answer, Answer], order: Sequence[Answer] | None = None) -> DecisionCase:
    """Rename answers via ``mapping``; optionally re-order the answer list.

    ``order`` is expressed in the new names. Predicted-support arrays are
    permuted to follow the new order.
    """
    new_answers = tuple(mapping[a] for a in case.answers)
    target = tuple(order) if order is not None else new_answers
    pos = {a: i for i, a in enumerate(new_answers)}
    perm = [pos[a] for a in target]
    responses = tuple(
        Response(mapping[r.vote], r.confidence, tuple(r.predicted_support[p] for p in perm)) for r in case.responses
    )
    correct = mapping[case.correct_answer] if case.correct_answer is not None else None
    return DecisionCase(case.case_id, target, responses, correct)
