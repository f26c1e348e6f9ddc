"""Seeded generator of decision cases drawn from named response regimes.

The regimes exist to give the learned pipelines something to learn: each one
favours a different rule-based method, and the regime leaves visible traces
in the case features.

  EASY_MAJORITY       most respondents are right and more confident; everyone
                      slightly under-predicts the consensus.
  MISLEADING          most respondents are wrong, confidently so, and everyone
                      over-predicts the wrong answer's popularity.
  CONFIDENT_MINORITY  a wrong majority of hesitant voters against a very
                      confident correct minority.
  DA_ONLY             a wrong, confident, accurately-predicted majority; the
                      case is redrawn until every standard method fails.
  NOISE               coin-flip votes with uninformative confidence and
                      predictions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import errors
from .aggregators import STANDARD_METHODS, MethodId, run_methods
from .case_model import DecisionCase, Response, validate_case
from .seeding import derive_seed


class Regime(str, enum.Enum):
    EASY_MAJORITY = "EASY_MAJORITY"
    MISLEADING = "MISLEADING"
    CONFIDENT_MINORITY = "CONFIDENT_MINORITY"
    DA_ONLY = "DA_ONLY"
    NOISE = "NOISE"


@dataclass(frozen=True)
class RegimeSpec:
    regime: Regime
    p_correct: float
    p_correct_spread: float = 0.0
    conf_correct: tuple[float, float] = (0.75, 0.1)  # mean, sd
    conf_incorrect: tuple[float, float] = (0.6, 0.1)
    meta_knowledge: float = 0.8
    overprediction: tuple[float, float] = (0.0, 0.0)  # added to the top wrong answer's target share
    ps_noise: float = 0.05
    size_range: tuple[int, int] = (40, 100)
    n_answers: int = 2
    max_retries: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        if not 0.0 < self.p_correct < 1.0:
            raise ValueError("p_correct must lie in (0, 1)")
        if not 0.0 <= self.meta_knowledge <= 1.0:
            raise ValueError("meta_knowledge must lie in [0, 1]")
        lo, hi = self.size_range
        if lo < 1 or hi < lo:
            raise ValueError("bad size_range")
        if self.n_answers < 2:
            raise ValueError("n_answers must be at least 2")


PRESETS: dict[Regime, RegimeSpec] = {
    Regime.EASY_MAJORITY: RegimeSpec(
        Regime.EASY_MAJORITY, p_correct=0.8, p_correct_spread=0.08,
        conf_correct=(0.8, 0.1), conf_incorrect=(0.58, 0.12), meta_knowledge=0.8,
    ),
    Regime.MISLEADING: RegimeSpec(
        Regime.MISLEADING, p_correct=0.3, p_correct_spread=0.08,
        conf_correct=(0.6, 0.12), conf_incorrect=(0.72, 0.1), meta_knowledge=0.85,
        overprediction=(0.12, 0.25),
    ),
    Regime.CONFIDENT_MINORITY: RegimeSpec(
        Regime.CONFIDENT_MINORITY, p_correct=0.38, p_correct_spread=0.06,
        conf_correct=(0.92, 0.05), conf_incorrect=(0.55, 0.1), meta_knowledge=0.8,
    ),
    Regime.DA_ONLY: RegimeSpec(
        Regime.DA_ONLY, p_correct=0.38, p_correct_spread=0.06,
        conf_correct=(0.5, 0.1), conf_incorrect=(0.64, 0.1), meta_knowledge=0.8,
    ),
    Regime.NOISE: RegimeSpec(
        Regime.NOISE, p_correct=0.5, conf_correct=(0.65, 0.15), conf_incorrect=(0.65, 0.15),
        meta_knowledge=0.1, ps_noise=0.1,
    ),
}

DEFAULT_MIXTURE: tuple[tuple[Regime, int], ...] = (
    (Regime.EASY_MAJORITY, 150),
    (Regime.MISLEADING, 150),
    (Regime.CONFIDENT_MINORITY, 100),
    (Regime.DA_ONLY, 50),
    (Regime.NOISE, 50),
)


def preset(regime: Regime | str, **overrides) -> RegimeSpec:
    return replace(PRESETS[Regime(regime)], **overrides)


def default_mixture(total: int = 500, **overrides) -> list[tuple[RegimeSpec, int]]:
    """The acceptance mixture, rescaled to ``total`` cases by largest remainder."""
    base = sum(c for _, c in DEFAULT_MIXTURE)
    exact = [total * c / base for _, c in DEFAULT_MIXTURE]
    counts = [int(x) for x in exact]
    by_remainder = sorted(range(len(exact)), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in by_remainder[: total - sum(counts)]:
        counts[i] += 1
    return [(preset(r, **overrides), c) for (r, _), c in zip(DEFAULT_MIXTURE, counts)]


def _answers(k: int) -> tuple[str, ...]:
    return tuple(chr(ord("A") + i) for i in range(k)) if k <= 26 else tuple(f"a{i}" for i in range(k))


def _draw(spec: RegimeSpec, rng: np.random.Generator, case_id: str) -> DecisionCase:
    k = spec.n_answers
    answers = _answers(k)
    n = int(rng.integers(spec.size_range[0], spec.size_range[1] + 1))
    correct = int(rng.integers(k))
    p = spec.p_correct
    if spec.p_correct_spread > 0:
        p = float(np.clip(rng.uniform(p - spec.p_correct_spread, p + spec.p_correct_spread), 0.01, 0.99))

    right = rng.random(n) < p
    wrong_choices = [a for a in range(k) if a != correct]
    votes = np.where(right, correct, rng.choice(wrong_choices, size=n))

    mc, sc = spec.conf_correct
    mi, si = spec.conf_incorrect
    conf = np.where(right, rng.normal(mc, sc, n), rng.normal(mi, si, n))
    conf = np.clip(conf, 0.0, 1.0)

    share = np.bincount(votes, minlength=k) / n
    target = share.copy()
    lo, hi = spec.overprediction
    if hi > 0:
        w = max(wrong_choices, key=lambda a: (share[a], -a))
        boost = min(rng.uniform(lo, hi), 0.98 - target[w])
        if boost > 0:
            rest = target.sum() - target[w]
            target[w] += boost
            if rest > 0:
                others = [a for a in range(k) if a != w]
                target[others] *= (1.0 - target[w]) / rest
    m = spec.meta_knowledge
    ps = m * target + (1.0 - m) * rng.dirichlet(np.ones(k), size=n) + rng.normal(0.0, spec.ps_noise, (n, k))
    ps = np.clip(ps, 1e-3, None)
    ps /= ps.sum(axis=1, keepdims=True)

    responses = tuple(Response(answers[v], float(c), tuple(float(x) for x in row)) for v, c, row in zip(votes, conf, ps))
    return validate_case(DecisionCase(case_id, answers, responses, answers[correct]))


def _da_only_ok(case: DecisionCase) -> bool:
    res = run_methods(case)
    return all(res[mth].outcome == 0 for mth in STANDARD_METHODS) and res[MethodId.DA].outcome == 1


def generate_case(spec: RegimeSpec, seed: int, case_id: str | None = None) -> DecisionCase:
    """One case from ``spec``; identical output for identical ``(spec, seed)``."""
    rng = np.random.default_rng(derive_seed(seed, "synth-case"))
    cid = case_id if case_id is not None else f"synth-{seed}"
    if spec.regime is not Regime.DA_ONLY:
        return _draw(spec, rng, cid)
    for _ in range(spec.max_retries):
        case = _draw(spec, rng, cid)
        if _da_only_ok(case):
            return case
    raise errors.RegimeUnsatisfiable(
        f"no DA-only case after {spec.max_retries} draws for regime parameters {spec}", case_id=cid
    )


@dataclass(frozen=True)
class SynthCorpus:
    cases: list[DecisionCase]
    tags: list[Regime] = field(repr=False)


def generate_corpus(mixture: Sequence[tuple[RegimeSpec, int]], seed: int) -> SynthCorpus:
    """Cases from a regime mixture, shuffled, with neutral sequential ids.

    Regime tags are returned alongside for diagnostics; they never enter the
    case itself.
    """
    total = sum(c for _, c in mixture)
    if total < 1:
        raise ValueError("mixture must request at least one case")
    drawn = []
    for j, (spec, count) in enumerate(mixture):
        for i in range(count):
            drawn.append((generate_case(spec, derive_seed(seed, "mixture", j, i), case_id=""), spec.regime))
    order = np.random.default_rng(derive_seed(seed, "shuffle")).permutation(total)
    width = max(4, len(str(total - 1)))
    cases, tags = [], []
    for pos, idx in enumerate(order):
        case, tag = drawn[idx]
        cases.append(replace(case, case_id=f"case-{pos:0{width}d}"))
        tags.append(tag)
    return SynthCorpus(cases, tags)
