"""The 27 engineered case features.

Rows 1-17 describe the full response set; rows 18-27 describe how the same
statistics move across random sub-sets of the responses. Feature names and
their order are part of the export format.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import errors
from .case_model import (
    DecisionCase,
    Response,
    confidence_stats,
    first_argmax,
    first_argmin,
    mean,
    predicted_support_stats,
    pvariance,
    support_stats,
)

FEATURE_NAMES: tuple[str, ...] = (
    "N",
    "D_Smax_Smin",
    "ES",
    "VarS",
    "D_S_Uniform",
    "CAmin",
    "CAmax",
    "MinC",
    "AvgC",
    "VarC",
    "D_MaxC_AvgC",
    "B_Amax_MaxCa",
    "MaxPSa",
    "MinPSa",
    "AvgPSv",
    "P_lowC_highPSv",
    "P_lowPSv_highC",
    "SG_B_Amax",
    "SG_VarSAmax",
    "SG_D_MaxVarS_MinVarS",
    "SG_D_MaxES_MinES",
    "SG_D_MaxAvgC_MinAvgC",
    "SG_D_MaxVarC_MinVarC",
    "SG_VarCAmin",
    "SG_VarCAmax",
    "SG_AvgCAmin",
    "SG_AvgCAmax",
)
N_FEATURES = len(FEATURE_NAMES)

VOTING = "voting"
CONFIDENCE = "confidence"
PREDICTED_SUPPORT = "predicted_support"
ALL_GROUPS: frozenset[str] = frozenset({VOTING, CONFIDENCE, PREDICTED_SUPPORT})

# 1-based row numbers
GROUP_ROWS: dict[str, frozenset[int]] = {
    VOTING: frozenset({1, 2, 3, 4, 5, 18, 19, 20, 21}),
    CONFIDENCE: frozenset({6, 7, 8, 9, 10, 11, 12, 16, 17, 22, 23, 24, 25, 26, 27}),
    PREDICTED_SUPPORT: frozenset({13, 14, 15, 16, 17}),
}


def row_groups(row: int) -> frozenset[str]:
    return frozenset(g for g, rows in GROUP_ROWS.items() if row in rows)


def mask_indices(mask: Iterable[str] = ALL_GROUPS) -> list[int]:
    """0-based feature indices kept under ``mask``.

    A row survives only if every group it is built from is present, so rows
    16 and 17 drop out when either confidence or predicted support is masked.
    """
    mask = frozenset(mask)
    unknown = mask - ALL_GROUPS
    if unknown:
        raise ValueError(f"unknown feature groups: {sorted(unknown)}")
    return [r - 1 for r in range(1, N_FEATURES + 1) if row_groups(r) <= mask]


def feature_names(mask: Iterable[str] = ALL_GROUPS) -> list[str]:
    return [FEATURE_NAMES[i] for i in mask_indices(mask)]


@dataclass(frozen=True)
class SubgroupPlan:
    num_subgroups: int = 10
    fraction: float = 0.5
    min_size: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.num_subgroups < 1:
            raise ValueError("num_subgroups must be positive")
        if not 0.0 < self.fraction <= 1.0:
            raise ValueError("fraction must lie in (0, 1]")
        if self.min_size < 1:
            raise ValueError("min_size must be positive")

    def subset_size(self, n: int) -> int:
        size = max(self.min_size, math.floor(self.fraction * n + 0.5))
        if n >= 2:
            size = min(size, n - 1)
        return size


@dataclass(frozen=True)
class CaseInstance:
    case_id: str
    features: tuple[float, ...]
    feature_mask: frozenset[str] = ALL_GROUPS

    def vector(self, mask: Iterable[str] | None = None) -> np.ndarray:
        idx = mask_indices(self.feature_mask if mask is None else mask)
        return np.array([self.features[i] for i in idx], dtype=float)

    def named(self) -> dict[str, float]:
        return {FEATURE_NAMES[i]: self.features[i] for i in mask_indices(self.feature_mask)}


def entropy2(probs: Iterable[float]) -> float:
    return -math.fsum(p * math.log2(p) for p in probs if p > 0.0)


def _answer_signature(case: DecisionCase, i: int):
    votes = case.vote_indices
    sup = sorted((r.confidence, r.predicted_support[i]) for r, v in zip(case.responses, votes) if v == i)
    col = sorted(r.predicted_support[i] for r in case.responses)
    return (len(sup), tuple(sup), tuple(col))


def canonical_order(case: DecisionCase) -> list[Response]:
    """Responses sorted by a key that ignores input order and answer names.

    Answers are ranked by a name-free signature (support count, supporters'
    confidence and own-answer prediction, prediction column), falling back to
    the declared index only when two signatures coincide. Responses are then
    sorted by (answer rank, confidence, own-vote prediction, predictions in
    rank order).
    """
    m = len(case.answers)
    ranked = sorted(range(m), key=lambda i: (_answer_signature(case, i), i))
    rank = {ans: r for r, ans in enumerate(ranked)}
    keyed = []
    for j, (resp, v) in enumerate(zip(case.responses, case.vote_indices)):
        ps = resp.predicted_support
        key = (rank[v], resp.confidence, ps[v], tuple(ps[i] for i in ranked))
        keyed.append((key, j))
    keyed.sort()
    return [case.responses[j] for _, j in keyed]


def _rng_for(case_id: str, seed: int) -> np.random.Generator:
    digest = hashlib.sha256(f"{int(seed)}\x00{case_id}".encode()).digest()
    key = np.frombuffer(digest[:16], dtype=np.uint64).copy()
    return np.random.Generator(np.random.Philox(key=key))


def sample_subgroups(case: DecisionCase, plan: SubgroupPlan = SubgroupPlan()) -> list[tuple[Response, ...]]:
    """Draw ``plan.num_subgroups`` independent sub-sets without replacement.

    Reproducible from ``(case_id, plan.seed)`` and insensitive to the input
    order of responses.
    """
    n = case.n
    if n < 2:
        raise errors.CaseTooSmall(f"sub-group sampling needs at least 2 responses, got {n}", case_id=case.case_id)
    ordered = canonical_order(case)
    size = plan.subset_size(n)
    rng = _rng_for(case.case_id, plan.seed)
    out = []
    for _ in range(plan.num_subgroups):
        idx = np.sort(rng.choice(n, size=size, replace=False))
        out.append(tuple(ordered[i] for i in idx))
    return out


def compute_global_features(case: DecisionCase) -> list[float]:
    """Rows 1-17 for a validated case."""
    ss = support_stats(case)
    cs = confidence_stats(case, ss)
    ps = predicted_support_stats(case)
    answers = case.answers
    n = case.n
    s = [ss.support[a] for a in answers]
    k = len(answers)

    d_smax_smin = ss.support[ss.a_max] - ss.support[ss.a_min]
    es = entropy2(s)
    var_s = pvariance(s)
    d_uniform = math.sqrt(math.fsum((x - 1.0 / k) ** 2 for x in s))
    ca_min = cs.per_answer_avg[ss.a_min]
    ca_min = 0.0 if ca_min is None else ca_min
    ca_max = cs.per_answer_avg[ss.a_max]

    # exact comparison of supporter-average confidences
    exact_avg = {}
    for a in answers:
        sup = ss.supporters[a]
        if sup:
            exact_avg[a] = sum(Fraction(r.confidence) for r in sup) / len(sup)
    b_amax = float(exact_avg[ss.a_max] == max(exact_avg.values()))

    ps_avgs = [ps.per_answer_avg[a] for a in answers]
    avg_psv = mean(ps.own_vote_ps)

    # strict comparisons against the means, in exact arithmetic
    conf_exact = [Fraction(c) for c in cs.all_conf]
    own_exact = [Fraction(p) for p in ps.own_vote_ps]
    sum_c = sum(conf_exact)
    sum_p = sum(own_exact)
    low_c_high_p = sum(1 for c, p in zip(conf_exact, own_exact) if c * n < sum_c and p * n > sum_p)
    low_p_high_c = sum(1 for c, p in zip(conf_exact, own_exact) if c * n > sum_c and p * n < sum_p)

    return [
        float(n),
        d_smax_smin,
        es,
        var_s,
        d_uniform,
        ca_min,
        ca_max,
        cs.min,
        cs.mean,
        cs.variance,
        cs.max - cs.mean,
        b_amax,
        max(ps_avgs),
        min(ps_avgs),
        avg_psv,
        low_c_high_p / n,
        low_p_high_c / n,
    ]


def _subset_summary(case: DecisionCase, subset: Sequence[Response]):
    idx = case.answer_index
    m = len(case.answers)
    size = len(subset)
    counts = [0] * m
    conf_by = [[] for _ in range(m)]
    for r in subset:
        vi = idx[r.vote]
        counts[vi] += 1
        conf_by[vi].append(r.confidence)
    s = [c / size for c in counts]
    i_max = first_argmax(counts)
    i_min = first_argmin(counts)
    conf = [r.confidence for r in subset]
    return {
        "a_max": i_max,
        "s_amax": s[i_max],
        "var_s": pvariance(s),
        "es": entropy2(s),
        "avg_c": mean(conf),
        "var_c": pvariance(conf),
        "c_amin": mean(conf_by[i_min]) if conf_by[i_min] else 0.0,
        "c_amax": mean(conf_by[i_max]) if conf_by[i_max] else 0.0,
    }


def compute_subgroup_features(case: DecisionCase, subgroups: Sequence[Sequence[Response]]) -> list[float]:
    """Rows 18-27 from explicit response sub-sets."""
    if not subgroups:
        raise ValueError("at least one sub-group is required")
    rows = [_subset_summary(case, sg) for sg in subgroups]

    def col(key):
        return [r[key] for r in rows]

    def spread(key):
        v = col(key)
        return max(v) - min(v)

    return [
        float(len(set(col("a_max"))) > 1),
        pvariance(col("s_amax")),
        spread("var_s"),
        spread("es"),
        spread("avg_c"),
        spread("var_c"),
        pvariance(col("c_amin")),
        pvariance(col("c_amax")),
        mean(col("c_amin")),
        mean(col("c_amax")),
    ]


def featurize_case(
    case: DecisionCase,
    plan: SubgroupPlan = SubgroupPlan(),
    mask: Iterable[str] = ALL_GROUPS,
) -> CaseInstance:
    values = compute_global_features(case) + compute_subgroup_features(case, sample_subgroups(case, plan))
    if not all(math.isfinite(v) for v in values):
        raise ValueError(f"non-finite feature in case {case.case_id!r}")
    return CaseInstance(case.case_id, tuple(values), frozenset(mask))
