"""Nested model selection: outer k folds, inner leave-one-out per candidate."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .. import errors
from ..aggregators import METHODS, MethodId
from ..case_model import DecisionCase
from ..features import ALL_GROUPS, CaseInstance, SubgroupPlan
from ..pipelines import parse_approach
from ..seeding import derive_seed
from .engine import Design, LooJob, Technique, build_design, predict_row, run_loo
from .report import aligned, fmt, rate

WINNER_RULES = ("majority", "mean")
SUBSAMPLE_THRESHOLD = 2000


def fold_assignment(n: int, folds: int, seed: int) -> list[np.ndarray]:
    """Seeded shuffle, then contiguous folds; the first ``n % folds`` get one extra."""
    if folds < 2 or folds > n:
        raise ValueError(f"cannot split {n} cases into {folds} folds")
    perm = np.random.default_rng(derive_seed(seed, "folds")).permutation(n)
    base, extra = divmod(n, folds)
    out, start = [], 0
    for k in range(folds):
        size = base + (k < extra)
        out.append(np.sort(perm[start : start + size]))
        start += size
    return out


def stratified_subsample(design: Design, pool: np.ndarray, size: int, seed: int) -> np.ndarray:
    """``size`` indices from ``pool``, allocated across label strata by largest remainder."""
    if size >= len(pool):
        return pool
    Y = design.Y[pool]
    keys = [tuple(np.atleast_1d(r).tolist()) for r in Y]
    strata: dict[tuple, list[int]] = {}
    for idx, key in zip(pool, keys):
        strata.setdefault(key, []).append(int(idx))
    ordered = sorted(strata)
    exact = [size * len(strata[k]) / len(pool) for k in ordered]
    take = [int(x) for x in exact]
    for j in sorted(range(len(ordered)), key=lambda j: (-(exact[j] - take[j]), j))[: size - sum(take)]:
        take[j] += 1
    rng = np.random.default_rng(seed)
    chosen = []
    for k, t in zip(ordered, take):
        members = np.array(strata[k])
        chosen.extend(rng.choice(members, size=t, replace=False).tolist())
    return np.array(sorted(chosen), dtype=np.int64)


@dataclass
class SelectionReport:
    approach: str
    candidates: list[Technique]
    folds: list[list[int]]
    inner_successes: list[list[int]]  # [candidate][fold]
    inner_counts: list[int]  # held-out inner units per fold
    winners: list[int]
    test_successes: list[int]
    test_counts: list[int]
    chosen: int
    winner_rule: str
    seed: int
    config_hash: str | None = None
    case_ids: list[str] = field(default_factory=list)

    @property
    def technique(self) -> Technique:
        return self.candidates[self.chosen]

    def inner_rates(self) -> list[list[float]]:
        return [[rate(s, n) for s, n in zip(row, self.inner_counts)] for row in self.inner_successes]

    def test_rates(self) -> list[float]:
        return [rate(s, n) for s, n in zip(self.test_successes, self.test_counts)]

    def to_dict(self) -> dict:
        return {
            "kind": "model_selection",
            "approach": self.approach,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "winner_rule": self.winner_rule,
            "candidates": [c.to_dict() | {"name": c.name} for c in self.candidates],
            "folds": self.folds,
            "inner_successes": self.inner_successes,
            "inner_counts": self.inner_counts,
            "inner_rates": self.inner_rates(),
            "fold_winners": [self.candidates[w].name for w in self.winners],
            "test_successes": self.test_successes,
            "test_counts": self.test_counts,
            "test_rates": self.test_rates(),
            "chosen": self.technique.to_dict() | {"name": self.technique.name},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_table(self) -> str:
        """Candidate rows by fold; a trailing ``*`` marks each fold's winner."""
        k = len(self.folds)
        amp = self.approach == "AMP"
        header = (["Multi-Label"] if amp else []) + ["Classifier"] + [f"Fold {j + 1}" for j in range(k)]
        rates = self.inner_rates()
        rows = []
        prev_scheme = None
        for c, cand in enumerate(self.candidates):
            cells = [fmt(round(r, 3), 3) + ("*" if self.winners[f] == c else "") for f, r in enumerate(rates[c])]
            lead = []
            if amp:
                lead = [cand.scheme if cand.scheme != prev_scheme else ""]
                prev_scheme = cand.scheme
            rows.append(lead + [cand.classifier] + cells)
        rows.append((["Test Results"] + ([""] if amp else [])) + [fmt(round(r, 3), 3) for r in self.test_rates()])
        out = aligned(rows, header)
        return out + f"\nchosen: {self.technique.name} ({self.winner_rule} rule)\n"


def _winner(scores: Sequence[int]) -> int:
    best = 0
    for c in range(1, len(scores)):
        if scores[c] > scores[best]:
            best = c
    return best


def select_on_design(
    design: Design,
    grid: Sequence[Technique],
    seed: int = 0,
    folds: int = 10,
    winner_rule: str = "majority",
    inner_subsample: int | None = None,
    workers: int = 1,
) -> SelectionReport:
    """Nested selection on prepared matrices.

    For each outer fold every candidate is scored by leave-one-out inside the
    remaining cases; the fold's best candidate is refit on all of them and
    tested on the fold. The overall choice goes to the candidate with the
    most fold wins, or the best mean inner score under ``winner_rule="mean"``;
    ties follow grid order.
    """
    if not grid:
        raise ValueError("empty candidate grid")
    if winner_rule not in WINNER_RULES:
        raise ValueError(f"winner_rule must be one of {WINNER_RULES}")
    if design.n < 20:
        raise errors.CorpusTooSmall(f"nested model selection needs at least 20 cases, got {design.n}")
    split = fold_assignment(design.n, folds, seed)
    everything = np.arange(design.n)
    inner = [[0] * folds for _ in grid]
    inner_counts, winners, test_s, test_n = [], [], [], []
    for k, test in enumerate(split):
        train = np.setdiff1d(everything, test)
        held = train
        if inner_subsample and len(train) > SUBSAMPLE_THRESHOLD:
            held = stratified_subsample(design, train, inner_subsample, derive_seed(seed, "subsample", k))
        inner_counts.append(len(held))
        for c, cand in enumerate(grid):
            job = LooJob(design, cand, seed, ("inner", k, cand.name), pool=train, held=held)
            res = run_loo(job, workers)
            inner[c][k] = sum(int(r.chosen == design.correct[r.index]) for r in res)
        w = _winner([inner[c][k] for c in range(len(grid))])
        winners.append(w)
        model = grid[w].fit(design.X[train], design.Y[train], derive_seed(seed, "outer", k), design.labels)
        hits = sum(int(predict_row(design, grid[w], model, int(i)).chosen == design.correct[i]) for i in test)
        test_s.append(hits)
        test_n.append(len(test))
    if winner_rule == "majority":
        wins = Counter(winners)
        chosen = _winner([wins.get(c, 0) for c in range(len(grid))])
    else:
        means = [sum(rate(s, n) for s, n in zip(inner[c], inner_counts)) for c in range(len(grid))]
        chosen = _winner(means)
    return SelectionReport(
        design.approach,
        list(grid),
        [t.tolist() for t in split],
        inner,
        inner_counts,
        winners,
        test_s,
        test_n,
        chosen,
        winner_rule,
        seed,
        case_ids=list(design.case_ids),
    )


def nested_model_selection(
    cases: Sequence[DecisionCase],
    approach: str,
    grid: Sequence[Technique],
    seed: int = 0,
    folds: int = 10,
    plan: SubgroupPlan = SubgroupPlan(),
    included_methods: Iterable[MethodId | str] = METHODS,
    mask: Iterable[str] = ALL_GROUPS,
    winner_rule: str = "majority",
    inner_subsample: int | None = None,
    workers: int = 1,
    instances: Sequence[CaseInstance] | None = None,
) -> SelectionReport:
    approach = parse_approach(approach)
    if len(cases) < 20:
        raise errors.CorpusTooSmall(f"nested model selection needs at least 20 cases, got {len(cases)}")
    for cand in grid:
        if cand.approach != approach:
            raise ValueError(f"candidate {cand.name} is for {cand.approach}, not {approach}")
    design = build_design(cases, approach, included_methods, mask, plan, instances)
    return select_on_design(design, grid, seed, folds, winner_rule, inner_subsample, workers)
