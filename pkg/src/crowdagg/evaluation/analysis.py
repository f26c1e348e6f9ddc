from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .. import errors
from ..aggregators import METHODS, MethodId, canonical, run_methods
from ..case_model import DecisionCase
from ..features import ALL_GROUPS, CONFIDENCE, PREDICTED_SUPPORT, VOTING, CaseInstance, SubgroupPlan
from ..pipelines import parse_approach
from .engine import LooJob, Technique, build_design, default_technique, featurize_corpus, run_loo
from .report import CoverageReport, EvaluationReport, aligned, fmt, rate


def loo_evaluate(
    cases: Sequence[DecisionCase],
    approach: str,
    technique: Technique | None = None,
    seed: int = 0,
    plan: SubgroupPlan = SubgroupPlan(),
    included_methods: Iterable[MethodId | str] = METHODS,
    mask: Iterable[str] = ALL_GROUPS,
    workers: int = 1,
    instances: Sequence[CaseInstance] | None = None,
    exact_mcnemar: bool = False,
) -> EvaluationReport:
    """Leave-one-out: each case is predicted by a model trained on all the others."""
    approach = parse_approach(approach)
    if len(cases) < 3:
        raise errors.CorpusTooSmall(f"leave-one-out needs at least 3 cases, got {len(cases)}")
    technique = technique or default_technique(approach)
    if technique.approach != approach:
        raise ValueError(f"technique {technique.name} is for {technique.approach}, not {approach}")
    design = build_design(cases, approach, included_methods, mask, plan, instances)
    results = run_loo(LooJob(design, technique, seed), workers)
    methods = tuple(str(m) for m in design.methods)
    return EvaluationReport(
        approach=approach,
        technique=technique.to_dict(),
        seed=seed,
        methods=methods,
        feature_mask=tuple(sorted(design.mask)),
        case_ids=list(design.case_ids),
        correct=design.correct.tolist(),
        method_choices={m: design.choices[:, j].tolist() for j, m in enumerate(methods)},
        predictions=[r.chosen for r in results],
        selected=[methods[r.selected] if r.selected >= 0 else None for r in results],
        exact_mcnemar=exact_mcnemar,
    )


def coverage_analysis(cases: Sequence[DecisionCase], methods: Iterable[MethodId | str] = METHODS) -> CoverageReport:
    methods = canonical(methods)
    outcomes: dict[str, list[int]] = {str(m): [] for m in methods}
    for c in cases:
        if c.correct_answer is None:
            raise errors.MissingGroundTruth("coverage needs every case's correct answer", case_id=c.case_id)
        res = run_methods(c, methods)
        for m in methods:
            outcomes[str(m)].append(res[m].outcome)
    return CoverageReport.from_outcomes([c.case_id for c in cases], outcomes)


_TOKENS = {
    "confidence": "confidence",
    "conf": "confidence",
    "c": "confidence",
    "ps": "ps",
    "predicted_support": "ps",
    "predictedsupport": "ps",
    "wc_hac": "wc_hac",
    "wc+hac": "wc_hac",
    "hac+wc": "wc_hac",
    "sp": "sp",
    "da": "da",
}
_LOCKED = {"voting", "v", "mr"}


@dataclass(frozen=True)
class Exclusion:
    """What an ablation run leaves out. Voting features and MR always stay."""

    confidence: bool = False
    ps: bool = False
    wc_hac: bool = False
    sp: bool = False
    da: bool = False

    @classmethod
    def parse(cls, spec: str | Iterable[str] | None) -> "Exclusion":
        if spec is None:
            return cls()
        items = spec.split(",") if isinstance(spec, str) else list(spec)
        flags = {}
        for raw in items:
            tok = raw.strip().lower()
            if tok in ("", "none"):
                continue
            if tok in _LOCKED:
                raise errors.InvalidExclusion(f"{raw.strip()!r} is kept in every ablation run")
            if tok in ("wc", "hac"):
                raise errors.InvalidExclusion("WC and HAC are excluded together; use wc_hac")
            if tok not in _TOKENS:
                raise errors.InvalidExclusion(f"unknown exclusion {raw.strip()!r}")
            flags[_TOKENS[tok]] = True
        return cls(**flags)

    @property
    def mask(self) -> frozenset[str]:
        groups = {VOTING, CONFIDENCE, PREDICTED_SUPPORT}
        if self.confidence:
            groups.discard(CONFIDENCE)
        if self.ps:
            groups.discard(PREDICTED_SUPPORT)
        return frozenset(groups)

    @property
    def methods(self) -> tuple[MethodId, ...]:
        drop = set()
        if self.wc_hac:
            drop |= {MethodId.WC, MethodId.HAC}
        if self.sp:
            drop.add(MethodId.SP)
        if self.da:
            drop.add(MethodId.DA)
        return tuple(m for m in METHODS if m not in drop)

    @property
    def label(self) -> str:
        names = [n for n, on in (("confidence", self.confidence), ("ps", self.ps), ("wc_hac", self.wc_hac), ("sp", self.sp), ("da", self.da)) if on]
        return ",".join(names) or "none"

    def columns(self) -> dict[str, bool]:
        """Included flags in the ablation-table column order."""
        return {
            "Voting": True,
            "Confidence": not self.confidence,
            "PredictedSupport": not self.ps,
            "MR": True,
            "WC,HAC": not self.wc_hac,
            "SP": not self.sp,
            "DA": not self.da,
        }


ABLATION_ROWS: tuple[Exclusion, ...] = (
    Exclusion(),
    Exclusion(confidence=True),
    Exclusion(ps=True),
    Exclusion(confidence=True, ps=True),
    Exclusion(wc_hac=True),
    Exclusion(sp=True),
    Exclusion(wc_hac=True, sp=True),
    Exclusion(da=True),
    Exclusion(confidence=True, wc_hac=True),
    Exclusion(ps=True, sp=True),
    Exclusion(confidence=True, ps=True, wc_hac=True, sp=True),
)


@dataclass
class AblationRow:
    approach: str
    exclusion: Exclusion
    successes: int
    cases: int
    seed: int
    config_hash: str | None = None

    @property
    def success_rate(self) -> float:
        return rate(self.successes, self.cases)

    def to_dict(self) -> dict:
        return {
            "kind": "ablation",
            "approach": self.approach,
            "exclude": self.exclusion.label,
            "included": self.exclusion.columns(),
            "successes": self.successes,
            "cases": self.cases,
            "success_rate": self.success_rate,
            "seed": self.seed,
            "config_hash": self.config_hash,
        }


def ablation_table(rows: Sequence[AblationRow]) -> str:
    if not rows:
        return ""
    cols = list(rows[0].exclusion.columns())
    body = [["V" if r.exclusion.columns()[c] else "" for c in cols] + [fmt(r.success_rate)] for r in rows]
    return aligned(body, cols + ["Success Rate"])


def ablate(
    cases: Sequence[DecisionCase],
    approach: str,
    technique: Technique | None = None,
    exclusion: Exclusion | str | Iterable[str] | None = None,
    seed: int = 0,
    plan: SubgroupPlan = SubgroupPlan(),
    workers: int = 1,
    instances: Sequence[CaseInstance] | None = None,
) -> AblationRow:
    """One ablation row: leave-one-out with features and methods withheld.

    Dropping a method removes its label (AMP) or one-hot block (DAP) and takes
    it out of DA's inputs, so DA's own label is recomputed.
    """
    ex = exclusion if isinstance(exclusion, Exclusion) else Exclusion.parse(exclusion)
    rep = loo_evaluate(cases, approach, technique, seed, plan, ex.methods, ex.mask, workers, instances)
    return AblationRow(rep.approach, ex, rep.successes, rep.n_cases, seed)


def run_ablations(
    cases: Sequence[DecisionCase],
    approach: str,
    technique: Technique | None = None,
    exclusions: Sequence[Exclusion] = ABLATION_ROWS,
    seed: int = 0,
    plan: SubgroupPlan = SubgroupPlan(),
    workers: int = 1,
    instances: Sequence[CaseInstance] | None = None,
) -> list[AblationRow]:
    if instances is None:
        instances = featurize_corpus(cases, plan)
    return [ablate(cases, approach, technique, ex, seed, plan, workers, instances) for ex in exclusions]


__all__ = [
    "ABLATION_ROWS",
    "AblationRow",
    "Exclusion",
    "ablate",
    "ablation_table",
    "coverage_analysis",
    "loo_evaluate",
    "run_ablations",
]
