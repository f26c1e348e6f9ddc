"""Training designs, techniques, and the leave-one-out work engine.

A *design* is a corpus turned into the matrices one approach trains on,
together with every included method's choice per case, so that a fitted
model's output can be resolved to an answer without re-running the
aggregators. Work units (one held-out case each) are independent and seeded
by their index, so results do not depend on how they are spread over worker
processes.
"""

from __future__ import annotations

import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .. import errors
from ..aggregators import METHODS, MethodId, canonical, run_methods
from ..case_model import DecisionCase
from ..features import ALL_GROUPS, CaseInstance, SubgroupPlan, featurize_case
from ..learners import KINDS, SCHEMES, MultiLabelWrapper, make_classifier
from ..pipelines import AMP, DAP, amp_label_names, build_amp_instance, build_dap_instance, select_method, stack_amp, stack_dap
from ..seeding import derive_seed

DAP_KINDS = ("RF", "LR", "KNN")


@dataclass(frozen=True)
class Technique:
    """One candidate learner: a classifier, plus a multi-label scheme for AMP."""

    approach: str
    classifier: str
    scheme: str | None = None
    params: tuple[tuple[str, object], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "approach", self.approach.upper())
        object.__setattr__(self, "classifier", self.classifier.upper())
        if self.scheme is not None:
            object.__setattr__(self, "scheme", self.scheme.upper())
        if self.approach not in (AMP, DAP):
            raise ValueError(f"unknown approach {self.approach!r}")
        if self.classifier not in KINDS:
            raise ValueError(f"unknown classifier {self.classifier!r}")
        if self.approach == AMP and self.scheme not in SCHEMES:
            raise ValueError("AMP techniques need a multi-label scheme (BR, CC or LP)")
        if self.approach == DAP and self.scheme is not None:
            raise ValueError("DAP techniques take no multi-label scheme")
        object.__setattr__(self, "params", tuple(sorted(dict(self.params).items())))

    @property
    def name(self) -> str:
        return f"{self.scheme}+{self.classifier}" if self.scheme else self.classifier

    def to_dict(self) -> dict:
        return {"approach": self.approach, "scheme": self.scheme, "classifier": self.classifier, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d: dict) -> "Technique":
        return cls(d["approach"], d["classifier"], d.get("scheme"), tuple((d.get("params") or {}).items()))

    @classmethod
    def parse(cls, approach: str, text: str, params: dict | None = None) -> "Technique":
        """``"BR+RF"`` style names (AMP) or a bare classifier (DAP)."""
        scheme, _, clf = text.upper().rpartition("+")
        return cls(approach, clf, scheme or None, tuple((params or {}).items()))

    def fit(self, X: np.ndarray, Y: np.ndarray, seed: int, labels: Sequence[str] | None = None):
        if self.approach == AMP:
            return MultiLabelWrapper(self.scheme, self.classifier, dict(self.params), seed, labels).fit(X, Y)
        return make_classifier(self.classifier, dict(self.params), seed).fit(X, Y)


def amp_grid(params: dict[str, dict] | None = None) -> list[Technique]:
    """All scheme/classifier pairs, grouped by scheme."""
    params = params or {}
    return [Technique(AMP, c, s, tuple(params.get(c, {}).items())) for s in SCHEMES for c in KINDS]


def dap_grid(params: dict[str, dict] | None = None) -> list[Technique]:
    params = params or {}
    return [Technique(DAP, c, None, tuple(params.get(c, {}).items())) for c in DAP_KINDS]


def default_technique(approach: str, params: dict[str, dict] | None = None) -> Technique:
    params = params or {}
    if approach.upper() == AMP:
        return Technique(AMP, "RF", "BR", tuple(params.get("RF", {}).items()))
    return Technique(DAP, "RF", None, tuple(params.get("RF", {}).items()))


def featurize_corpus(cases: Sequence[DecisionCase], plan: SubgroupPlan = SubgroupPlan()) -> list[CaseInstance]:
    return [featurize_case(c, plan) for c in cases]


@dataclass
class Design:
    approach: str
    methods: tuple[MethodId, ...]
    mask: frozenset[str]
    case_ids: list[str]
    X: np.ndarray
    Y: np.ndarray  # AMP: n x |methods| outcome bits; DAP: correct answer index
    choices: np.ndarray  # n x |methods| chosen answer index
    correct: np.ndarray
    n_answers: np.ndarray

    @property
    def n(self) -> int:
        return len(self.case_ids)

    @property
    def labels(self) -> list[str]:
        return amp_label_names(self.methods)

    def outcomes(self, method: MethodId) -> np.ndarray:
        j = self.methods.index(MethodId(method))
        return (self.choices[:, j] == self.correct).astype(np.int64)


def build_design(
    cases: Sequence[DecisionCase],
    approach: str,
    included_methods: Iterable[MethodId | str] = METHODS,
    mask: Iterable[str] = ALL_GROUPS,
    plan: SubgroupPlan = SubgroupPlan(),
    instances: Sequence[CaseInstance] | None = None,
) -> Design:
    approach = approach.upper()
    methods = canonical(included_methods)
    mask = frozenset(mask)
    if instances is None:
        instances = featurize_corpus(cases, plan)
    if approach == AMP:
        built = [build_amp_instance(c, plan, methods, mask, inst) for c, inst in zip(cases, instances)]
        X, Y = stack_amp(built)
    else:
        built = [build_dap_instance(c, plan, methods, mask, inst) for c, inst in zip(cases, instances)]
        X, Y = stack_dap(built)
    choices = np.empty((len(cases), len(methods)), dtype=np.int64)
    for i, c in enumerate(cases):
        res = run_methods(c, methods)
        for j, m in enumerate(methods):
            choices[i, j] = c.answer_index[res[m].chosen]
    correct = np.array([c.correct_index for c in cases], dtype=np.int64)
    n_answers = np.array([len(c.answers) for c in cases], dtype=np.int64)
    return Design(approach, methods, mask, [c.case_id for c in cases], X, Y, choices, correct, n_answers)


def training_indices(pool: np.ndarray, held_out: int) -> np.ndarray:
    return pool[pool != held_out]


def loo_splits(pool: Sequence[int], held: Iterable[int] | None = None) -> Iterator[tuple[int, np.ndarray]]:
    """``(held_out, training_indices)`` pairs; the held-out index never trains."""
    pool = np.asarray(pool, dtype=np.int64)
    for i in pool if held is None else held:
        yield int(i), training_indices(pool, int(i))


@dataclass
class LooJob:
    design: Design
    technique: Technique
    seed: int
    tag: tuple = ()
    pool: np.ndarray | None = None
    held: np.ndarray | None = None

    def units(self) -> list[int]:
        pool = np.arange(self.design.n) if self.pool is None else self.pool
        return [int(i) for i in (pool if self.held is None else self.held)]


@dataclass(frozen=True)
class UnitResult:
    index: int
    chosen: int
    selected: int  # index into design.methods for AMP, -1 for DAP
    probabilities: tuple[float, ...] = field(default=())


def predict_row(design: Design, technique: Technique, model, i: int) -> UnitResult:
    x = design.X[i : i + 1]
    if design.approach == AMP:
        probs = model.predict_label_proba(x)[0]
        selected = select_method(probs, design.methods)
        j = design.methods.index(selected)
        return UnitResult(i, int(design.choices[i, j]), j, tuple(float(p) for p in probs))
    P = model.predict_proba(x)[0]
    per_answer = np.zeros(int(design.n_answers[i]))
    for c, p in zip(model.classes_, P):
        if 0 <= int(c) < len(per_answer):
            per_answer[int(c)] = p
    return UnitResult(i, int(np.argmax(per_answer)), -1, tuple(float(p) for p in per_answer))


def run_unit(job: LooJob, i: int) -> UnitResult:
    d = job.design
    pool = np.arange(d.n) if job.pool is None else np.asarray(job.pool, dtype=np.int64)
    train = training_indices(pool, i)
    if len(train) == 0:
        raise errors.EmptyTrainingSet("leave-one-out needs at least two cases")
    model = job.technique.fit(d.X[train], d.Y[train], derive_seed(job.seed, *job.tag, "loo", i), d.labels)
    return predict_row(d, job.technique, model, i)


_ACTIVE: LooJob | None = None


def _install(job: LooJob) -> None:
    global _ACTIVE
    _ACTIVE = job


def _run_chunk(indices: list[int]) -> list[UnitResult]:
    return [run_unit(_ACTIVE, i) for i in indices]


def run_loo(job: LooJob, workers: int = 1) -> list[UnitResult]:
    """Every held-out unit of ``job``, in unit order."""
    units = job.units()
    if workers <= 1 or len(units) < 2:
        return [run_unit(job, i) for i in units]
    workers = min(workers, len(units))
    bounds = np.linspace(0, len(units), workers + 1).astype(int)
    chunks = [units[a:b] for a, b in zip(bounds, bounds[1:]) if b > a]
    ctx = mp.get_context("fork")
    with ProcessPoolExecutor(len(chunks), mp_context=ctx, initializer=_install, initargs=(job,)) as ex:
        parts = list(ex.map(_run_chunk, chunks))
    return [r for part in parts for r in part]
