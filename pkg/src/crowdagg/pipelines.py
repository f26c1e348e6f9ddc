"""Learned aggregation: method prediction (AMP) and direct answer prediction (DAP).

AMP trains a multi-label model whose labels say which rule-based methods
would have answered a case correctly, then applies the method with the
highest predicted probability. DAP trains a plain classifier on the case
features plus every method's chosen answer (one-hot) and returns the answer
it predicts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import errors
from .aggregators import METHODS, AggregationResult, MethodId, canonical, run_methods
from .case_model import DecisionCase
from .features import ALL_GROUPS, CaseInstance, SubgroupPlan, feature_names, featurize_case, mask_indices

AMP = "AMP"
DAP = "DAP"
APPROACHES = (AMP, DAP)


def parse_approach(name: str) -> str:
    a = str(name).upper()
    if a not in APPROACHES:
        raise ValueError(f"unknown approach {name!r}; expected amp or dap")
    return a


def _included(included_methods: Iterable[MethodId | str]) -> tuple[MethodId, ...]:
    inc = canonical(included_methods)
    if MethodId.MR not in inc:
        raise ValueError("MR is part of every method set")
    return inc


@dataclass(frozen=True)
class AmpInstance:
    case_id: str
    features: tuple[float, ...]
    labels: tuple[int, ...]
    methods: tuple[MethodId, ...]
    feature_mask: frozenset[str] = ALL_GROUPS


@dataclass(frozen=True)
class DapInstance:
    case_id: str
    features: tuple[float, ...]
    label: int
    methods: tuple[MethodId, ...]
    n_answers: int
    feature_mask: frozenset[str] = ALL_GROUPS


def one_hot(index: int, k: int) -> list[float]:
    v = [0.0] * k
    v[index] = 1.0
    return v


def amp_feature_names(mask: Iterable[str] = ALL_GROUPS) -> list[str]:
    return feature_names(mask)


def amp_label_names(methods: Iterable[MethodId | str]) -> list[str]:
    return [f"O_{m}" for m in canonical(methods)]


def dap_feature_names(mask: Iterable[str], methods: Iterable[MethodId | str], answers: Sequence) -> list[str]:
    names = feature_names(mask)
    for m in canonical(methods):
        names.extend(f"f_{m}={a}" for a in answers)
    return names


def _masked(instance: CaseInstance, mask) -> tuple[float, ...]:
    return tuple(instance.features[i] for i in mask_indices(mask))


def build_amp_instance(
    case: DecisionCase,
    plan: SubgroupPlan = SubgroupPlan(),
    included_methods: Iterable[MethodId | str] = METHODS,
    mask: Iterable[str] = ALL_GROUPS,
    instance: CaseInstance | None = None,
) -> AmpInstance:
    """Features plus one outcome bit per included method, in canonical order.

    Without a given method, DA's counter ignores that method's choice.
    """
    if case.correct_answer is None:
        raise errors.MissingGroundTruth("method-prediction labels need the correct answer", case_id=case.case_id)
    inc = _included(included_methods)
    mask = frozenset(mask)
    inst = instance if instance is not None else featurize_case(case, plan)
    results = run_methods(case, inc)
    labels = tuple(results[m].outcome for m in inc)
    return AmpInstance(case.case_id, _masked(inst, mask), labels, inc, mask)


def dap_extra_features(case: DecisionCase, results: dict, methods: Sequence[MethodId]) -> list[float]:
    k = len(case.answers)
    out: list[float] = []
    for m in methods:
        out.extend(one_hot(case.answer_index[results[m].chosen], k))
    return out


def build_dap_instance(
    case: DecisionCase,
    plan: SubgroupPlan = SubgroupPlan(),
    included_methods: Iterable[MethodId | str] = METHODS,
    mask: Iterable[str] = ALL_GROUPS,
    instance: CaseInstance | None = None,
) -> DapInstance:
    if case.correct_answer is None:
        raise errors.MissingGroundTruth("answer-prediction targets need the correct answer", case_id=case.case_id)
    inc = _included(included_methods)
    mask = frozenset(mask)
    inst = instance if instance is not None else featurize_case(case, plan)
    results = run_methods(case, inc)
    feats = _masked(inst, mask) + tuple(dap_extra_features(case, results, inc))
    return DapInstance(case.case_id, feats, case.correct_index, inc, len(case.answers), mask)


def select_method(label_probs: Sequence[float], methods: Sequence[MethodId]) -> MethodId:
    """Method whose success label has the highest probability; ties follow canonical order."""
    methods = tuple(methods)
    if len(label_probs) != len(methods):
        raise errors.WidthMismatch(f"{len(label_probs)} label probabilities for {len(methods)} methods")
    order = sorted(range(len(methods)), key=lambda j: METHODS.index(methods[j]))
    best = order[0]
    for j in order[1:]:
        if label_probs[j] > label_probs[best]:
            best = j
    return methods[best]


def amp_select_and_aggregate(
    model,
    case: DecisionCase,
    plan: SubgroupPlan = SubgroupPlan(),
    included_methods: Iterable[MethodId | str] = METHODS,
    mask: Iterable[str] = ALL_GROUPS,
) -> AggregationResult:
    """Apply the method the multi-label model is most confident will succeed.

    The returned result is the selected method's own result on the case; its
    ``method`` field records the selection.
    """
    inc = _included(included_methods)
    x = np.array(_masked(featurize_case(case, plan), mask))
    probs = model.predict_label_proba(x)[0]
    selected = select_method(probs, inc)
    return run_methods(case, inc)[selected]


def dap_predict_answer(
    model,
    case: DecisionCase,
    plan: SubgroupPlan = SubgroupPlan(),
    included_methods: Iterable[MethodId | str] = METHODS,
    mask: Iterable[str] = ALL_GROUPS,
) -> AggregationResult:
    inc = _included(included_methods)
    inst = featurize_case(case, plan)
    results = run_methods(case, inc)
    x = np.array(_masked(inst, mask) + tuple(dap_extra_features(case, results, inc)))
    P = model.predict_proba(x)[0]
    return resolve_answer(case, model.classes_, P)


def resolve_answer(case: DecisionCase, classes, probs) -> AggregationResult:
    """Answer with the highest class probability; ties go to the lowest answer index."""
    k = len(case.answers)
    per_answer = np.zeros(k)
    for c, p in zip(classes, probs):
        per_answer[int(c)] = p
    idx = int(np.argmax(per_answer))
    chosen = case.answers[idx]
    out = None if case.correct_answer is None else int(chosen == case.correct_answer)
    return AggregationResult(DAP, chosen, {a: float(per_answer[i]) for i, a in enumerate(case.answers)}, out)


def stack_amp(instances: Sequence[AmpInstance]) -> tuple[np.ndarray, np.ndarray]:
    widths = {len(i.features) for i in instances}
    if len(widths) > 1:
        raise errors.WidthMismatch(f"inconsistent feature widths {sorted(widths)}")
    return np.array([i.features for i in instances], dtype=float), np.array([i.labels for i in instances], dtype=np.int64)


def stack_dap(instances: Sequence[DapInstance]) -> tuple[np.ndarray, np.ndarray]:
    widths = {len(i.features) for i in instances}
    if len(widths) > 1:
        raise errors.WidthMismatch(f"inconsistent feature widths {sorted(widths)} (mixed answer-set sizes?)")
    return np.array([i.features for i in instances], dtype=float), np.array([i.label for i in instances], dtype=np.int64)
