"""Run configuration loaded from YAML.

Every key is optional; unknown keys are rejected. Example::

    approach: amp
    technique: BR+RF        # omit to use the default for the approach
    methods: [MR, HAC, WC, SP, DA]
    seed: 0
    workers: 1              # default: $CROWDAGG_WORKERS, else 1
    exclude_degenerate: true
    features: {num_subgroups: 10, fraction: 0.5, min_size: 3, seed: 0}
    learners:
      RF: {n_trees: 100, max_features: sqrt}
    evaluation: {folds: 10, inner_subsample: null, winner_rule: majority, exact_mcnemar: false}
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field

import yaml

from .. import errors
from ..aggregators import METHODS, MethodId, canonical
from ..evaluation import Technique, amp_grid, dap_grid, default_technique
from ..features import SubgroupPlan
from ..learners import DEFAULT_PARAMS, KINDS
from ..pipelines import parse_approach

WORKERS_ENV = "CROWDAGG_WORKERS"


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None or raw == "":
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise errors.ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise errors.ConfigError(f"{WORKERS_ENV} must be at least 1")
    return n


@dataclass(frozen=True)
class EvaluationOptions:
    folds: int = 10
    inner_subsample: int | None = None
    winner_rule: str = "majority"
    exact_mcnemar: bool = False


@dataclass(frozen=True)
class RunConfig:
    approach: str = "AMP"
    technique: str | None = None
    methods: tuple[str, ...] = tuple(str(m) for m in METHODS)
    seed: int = 0
    workers: int = field(default_factory=default_workers)
    exclude_degenerate: bool = True
    features: SubgroupPlan = SubgroupPlan()
    learners: dict = field(default_factory=lambda: {k: dict(v) for k, v in DEFAULT_PARAMS.items()})
    evaluation: EvaluationOptions = EvaluationOptions()

    @classmethod
    def from_dict(cls, raw: dict | None) -> "RunConfig":
        raw = dict(raw or {})
        _reject_unknown(raw, {f.name for f in dataclasses.fields(cls)}, "config")
        kw = {}
        try:
            if "approach" in raw:
                kw["approach"] = parse_approach(raw["approach"])
            if raw.get("technique") is not None:
                kw["technique"] = str(raw["technique"]).upper()
            if "methods" in raw:
                methods = raw["methods"]
                if isinstance(methods, str):
                    methods = methods.split(",")
                kw["methods"] = tuple(str(m) for m in canonical(methods))
                if MethodId.MR not in canonical(methods):
                    raise errors.ConfigError("methods must include MR")
            for key, typ in (("seed", int), ("workers", int), ("exclude_degenerate", bool)):
                if key in raw:
                    if not isinstance(raw[key], typ) or (typ is int and isinstance(raw[key], bool)):
                        raise errors.ConfigError(f"{key} must be {typ.__name__}")
                    kw[key] = raw[key]
            if "workers" in kw and kw["workers"] < 1:
                raise errors.ConfigError("workers must be at least 1")
            if "features" in raw:
                f = raw["features"] or {}
                _reject_unknown(f, {x.name for x in dataclasses.fields(SubgroupPlan)}, "features")
                kw["features"] = SubgroupPlan(**f)
            if "learners" in raw:
                learners = {k: dict(v) for k, v in DEFAULT_PARAMS.items()}
                for kind, params in (raw["learners"] or {}).items():
                    kind_u = str(kind).upper()
                    if kind_u not in KINDS:
                        raise errors.ConfigError(f"unknown learner {kind!r}")
                    _reject_unknown(params or {}, set(DEFAULT_PARAMS[kind_u]), f"learners.{kind}")
                    learners[kind_u].update(params or {})
                kw["learners"] = learners
            if "evaluation" in raw:
                e = raw["evaluation"] or {}
                _reject_unknown(e, {x.name for x in dataclasses.fields(EvaluationOptions)}, "evaluation")
                kw["evaluation"] = EvaluationOptions(**e)
        except (TypeError, ValueError) as ex:
            raise errors.ConfigError(str(ex)) from None
        cfg = cls(**kw)
        try:
            cfg.resolve_technique()  # fail early on a bad technique name
        except ValueError as ex:
            raise errors.ConfigError(str(ex)) from None
        return cfg

    @classmethod
    def load(cls, path: str | os.PathLike | None) -> "RunConfig":
        if path is None:
            return cls()
        try:
            with open(path, encoding="utf-8") as fh:
                raw = yaml.safe_load(fh)
        except OSError as e:
            raise errors.ConfigError(f"cannot read config {path}: {e.strerror}") from None
        except yaml.YAMLError as e:
            raise errors.ConfigError(f"invalid YAML in {path}: {e}") from None
        if raw is not None and not isinstance(raw, dict):
            raise errors.ConfigError("config must be a mapping")
        return cls.from_dict(raw)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "approach": self.approach,
            "technique": self.technique,
            "methods": list(self.methods),
            "seed": self.seed,
            "workers": self.workers,
            "exclude_degenerate": self.exclude_degenerate,
            "features": dataclasses.asdict(self.features),
            "learners": self.learners,
            "evaluation": dataclasses.asdict(self.evaluation),
        }

    @property
    def hash(self) -> str:
        """Digest of everything that can change results (worker count excluded)."""
        d = self.to_dict()
        del d["workers"]
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @property
    def plan(self) -> SubgroupPlan:
        return self.features

    def resolve_technique(self, approach: str | None = None) -> Technique:
        approach = parse_approach(approach or self.approach)
        if self.technique is None:
            return default_technique(approach, self.learners)
        tech = Technique.parse(approach, self.technique)
        return Technique(approach, tech.classifier, tech.scheme, tuple(self.learners.get(tech.classifier, {}).items()))

    def grid(self, approach: str | None = None) -> list[Technique]:
        approach = parse_approach(approach or self.approach)
        return amp_grid(self.learners) if approach == "AMP" else dap_grid(self.learners)


def _reject_unknown(d: dict, allowed: set, where: str) -> None:
    if not isinstance(d, dict):
        raise errors.ConfigError(f"{where} must be a mapping")
    extra = sorted(set(d) - allowed)
    if extra:
        raise errors.ConfigError(f"unknown {where} keys: {extra}")
