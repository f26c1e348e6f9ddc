"""Command-line interface: ``crowdagg <command> ...``.

Structured results go to ``--output`` (JSON, or CSV for ``featurize``,
JSONL for ``synth``); a human-readable summary goes to stdout. Failures
print one JSON error record to stderr and exit non-zero (2 for usage and
configuration problems, 1 for everything else).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

import yaml

from .. import errors
from ..aggregators import canonical
from ..evaluation import (
    ABLATION_ROWS,
    EvaluationReport,
    Exclusion,
    ablate,
    ablation_table,
    coverage_analysis,
    featurize_corpus,
    loo_evaluate,
    mcnemar_from_counts,
    nested_model_selection,
    proportion_test,
)
from ..evaluation.report import aligned, fmt
from ..synth import Regime, default_mixture, generate_corpus, preset
from .config import RunConfig
from .dataset import aggregate_corpus, export_feature_matrix, load_and_filter, write_dataset

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise errors.UsageError(message)


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as e:
        raise errors.WriteError(f"cannot write {path}: {e.strerror}") from None


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config)
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        if args.workers < 1:
            raise errors.UsageError("--workers must be at least 1")
        changes["workers"] = args.workers
    if getattr(args, "approach", None):
        changes["approach"] = args.approach.upper()
    if getattr(args, "technique", None):
        changes["technique"] = args.technique.upper()
    if getattr(args, "keep_degenerate", False):
        changes["exclude_degenerate"] = False
    if changes:
        cfg = RunConfig.from_dict({**cfg.to_dict(), **changes})
    return cfg


def _load(args, cfg: RunConfig):
    cases, log = load_and_filter(args.data, cfg.exclude_degenerate)
    return cases, log


def cmd_validate(args) -> int:
    cfg = _config(args)
    cases, log = _load(args, cfg)
    out = {
        "kind": "validation",
        "cases": len(cases),
        "excluded": [e.to_dict() for e in log],
        "config_hash": cfg.hash,
        "seed": cfg.seed,
    }
    _write_text(args.output, _dump(out))
    print(f"{len(cases)} valid cases, {len(log)} excluded as degenerate")
    for e in log:
        print(f"  excluded {e.case_id}: correct share {fmt(e.share)}")
    return EXIT_OK


def cmd_featurize(args) -> int:
    cfg = _config(args)
    cases, _ = _load(args, cfg)
    path = export_feature_matrix(cases, cfg.approach, args.output, cfg.plan, cfg.methods)
    print(f"wrote {len(cases)} rows to {path}")
    return EXIT_OK


def cmd_aggregate(args) -> int:
    cfg = _config(args)
    cases, _ = _load(args, cfg)
    methods = canonical(args.methods.split(",")) if args.methods else canonical(cfg.methods)
    out = aggregate_corpus(cases, methods)
    out["config_hash"] = cfg.hash
    out["seed"] = cfg.seed
    _write_text(args.output, _dump(out))
    rows = [[m, fmt(r)] for m, r in out["success"].items()]
    print(aligned(rows, ["method", "success"]), end="")
    return EXIT_OK


def cmd_model_select(args) -> int:
    cfg = _config(args)
    cases, _ = _load(args, cfg)
    ev = cfg.evaluation
    rep = nested_model_selection(
        cases,
        cfg.approach,
        cfg.grid(),
        cfg.seed,
        ev.folds,
        cfg.plan,
        cfg.methods,
        winner_rule=ev.winner_rule,
        inner_subsample=ev.inner_subsample,
        workers=cfg.workers,
    )
    rep.config_hash = cfg.hash
    _write_text(args.output, rep.to_json())
    print(rep.to_table(), end="")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    cases, _ = _load(args, cfg)
    rep = loo_evaluate(
        cases,
        cfg.approach,
        cfg.resolve_technique(),
        cfg.seed,
        cfg.plan,
        cfg.methods,
        workers=cfg.workers,
        exact_mcnemar=cfg.evaluation.exact_mcnemar,
    )
    rep.config_hash = cfg.hash
    _write_text(args.output, rep.to_json())
    print(rep.to_table(), end="")
    return EXIT_OK


def cmd_ablate(args) -> int:
    cfg = _config(args)
    cases, _ = _load(args, cfg)
    if args.all_rows and args.exclude:
        raise errors.UsageError("--exclude and --all-rows are mutually exclusive")
    exclusions = ABLATION_ROWS if args.all_rows else (Exclusion.parse(args.exclude),)
    inst = featurize_corpus(cases, cfg.plan)
    rows = []
    for ex in exclusions:
        row = ablate(cases, cfg.approach, cfg.resolve_technique(), ex, cfg.seed, cfg.plan, cfg.workers, inst)
        row.config_hash = cfg.hash
        rows.append(row)
    _write_text(args.output, _dump({"kind": "ablation_table", "rows": [r.to_dict() for r in rows]}))
    print(ablation_table(rows), end="")
    return EXIT_OK


def cmd_coverage(args) -> int:
    cfg = _config(args)
    cases, _ = _load(args, cfg)
    rep = coverage_analysis(cases, cfg.methods)
    out = rep.to_dict() | {"kind": "coverage", "config_hash": cfg.hash, "seed": cfg.seed}
    _write_text(args.output, _dump(out))
    print(rep.to_table(), end="")
    return EXIT_OK


def cmd_stats(args) -> int:
    given = [x is not None for x in (args.mcnemar, args.proportion, args.report)]
    if sum(given) != 1:
        raise errors.UsageError("give exactly one of --mcnemar, --proportion, --report")
    if args.mcnemar is not None:
        r = mcnemar_from_counts(*args.mcnemar, exact=args.exact)
        out = {"kind": "mcnemar", "b": r.b, "c": r.c, "statistic": r.statistic, "p_value": r.p_value, "exact": r.exact}
        print(f"chi2 {fmt(r.statistic)}  p {fmt(r.p_value)}")
    elif args.proportion is not None:
        r = proportion_test(*args.proportion)
        out = {"kind": "proportion", "z": r.z, "p_value": r.p_value, "p1": r.p1, "p2": r.p2}
        print(f"z {fmt(r.z)}  p {fmt(r.p_value)}")
    else:
        try:
            data = json.loads(Path(args.report).read_text(encoding="utf-8"))
            rep = EvaluationReport.from_dict(data)
        except (OSError, ValueError, KeyError) as e:
            raise errors.ParseError(f"cannot read evaluation report {args.report}: {e}") from None
        rep.exact_mcnemar = args.exact
        out = {"kind": "significance", "approach": rep.approach, "tests": rep.significance(), "config_hash": rep.config_hash}
        rows = [
            [m, fmt(t["mcnemar"]["p_value"]), fmt(t["proportion"]["p_value"]) if t["proportion"]["p_value"] >= 1e-15 else "0"]
            for m, t in out["tests"].items()
        ]
        print(aligned(rows, ["", f"McNemar vs {rep.approach}", f"Proportion vs {rep.approach}"]), end="")
    _write_text(args.output, _dump(out))
    return EXIT_OK


def _mixture(spec: str, n: int | None):
    if spec == "default":
        return default_mixture(n if n is not None else 500)
    try:
        raw = yaml.safe_load(Path(spec).read_text(encoding="utf-8"))
    except OSError as e:
        raise errors.ConfigError(f"cannot read mixture {spec}: {e.strerror}") from None
    except yaml.YAMLError as e:
        raise errors.ConfigError(f"invalid YAML in {spec}: {e}") from None
    if not isinstance(raw, list):
        raise errors.ConfigError("a mixture file lists {regime, count, ...overrides} entries")
    mixture = []
    for entry in raw:
        if not isinstance(entry, dict) or "regime" not in entry or "count" not in entry:
            raise errors.ConfigError("each mixture entry needs regime and count")
        entry = dict(entry)
        regime = entry.pop("regime")
        count = entry.pop("count")
        try:
            spec_ = preset(Regime(str(regime).upper()), **{k: tuple(v) if isinstance(v, list) else v for k, v in entry.items()})
        except (TypeError, ValueError) as e:
            raise errors.ConfigError(f"bad mixture entry for {regime}: {e}") from None
        mixture.append((spec_, int(count)))
    if n is not None:
        raise errors.UsageError("--n only applies to the default mixture")
    return mixture


def cmd_synth(args) -> int:
    cfg = _config(args)
    if args.n is not None and args.n < 1:
        raise errors.UsageError("--n must be positive")
    corpus = generate_corpus(_mixture(args.mixture, args.n), cfg.seed)
    if args.output is None:
        raise errors.UsageError("synth needs --output")
    write_dataset(corpus.cases, args.output)
    if args.tags:
        tags = {c.case_id: t.value for c, t in zip(corpus.cases, corpus.tags)}
        _write_text(args.tags, _dump(tags))
    print(f"wrote {len(corpus.cases)} cases to {args.output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="crowdagg", description="Crowd answer aggregation: rule-based methods and learned AMP/DAP.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, data=True, approach=False, technique=False):
        if data:
            sp.add_argument("data", help="dataset (JSONL with schema header)")
            sp.add_argument("--keep-degenerate", action="store_true", help="keep cases with 0%% or 100%% correct votes")
        sp.add_argument("--config", help="YAML run configuration")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int, help="worker processes (default $CROWDAGG_WORKERS or 1)")
        sp.add_argument("-o", "--output", help="write the structured result here")
        if approach:
            sp.add_argument("--approach", choices=["amp", "dap", "AMP", "DAP"])
        if technique:
            sp.add_argument("--technique", help="e.g. BR+RF for amp, RF for dap")

    sp = sub.add_parser("validate", help="parse and validate a dataset")
    common(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("featurize", help="export the feature matrix as CSV")
    common(sp, approach=True)
    sp.set_defaults(func=cmd_featurize)

    sp = sub.add_parser("aggregate", help="apply the rule-based methods")
    common(sp)
    sp.add_argument("--methods", help="comma-separated, e.g. mr,sp")
    sp.set_defaults(func=cmd_aggregate)

    sp = sub.add_parser("model-select", help="nested cross-validation over the candidate grid")
    common(sp, approach=True)
    sp.set_defaults(func=cmd_model_select)

    sp = sub.add_parser("evaluate", help="leave-one-out evaluation of AMP or DAP")
    common(sp, approach=True, technique=True)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("ablate", help="leave-one-out with features or methods withheld")
    common(sp, approach=True, technique=True)
    sp.add_argument("--exclude", help="comma-separated from confidence, ps, wc_hac, sp, da")
    sp.add_argument("--all-rows", action="store_true", help="run the standard eleven-row ablation table")
    sp.set_defaults(func=cmd_ablate)

    sp = sub.add_parser("coverage", help="which methods solve which cases")
    common(sp)
    sp.set_defaults(func=cmd_coverage)

    sp = sub.add_parser("stats", help="significance tests")
    common(sp, data=False)
    sp.add_argument("--mcnemar", nargs=2, type=int, metavar=("B", "C"), help="discordant pair counts")
    sp.add_argument("--proportion", nargs=4, type=int, metavar=("S1", "N1", "S2", "N2"))
    sp.add_argument("--report", help="evaluation report JSON; tests the approach against each method")
    sp.add_argument("--exact", action="store_true", help="exact binomial McNemar")
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("synth", help="generate a synthetic corpus")
    common(sp, data=False)
    sp.add_argument("--mixture", default="default", help="'default' or a YAML mixture file")
    sp.add_argument("--n", type=int, help="total cases for the default mixture")
    sp.add_argument("--tags", help="also write case_id -> regime JSON here")
    sp.set_defaults(func=cmd_synth)
    return p


def cli_dispatch(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise errors.UsageError("no command given; try --help")
        return args.func(args)
    except errors.CrowdAggError as e:
        sys.stderr.write(json.dumps(e.to_record(), sort_keys=True) + "\n")
        return EXIT_USAGE if isinstance(e, (errors.UsageError, errors.ConfigError)) else EXIT_FAILURE
    except ValueError as e:
        sys.stderr.write(json.dumps({"error": "InvalidArgument", "message": str(e)}, sort_keys=True) + "\n")
        return EXIT_USAGE


def main() -> None:
    sys.exit(cli_dispatch())
