import json
from dataclasses import replace

import numpy as np
import pytest

from crowdagg import errors
from crowdagg.aggregators import METHODS, MethodId
from crowdagg.case_model import make_case
from crowdagg.evaluation import (
    ABLATION_ROWS,
    Design,
    EvaluationReport,
    Exclusion,
    LooJob,
    Technique,
    ablate,
    ablation_table,
    amp_grid,
    build_design,
    conditional_success_report,
    coverage_analysis,
    dap_grid,
    fold_assignment,
    loo_evaluate,
    loo_splits,
    mcnemar_from_counts,
    mcnemar_test,
    nested_model_selection,
    proportion_test,
    run_loo,
    select_on_design,
)
from crowdagg.evaluation import engine
from crowdagg.features import CONFIDENCE, PREDICTED_SUPPORT, VOTING
from crowdagg.synth import Regime, default_mixture, generate_case, generate_corpus, preset
import oracles
from conftest import case_x

FAST_RF = {"n_trees": 25}


def small_corpus(n, seed):
    return generate_corpus(default_mixture(n), seed).cases


# significance tests -------------------------------------------------------

def test_mcnemar_examples():
    r = mcnemar_from_counts(10, 2)
    assert r.statistic == pytest.approx(5.3333, abs=1e-4)
    assert r.p_value == pytest.approx(0.0209213, abs=1e-6)
    r = mcnemar_from_counts(0, 20)
    assert r.statistic == 20.0
    assert r.p_value == pytest.approx(7.744e-6, rel=1e-3)
    same = mcnemar_test([1, 0, 1], [1, 0, 1])
    assert (same.b, same.c, same.p_value) == (0, 0, 1.0)


def test_mcnemar_exact_mode():
    r = mcnemar_from_counts(10, 2, exact=True)
    assert r.exact
    # two-sided binomial: 2 * P(X <= 2 | 12, 0.5)
    assert r.p_value == pytest.approx(2 * (1 + 12 + 66) / 4096, abs=1e-12)


def test_mcnemar_length_checks():
    with pytest.raises(errors.LengthMismatch):
        mcnemar_test([1, 0], [1])
    with pytest.raises(errors.LengthMismatch):
        mcnemar_test([], [])


def test_proportion_examples():
    r = proportion_test(80, 100, 70, 100)
    assert r.z == pytest.approx(1.6330, abs=1e-4)
    assert r.p_value == pytest.approx(0.1025, abs=1e-4)
    eq = proportion_test(30, 60, 15, 30)
    assert (eq.z, eq.p_value) == (0.0, 1.0)
    assert proportion_test(100, 100, 0, 100).p_value < 1e-15
    with pytest.raises(errors.ZeroSample):
        proportion_test(0, 0, 1, 2)


@pytest.mark.parametrize("trial", range(20))
def test_stats_match_independent_arithmetic(trial):
    rng = np.random.default_rng(500 + trial)
    n = int(rng.integers(20, 300))
    a = rng.integers(0, 2, n)
    b = np.where(rng.random(n) < 0.3, 1 - a, a)
    stat, p = oracles.mcnemar(a, b)
    got = mcnemar_test(a.tolist(), b.tolist())
    assert got.statistic == pytest.approx(stat, abs=1e-9)
    assert got.p_value == pytest.approx(p, abs=1e-6)
    s1, s2 = int(a.sum()), int(b.sum())
    z, p = oracles.two_proportion(s1, n, s2, n)
    got = proportion_test(s1, n, s2, n)
    assert got.z == pytest.approx(z, abs=1e-9)
    assert got.p_value == pytest.approx(p, abs=1e-6)


# folds and leave-one-out ---------------------------------------------------

def test_fold_assignment():
    folds = fold_assignment(23, 10, seed=5)
    assert [len(f) for f in folds] == [3, 3, 3] + [2] * 7
    assert sorted(np.concatenate(folds).tolist()) == list(range(23))
    assert all(np.array_equal(a, b) for a, b in zip(folds, fold_assignment(23, 10, seed=5)))
    assert any(not np.array_equal(a, b) for a, b in zip(folds, fold_assignment(23, 10, seed=6)))
    with pytest.raises(ValueError):
        fold_assignment(5, 10, 0)


def test_loo_splits_exclude_held_out():
    for i, train in loo_splits(range(6)):
        assert i not in train and len(train) == 5


def toy_design(X, y):
    n = len(y)
    y = np.asarray(y, dtype=np.int64)
    return Design(
        "DAP", (MethodId.MR,), frozenset({VOTING}), [f"t{i}" for i in range(n)],
        np.asarray(X, dtype=float), y, y[:, None].copy(), y.copy(), np.full(n, 2, dtype=np.int64),
    )


def test_loo_training_sets_never_hold_the_case(monkeypatch):
    seen = []
    original = Technique.fit

    def spy(self, X, Y, seed, labels=None):
        seen.append(set(X[:, 0].astype(int).tolist()))
        return original(self, X, Y, seed, labels)

    monkeypatch.setattr(Technique, "fit", spy)
    n = 12
    design = toy_design(np.column_stack([np.arange(n), np.arange(n) % 3]), np.arange(n) % 2)
    results = run_loo(LooJob(design, Technique("DAP", "KNN"), seed=0))
    assert [r.index for r in results] == list(range(n))
    assert seen == [set(range(n)) - {i} for i in range(n)]


def test_loo_parallel_matches_serial():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(30, 3))
    design = toy_design(X, (X[:, 0] > 0).astype(int))
    job = LooJob(design, Technique("DAP", "RF", params=tuple(FAST_RF.items())), seed=4)
    assert run_loo(job, workers=1) == run_loo(job, workers=3)


def test_three_trivial_cases():
    cases = [case_x(f"x{i}") for i in range(3)]
    for approach in ("AMP", "DAP"):
        rep = loo_evaluate(cases, approach)
        assert rep.success_rate == 1.0


def test_case_x_copies_uniform_rates():
    cases = [case_x(f"x{i}") for i in range(10)]
    rep = loo_evaluate(cases, "DAP", Technique("DAP", "KNN"))
    uni = rep.uniform_success()
    assert (uni["MR"], uni["HAC"], uni["DA"], uni["WC"], uni["SP"]) == (0.0, 1.0, 1.0, 0.0, 0.0)


def test_too_small_and_mismatched():
    with pytest.raises(errors.CorpusTooSmall):
        loo_evaluate([case_x("a"), case_x("b")], "AMP")
    with pytest.raises(ValueError):
        loo_evaluate([case_x(str(i)) for i in range(3)], "AMP", Technique("DAP", "RF"))


@pytest.fixture(scope="module")
def amp_report():
    cases = small_corpus(60, seed=7)
    return loo_evaluate(cases, "AMP", Technique("AMP", "RF", "BR", tuple(FAST_RF.items())), seed=3)


def test_report_round_trip(amp_report):
    again = EvaluationReport.from_dict(json.loads(amp_report.to_json()))
    assert again.to_json() == amp_report.to_json()
    assert "success rate" in amp_report.to_table()


def test_report_consistency(amp_report):
    d = amp_report.to_dict()
    assert d["success"]["successes"] == sum(amp_report.outcomes)
    dist = amp_report.selection_distribution()
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-12)
    # AMP's answer is always the selected method's own choice
    for i, m in enumerate(amp_report.selected):
        assert amp_report.predictions[i] == amp_report.method_choices[m][i]
    cov = amp_report.coverage()
    assert cov.union_with_da >= cov.union_without_da
    assert sum(cov.regions.values()) == cov.n_cases


def test_conditional_rows(amp_report):
    rows = conditional_success_report(amp_report)
    assert [r.method for r in rows] == [str(m) for m in METHODS]
    assert sum(r.selected for r in rows) == amp_report.n_cases
    never = replace(amp_report, selected=["MR"] * amp_report.n_cases)
    rows = conditional_success_report(never)
    assert rows[1].p_success_given_selected is None
    assert rows[1].to_dict()["p_success_given_selected"] == "UNDEFINED"
    dap = replace(amp_report, approach="DAP")
    with pytest.raises(ValueError):
        conditional_success_report(dap)


# coverage ------------------------------------------------------------------

def test_coverage_case_x_copies():
    cov = coverage_analysis([case_x(f"x{i}") for i in range(10)])
    assert cov.solved["MR"] == []
    assert len(cov.solved["HAC"]) == len(cov.solved["DA"]) == 10
    assert cov.regions["DA"] == 0
    assert cov.regions["HAC+DA"] == 10


def test_coverage_da_only_region():
    da_case = generate_case(preset(Regime.DA_ONLY), 3, case_id="d")
    cov = coverage_analysis([da_case] + [case_x(f"x{i}") for i in range(4)])
    assert cov.regions["DA"] == 1
    assert cov.union_with_da == 5 and cov.union_without_da == 4
    assert len(cov.regions) == 32


def test_coverage_needs_ground_truth():
    with pytest.raises(errors.MissingGroundTruth):
        coverage_analysis([replace(case_x(), correct_answer=None)])


def test_coverage_partition():
    cov = coverage_analysis(small_corpus(80, seed=2))
    assert sum(cov.regions.values()) == 80
    for m in cov.methods:
        in_region = sum(v for k, v in cov.regions.items() if m in k.split("+"))
        assert in_region == len(cov.solved[m])


# ablation ------------------------------------------------------------------

def test_exclusion_parsing():
    ex = Exclusion.parse("confidence, ps")
    assert ex.mask == frozenset({VOTING})
    assert Exclusion.parse("wc_hac,sp").methods == (MethodId.MR, MethodId.DA)
    assert Exclusion.parse(None) == Exclusion.parse("none") == Exclusion()
    for bad in ("voting", "MR", "wc", "hac", "bogus"):
        with pytest.raises(errors.InvalidExclusion):
            Exclusion.parse(bad)
    assert len(ABLATION_ROWS) == 11
    assert ABLATION_ROWS[7] == Exclusion(da=True)


def test_both_group_exclusion_drops_shared_rows_once():
    design = build_design([case_x(f"x{i}") for i in range(3)], "AMP", mask=Exclusion.parse("confidence,ps").mask)
    assert design.X.shape[1] == 9
    design = build_design([case_x(f"x{i}") for i in range(3)], "AMP", mask={VOTING, CONFIDENCE})
    assert design.X.shape[1] == 22


def test_ablation_none_equals_loo():
    cases = small_corpus(40, seed=5)
    tech = Technique("DAP", "RF", params=tuple(FAST_RF.items()))
    row = ablate(cases, "DAP", tech, "none", seed=2)
    rep = loo_evaluate(cases, "DAP", tech, seed=2)
    assert (row.successes, row.cases) == (rep.successes, rep.n_cases)
    table = ablation_table([row])
    assert "Success Rate" in table and "V" in table


@pytest.mark.slow
@pytest.mark.parametrize("seed", [1, 2, 3])
def test_da_exclusion_hurts_amp(seed):
    cases = small_corpus(150, seed=10 + seed)
    tech = Technique("AMP", "RF", "BR", tuple(FAST_RF.items()))
    full = ablate(cases, "AMP", tech, None, seed=seed)
    no_da = ablate(cases, "AMP", tech, "da", seed=seed)
    assert no_da.successes < full.successes


# nested selection ----------------------------------------------------------

def test_grids():
    assert [t.name for t in amp_grid()][:4] == ["BR+BNB", "BR+KNN", "BR+LR", "BR+RF"]
    assert len(amp_grid()) == 12
    assert [t.name for t in dap_grid()] == ["RF", "LR", "KNN"]
    assert Technique.parse("AMP", "cc+lr").name == "CC+LR"
    with pytest.raises(ValueError):
        Technique("AMP", "RF")
    with pytest.raises(ValueError):
        Technique("DAP", "RF", "BR")


def xor_design(seed, n=100):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, size=(n, 2))
    return toy_design(X, ((X[:, 0] > 0) ^ (X[:, 1] > 0)).astype(int))


@pytest.mark.slow
@pytest.mark.parametrize("seed", [1, 2, 3])
def test_rf_dominates_lr_on_xor(seed):
    grid = [Technique("DAP", "LR"), Technique("DAP", "RF", params=tuple(FAST_RF.items()))]
    rep = select_on_design(xor_design(seed), grid, seed=seed)
    assert rep.winners.count(1) >= 8
    assert rep.technique.classifier == "RF"
    assert len(rep.inner_successes) == 2 and len(rep.inner_successes[0]) == 10


def test_single_candidate_selection():
    grid = [Technique("DAP", "KNN")]
    rep = select_on_design(xor_design(0, n=30), grid, seed=0, folds=5)
    assert rep.technique == grid[0]
    assert rep.winners == [0] * 5
    assert sum(rep.test_counts) == 30
    assert "Test Results" in rep.to_table()
    assert json.loads(rep.to_json())["chosen"]


def test_mean_winner_rule():
    grid = [Technique("DAP", "LR"), Technique("DAP", "KNN", params=(("k", 1),))]
    rep = select_on_design(xor_design(4, n=40), grid, seed=1, folds=4, winner_rule="mean")
    assert rep.winner_rule == "mean"
    with pytest.raises(ValueError):
        select_on_design(xor_design(4, n=40), grid, winner_rule="vote")


def test_selection_needs_twenty_cases():
    with pytest.raises(errors.CorpusTooSmall):
        nested_model_selection([case_x(f"x{i}") for i in range(19)], "AMP", amp_grid())
    with pytest.raises(errors.CorpusTooSmall):
        select_on_design(xor_design(0, n=19), [Technique("DAP", "LR")])
