import csv
import json
import time

import numpy as np
import pytest

from crowdagg import errors
from crowdagg.case_model import make_case
from crowdagg.features import CONFIDENCE, VOTING
from crowdagg.io_cli import (
    WORKERS_ENV,
    RunConfig,
    cli_dispatch,
    export_feature_matrix,
    filter_degenerate,
    load_and_filter,
    read_dataset,
    write_dataset,
)
from crowdagg.io_cli.dataset import case_to_record, header
from crowdagg.synth import default_mixture, generate_corpus
from conftest import case_x, random_case


def write_lines(path, *objs):
    path.write_text("".join((o if isinstance(o, str) else json.dumps(o)) + "\n" for o in objs))
    return path


def test_round_trip(tmp_path):
    cases = generate_corpus(default_mixture(30), seed=1).cases + [case_x()]
    path = tmp_path / "d.jsonl"
    write_dataset(cases, path)
    assert read_dataset(path) == cases


def test_filter_degenerate():
    unanimous = make_case("u", ("A", "B"), [("A", 0.5, (0.5, 0.5))] * 3, "A")
    hopeless = make_case("h", ("A", "B"), [("A", 0.5, (0.5, 0.5))] * 3, "B")
    blind = make_case("b", ("A", "B"), [("A", 0.5, (0.5, 0.5))] * 3)
    kept, log = filter_degenerate([case_x(), unanimous, hopeless, blind])
    assert [c.case_id for c in kept] == ["case-x", "b"]
    assert [(e.case_id, e.share) for e in log] == [("u", 1.0), ("h", 0.0)]


def test_load_and_filter(tmp_path):
    unanimous = make_case("u", ("A", "B"), [("A", 0.5, (0.5, 0.5))] * 3, "A")
    path = tmp_path / "d.jsonl"
    write_dataset([case_x(), unanimous], path)
    assert len(load_and_filter(path)[0]) == 1
    assert len(load_and_filter(path, exclude_degenerate=False)[0]) == 2


@pytest.mark.parametrize(
    "record, exc",
    [
        ("{not json", errors.ParseError),
        ({"case_id": "a", "answers": ["A", "B"]}, errors.ParseError),
        ({**case_to_record(case_x()), "extra": 1}, errors.ParseError),
        ({**case_to_record(case_x()), "answers": ["A", True]}, errors.ParseError),
        ({**case_to_record(case_x()), "correct_answer": "Z"}, errors.CorrectAnswerOutsideAnswerSet),
    ],
)
def test_parse_errors_carry_line_numbers(tmp_path, record, exc):
    path = write_lines(tmp_path / "bad.jsonl", header(), case_to_record(case_x("ok")), record)
    with pytest.raises(exc) as info:
        read_dataset(path)
    assert "line 3" in str(info.value) or getattr(info.value, "line", None) == 3


def test_duplicate_ids(tmp_path):
    path = write_lines(tmp_path / "dup.jsonl", header(), case_to_record(case_x()), case_to_record(case_x()))
    with pytest.raises(errors.ParseError):
        read_dataset(path)


def test_schema_header(tmp_path):
    with pytest.raises(errors.SchemaVersionUnsupported):
        read_dataset(write_lines(tmp_path / "a.jsonl", case_to_record(case_x())))
    with pytest.raises(errors.SchemaVersionUnsupported):
        read_dataset(write_lines(tmp_path / "b.jsonl", {"schema": "crowdagg.dataset", "schema_version": 99}))
    with pytest.raises(errors.SchemaVersionUnsupported):
        read_dataset(write_lines(tmp_path / "c.jsonl"))


def test_write_error(tmp_path):
    with pytest.raises(errors.WriteError):
        write_dataset([case_x()], tmp_path / "missing" / "d.jsonl")


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_feature_matrix_widths(tmp_path):
    cases = [case_x(f"x{i}") for i in range(3)]
    amp = read_csv(export_feature_matrix(cases, "amp", tmp_path / "a.csv"))
    assert len(amp[0]) == 1 + 27 + 5
    assert amp[0][1] == "N" and amp[0][-5:] == ["O_MR", "O_HAC", "O_WC", "O_SP", "O_DA"]
    assert amp[1][-5:] == ["0", "1", "0", "0", "1"]
    dap = read_csv(export_feature_matrix(cases, "dap", tmp_path / "d.csv"))
    assert len(dap[0]) == 1 + 27 + 10 + 1
    assert dap[1][-1] == "1"
    masked = read_csv(export_feature_matrix(cases, "amp", tmp_path / "m.csv", mask={VOTING, CONFIDENCE}))
    assert not {"MaxPSa", "MinPSa", "AvgPSv", "P_lowC_highPSv", "P_lowPSv_highC"} & set(masked[0])
    assert len(masked[0]) == 1 + 22 + 5
    # full precision survives the text format
    assert float(amp[1][3]) == pytest.approx(0.9709505944546686, abs=0)


def test_config_defaults_and_overrides(tmp_path, monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    cfg = RunConfig()
    assert (cfg.approach, cfg.seed, cfg.workers, cfg.evaluation.folds) == ("AMP", 0, 1, 10)
    assert cfg.resolve_technique().name == "BR+RF"
    assert len(cfg.grid()) == 12 and len(cfg.grid("dap")) == 3
    path = tmp_path / "c.yaml"
    path.write_text("approach: dap\ntechnique: knn\nlearners:\n  KNN: {k: 3}\nfeatures: {num_subgroups: 4}\n")
    cfg = RunConfig.load(path)
    tech = cfg.resolve_technique()
    assert (tech.name, dict(tech.params)) == ("KNN", {"k": 3})
    assert cfg.plan.num_subgroups == 4


@pytest.mark.parametrize(
    "text",
    [
        "bogus: 1\n",
        "features: {size: 3}\n",
        "learners: {RF: {depth: 3}}\n",
        "learners: {SVM: {}}\n",
        "seed: abc\n",
        "workers: 0\n",
        "methods: [HAC, DA]\n",
        "approach: amp\ntechnique: RF\n",
        "- a list\n",
        "key: [unclosed\n",
    ],
)
def test_config_rejects(tmp_path, text):
    path = tmp_path / "c.yaml"
    path.write_text(text)
    with pytest.raises(errors.ConfigError):
        RunConfig.load(path)


def test_config_hash_ignores_workers():
    a, b = RunConfig(workers=1), RunConfig(workers=8)
    assert a.hash == b.hash
    assert RunConfig(seed=1).hash != a.hash
    assert len(a.hash) == 16


def test_workers_env(monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "6")
    assert RunConfig().workers == 6
    monkeypatch.setenv(WORKERS_ENV, "many")
    with pytest.raises(errors.ConfigError):
        RunConfig()


def test_paper_scale_load_time(tmp_path):
    rng = np.random.default_rng(0)
    cases = [random_case(rng, 70, case_id=f"c{i}") for i in range(1209)]
    path = tmp_path / "big.jsonl"
    write_dataset(cases, path)
    start = time.perf_counter()
    loaded, _ = load_and_filter(path)
    assert time.perf_counter() - start < 5.0
    assert len(loaded) == 1209


# command line --------------------------------------------------------------

@pytest.fixture
def corpus_file(tmp_path):
    path = tmp_path / "corpus.jsonl"
    assert cli_dispatch(["synth", "--n", "24", "--seed", "7", "-o", str(path), "--tags", str(tmp_path / "tags.json")]) == 0
    return path


def test_cli_synth_is_deterministic(tmp_path, corpus_file):
    again = tmp_path / "again.jsonl"
    cli_dispatch(["synth", "--n", "24", "--seed", "7", "-o", str(again)])
    assert again.read_bytes() == corpus_file.read_bytes()
    assert len(json.loads((tmp_path / "tags.json").read_text())) == 24


def test_cli_validate_and_aggregate(tmp_path, corpus_file, capsys):
    out = tmp_path / "v.json"
    assert cli_dispatch(["validate", str(corpus_file), "-o", str(out)]) == 0
    assert json.loads(out.read_text())["cases"] == 24
    agg = tmp_path / "agg.json"
    assert cli_dispatch(["aggregate", "--methods", "mr,sp", str(corpus_file), "-o", str(agg)]) == 0
    doc = json.loads(agg.read_text())
    assert set(doc["success"]) == {"MR", "SP"}
    assert doc["config_hash"] and doc["seed"] == 0
    assert "method" in capsys.readouterr().out


def test_cli_evaluate_ablate_stats(tmp_path, corpus_file):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("learners:\n  RF: {n_trees: 10}\n")
    rep = tmp_path / "rep.json"
    assert cli_dispatch(["evaluate", "--approach", "amp", "--config", str(cfg), str(corpus_file), "-o", str(rep)]) == 0
    doc = json.loads(rep.read_text())
    assert doc["kind"] == "evaluation" and doc["n_cases"] == 24 and doc["config_hash"]
    abl = tmp_path / "abl.json"
    assert cli_dispatch(["ablate", "--approach", "dap", "--exclude", "confidence,ps", "--config", str(cfg),
                         str(corpus_file), "-o", str(abl)]) == 0
    row = json.loads(abl.read_text())["rows"][0]
    assert row["included"]["Confidence"] is False and row["included"]["MR"] is True
    sig = tmp_path / "sig.json"
    assert cli_dispatch(["stats", "--report", str(rep), "-o", str(sig)]) == 0
    assert set(json.loads(sig.read_text())["tests"]) == {"MR", "HAC", "WC", "SP", "DA"}


def test_cli_coverage_and_featurize(tmp_path, corpus_file):
    cov = tmp_path / "cov.json"
    assert cli_dispatch(["coverage", str(corpus_file), "-o", str(cov)]) == 0
    assert json.loads(cov.read_text())["union_with_da"]["count"] == 24
    mat = tmp_path / "m.csv"
    assert cli_dispatch(["featurize", "--approach", "dap", str(corpus_file), "-o", str(mat)]) == 0
    assert len(read_csv(mat)) == 25


def test_cli_stats_counts(tmp_path, capsys):
    out = tmp_path / "s.json"
    assert cli_dispatch(["stats", "--mcnemar", "10", "2", "-o", str(out)]) == 0
    assert json.loads(out.read_text())["statistic"] == pytest.approx(16 / 3)
    assert cli_dispatch(["stats", "--proportion", "80", "100", "70", "100"]) == 0
    assert "z 1.63299" in capsys.readouterr().out


def error_record(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_cli_errors(tmp_path, corpus_file, capsys):
    assert cli_dispatch([]) == 2
    assert error_record(capsys)["error"] == "UsageError"
    assert cli_dispatch(["frobnicate"]) == 2
    capsys.readouterr()
    assert cli_dispatch(["stats"]) == 2
    capsys.readouterr()
    assert cli_dispatch(["ablate", "--exclude", "mr", str(corpus_file)]) == 1
    assert error_record(capsys)["error"] == "InvalidExclusion"
    bad = write_lines(tmp_path / "bad.jsonl", header(), "{oops")
    assert cli_dispatch(["validate", str(bad)]) == 1
    rec = error_record(capsys)
    assert rec["error"] == "ParseError" and rec["line"] == 2
    cfg = tmp_path / "c.yaml"
    cfg.write_text("nope: 1\n")
    assert cli_dispatch(["validate", "--config", str(cfg), str(corpus_file)]) == 2
    assert error_record(capsys)["error"] == "ConfigError"
