import json
import shutil

import pytest
from click.testing import CliRunner

from antisocial.cli import cli, main
from antisocial.config import ConfigError, PipelineConfig

from .conftest import FIXTURES, read_jsonl
from .fakeserver import FakeScorer

STAGES = ["ingest", "build-lexicon", "train-embedding", "expand-lexicon", "annotate", "score", "combine", "report"]


@pytest.fixture
def workdir(tmp_path):
    shutil.copytree(FIXTURES / "e2e", tmp_path / "e2e", ignore=shutil.ignore_patterns("out"))
    return tmp_path / "e2e"


def run(workdir, *args, env=None):
    result = CliRunner().invoke(cli, ["--config", str(workdir / "config.json"), *args], env=env)
    return result


def run_pipeline(workdir):
    for st in STAGES:
        res = run(workdir, st)
        assert res.exit_code == 0, (st, res.output)


def snapshot(workdir):
    return {p.relative_to(workdir): p.read_bytes() for p in sorted((workdir / "out").rglob("*")) if p.is_file()}


def test_full_pipeline_matches_expected_labels(workdir):
    run_pipeline(workdir)
    got = {r["source_id"]: r for r in read_jsonl(workdir / "out/annotations.jsonl")}
    expected = {r["source_id"]: r for r in read_jsonl(workdir / "expected.jsonl")}
    assert len(got) == 200
    for sid, exp in expected.items():
        for field in ("lexicon_label", "toxicity_label", "combined_label"):
            assert got[sid][field] == exp[field], (sid, field)
    csv = (workdir / "out/summary.csv").read_text().splitlines()
    assert csv[0] == "method,antisocial,normal" and len(csv) == 4
    ext = json.loads((workdir / "out/extended_lexicon.json").read_text())
    assert [e["term"] for e in ext["entries"]] == ["wuflu"]


def test_analyze_commands(workdir):
    run_pipeline(workdir)
    assert run(workdir, "analyze", "ngram", "--n", "2").exit_code == 0
    assert run(workdir, "--format", "json", "analyze", "temporal").exit_code == 0
    assert run(workdir, "--format", "dot", "analyze", "graph", "--target", "kungflu", "--min-support", "1").exit_code == 0
    out = workdir / "out/analysis"
    assert (out / "ngram_2.csv").read_text().startswith("n,ngram,count\n")
    assert json.loads((out / "temporal.json").read_text())["rows"]
    assert (out / "graph_kungflu.dot").read_text().startswith('graph "neighbors_kungflu"')
    res = run(workdir, "--format", "dot", "analyze", "temporal")
    assert res.exit_code == 1


def test_rerunning_stages_changes_nothing(workdir):
    run_pipeline(workdir)
    for sub in (["analyze", "ngram"], ["analyze", "temporal"], ["analyze", "graph"]):
        assert run(workdir, *sub).exit_code == 0
    before = snapshot(workdir)
    run_pipeline(workdir)
    for sub in (["analyze", "ngram"], ["analyze", "temporal"], ["analyze", "graph"]):
        run(workdir, *sub)
    assert snapshot(workdir) == before


def test_score_rerun_makes_no_new_calls(workdir, monkeypatch):
    assert run(workdir, "ingest").exit_code == 0
    with FakeScorer(score=0.3) as srv:
        cfg = json.loads((workdir / "config.json").read_text())
        cfg["scorer"] = {"mode": "remote", "endpoint_url": srv.url, "max_qps": 1000}
        (workdir / "config.json").write_text(json.dumps(cfg))
        env = {"SCORER_API_KEY": "secret"}
        first = run(workdir, "--limit", "5", "score", env=env)
        assert first.exit_code == 0, first.output
        assert len(srv.requests) == 5
        second = run(workdir, "--limit", "5", "score", env=env)
        assert second.exit_code == 0
        assert "scored 0 new records" in second.output
        assert len(srv.requests) == 5
    assert srv.requests[0][1] == {"key": ["secret"]}


def test_remote_scoring_without_key_is_validation_error(workdir, monkeypatch):
    monkeypatch.delenv("SCORER_API_KEY", raising=False)
    run(workdir, "ingest")
    cfg = json.loads((workdir / "config.json").read_text())
    cfg["scorer"] = {"mode": "remote"}
    (workdir / "config.json").write_text(json.dumps(cfg))
    res = run(workdir, "score")
    assert res.exit_code == 1 and "SCORER_API_KEY" in res.output


def test_failed_scores_exit_2_and_retry_later(workdir):
    run(workdir, "ingest")
    with FakeScorer(default=(500, {})) as srv:
        cfg = json.loads((workdir / "config.json").read_text())
        cfg["scorer"] = {"mode": "remote", "endpoint_url": srv.url, "max_qps": 1000}
        (workdir / "config.json").write_text(json.dumps(cfg))
        res = run(workdir, "--limit", "3", "score", env={"SCORER_API_KEY": "k"})
        assert res.exit_code == 2
        assert "3 unscored" in res.output
        srv.default = (200, None)
        res = run(workdir, "--limit", "3", "score", env={"SCORER_API_KEY": "k"})
        assert res.exit_code == 0 and "scored 3 new records" in res.output


def test_combine_without_annotations_exits_1(workdir):
    res = run(workdir, "combine")
    assert res.exit_code == 1
    assert "no annotations" in res.output


def test_missing_unscored_records_combine_as_unscored(workdir):
    for st in STAGES[:5]:
        assert run(workdir, st).exit_code == 0
    assert run(workdir, "--limit", "10", "score").exit_code == 0
    res = run(workdir, "combine")
    assert res.exit_code == 0 and "(190 unscored)" in res.output


def test_annotate_resumes_and_survives_torn_tail(workdir):
    for st in STAGES[:4]:
        assert run(workdir, st).exit_code == 0
    assert run(workdir, "--limit", "50", "annotate").exit_code == 0
    store = workdir / "out/lexicon_annotations.jsonl"
    with open(store, "a") as fh:
        fh.write('{"source_id": "t9')
    res = run(workdir, "annotate")
    assert res.exit_code == 0 and "150 new records (50 already present)" in res.output
    rows = read_jsonl(store)
    assert len(rows) == 200 and len({r["source_id"] for r in rows}) == 200


def test_print_config_round_trips(workdir):
    res = run(workdir, "--seed", "11", "--print-config")
    assert res.exit_code == 0
    printed = json.loads(res.output)
    assert printed["train"]["seed"] == 11
    again = PipelineConfig.from_dict(printed)
    assert again.to_dict() == printed


def test_default_config_prints():
    res = CliRunner().invoke(cli, ["--print-config"])
    cfg = json.loads(res.output)
    assert cfg["thresholds"] == {"similarity": 0.7, "toxicity": 0.5, "lexicon_min_count": 5}
    assert cfg["analysis"]["targets"] == ["china", "donaldjtrump", "boris"]


@pytest.mark.parametrize(
    "body, message",
    [
        ({"scorer": {"api_key": "x"}}, "SCORER_API_KEY"),
        ({"thresholds": {"similarity": 1.5}}, "similarity"),
        ({"bogus": {}}, "unknown"),
        ({"train": {"epochs": 0}}, "epochs"),
    ],
)
def test_bad_configs_exit_1(tmp_path, body, message):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(body))
    res = CliRunner().invoke(cli, ["--config", str(p), "ingest"])
    assert res.exit_code == 1 and message in res.output


def test_missing_inputs_exit_1(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"paths": {"corpus_in": ["nowhere.jsonl"]}}))
    assert CliRunner().invoke(cli, ["--config", str(p), "ingest"]).exit_code == 1
    assert main(["--config", str(tmp_path / "absent.json"), "ingest"]) == 1


def test_runtime_failure_exits_2(workdir):
    run_pipeline(workdir)
    (workdir / "out/model.bin").write_bytes(b"ASEMB1garbage")
    res = run(workdir, "expand-lexicon")
    assert res.exit_code == 2 and "runtime failure" in res.output


def test_main_returns_status_codes(workdir):
    assert main(["--config", str(workdir / "config.json"), "ingest"]) == 0
    assert main(["no-such-command"]) == 1


def test_parallel_ingest_and_annotate_match_serial(workdir, tmp_path):
    run_pipeline(workdir)
    serial = snapshot(workdir)
    shutil.rmtree(workdir / "out")
    for st in STAGES:
        assert run(workdir, "--workers", "3", st).exit_code == 0
    assert snapshot(workdir) == serial


def test_config_resolves_relative_paths(workdir):
    cfg = PipelineConfig.load(workdir / "config.json")
    assert cfg.path("records") == workdir / "out/records.jsonl"
    with pytest.raises(ConfigError):
        PipelineConfig.from_dict({"paths": {"nope": 1}})
