"""Pipeline and CLI integration tests on small fixtures."""

import csv
import json

import pytest

from fixtures import write_fixture_corpus
from syntaxeval.causal import CausalResult
from syntaxeval.cli import main
from syntaxeval.pipeline import EmptyCorpusError, PipelineConfig, report_summary, run_pipeline


@pytest.fixture()
def small_corpus(tmp_path):
    path = tmp_path / "corpus.jsonl"
    write_fixture_corpus(path, 30)
    return path


def small_config(corpus_path, out_dir, **overrides) -> PipelineConfig:
    defaults = dict(
        corpus_path=str(corpus_path),
        output_dir=str(out_dir),
        backend="oracle",
        bootstrap_resamples=50,
        min_group_size=5,
        seed=7,
    )
    defaults.update(overrides)
    return PipelineConfig(**defaults)


def test_oracle_run_produces_artifacts_and_perfect_scores(small_corpus, tmp_path):
    out = tmp_path / "out"
    summary = run_pipeline(small_config(small_corpus, out))
    for name in ("records.jsonl", "scores_by_node_type.csv", "causal_results.csv",
                 "causal_results.json", "run_manifest.json"):
        assert (out / name).exists()
    with open(out / "records.jsonl") as fh:
        rows = [json.loads(line) for line in fh]
    assert rows
    for row in rows:
        for metric, value in row["outcomes"].items():
            assert value == 1.0
    assert all(abs(r.tau) <= 0.01 for r in summary.results)


def test_record_counts_reconcile_with_manifest(small_corpus, tmp_path):
    out = tmp_path / "out"
    run_pipeline(small_config(small_corpus, out))
    manifest = json.loads((out / "run_manifest.json").read_text())
    with open(out / "records.jsonl") as fh:
        n_records = sum(1 for _ in fh)
    assert manifest["counts"]["records"] == n_records
    treated_total = sum(v["treated"] for v in manifest["counts"]["by_node_type"].values())
    # one treated + one averaged-control record per treated sample
    assert n_records == 2 * treated_total


def test_control_pairing_contract(small_corpus, tmp_path):
    from syntaxeval.corpus import dedup, ingest_jsonl
    from syntaxeval.pipeline import build_masked_samples

    config = small_config(small_corpus, tmp_path / "o")
    corpus = dedup(ingest_jsonl(config.corpus_path))
    samples, _, _ = build_masked_samples(corpus, config)
    treated = {(s.node_type, s.snippet_id): s for s in samples if s.arm == "treatment"}
    controls = [s for s in samples if s.arm == "control"]
    by_pair = {}
    for c in controls:
        assert c.mask_count == treated[(c.node_type, c.snippet_id)].mask_count
        by_pair.setdefault((c.node_type, c.snippet_id), []).append(c)
    for group in by_pair.values():
        assert len(group) == 20
        assert sorted(s.variant_index for s in group) == list(range(20))


def test_empty_corpus_raises(tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    with pytest.raises(EmptyCorpusError):
        run_pipeline(small_config(empty, tmp_path / "out"))


def test_single_node_type_yields_three_rows(small_corpus, tmp_path):
    out = tmp_path / "out"
    summary = run_pipeline(small_config(small_corpus, out, node_types=("identifier",)))
    assert len(summary.results) == 3
    assert {r.outcome_metric for r in summary.results} == {"jaccard", "levenshtein", "sorensen_dice"}


def test_determinism_byte_identical_reruns(small_corpus, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    run_pipeline(small_config(small_corpus, out1))
    run_pipeline(small_config(small_corpus, out2))
    assert (out1 / "records.jsonl").read_bytes() == (out2 / "records.jsonl").read_bytes()
    assert (out1 / "causal_results.csv").read_bytes() == (out2 / "causal_results.csv").read_bytes()


def test_corruptor_run_negative_everywhere(tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    write_fixture_corpus(corpus, 60)
    out = tmp_path / "out"
    summary = run_pipeline(small_config(corpus, out, backend="corruptor"))
    assert summary.results
    for r in summary.results:
        assert r.tau < 0, f"{r.node_type}/{r.outcome_metric} tau={r.tau}"
        assert r.mean_t0 == pytest.approx(1.0)


def test_skips_are_counted_not_dropped(tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    # "x = y" masks 2/3 tokens for identifier: above the 0.5 default fraction
    rows = [{"id": "a", "source": "x = y"}, {"id": "b", "source": "value = other + 1\nmore = value\n"}]
    with open(corpus, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    out = tmp_path / "out"
    summary = run_pipeline(
        small_config(corpus, out, node_types=("identifier",), min_group_size=1, bootstrap_resamples=10)
    )
    assert summary.skips["identifier"]["mask_fraction"] == 1
    manifest = json.loads((out / "run_manifest.json").read_text())
    assert manifest["counts"]["skips"]["identifier"]["mask_fraction"] == 1


def test_scores_csv_covers_both_arms(small_corpus, tmp_path):
    out = tmp_path / "out"
    run_pipeline(small_config(small_corpus, out))
    with open(out / "scores_by_node_type.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    arms = {row["treatment"] for row in rows}
    assert arms == {"0", "1"}
    assert {row["node_type"] for row in rows} >= {"if_statement", "identifier"}


# -------------------------------------------------------------------- report --


def table2_like_fixture():
    rows = []
    node_types = ["boolean_operator", "for_statement", "identifier"]
    for nt in node_types:
        for metric, (t0m, t0s, t1m, t1s) in {
            "jaccard": (0.88, 0.17, 0.78, 0.21),
            "levenshtein": (0.87, 0.16, 0.78, 0.22),
            "sorensen_dice": (0.92, 0.10, 0.85, 0.17),
        }.items():
            tau = -0.269 if (nt == "for_statement" and metric == "jaccard") else -0.1
            rows.append(
                CausalResult(
                    node_type=nt, outcome_metric=metric, tau=tau, tau_naive=tau,
                    ci_low=tau - 0.02, ci_high=tau + 0.02, placebo_tau=0.001,
                    n_treated=100, n_control=100,
                    mean_t1=t1m, std_t1=t1s, mean_t0=t0m, std_t0=t0s,
                )
            )
    return rows


def test_report_summary_table2_shape():
    text = report_summary(table2_like_fixture())
    assert "0.88 ± 0.17" in text
    assert "-0.269" in text
    lines = text.splitlines()
    assert lines[1].split()[0] == "arm"
    assert any(line.startswith("for_statement") for line in lines)


def test_report_summary_empty_results():
    text = report_summary([])
    assert "Performance" in text
    assert "node_type" in text


def test_report_summary_single_row():
    row = table2_like_fixture()[0]
    text = report_summary([row])
    assert "boolean_operator" in text
    assert text.count("\n") >= 5


# ----------------------------------------------------------------------- CLI --


def test_cli_full_stage_chain(tmp_path, capsys):
    raw = tmp_path / "raw.jsonl"
    write_fixture_corpus(raw, 20)
    corpus = tmp_path / "corpus.jsonl"
    assert main(["ingest", "--input", str(raw), "--output", str(corpus)]) == 0

    features = tmp_path / "features.jsonl"
    assert main(["features", "--input", str(corpus), "--output", str(features)]) == 0
    with open(features) as fh:
        feats = [json.loads(line) for line in fh]
    assert len(feats) == 20
    assert set(feats[0]) == {"id", "parse_errors", "ast_height", "ast_nodes",
                             "whitespaces", "loc", "cyclo", "token_count"}

    masked = tmp_path / "masked.jsonl"
    assert main(["mask", "--corpus", str(corpus), "--output", str(masked),
                 "--node-types", "identifier,if_statement", "--seed", "3"]) == 0

    outdir = tmp_path / "out"
    assert main(["evaluate", "--input", str(masked), "--corpus", str(corpus),
                 "--output-dir", str(outdir), "--backend", "oracle", "--seed", "3"]) == 0
    assert (outdir / "records.jsonl").exists()

    assert main(["analyze", "--input", str(outdir / "records.jsonl"), "--output-dir", str(outdir),
                 "--bootstrap-resamples", "20", "--seed", "3", "--min-group-size", "2"]) == 0
    assert (outdir / "causal_results.json").exists()

    assert main(["report", "--input", str(outdir / "causal_results.json")]) == 0
    assert "Causal effect" in capsys.readouterr().out


def test_cli_run_with_config_file(tmp_path, capsys):
    corpus = tmp_path / "corpus.jsonl"
    write_fixture_corpus(corpus, 15)
    cfg = tmp_path / "run.toml"
    cfg.write_text(
        f'corpus_path = "{corpus}"\n'
        f'output_dir = "{tmp_path / "out"}"\n'
        'backend = "oracle"\n'
        "bootstrap_resamples = 20\n"
        "min_group_size = 2\n"
        'node_types = ["identifier", "if_statement"]\n'
        "seed = 11\n"
    )
    assert main(["run", "--config", str(cfg)]) == 0
    assert (tmp_path / "out" / "causal_results.csv").exists()


def test_cli_flag_overrides_config(tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    write_fixture_corpus(corpus, 15)
    cfg = tmp_path / "run.toml"
    cfg.write_text(
        f'corpus_path = "{corpus}"\n'
        f'output_dir = "{tmp_path / "ignored"}"\n'
        'backend = "oracle"\n'
        "bootstrap_resamples = 20\nmin_group_size = 2\n"
    )
    override = tmp_path / "actual"
    assert main(["run", "--config", str(cfg), "--output-dir", str(override),
                 "--node-types", "identifier"]) == 0
    assert (override / "causal_results.csv").exists()
    assert not (tmp_path / "ignored" / "causal_results.csv").exists()


def test_cli_exit_code_empty_corpus(tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    assert main(["run", "--corpus", str(empty), "--output-dir", str(tmp_path / "o")]) == 3


def test_cli_exit_code_backend_unreachable(tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    write_fixture_corpus(corpus, 3)
    code = main([
        "run", "--corpus", str(corpus), "--output-dir", str(tmp_path / "o"),
        "--backend", "http", "--backend-url", "http://127.0.0.1:1",
        "--node-types", "identifier", "--jobs", "1",
    ])
    assert code == 2


def test_cli_exit_code_bad_config(tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("unknown_key = 1\n")
    assert main(["run", "--config", str(cfg)]) == 1
