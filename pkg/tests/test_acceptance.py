"""Acceptance suite: one test per release criterion, at stated tolerances.

Each test prints a PASS/FAIL line (visible with pytest -s; captured output is
shown on failure). All backends used here are deterministic stubs.
"""

import functools
import itertools
import json
import random
import sys
import time

import numpy as np
import pytest

from fixtures import write_fixture_corpus
from syntaxeval._kernels import levenshtein_distance
from syntaxeval.analysis import extract_confounders
from syntaxeval.causal import (
    bootstrap_ate,
    estimate_ate_ipw,
    fit_propensity,
    penalized_gradient,
    penalized_loglik,
    placebo_refute,
)
from syntaxeval.corpus import dedup, ingest_jsonl
from syntaxeval.metrics import jaccard, levenshtein_norm, sorensen_dice
from syntaxeval.parser import parse
from syntaxeval.pipeline import PipelineConfig, build_masked_samples, run_pipeline
from synth import confounded_records, independent_records
from test_analysis import TEN_SNIPPET_EXPECTATIONS


def criterion(name):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                print(f"[acceptance] FAIL {name}")
                raise
            print(f"[acceptance] PASS {name}")
            return result

        return wrapper

    return decorate


@criterion("oracle end-to-end: perfect similarity, |tau| <= 0.01, < 60 s")
def test_oracle_end_to_end(tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    write_fixture_corpus(corpus, 50)
    started = time.monotonic()
    summary = run_pipeline(
        PipelineConfig(
            corpus_path=str(corpus),
            output_dir=str(tmp_path / "out"),
            backend="oracle",
            seed=101,
            min_group_size=2,
        )
    )
    elapsed = time.monotonic() - started
    with open(tmp_path / "out" / "records.jsonl") as fh:
        rows = [json.loads(line) for line in fh]
    assert rows, "oracle run produced no records"
    for row in rows:
        for metric, value in row["outcomes"].items():
            assert value == 1.0, f"{row['snippet_id']}/{row['node_type']}/{metric} = {value}"
    assert summary.results, "no causal results"
    for r in summary.results:
        assert abs(r.tau) <= 0.01, f"{r.node_type}/{r.outcome_metric}: tau={r.tau}"
    assert elapsed < 60, f"oracle run took {elapsed:.1f}s"


@criterion("corruptor end-to-end: tau < 0 for every node type and metric")
def test_corruptor_end_to_end(tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    write_fixture_corpus(corpus, 200)
    summary = run_pipeline(
        PipelineConfig(
            corpus_path=str(corpus),
            output_dir=str(tmp_path / "out"),
            backend="corruptor",
            seed=202,
            min_group_size=2,
        )
    )
    node_types = {r.node_type for r in summary.results}
    assert len(node_types) == 11, f"expected all 11 node types, got {sorted(node_types)}"
    for r in summary.results:
        assert r.tau < 0, f"{r.node_type}/{r.outcome_metric}: tau={r.tau}"
        assert r.mean_t0 == pytest.approx(1.0), "control arm should be perfect under the corruptor"


@criterion("levenshtein DP == recursive definition, exhaustive len<=6 over 3 labels")
def test_levenshtein_exhaustive_equivalence():
    labels = (0, 1, 2)
    seqs = [()]
    for length in range(1, 7):
        seqs.extend(itertools.product(labels, repeat=length))
    index = {s: k for k, s in enumerate(seqs)}
    parent = np.array([index[s[:-1]] if s else 0 for s in seqs], dtype=np.int32)
    last = np.array([s[-1] if s else -1 for s in seqs], dtype=np.int32)
    lengths = np.array([len(s) for s in seqs], dtype=np.int32)
    n = len(seqs)
    memo = np.full((n, n), -1, dtype=np.int16)
    sys.setrecursionlimit(10000)

    def rec(ia: int, ib: int) -> int:
        v = memo[ia, ib]
        if v >= 0:
            return v
        if lengths[ia] == 0:
            v = lengths[ib]
        elif lengths[ib] == 0:
            v = lengths[ia]
        else:
            cost = 0 if last[ia] == last[ib] else 1
            v = min(rec(parent[ia], ib) + 1, rec(ia, parent[ib]) + 1, rec(parent[ia], parent[ib]) + cost)
        memo[ia, ib] = v
        return v

    arrays = [np.array(s, dtype=np.int64) for s in seqs]
    mismatches = 0
    for ia in range(n):
        for ib in range(n):
            if levenshtein_distance(arrays[ia], arrays[ib]) != rec(ia, ib):
                mismatches += 1
    assert mismatches == 0, f"{mismatches} DP/recursive disagreements"

    # bind the normalization to the distance on a sample
    rng = random.Random(77)
    names = ("a", "b", "c")
    for _ in range(1000):
        sa = seqs[rng.randrange(n)]
        sb = seqs[rng.randrange(n)]
        expected = 1.0 if not sa and not sb else 1 - rec(index[sa], index[sb]) / max(len(sa), len(sb))
        got = levenshtein_norm([names[x] for x in sa], [names[x] for x in sb])
        assert got == pytest.approx(expected)


@criterion("jaccard/dice match definitional oracles exactly on 1000 random pairs")
def test_set_metric_oracle_equivalence():
    rng = random.Random(123)
    labels = ["id", "if", "for", "str", "call", "ret", "err"]
    for _ in range(1000):
        a = [rng.choice(labels) for _ in range(rng.randrange(0, 15))]
        b = [rng.choice(labels) for _ in range(rng.randrange(0, 15))]
        sa, sb = set(a), set(b)
        expected_j = 1.0 if not sa and not sb else len(sa & sb) / len(sa | sb)
        expected_d = 1.0 if not sa and not sb else 2 * len(sa & sb) / (len(sa) + len(sb))
        assert jaccard(a, b) == expected_j
        assert sorensen_dice(a, b) == expected_d


@criterion("synthetic effect recovery: IPW tau in -0.1 +/- 0.01, placebo <= 0.02, < 10 s")
def test_synthetic_effect_recovery():
    started = time.monotonic()
    records = independent_records(2000, delta=-0.1, noise=0.05, seed=314)
    model = fit_propensity(records)
    tau, _ = estimate_ate_ipw(records, model, "jaccard")
    placebo = placebo_refute(records, "jaccard", seed=314)
    elapsed = time.monotonic() - started
    assert tau == pytest.approx(-0.1, abs=0.01), f"tau={tau}"
    assert abs(placebo) <= 0.02, f"placebo={placebo}"
    assert elapsed < 10, f"took {elapsed:.1f}s"


@criterion("bootstrap coverage: 95% CI covers -0.1 in 95% +/- 5pp of 200 trials, < 5 min")
def test_bootstrap_coverage():
    started = time.monotonic()
    covered = 0
    trials = 200
    for trial in range(trials):
        records = independent_records(500, delta=-0.1, noise=0.05, seed=5000 + trial)
        boot = bootstrap_ate(records, model_refit=False, outcome_metric="jaccard",
                             n_resamples=500, seed=9000 + trial)
        if boot.ci_low <= -0.1 <= boot.ci_high:
            covered += 1
    elapsed = time.monotonic() - started
    rate = covered / trials
    assert 0.90 <= rate <= 1.0, f"coverage {rate:.3f} outside 95% +/- 5pp"
    assert elapsed < 300, f"took {elapsed:.1f}s"


@criterion("confounded design: naive biased by >= 0.05, IPW within +/- 0.015")
def test_confounded_design_correction():
    records = confounded_records(4000, delta=-0.1, seed=271)
    model = fit_propensity(records)
    tau, tau_naive = estimate_ate_ipw(records, model, "jaccard")
    assert abs(tau_naive - (-0.1)) >= 0.05, f"planted bias too small: naive={tau_naive}"
    assert tau == pytest.approx(-0.1, abs=0.015), f"tau={tau}"


@criterion("mask-count pairing: all controls match treatment, exactly 20 variants")
def test_mask_count_pairing(tmp_path):
    corpus_path = tmp_path / "corpus.jsonl"
    write_fixture_corpus(corpus_path, 120)
    config = PipelineConfig(corpus_path=str(corpus_path), output_dir=str(tmp_path / "o"), seed=5)
    corpus = dedup(ingest_jsonl(config.corpus_path))
    samples, _, _ = build_masked_samples(corpus, config)
    treated = {(s.node_type, s.snippet_id): s.mask_count for s in samples if s.arm == "treatment"}
    control_counts: dict = {}
    mismatched = 0
    for s in samples:
        if s.arm != "control":
            continue
        if s.mask_count != treated[(s.node_type, s.snippet_id)]:
            mismatched += 1
        control_counts.setdefault((s.node_type, s.snippet_id), []).append(s.variant_index)
    assert mismatched == 0, f"{mismatched} controls with mismatched mask counts"
    assert control_counts, "no control samples produced"
    for key, variants in control_counts.items():
        assert sorted(variants) == list(range(20)), f"{key}: variants {sorted(variants)}"


@criterion("logistic fit: gradient max-norm <= 1e-6; matches finite differences")
def test_logistic_fit_optimality():
    for seed in range(10):
        records = confounded_records(600, seed=seed)
        model = fit_propensity(records)
        Z = np.stack([r.confounders.as_array() for r in records])
        t = np.array([r.treatment for r in records], dtype=float)
        grad = penalized_gradient(model.coefficients, model.design_matrix(Z), t)
        assert np.max(np.abs(grad)) <= 1e-6, f"seed {seed}: |grad|={np.max(np.abs(grad)):.2e}"

    rng = np.random.default_rng(1234)
    for _ in range(20):
        n, p = 80, 5
        X = np.column_stack([np.ones(n), rng.normal(size=(n, p))])
        t = (rng.random(n) < 0.5).astype(float)
        coef = rng.normal(scale=0.7, size=p + 1)
        grad = penalized_gradient(coef, X, t)
        eps = 1e-6
        for j in range(p + 1):
            bump = np.zeros(p + 1)
            bump[j] = eps
            fd = (penalized_loglik(coef + bump, X, t) - penalized_loglik(coef - bump, X, t)) / (2 * eps)
            denom = max(abs(fd), abs(grad[j]), 1e-8)
            assert abs(fd - grad[j]) / denom <= 1e-4


@criterion("confounder extraction matches hand-computed 10-snippet fixture exactly")
def test_confounder_fixture_values_exact():
    assert len(TEN_SNIPPET_EXPECTATIONS) == 10
    for src, ws, loc, cyclo in TEN_SNIPPET_EXPECTATIONS:
        vec = extract_confounders(src, parse(src))
        assert vec.whitespaces == ws, f"{src!r}: whitespaces {vec.whitespaces} != {ws}"
        assert vec.loc == loc, f"{src!r}: loc {vec.loc} != {loc}"
        assert vec.cyclo == cyclo, f"{src!r}: cyclo {vec.cyclo} != {cyclo}"


@criterion("determinism: byte-identical records.jsonl and causal_results.csv")
def test_byte_level_determinism(tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    write_fixture_corpus(corpus, 40)

    def run(out):
        return run_pipeline(
            PipelineConfig(
                corpus_path=str(corpus),
                output_dir=str(out),
                backend="random:99",
                seed=404,
                min_group_size=2,
                bootstrap_resamples=200,
            )
        )

    run(tmp_path / "r1")
    run(tmp_path / "r2")
    for name in ("records.jsonl", "causal_results.csv"):
        a = (tmp_path / "r1" / name).read_bytes()
        b = (tmp_path / "r2" / name).read_bytes()
        assert a == b, f"{name} differs between identical runs"
