"""End-to-end pipeline: ingest -> parse -> mask -> infer -> score -> analyze.

Every stage is deterministic given the config seed: control masks derive
their RNG from (seed, snippet id, variant index), and analysis seeds derive
from (seed, node type, metric). A rerun with the same config and a warm
response cache reproduces records.jsonl and causal_results.csv byte for byte.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._kernels import NUMBA_ENABLED
from .analysis import NodeTypeSet, extract_confounders, traversal_labels
from .backends import Backend, FillRequest, fill_masks, make_backend, reconstruct
from .causal import CausalResult, EvaluationRecord, run_causal_analysis, results_to_csv_rows
from .corpus import DEFAULT_MAX_BYTES, Corpus, dedup, ingest_jsonl, sample_subset
from .grammar import DEFAULT_NODE_TYPES
from .masking import (
    DEFAULT_CONTROL_VARIANTS,
    DEFAULT_MAX_MASK_FRACTION,
    DEFAULT_SENTINEL,
    MaskedSample,
    Skip,
    mask_control,
    mask_treatment,
)
from .metrics import OUTCOME_METRICS, SimilarityScores, compare_labels
from .parser import parse

log = logging.getLogger(__name__)


class EmptyCorpusError(RuntimeError):
    """Nothing to evaluate after ingest/dedup/sampling/masking."""


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    corpus_path: str
    output_dir: str
    node_types: tuple[str, ...] = DEFAULT_NODE_TYPES
    backend: str = "oracle"
    backend_url: str | None = None
    mask_sentinel: str = DEFAULT_SENTINEL
    sample_size: int | None = None  # None = whole corpus after dedup
    seed: int = 42
    control_variants: int = DEFAULT_CONTROL_VARIANTS
    bootstrap_resamples: int = 500
    max_mask_fraction: float = DEFAULT_MAX_MASK_FRACTION
    top_k: int = 1
    jobs: int = 4
    min_group_size: int = 30
    model_refit: bool = False
    max_bytes: int = DEFAULT_MAX_BYTES
    cache_dir: str | None = None

    def validate(self) -> None:
        if not self.node_types:
            raise ConfigError("node_types must not be empty")
        NodeTypeSet(tuple(self.node_types))
        for name in ("control_variants", "bootstrap_resamples", "top_k", "jobs", "min_group_size", "max_bytes"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.sample_size is not None and self.sample_size < 1:
            raise ConfigError("sample_size must be >= 1")
        if not 0 < self.max_mask_fraction <= 1:
            raise ConfigError("max_mask_fraction must be in (0, 1]")
        out = Path(self.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()


@dataclass
class RunSummary:
    output_dir: str
    n_snippets: int
    n_records: int
    n_protocol_errors: int
    skips: dict[str, dict[str, int]]
    results: list[CausalResult] = field(repr=False, default_factory=list)
    counts_by_node_type: dict[str, dict[str, int]] = field(default_factory=dict)


def _load_corpus(config: PipelineConfig) -> Corpus:
    corpus = dedup(ingest_jsonl(config.corpus_path, max_bytes=config.max_bytes))
    if config.sample_size is not None:
        corpus = sample_subset(corpus, config.sample_size, seed=config.seed)
    return corpus


def build_masked_samples(
    corpus: Corpus, config: PipelineConfig
) -> tuple[list[MaskedSample], list[Skip], dict[str, "object"]]:
    """Treatment plus matched control samples for every snippet and node type."""
    trees = {s.id: parse(s.source) for s in corpus}
    samples: list[MaskedSample] = []
    skips: list[Skip] = []
    for node_type in config.node_types:
        for snippet in corpus:
            tree = trees[snippet.id]
            treated = mask_treatment(
                snippet, tree, node_type, mask_sentinel=config.mask_sentinel,
                max_mask_fraction=config.max_mask_fraction,
            )
            if isinstance(treated, Skip):
                skips.append(treated)
                continue
            samples.append(treated)
            samples.extend(
                mask_control(
                    snippet, tree, k=treated.mask_count, seed=config.seed,
                    variants=config.control_variants, mask_sentinel=config.mask_sentinel,
                    node_type=node_type,
                )
            )
    return samples, skips, trees


def score_predictions(
    samples: list[MaskedSample],
    corpus: Corpus,
    backend: Backend,
    config: PipelineConfig,
) -> list[SimilarityScores]:
    """Fill, reconstruct, and score every masked sample, preserving order."""
    sources = {s.id: s.source for s in corpus}
    ground_labels = {sid: traversal_labels(parse(src)) for sid, src in sources.items()}

    def run_one(sample: MaskedSample) -> SimilarityScores:
        request = FillRequest(sample.masked_text, sample.mask_sentinel, config.top_k)
        response = fill_masks(backend, request, sample=sample)
        predicted = reconstruct(sample, response)
        return compare_labels(ground_labels[sample.snippet_id], traversal_labels(parse(predicted)))

    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            return list(pool.map(run_one, samples))
    return [run_one(s) for s in samples]


def _mean_scores(variants: list[SimilarityScores]) -> SimilarityScores:
    return SimilarityScores(
        jaccard=float(np.mean([v.jaccard for v in variants])),
        levenshtein=float(np.mean([v.levenshtein for v in variants])),
        sorensen_dice=float(np.mean([v.sorensen_dice for v in variants])),
    )


def build_records(
    samples: list[MaskedSample],
    scores: list[SimilarityScores],
    corpus: Corpus,
    trees: dict,
) -> list[dict]:
    """Evaluation records: one treated and one averaged-control row per
    (snippet, node type), each carrying the snippet's confounders."""
    confounders = {s.id: extract_confounders(s.source, trees[s.id]) for s in corpus}
    by_pair: dict[tuple[str, str], dict] = {}
    order: list[tuple[str, str]] = []
    for sample, score in zip(samples, scores):
        key = (sample.node_type, sample.snippet_id)
        if key not in by_pair:
            by_pair[key] = {"treatment": None, "controls": []}
            order.append(key)
        if sample.arm == "treatment":
            by_pair[key]["treatment"] = score
        else:
            by_pair[key]["controls"].append(score)

    records: list[EvaluationRecord] = []
    for node_type, snippet_id in order:
        entry = by_pair[(node_type, snippet_id)]
        z = confounders[snippet_id]
        if entry["treatment"] is not None:
            records.append(EvaluationRecord(snippet_id, node_type, 1, entry["treatment"], z))
        if entry["controls"]:
            records.append(EvaluationRecord(snippet_id, node_type, 0, _mean_scores(entry["controls"]), z))
    return records


def write_records_jsonl(records, path: Path) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), ensure_ascii=False))
            fh.write("\n")


def write_scores_csv(records, path: Path) -> None:
    """Per-record score distributions grouped by node type and arm (the data
    behind per-node-type box/ECD plots)."""
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["node_type", "snippet_id", "treatment", *OUTCOME_METRICS])
        for r in records:
            writer.writerow(
                [r.node_type, r.snippet_id, r.treatment]
                + [repr(r.outcomes.get(m)) for m in OUTCOME_METRICS]
            )


def write_causal_csv(results: list[CausalResult], path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in results_to_csv_rows(results):
            writer.writerow(row)


def write_causal_json(results: list[CausalResult], path: Path) -> None:
    with path.open("w", encoding="utf-8") as fh:
        json.dump([r.to_dict() for r in results], fh, indent=2)
        fh.write("\n")


def run_pipeline(config: PipelineConfig) -> RunSummary:
    config.validate()
    out = Path(config.output_dir)
    started = time.time()

    corpus = _load_corpus(config)
    if len(corpus) == 0:
        raise EmptyCorpusError(f"no snippets to evaluate from {config.corpus_path}")

    cache_dir = config.cache_dir
    if config.backend == "http" and cache_dir is None:
        cache_dir = str(out / "cache")
    backend = make_backend(config.backend, base_url=config.backend_url, cache_dir=cache_dir)

    samples, skips, trees = build_masked_samples(corpus, config)
    if not samples:
        raise EmptyCorpusError("every snippet/node-type pair was skipped; nothing to evaluate")
    scores = score_predictions(samples, corpus, backend, config)
    records = build_records(samples, scores, corpus, trees)

    results = run_causal_analysis(
        records,
        n_resamples=config.bootstrap_resamples,
        seed=config.seed,
        model_refit=config.model_refit,
        min_group_size=config.min_group_size,
    )

    write_records_jsonl(records, out / "records.jsonl")
    write_scores_csv(records, out / "scores_by_node_type.csv")
    write_causal_csv(results, out / "causal_results.csv")
    write_causal_json(results, out / "causal_results.json")

    skip_counts: dict[str, dict[str, int]] = {}
    for skip in skips:
        per_type = skip_counts.setdefault(skip.node_type, {"absent": 0, "mask_fraction": 0})
        per_type[skip.reason] += 1
    counts_by_node_type: dict[str, dict[str, int]] = {}
    for sample in samples:
        c = counts_by_node_type.setdefault(sample.node_type, {"treated": 0, "controls": 0})
        c["treated" if sample.arm == "treatment" else "controls"] += 1

    manifest = {
        "config": asdict(config),
        "seed_derivation": {
            "control_masks": "default_rng([seed, sha256(snippet_id)[:8], variant_index])",
            "analysis": "sha256('{seed}|{node_type}|{metric}|{role}')[:8] per bootstrap/placebo",
            "subsampling": "default_rng(seed)",
        },
        "versions": {"syntaxeval": __version__, "numpy": np.__version__, "numba_enabled": NUMBA_ENABLED},
        "backend_id": backend.id,
        "counts": {
            "snippets": len(corpus),
            "masked_samples": len(samples),
            "records": len(records),
            "by_node_type": counts_by_node_type,
            "skips": skip_counts,
        },
        "started_unix": started,
        "elapsed_seconds": time.time() - started,
    }
    with (out / "run_manifest.json").open("w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")

    return RunSummary(
        output_dir=str(out),
        n_snippets=len(corpus),
        n_records=len(records),
        n_protocol_errors=0,
        skips=skip_counts,
        results=results,
        counts_by_node_type=counts_by_node_type,
    )


def report_summary(results: list[CausalResult]) -> str:
    """Text report: per-arm outcome summary above per-node-type effects."""
    lines: list[str] = []
    width = max([len("node_type")] + [len(r.node_type) for r in results]) + 2
    metric_w = 16

    lines.append("Performance [avg ± std]")
    header = "arm".ljust(width) + "".join(m.rjust(metric_w) for m in OUTCOME_METRICS)
    lines.append(header)
    for arm, mean_attr, std_attr in (("T0", "mean_t0", "std_t0"), ("T1", "mean_t1", "std_t1")):
        cells = []
        for metric in OUTCOME_METRICS:
            rows = [r for r in results if r.outcome_metric == metric]
            if not rows:
                cells.append("-".rjust(metric_w))
                continue
            n = np.array([r.n_treated if arm == "T1" else r.n_control for r in rows], dtype=float)
            means = np.array([getattr(r, mean_attr) for r in rows])
            stds = np.array([getattr(r, std_attr) for r in rows])
            mean = float(np.average(means, weights=n))
            std = float(np.average(stds, weights=n))
            cells.append(f"{mean:.2f} ± {std:.2f}".rjust(metric_w))
        lines.append(arm.ljust(width) + "".join(cells))

    lines.append("")
    lines.append("Causal effect τ by node type  (~ underpowered, ! refuted)")
    lines.append("node_type".ljust(width) + "".join(m.rjust(metric_w) for m in OUTCOME_METRICS))
    by_type: dict[str, dict[str, CausalResult]] = {}
    for r in results:
        by_type.setdefault(r.node_type, {})[r.outcome_metric] = r
    for node_type in sorted(by_type):
        cells = []
        for metric in OUTCOME_METRICS:
            r = by_type[node_type].get(metric)
            if r is None:
                cells.append("-".rjust(metric_w))
                continue
            marks = ("~" if "underpowered" in r.flags else "") + ("!" if "refuted" in r.flags else "")
            cells.append(f"{r.tau:.3f}{marks}".rjust(metric_w))
        lines.append(node_type.ljust(width) + "".join(cells))
    return "\n".join(lines) + "\n"
