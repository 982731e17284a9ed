"""Command-line interface.

Subcommands mirror the pipeline stages so any stage can be rerun from its
file artifacts: ingest, features, mask, evaluate, analyze, run (everything),
report. Config precedence: CLI flags > --config TOML file > defaults.

Exit codes: 0 success, 1 usage/data error, 2 backend unreachable after
retries (partial response cache preserved), 3 empty effective corpus.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

from .analysis import extract_confounders
from .backends import BackendError, ProtocolError, make_backend
from .causal import CausalResult, EvaluationRecord, run_causal_analysis
from .corpus import DEFAULT_MAX_BYTES, CorpusError, dedup, ingest_jsonl, write_jsonl
from .grammar import DEFAULT_NODE_TYPES
from .masking import Skip, sample_from_dict, sample_to_dict
from .parser import parse
from .pipeline import (
    ConfigError,
    EmptyCorpusError,
    PipelineConfig,
    build_masked_samples,
    report_summary,
    run_pipeline,
    write_causal_csv,
    write_causal_json,
    write_records_jsonl,
    write_scores_csv,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BACKEND = 2
EXIT_EMPTY = 3


def _parse_toml_value(raw: str):
    raw = raw.strip()
    if raw.startswith("[") and raw.endswith("]"):
        inner = raw[1:-1].strip()
        if not inner:
            return []
        return [_parse_toml_value(part) for part in inner.split(",") if part.strip()]
    if raw.startswith(('"', "'")) and raw.endswith(raw[0]) and len(raw) >= 2:
        return raw[1:-1]
    if raw in ("true", "false"):
        return raw == "true"
    try:
        return int(raw)
    except ValueError:
        return float(raw)


def _read_toml_subset(text: str) -> dict:
    """Flat TOML reader for environments without tomllib.

    Supports: key = value with strings, ints, floats, booleans, and
    single-line arrays; section headers are ignored (keys stay flat);
    '#' comments outside of strings.
    """
    out: dict = {}
    for raw_line in text.splitlines():
        line = raw_line.strip()
        if not line or line.startswith("#") or (line.startswith("[") and line.endswith("]")):
            continue
        if "=" not in line:
            raise ConfigError(f"cannot parse config line: {raw_line!r}")
        key, _, value = line.partition("=")
        if "#" in value and not any(q in value.split("#", 1)[0] for q in "\"'"):
            value = value.split("#", 1)[0]
        try:
            out[key.strip()] = _parse_toml_value(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key.strip()!r}: {value.strip()!r}") from exc
    return out


def load_config_file(path: str | Path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        import tomllib  # Python >= 3.11

        data = tomllib.loads(text)
    except ModuleNotFoundError:
        data = _read_toml_subset(text)
    flat: dict = {}
    for key, value in data.items():
        if isinstance(value, dict):  # tolerate one level of table nesting
            flat.update(value)
        else:
            flat[key] = value
    return flat


def _split_node_types(value: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in value.split(",") if part.strip())


def build_pipeline_config(args: argparse.Namespace, require_output: bool = True) -> PipelineConfig:
    values: dict = {}
    if getattr(args, "config", None):
        file_values = load_config_file(args.config)
        known = {f.name for f in fields(PipelineConfig)}
        unknown = set(file_values) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values.update(file_values)
    for f in fields(PipelineConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    if "node_types" in values and isinstance(values["node_types"], (list, str)):
        nts = values["node_types"]
        values["node_types"] = _split_node_types(nts) if isinstance(nts, str) else tuple(nts)
    if "corpus_path" not in values:
        raise ConfigError("corpus_path is required (flag or config file)")
    if "output_dir" not in values:
        if require_output:
            raise ConfigError("output_dir is required (flag or config file)")
        values["output_dir"] = "."
    return PipelineConfig(**values)


def _add_common_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file; flags override its values")
    p.add_argument("--corpus", dest="corpus_path", help="input corpus JSONL")
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--node-types", dest="node_types", help="comma-separated node type labels")
    p.add_argument("--backend", help="http | oracle | constant:<tok> | random:<seed> | corruptor")
    p.add_argument("--backend-url", dest="backend_url")
    p.add_argument("--mask-token", dest="mask_sentinel")
    p.add_argument("--sample-size", dest="sample_size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--control-variants", dest="control_variants", type=int)
    p.add_argument("--bootstrap-resamples", dest="bootstrap_resamples", type=int)
    p.add_argument("--max-mask-fraction", dest="max_mask_fraction", type=float)
    p.add_argument("--top-k", dest="top_k", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--min-group-size", dest="min_group_size", type=int)
    p.add_argument("--model-refit", dest="model_refit", action="store_const", const=True)
    p.add_argument("--max-bytes", dest="max_bytes", type=int)
    p.add_argument("--cache-dir", dest="cache_dir")


def cmd_ingest(args) -> int:
    corpus = ingest_jsonl(args.input, max_bytes=args.max_bytes)
    corpus = dedup(corpus)
    write_jsonl(corpus, args.output)
    skipped = corpus.metadata.get("skipped_oversize", 0)
    print(f"ingested {len(corpus)} snippets -> {args.output} (skipped {skipped} oversized)")
    return EXIT_OK


def cmd_features(args) -> int:
    corpus = ingest_jsonl(args.input, max_bytes=args.max_bytes)
    with open(args.output, "w", encoding="utf-8") as fh:
        for snippet in corpus:
            vec = extract_confounders(snippet.source, parse(snippet.source))
            fh.write(json.dumps({"id": snippet.id, **vec.as_dict()}))
            fh.write("\n")
    print(f"wrote features for {len(corpus)} snippets -> {args.output}")
    return EXIT_OK


def cmd_mask(args) -> int:
    config = build_pipeline_config(args, require_output=False)
    config.validate()
    corpus = dedup(ingest_jsonl(config.corpus_path, max_bytes=config.max_bytes))
    samples, skips, _ = build_masked_samples(corpus, config)
    out = Path(args.output)
    with out.open("w", encoding="utf-8") as fh:
        for skip in skips:
            fh.write(json.dumps({"skip": True, "snippet_id": skip.snippet_id,
                                 "node_type": skip.node_type, "reason": skip.reason}))
            fh.write("\n")
        for sample in samples:
            fh.write(json.dumps(sample_to_dict(sample), ensure_ascii=False))
            fh.write("\n")
    print(f"wrote {len(samples)} masked samples ({len(skips)} skips) -> {out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from .pipeline import build_records, score_predictions

    config = build_pipeline_config(args)
    config.validate()
    corpus = dedup(ingest_jsonl(config.corpus_path, max_bytes=config.max_bytes))
    trees = {s.id: parse(s.source) for s in corpus}
    samples = []
    with open(args.input, encoding="utf-8") as fh:
        for line in fh:
            obj = json.loads(line)
            if obj.get("skip"):
                continue
            samples.append(sample_from_dict(obj))
    if not samples:
        raise EmptyCorpusError(f"no masked samples in {args.input}")
    cache_dir = config.cache_dir
    if config.backend == "http" and cache_dir is None:
        cache_dir = str(Path(config.output_dir) / "cache")
    backend = make_backend(config.backend, base_url=config.backend_url, cache_dir=cache_dir)
    scores = score_predictions(samples, corpus, backend, config)
    records = build_records(samples, scores, corpus, trees)
    out = Path(config.output_dir)
    write_records_jsonl(records, out / "records.jsonl")
    write_scores_csv(records, out / "scores_by_node_type.csv")
    print(f"wrote {len(records)} records -> {out / 'records.jsonl'}")
    return EXIT_OK


def read_records_jsonl(path: str | Path) -> list[EvaluationRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(EvaluationRecord.from_dict(json.loads(line)))
    return records


def cmd_analyze(args) -> int:
    records = read_records_jsonl(args.input)
    results = run_causal_analysis(
        records,
        n_resamples=args.bootstrap_resamples or 500,
        seed=args.seed if args.seed is not None else 42,
        model_refit=bool(args.model_refit),
        min_group_size=args.min_group_size or 30,
    )
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_causal_csv(results, out / "causal_results.csv")
    write_causal_json(results, out / "causal_results.json")
    print(report_summary(results))
    return EXIT_OK


def cmd_run(args) -> int:
    config = build_pipeline_config(args)
    summary = run_pipeline(config)
    print(report_summary(summary.results))
    print(f"outputs in {summary.output_dir}: records.jsonl, scores_by_node_type.csv, "
          f"causal_results.csv/json, run_manifest.json")
    return EXIT_OK


def cmd_report(args) -> int:
    with open(args.input, encoding="utf-8") as fh:
        raw = json.load(fh)
    results = []
    for obj in raw:
        results.append(
            CausalResult(
                node_type=obj["node_type"],
                outcome_metric=obj["metric"],
                tau=obj["tau"],
                tau_naive=obj["tau_naive"],
                ci_low=obj["ci_low"],
                ci_high=obj["ci_high"],
                placebo_tau=obj["placebo_tau"],
                n_treated=obj["n_treated"],
                n_control=obj["n_control"],
                mean_t1=obj["mean_t1"],
                std_t1=obj["std_t1"],
                mean_t0=obj["mean_t0"],
                std_t0=obj["std_t0"],
                flags=tuple(obj.get("flags", ())),
            )
        )
    print(report_summary(results))
    return EXIT_OK


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="syntaxeval", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="read, dedup, and persist a snippet corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--max-bytes", type=int, default=DEFAULT_MAX_BYTES)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("features", help="extract confounder features per snippet")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--max-bytes", type=int, default=DEFAULT_MAX_BYTES)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("mask", help="emit treatment and control masked samples")
    p.add_argument("--output", required=True, help="masked-sample JSONL audit stream")
    _add_common_pipeline_flags(p)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("evaluate", help="fill masks via a backend and score predictions")
    p.add_argument("--input", required=True, help="masked-sample JSONL from `mask`")
    _add_common_pipeline_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze", help="causal analysis over records.jsonl")
    p.add_argument("--input", required=True)
    p.add_argument("--output-dir", dest="output_dir", required=True)
    p.add_argument("--bootstrap-resamples", dest="bootstrap_resamples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--min-group-size", dest="min_group_size", type=int)
    p.add_argument("--model-refit", dest="model_refit", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("run", help="full pipeline from a config or flags")
    _add_common_pipeline_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="render causal_results.json as a table")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_arg_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except BackendError as exc:
        log.error("backend unreachable: %s (response cache preserved)", exc)
        return EXIT_BACKEND
    except EmptyCorpusError as exc:
        log.error("%s", exc)
        return EXIT_EMPTY
    except (ConfigError, CorpusError, ProtocolError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
