"""Command-line surface: simplify, evaluate, stats, and cache maintenance.

Runs are driven by a single JSON config file with ``${ENV_VAR}``
interpolation for secrets. Unknown config keys are rejected so typos fail
loudly at startup. Exit codes: 0 full success, 2 degraded (some document
fell back or a row-level error was skipped), 1 fatal.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import re
import sys
import time
from pathlib import Path

from . import corpus, metrics
from .textcore import doc_stats
from .gateway import (
    GenerationParams,
    HttpBackend,
    LlmSession,
    ModelRoute,
    PromptCache,
    ReplayBackend,
)
from .icl import ExamplePair, HashedNgramEmbedder, HttpEmbeddingProvider, load_bank
from .pipeline import IclResources, PipelineConfig, PipelineDeps, simplify_document
from .prompts import TemplateCatalog
from .textcore import load_document

logger = logging.getLogger("docsimp")

_ENV_RE = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")

_SCHEMA = {
    "gateway": {
        "backend", "endpoint", "api_key_env", "replay_script", "cache_path",
        "models", "temperature", "max_output_tokens", "request_timeout",
        "max_retries", "count_cache_hits_as_calls",
    },
    "embedding": {"endpoint", "model_id", "dimension", "api_key_env"},
    "pipeline": {
        "method", "iterations", "use_icl", "k_examples", "include_subheadings",
        "max_attempts", "parallelism", "expansion_factor", "min_lexical_tokens",
    },
    "banks": {"paragraph_meaning", "sentence_structure", "lexical", "document_pair"},
    "templates_dir": None,
    "manifest": None,
    "output_dir": None,
    "seed": None,
    "sample_n": None,
}


class ConfigError(Exception):
    pass


def _interpolate(value):
    if isinstance(value, str):
        def sub(match: re.Match) -> str:
            name = match.group(1)
            if name not in os.environ:
                raise ConfigError(f"config references unset environment variable {name}")
            return os.environ[name]

        return _ENV_RE.sub(sub, value)
    if isinstance(value, list):
        return [_interpolate(v) for v in value]
    if isinstance(value, dict):
        return {k: _interpolate(v) for k, v in value.items()}
    return value


def load_config(path: str | Path) -> dict:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    for key, value in raw.items():
        if key not in _SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        allowed = _SCHEMA[key]
        if allowed is not None:
            if not isinstance(value, dict):
                raise ConfigError(f"config section {key!r} must be an object")
            for sub in value:
                if sub not in allowed:
                    raise ConfigError(f"unknown config key {key}.{sub}")
    return _interpolate(raw)


def _generation_params(cfg: dict) -> GenerationParams:
    g = cfg.get("gateway", {})
    models = g.get("models") or [{"model_id": "gpt-3.5-turbo", "token_budget": None}]
    return GenerationParams(
        model_id=models[0]["model_id"],
        temperature=g.get("temperature", 0.3),
        max_output_tokens=g.get("max_output_tokens"),
        request_timeout=g.get("request_timeout", 30.0),
    )


def build_session(cfg: dict, base_dir: Path) -> LlmSession:
    g = cfg.get("gateway", {})
    kind = g.get("backend", "http")
    cache = PromptCache(base_dir / g["cache_path"]) if g.get("cache_path") else None
    params = _generation_params(cfg)
    routes = tuple(
        ModelRoute(m["model_id"], m.get("token_budget")) for m in g.get("models", [])
    )
    if kind == "replay":
        script_path = g.get("replay_script")
        if not script_path:
            raise ConfigError("gateway.backend 'replay' needs gateway.replay_script")
        script = []
        with (base_dir / script_path).open(encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    record = json.loads(line)
                    script.append((record.get("matcher", "*"), record["text"]))
        backend = ReplayBackend(script)
    elif kind == "cache-only":
        if cache is None:
            raise ConfigError("gateway.backend 'cache-only' needs gateway.cache_path")

        class _CacheOnly:
            def generate(self, messages, params):
                raise ConfigError("cache miss in cache-only mode")

        backend = _CacheOnly()
    elif kind == "http":
        endpoint = g.get("endpoint")
        if not endpoint:
            raise ConfigError("gateway.backend 'http' needs gateway.endpoint")
        backend = HttpBackend(
            endpoint,
            api_key_env=g.get("api_key_env", "OPENAI_API_KEY"),
            max_retries=g.get("max_retries", 3),
        )
    else:
        raise ConfigError(f"unknown gateway.backend {kind!r}")
    return LlmSession(
        backend,
        params,
        cache=cache,
        routes=routes,
        count_cache_hits_as_calls=g.get("count_cache_hits_as_calls", False),
    )


def build_deps(cfg: dict, base_dir: Path) -> PipelineDeps:
    session = build_session(cfg, base_dir)
    catalog = TemplateCatalog(base_dir / cfg["templates_dir"] if cfg.get("templates_dir") else None)
    banks = cfg.get("banks", {})
    icl = IclResources()
    if banks.get("paragraph_meaning"):
        icl.meaning_bank = load_bank(base_dir / banks["paragraph_meaning"], "paragraph_meaning")
    if banks.get("sentence_structure"):
        icl.structure_bank = load_bank(base_dir / banks["sentence_structure"], "sentence_structure")
    if banks.get("lexical"):
        icl.lexical_bank = load_bank(base_dir / banks["lexical"], "lexical")
    if banks.get("document_pair"):
        record = json.loads((base_dir / banks["document_pair"]).read_text(encoding="utf-8"))
        icl.document_pair = ExamplePair(complex=record["complex"], simple=record["simple"])
    emb = cfg.get("embedding")
    if emb and emb.get("endpoint"):
        icl.provider = HttpEmbeddingProvider(
            emb["endpoint"],
            emb.get("model_id", "text-embedding-3-small"),
            emb.get("dimension", 1536),
            api_key_env=emb.get("api_key_env", "OPENAI_API_KEY"),
        )
    else:
        icl.provider = HashedNgramEmbedder()
    return PipelineDeps(session=session, catalog=catalog, icl=icl)


def pipeline_config(cfg: dict, method: str | None) -> PipelineConfig:
    p = cfg.get("pipeline", {})
    return PipelineConfig(
        method=method or p.get("method", "progds"),
        params=_generation_params(cfg),
        iterations=p.get("iterations", 1),
        use_icl=p.get("use_icl", False),
        k_examples=p.get("k_examples", 2),
        include_subheadings=p.get("include_subheadings", True),
        max_attempts=p.get("max_attempts", 5),
        parallelism=p.get("parallelism", 1),
        expansion_factor=p.get("expansion_factor", 3.0),
        min_lexical_tokens=p.get("min_lexical_tokens", 4),
    )


def _ledger_dict(ledger) -> dict:
    return {
        "call_count": ledger.call_count,
        "retry_count": ledger.retry_count,
        "cache_hits": ledger.cache_hits,
        "per_stage_counts": dict(sorted(ledger.per_stage_counts.items())),
    }


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_simplify(args) -> int:
    from .pipeline import digest  # local alias, used for input/output digests

    cfg = load_config(args.config)
    base_dir = Path(args.config).resolve().parent
    manifest_path = Path(args.manifest or (base_dir / cfg["manifest"] if cfg.get("manifest") else ""))
    if not manifest_path or not manifest_path.is_file():
        print(f"error: manifest not found: {manifest_path}", file=sys.stderr)
        return 1
    out_dir = Path(args.out_dir or (base_dir / cfg.get("output_dir", "out")))
    try:
        entries = corpus.load_manifest(manifest_path)
        corpus.validate_paths(entries)
        deps = build_deps(cfg, base_dir)
        run_cfg = pipeline_config(cfg, args.method)
        seed = cfg.get("seed", 0)
        if cfg.get("sample_n"):
            entries = corpus.sample_entries(entries, cfg["sample_n"], seed)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    out_dir.mkdir(parents=True, exist_ok=True)
    degraded: list[tuple[str, str]] = []
    doc_records = []
    started = time.perf_counter()
    try:
        with (out_dir / "trace.jsonl").open("w", encoding="utf-8") as trace_fh:
            for entry in entries:
                doc = dataclasses.replace(load_document(entry.source_path), id=entry.id)
                result = simplify_document(doc, run_cfg, deps)
                (out_dir / f"{entry.id}.txt").write_text(result.text + "\n", encoding="utf-8")
                for trace in result.traces:
                    record = {"doc_id": entry.id, **trace.to_json_dict()}
                    trace_fh.write(json.dumps(record, sort_keys=True) + "\n")
                    if trace.fallback_used:
                        degraded.append((entry.id, trace.stage))
                doc_records.append(
                    {
                        "id": entry.id,
                        "input_digest": digest(doc.body_text()),
                        "output_digest": digest(result.text),
                        "ledger": _ledger_dict(result.ledger),
                    }
                )
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    session_ledger = deps.session.ledger_snapshot()
    _write_json(
        out_dir / "run.json",
        {
            "config": cfg,
            "method": run_cfg.method,
            "seed": cfg.get("seed", 0),
            "sampler": corpus.SAMPLER_ALGORITHM,
            "template_checksums": deps.catalog.checksums(),
            "documents": doc_records,
            "ledger": _ledger_dict(session_ledger),
        },
    )
    if args.timing:
        _write_json(
            out_dir / "timing.json",
            {"wall_time_seconds": time.perf_counter() - started,
             "gateway_wall_time_seconds": session_ledger.wall_time},
        )
    for doc_id, stage in degraded:
        logger.warning("document %s degraded: %s stage used its fallback", doc_id, stage)
    print(f"simplified {len(doc_records)} document(s) -> {out_dir}")
    return 2 if degraded else 0


_HEADING_LINE_RE = re.compile(r"^## .*$\n?", re.M)


def strip_subheadings(text: str) -> str:
    return _HEADING_LINE_RE.sub("", text).strip()


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    base_dir = Path(args.config).resolve().parent if args.config else Path.cwd()
    try:
        entries = corpus.load_manifest(args.manifest)
    except corpus.ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    outputs_dir = Path(args.outputs_dir)
    judge_dir = Path(args.judge) if args.judge else None
    session = None
    if judge_dir is not None:
        try:
            session = build_session(cfg, base_dir)
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1

    sidecar: dict[str, float] = {}
    bart_path = outputs_dir / "bartscore.jsonl"
    if bart_path.is_file():
        with bart_path.open(encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    record = json.loads(line)
                    sidecar[record["doc_id"]] = record["score"]

    reports = []
    verdicts = []
    judge_failures = 0
    skipped = []
    for entry in entries:
        out_path = outputs_dir / f"{entry.id}.txt"
        if not out_path.is_file():
            skipped.append(entry.id)
            continue
        output_text = out_path.read_text(encoding="utf-8")
        if not args.score_subheadings:
            output_text = strip_subheadings(output_text)
        source_text = load_document(entry.source_path).body_text()
        references = [load_document(p).body_text() for p in entry.reference_paths]
        report = metrics.score_document(entry.id, source_text, output_text, references)
        row = report.to_json_dict()
        if entry.id in sidecar:
            row["bartscore"] = sidecar[entry.id]
        if judge_dir is not None:
            baseline_path = judge_dir / f"{entry.id}.txt"
            if baseline_path.is_file():
                try:
                    verdict = metrics.gpt_judge(
                        baseline_path.read_text(encoding="utf-8").strip(),
                        output_text,
                        session,
                    )
                    verdicts.append(verdict)
                    row["judge_winner"] = verdict.winner
                except metrics.JudgeFailure:
                    judge_failures += 1
                    row["judge_winner"] = "failure"
        reports.append(row)

    if not reports:
        print("error: no manifest entries have outputs to score", file=sys.stderr)
        return 1
    for doc_id in skipped:
        logger.warning("no output for document %s; skipped", doc_id)

    with (outputs_dir / "metrics.jsonl").open("w", encoding="utf-8") as fh:
        for row in reports:
            fh.write(json.dumps(row, sort_keys=True) + "\n")

    def mean(key: str) -> float | None:
        values = [r[key] for r in reports if r.get(key) is not None]
        return sum(values) / len(values) if values else None

    def fmt(value: float | None) -> str:
        return f"{value:.2f}" if value is not None else "-"

    gpt_column = metrics.win_rate(verdicts) if verdicts else None
    summary_rows = [
        ("docs", str(len(reports))),
        ("SA", fmt(mean("sari"))),
        ("DSA", fmt(mean("d_sari"))),
        ("BAR", fmt(mean("bartscore"))),
        ("FKG", fmt(mean("fkgl"))),
        ("GPT", fmt(gpt_column)),
    ]
    summary = "\t".join(name for name, _ in summary_rows) + "\n" + "\t".join(
        value for _, value in summary_rows
    ) + "\n"
    (outputs_dir / "summary.tsv").write_text(summary, encoding="utf-8")
    print(summary, end="")
    if judge_failures:
        logger.warning("%d judge comparison(s) failed and were excluded", judge_failures)
    return 0


def cmd_stats(args) -> int:
    try:
        entries = corpus.load_manifest(args.manifest)
    except corpus.ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    degraded = False
    groups: dict[str, list[corpus.ManifestEntry]] = {}
    for entry in entries:
        try:
            stats = doc_stats(load_document(entry.source_path))
        except OSError as exc:
            logger.warning("skipping %s: %s", entry.id, exc)
            degraded = True
            continue
        bucket = corpus.assign_bucket(entry, stats)
        groups.setdefault(bucket, []).append(entry)

    buckets = [b for b in (*corpus.BUCKETS, corpus.INELIGIBLE) if b in groups]
    stats_by_bucket = {b: corpus.corpus_statistics(groups[b]) for b in buckets}

    if args.json:
        payload = {
            b: {"docs": s.doc_count, **{name: value for name, value in s.rows()}}
            for b, s in stats_by_bucket.items()
        }
        print(json.dumps(payload, indent=2, sort_keys=True))
        return 2 if degraded else 0

    def fmt(value: float | None) -> str:
        return f"{value:.2f}" if value is not None else "-"

    lines = ["\t".join(["metric", *buckets])]
    lines.append("\t".join(["docs", *(str(stats_by_bucket[b].doc_count) for b in buckets)]))
    for row_index, (row_name, _) in enumerate(corpus.CorpusStats(0, 0, None, 0, None, 0, None).rows()):
        lines.append(
            "\t".join(
                [row_name, *(fmt(stats_by_bucket[b].rows()[row_index][1]) for b in buckets)]
            )
        )
    print("\n".join(lines))
    return 2 if degraded else 0


def cmd_cache(args) -> int:
    cache = PromptCache(args.path)
    if args.action == "inspect":
        records = cache.records()
        models: dict[str, int] = {}
        for record in records:
            models[record.get("model_id", "?")] = models.get(record.get("model_id", "?"), 0) + 1
        print(f"entries: {len(records)}")
        for model, count in sorted(models.items()):
            print(f"  {model}: {count}")
        return 0
    if args.action == "prune":
        cutoff = time.time() - args.keep_days * 86400.0
        kept = [r for r in cache.records() if r.get("timestamp", 0) >= cutoff]
        removed = len(cache) - len(kept)
        cache.rewrite(kept)
        print(f"pruned {removed} entr{'y' if removed == 1 else 'ies'}; {len(kept)} kept")
        return 0
    print(f"error: unknown cache action {args.action!r}", file=sys.stderr)
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="docsimp",
        description="Staged LLM document simplification and evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_simplify = sub.add_parser("simplify", help="simplify every manifest document")
    p_simplify.add_argument("--manifest", help="manifest JSONL (overrides config)")
    p_simplify.add_argument("--method", choices=["progds", "sumds", "p1", "p2", "ic"])
    p_simplify.add_argument("--config", required=True, help="run config JSON")
    p_simplify.add_argument("--out-dir", help="output directory (overrides config)")
    p_simplify.add_argument("--timing", action="store_true",
                            help="also write timing.json (non-deterministic)")
    p_simplify.set_defaults(func=cmd_simplify)

    p_eval = sub.add_parser("evaluate", help="score outputs against references")
    p_eval.add_argument("--manifest", required=True)
    p_eval.add_argument("--outputs-dir", required=True)
    p_eval.add_argument("--config", help="needed for --judge gateway settings")
    p_eval.add_argument("--judge", help="baseline outputs dir for pairwise judging")
    p_eval.add_argument("--score-subheadings", action="store_true",
                        help="keep ## lines in scored text (default strips them)")
    p_eval.set_defaults(func=cmd_evaluate)

    p_stats = sub.add_parser("stats", help="corpus shape statistics per bucket")
    p_stats.add_argument("--manifest", required=True)
    p_stats.add_argument("--json", action="store_true", help="emit JSON instead of TSV")
    p_stats.set_defaults(func=cmd_stats)

    p_cache = sub.add_parser("cache", help="inspect or prune a response cache")
    p_cache.add_argument("action", choices=["inspect", "prune"])
    p_cache.add_argument("--path", required=True)
    p_cache.add_argument("--keep-days", type=float, default=30.0)
    p_cache.set_defaults(func=cmd_cache)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
