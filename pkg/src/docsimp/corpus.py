"""Dataset manifests, length bucketing, deterministic sampling, corpus stats."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .textcore import TokenStats, load_document, doc_stats

BUCKETS = ("wiki_auto", "newsela_a", "newsela_b")

#: Marker for wiki-style entries outside the eligible token range.
INELIGIBLE = "ineligible"

#: Sampling algorithm identifier recorded in run manifests.
SAMPLER_ALGORITHM = "pcg64-permutation"

WIKI_MIN_TOKENS = 300
WIKI_MAX_TOKENS = 500
NEWSELA_SPLIT_TOKENS = 1000  # >= goes to newsela_b so the buckets partition


class ManifestError(Exception):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    source_path: Path
    reference_paths: tuple[Path, ...] = ()
    bucket: str | None = None


def load_manifest(path: str | Path) -> list[ManifestEntry]:
    """Load a JSONL manifest of {id, source_path, reference_paths?, bucket?}."""
    entries: list[ManifestEntry] = []
    seen_ids: set[str] = set()
    base = Path(path).parent
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            if not isinstance(record, dict) or "id" not in record or "source_path" not in record:
                raise ManifestError(f"{path}:{lineno}: entry needs 'id' and 'source_path'")
            entry_id = str(record["id"])
            if entry_id in seen_ids:
                raise ManifestError(f"{path}:{lineno}: duplicate id {entry_id!r}")
            seen_ids.add(entry_id)
            bucket = record.get("bucket")
            if bucket is not None and bucket not in BUCKETS:
                raise ManifestError(f"{path}:{lineno}: unknown bucket {bucket!r}")
            entries.append(
                ManifestEntry(
                    id=entry_id,
                    source_path=base / record["source_path"],
                    reference_paths=tuple(base / p for p in record.get("reference_paths", [])),
                    bucket=bucket,
                )
            )
    return entries


def validate_paths(entries: Sequence[ManifestEntry]) -> None:
    """Startup check: every referenced file must exist and be readable."""
    for entry in entries:
        for p in (entry.source_path, *entry.reference_paths):
            if not Path(p).is_file():
                raise ManifestError(f"entry {entry.id!r}: unreadable path {p}")


def assign_bucket(entry: ManifestEntry, stats: TokenStats) -> str:
    """Length bucket for an entry given its source-document stats.

    Entries declared ``wiki_auto`` are eligible only within
    [300, 500] tokens (outside that range they are marked ineligible, not
    errors). Everything else splits at 1000 tokens; exactly 1000 lands in
    the long bucket so the two buckets partition.
    """
    if entry.bucket == "wiki_auto":
        if WIKI_MIN_TOKENS <= stats.token_count <= WIKI_MAX_TOKENS:
            return "wiki_auto"
        return INELIGIBLE
    return "newsela_a" if stats.token_count < NEWSELA_SPLIT_TOKENS else "newsela_b"


def sample_entries(entries: Sequence[ManifestEntry], n: int, seed: int) -> list[ManifestEntry]:
    """Deterministic sample without replacement (PCG64 permutation prefix)."""
    if n > len(entries):
        raise ValueError(f"cannot sample {n} from {len(entries)} entries")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(entries))[:n]
    return [entries[i] for i in order]


@dataclass(frozen=True)
class CorpusStats:
    """Mean shape statistics for sources (X) and references (Y).

    Reference numbers average over each document's references first, then
    over documents, so multi-reference entries weigh the same as
    single-reference ones.
    """

    doc_count: int
    paragraphs_x: float
    paragraphs_y: float | None
    sentences_x: float
    sentences_y: float | None
    tokens_x: float
    tokens_y: float | None

    def rows(self) -> list[tuple[str, float | None]]:
        return [
            ("Paragraphs-X", self.paragraphs_x),
            ("Paragraphs-Y", self.paragraphs_y),
            ("Sentences-X", self.sentences_x),
            ("Sentences-Y", self.sentences_y),
            ("Tokens-X", self.tokens_x),
            ("Tokens-Y", self.tokens_y),
        ]


def corpus_statistics(entries: Sequence[ManifestEntry]) -> CorpusStats:
    if not entries:
        return CorpusStats(0, 0.0, None, 0.0, None, 0.0, None)
    x_stats = [doc_stats(load_document(e.source_path)) for e in entries]
    y_means: list[tuple[float, float, float]] = []
    for entry in entries:
        if not entry.reference_paths:
            continue
        refs = [doc_stats(load_document(p)) for p in entry.reference_paths]
        y_means.append(
            (
                sum(r.paragraph_count for r in refs) / len(refs),
                sum(r.sentence_count for r in refs) / len(refs),
                sum(r.token_count for r in refs) / len(refs),
            )
        )
    n = len(entries)
    has_refs = bool(y_means)
    return CorpusStats(
        doc_count=n,
        paragraphs_x=sum(s.paragraph_count for s in x_stats) / n,
        paragraphs_y=sum(m[0] for m in y_means) / len(y_means) if has_refs else None,
        sentences_x=sum(s.sentence_count for s in x_stats) / n,
        sentences_y=sum(m[1] for m in y_means) / len(y_means) if has_refs else None,
        tokens_x=sum(s.token_count for s in x_stats) / n,
        tokens_y=sum(m[2] for m in y_means) / len(y_means) if has_refs else None,
    )
