"""Example banks and in-context example selection.

Three selection strategies, matching how the simplification stages use
examples: embedding similarity for paragraph meaning, a four-factor
sentence-structure similarity, and part-of-speech round-robin for lexical
substitution diversity. A hashed character-n-gram embedder provides a fully
offline, deterministic fallback when no remote embedding endpoint is
configured; reasoning chains for bare pairs are generated through the
gateway and validated like any other model output.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np
import requests

from . import wordlists
from .gateway import LlmSession
from .prompts import TemplateCatalog, render
from .stage_filter import AttemptLog, ValidationRejection, looks_like_refusal, over_generate_filter
from .textcore import split_sentences, tokenize

BANK_KINDS = ("paragraph_meaning", "sentence_structure", "lexical")
COARSE_POS = ("noun", "verb", "adjective", "adverb", "other")
_HISTOGRAM_CLASSES = (
    "noun", "verb", "adjective", "adverb",
    "pronoun", "determiner", "preposition", "conjunction", "punct",
)


class IclError(Exception):
    pass


class CotGenerationError(IclError):
    pass


@dataclass(frozen=True)
class ExamplePair:
    complex: str
    simple: str
    reasoning: str | None = None
    source_tag: str = ""
    pos: str | None = None

    def __post_init__(self) -> None:
        if not self.complex or not self.simple:
            raise ValueError("complex and simple sides must be nonempty")
        if self.reasoning is not None and not self.reasoning:
            raise ValueError("reasoning, when present, must be nonempty")

    def block(self) -> str:
        """Preformatted prompt block (reasoning line included when present)."""
        lines = [f"Complex sentence: {self.complex}"]
        if self.reasoning:
            lines.append(f"Reasoning: {self.reasoning}")
        lines.append(f"Simple: {self.simple}")
        return "\n".join(lines)


@dataclass
class ExampleBank:
    kind: str
    entries: tuple[ExamplePair, ...]
    embedding_index: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind not in BANK_KINDS:
            raise ValueError(f"kind must be one of {BANK_KINDS}")
        if self.embedding_index is not None and len(self.embedding_index) != len(self.entries):
            raise ValueError("index length must equal entries length")

    def __len__(self) -> int:
        return len(self.entries)


def load_bank(path: str | Path, kind: str) -> ExampleBank:
    """Load a JSONL bank of {complex, simple, reasoning?, pos?} records."""
    entries = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                entries.append(
                    ExamplePair(
                        complex=record["complex"],
                        simple=record["simple"],
                        reasoning=record.get("reasoning"),
                        pos=record.get("pos"),
                        source_tag=record.get("source_tag", Path(path).stem),
                    )
                )
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise IclError(f"{path}:{lineno}: bad bank record ({exc})") from exc
    return ExampleBank(kind=kind, entries=tuple(entries))


class EmbeddingProvider(Protocol):
    dimension: int

    def embed(self, text: str) -> np.ndarray: ...


class HashedNgramEmbedder:
    """Offline embedding fallback: L2-normalized TF-IDF of character 3-5 grams
    hashed into a fixed-size vocabulary. Deterministic across runs and
    platforms (md5-based hashing, not the salted builtin hash)."""

    def __init__(self, dimension: int = 1024, n_min: int = 3, n_max: int = 5) -> None:
        self.dimension = dimension
        self.n_min = n_min
        self.n_max = n_max
        self._idf: np.ndarray | None = None

    @staticmethod
    def _bucket(gram: str, dimension: int) -> int:
        digest = hashlib.md5(gram.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big") % dimension

    def _counts(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dimension, dtype=np.float64)
        lowered = text.lower()
        for n in range(self.n_min, self.n_max + 1):
            for i in range(len(lowered) - n + 1):
                vec[self._bucket(lowered[i : i + n], self.dimension)] += 1.0
        return vec

    def fit(self, corpus: Sequence[str]) -> "HashedNgramEmbedder":
        """Learn smoothed IDF weights from a corpus (optional)."""
        df = np.zeros(self.dimension, dtype=np.float64)
        for text in corpus:
            df += (self._counts(text) > 0).astype(np.float64)
        self._idf = np.log((1.0 + len(corpus)) / (1.0 + df)) + 1.0
        return self

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise IclError("cannot embed empty text")
        vec = self._counts(text)
        if self._idf is not None:
            vec = vec * self._idf
        norm = np.linalg.norm(vec)
        return vec / norm if norm > 0 else vec


class HttpEmbeddingProvider:
    """OpenAI-style ``/embeddings`` endpoint client."""

    def __init__(
        self,
        endpoint: str,
        model_id: str,
        dimension: int,
        api_key_env: str = "OPENAI_API_KEY",
        timeout: float = 30.0,
    ) -> None:
        self.endpoint = endpoint.rstrip("/")
        self.model_id = model_id
        self.dimension = dimension
        self.api_key_env = api_key_env
        self.timeout = timeout

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise IclError("cannot embed empty text")
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            resp = requests.post(
                f"{self.endpoint}/embeddings",
                json={"model": self.model_id, "input": [text]},
                headers=headers,
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise IclError(f"embedding provider failure: {exc}") from exc
        if resp.status_code != 200:
            raise IclError(f"embedding provider error {resp.status_code}: {resp.text[:200]}")
        return np.asarray(resp.json()["data"][0]["embedding"], dtype=np.float64)


def embed(text: str, provider: EmbeddingProvider) -> np.ndarray:
    if not text:
        raise IclError("cannot embed empty text")
    return provider.embed(text)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def ensure_index(bank: ExampleBank, provider: EmbeddingProvider) -> ExampleBank:
    """Attach complex-side embeddings to the bank (no-op when present)."""
    if bank.embedding_index is not None:
        return bank
    vectors = np.stack([embed(e.complex, provider) for e in bank.entries])
    bank.embedding_index = vectors
    return bank


def select_by_embedding(
    query: str, bank: ExampleBank, k: int, provider: EmbeddingProvider
) -> list[ExamplePair]:
    """Top-k entries by cosine similarity of complex-side embeddings.

    Ties break by ascending bank position; fewer than k entries means the
    whole bank comes back, similarity-sorted.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not bank.entries:
        raise IclError("empty example bank")
    ensure_index(bank, provider)
    q = embed(query, provider)
    sims = [cosine(q, vec) for vec in bank.embedding_index]
    order = sorted(range(len(bank.entries)), key=lambda i: (-sims[i], i))
    return [bank.entries[i] for i in order[: min(k, len(bank.entries))]]


def coarse_pos_tag(token: str) -> str:
    """Deterministic, total coarse tagger: closed-class lists, then suffix
    rules (-ly adverb; -tion/-ness noun; -ize/-ed verb; -ous/-ful/-able
    adjective), defaulting to noun. Non-alphabetic tokens tag punct."""
    if not token.isalpha():
        return "punct"
    w = token.lower()
    if w in wordlists.PRONOUNS:
        return "pronoun"
    if w in wordlists.DETERMINERS:
        return "determiner"
    if w in wordlists.PREPOSITIONS:
        return "preposition"
    if w in wordlists.CONJUNCTIONS:
        return "conjunction"
    if w in wordlists.VERBS:
        return "verb"
    if w.endswith("ly"):
        return "adverb"
    if w.endswith(("tion", "ness")):
        return "noun"
    if w.endswith(("ize", "ise", "ed")):
        return "verb"
    if w.endswith(("ous", "ful", "able", "ible")):
        return "adjective"
    return "noun"


@dataclass(frozen=True)
class StructureFeatures:
    length: int
    clause_count: int
    pos_histogram: dict[str, float]
    function_word_ratio: float


def structure_features(sentence: str) -> StructureFeatures:
    tokens = tokenize(sentence)
    length = len(tokens)
    clauses = 1
    for i, tok in enumerate(tokens[:-1]):
        if tok in (",", ";") and tokens[i + 1].lower() in wordlists.CLAUSE_CONNECTORS:
            clauses += 1
    histogram = {cls: 0.0 for cls in _HISTOGRAM_CLASSES}
    function_count = 0
    for tok in tokens:
        histogram[coarse_pos_tag(tok)] += 1.0
        if tok.lower() in wordlists.FUNCTION_WORDS:
            function_count += 1
    if length:
        for cls in histogram:
            histogram[cls] /= length
    ratio = function_count / length if length else 0.0
    return StructureFeatures(length, clauses, histogram, ratio)


def _ratio_score(a: float, b: float) -> float:
    if a == b:
        return 1.0
    return min(a, b) / max(a, b) if max(a, b) > 0 else 1.0


def _sentence_similarity(fa: StructureFeatures, fb: StructureFeatures) -> float:
    length_score = _ratio_score(fa.length, fb.length)
    clause_score = _ratio_score(fa.clause_count, fb.clause_count)
    l1 = sum(abs(fa.pos_histogram[c] - fb.pos_histogram[c]) for c in _HISTOGRAM_CLASSES)
    pos_score = 1.0 - 0.5 * l1
    function_score = 1.0 - abs(fa.function_word_ratio - fb.function_word_ratio)
    return (length_score + clause_score + pos_score + function_score) / 4.0


def structure_similarity(a: str, b: str) -> float:
    """Structural closeness of two texts in [0, 1].

    Per aligned sentence pair (positional alignment, truncated to the
    shorter side), the score is the mean of four equally weighted factors:
    token-length ratio, clause-count ratio, POS-histogram overlap
    (1 - half L1), and function-word-ratio closeness. The text value is the
    mean over aligned pairs.
    """
    if not a or not b:
        raise ValueError("structure_similarity requires nonempty texts")
    sents_a = split_sentences(a)
    sents_b = split_sentences(b)
    pairs = list(zip(sents_a, sents_b))
    if not pairs:
        raise ValueError("no sentences to compare")
    scores = [
        _sentence_similarity(structure_features(sa.text), structure_features(sb.text))
        for sa, sb in pairs
    ]
    return sum(scores) / len(scores)


def select_by_structure(query: str, bank: ExampleBank, k: int) -> list[ExamplePair]:
    """Top-k entries by structure similarity of the complex side."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not bank.entries:
        raise IclError("empty example bank")
    sims = [structure_similarity(query, e.complex) for e in bank.entries]
    order = sorted(range(len(bank.entries)), key=lambda i: (-sims[i], i))
    return [bank.entries[i] for i in order[: min(k, len(bank.entries))]]


def _coarse_class(pos: str | None) -> str:
    return pos if pos in COARSE_POS else "other"


def select_lexical_examples(bank: ExampleBank, k: int) -> list[ExamplePair]:
    """Round-robin over POS classes (noun, verb, adjective, adverb, other)
    so the selected substitutions cover diverse parts of speech."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not bank.entries:
        raise IclError("empty example bank")
    queues: dict[str, list[ExamplePair]] = {cls: [] for cls in COARSE_POS}
    for pair in bank.entries:
        queues[_coarse_class(pair.pos)].append(pair)
    chosen: list[ExamplePair] = []
    while len(chosen) < k and any(queues.values()):
        for cls in COARSE_POS:
            if queues[cls] and len(chosen) < k:
                chosen.append(queues[cls].pop(0))
    return chosen


def generate_cot(
    pair: ExamplePair,
    session: LlmSession,
    catalog: TemplateCatalog | None = None,
    max_attempts: int = 5,
) -> tuple[ExamplePair, AttemptLog]:
    """Fill in the reasoning chain for a bare complex-simple pair."""
    if pair.reasoning is not None:
        raise ValueError("pair already has reasoning")
    catalog = catalog or TemplateCatalog()
    template = catalog.get("cot_generator")
    bound = render(
        template,
        {"COMPLEX_SIMPLE_PAIR": f"Complex sentence: {pair.complex}\nSimple: {pair.simple}"},
    )

    def validate(raw: str) -> str:
        text = raw.strip()
        if text.lower().startswith("reasoning:"):
            text = text[len("reasoning:"):].strip()
        if not text:
            raise ValidationRejection("empty-after-strip")
        if looks_like_refusal(text):
            raise ValidationRejection("refusal-detected")
        return text

    reasoning, log = over_generate_filter(
        lambda: session.complete(bound.messages, stage="cot").text,
        validate,
        max_attempts,
        fallback=None,
    )
    if log.fallback_used:
        raise CotGenerationError(f"no valid reasoning after {max_attempts} attempts")
    return replace(pair, reasoning=reasoning), log
