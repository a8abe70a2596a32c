"""Canonical text model: tokenization, segmentation, syllables, statistics.

Everything here is a pure function over strings, so the module is safe to
use from any number of threads. The tokenizer and sentence splitter are
rule-based and deterministic; the rules are documented on each function so
corpus statistics computed with them are reproducible.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable


def _load_asset_lines(name: str) -> tuple[str, ...]:
    text = resources.files("docsimp.assets").joinpath(name).read_text(encoding="utf-8")
    return tuple(
        line.strip()
        for line in text.splitlines()
        if line.strip() and not line.lstrip().startswith("#")
    )


#: Fixed abbreviation list (versioned asset). Entries are kept whole by the
#: tokenizer and never terminate a sentence.
ABBREVIATIONS: frozenset[str] = frozenset(_load_asset_lines("abbreviations.txt"))

_VOWELS = frozenset("aeiouy")

# Longest-first so "U.S.A." wins over "U.S.".
_ABBREV_ALT = "|".join(re.escape(a) for a in sorted(ABBREVIATIONS, key=len, reverse=True))
_TOKEN_RE = re.compile(
    r"(?<![A-Za-z0-9])(?:%s)(?![A-Za-z0-9])|[A-Za-z0-9]+|\S" % _ABBREV_ALT
)
_TERMINATOR_RE = re.compile(r"[.!?]+")
_TITLE_RE = re.compile(r"^#(?!#)\s*(.+)$")


def normalize_whitespace(text: str) -> str:
    """Collapse all whitespace runs (including newlines) to single spaces."""
    return " ".join(text.split())


def tokenize(text: str) -> list[str]:
    """Split text into word and punctuation tokens.

    Rules: listed abbreviations are kept whole (internal periods and all);
    otherwise maximal alphanumeric runs are words and every other
    non-whitespace character is its own single-character token. Empty input
    yields an empty list.
    """
    return _TOKEN_RE.findall(normalize_whitespace(text))


def _ends_with_abbreviation(prefix: str) -> bool:
    chunk = prefix.rsplit(None, 1)[-1] if prefix.split() else prefix
    if chunk in ABBREVIATIONS:
        return True
    # Tolerate a leading quote or bracket on the chunk.
    stripped = chunk.lstrip("\"'([{«“‘")
    return stripped in ABBREVIATIONS


@dataclass(frozen=True)
class Sentence:
    """One sentence of a paragraph; ``index`` is 1-based."""

    index: int
    text: str


def split_sentences(text: str) -> list[Sentence]:
    """Split a single paragraph into sentences.

    A boundary is a run of sentence-final punctuation (. ! ?) followed by
    whitespace and an uppercase letter or digit, unless the preceding chunk
    is a listed abbreviation. Text without any terminator comes back as one
    sentence. Joining the results with single spaces reproduces the
    whitespace-normalized input.
    """
    normalized = normalize_whitespace(text)
    if not normalized:
        return []
    boundaries: list[int] = []
    for match in _TERMINATOR_RE.finditer(normalized):
        end = match.end()
        if end >= len(normalized):
            continue
        rest = normalized[end:]
        if not rest[0].isspace():
            continue
        following = rest.lstrip()
        if not following or not (following[0].isupper() or following[0].isdigit()):
            continue
        if match.group() == "." and _ends_with_abbreviation(normalized[:end]):
            continue
        boundaries.append(end)
    pieces: list[str] = []
    start = 0
    for cut in boundaries:
        pieces.append(normalized[start:cut].strip())
        start = cut
    pieces.append(normalized[start:].strip())
    return [Sentence(i, piece) for i, piece in enumerate(pieces, start=1) if piece]


def count_syllables(word: str) -> int:
    """Estimate syllables of a single alphabetic word (always ≥ 1).

    Counts vowel groups (a, e, i, o, u, y) after stripping a silent suffix:
    a final "e", or a final "ed" not preceded by t or d.
    """
    if not word or not word.isalpha():
        raise ValueError(f"count_syllables expects an alphabetic word, got {word!r}")
    w = word.lower()
    if w.endswith("ed") and len(w) > 2 and w[-3] not in "td":
        w = w[:-2]
    elif w.endswith("e"):
        w = w[:-1]
    groups = 0
    previous_vowel = False
    for ch in w:
        is_vowel = ch in _VOWELS
        if is_vowel and not previous_vowel:
            groups += 1
        previous_vowel = is_vowel
    return max(groups, 1)


@dataclass(frozen=True)
class Paragraph:
    """One paragraph; ``text`` is whitespace-normalized, ``index`` 1-based."""

    index: int
    text: str

    @cached_property
    def sentences(self) -> tuple[Sentence, ...]:
        return tuple(split_sentences(self.text))


@dataclass(frozen=True)
class Document:
    id: str
    title: str | None
    paragraphs: tuple[Paragraph, ...]

    def body_text(self) -> str:
        """Paragraph texts joined by blank lines (title excluded)."""
        return "\n\n".join(p.text for p in self.paragraphs)


@dataclass(frozen=True)
class TokenStats:
    paragraph_count: int
    sentence_count: int
    token_count: int
    word_count: int
    syllable_count: int

    def __post_init__(self) -> None:
        counts = (
            self.paragraph_count,
            self.sentence_count,
            self.token_count,
            self.word_count,
            self.syllable_count,
        )
        if any(c < 0 for c in counts):
            raise ValueError("counts must be nonnegative")
        if self.word_count > self.token_count:
            raise ValueError("word_count cannot exceed token_count")


def make_document(doc_id: str, paragraph_texts: Iterable[str], title: str | None = None) -> Document:
    """Build a Document from raw paragraph texts, normalizing and indexing."""
    paragraphs = []
    for raw in paragraph_texts:
        text = normalize_whitespace(raw)
        if text:
            paragraphs.append(Paragraph(len(paragraphs) + 1, text))
    return Document(id=doc_id, title=title, paragraphs=tuple(paragraphs))


def parse_document(text: str, doc_id: str = "doc") -> Document:
    """Parse the plain-text document format.

    Paragraphs are separated by one or more blank lines; single newlines are
    soft wraps. An optional first line ``# <title>`` (single hash) names the
    document.
    """
    lines = text.splitlines()
    title = None
    if lines:
        m = _TITLE_RE.match(lines[0].strip())
        if m:
            title = m.group(1).strip()
            lines = lines[1:]
    blocks: list[list[str]] = [[]]
    for line in lines:
        if line.strip():
            blocks[-1].append(line)
        elif blocks[-1]:
            blocks.append([])
    return make_document(doc_id, (" ".join(b) for b in blocks if b), title=title)


def load_document(path: str | Path) -> Document:
    p = Path(path)
    return parse_document(p.read_text(encoding="utf-8"), doc_id=p.stem)


def word_tokens(text: str) -> list[str]:
    """Alphabetic tokens only (the 'words' of readability formulas)."""
    return [t for t in tokenize(text) if t.isalpha()]


def count_sentences(text: str) -> int:
    """Sentence count of possibly multi-paragraph text (blank-line aware)."""
    doc = parse_document(text)
    return sum(len(p.sentences) for p in doc.paragraphs)


def doc_stats(doc: Document) -> TokenStats:
    """Aggregate token/word/sentence/syllable counts over a document."""
    tokens = 0
    words = 0
    sentences = 0
    syllables = 0
    for para in doc.paragraphs:
        toks = tokenize(para.text)
        tokens += len(toks)
        alpha = [t for t in toks if t.isalpha()]
        words += len(alpha)
        syllables += sum(count_syllables(t) for t in alpha)
        sentences += len(para.sentences)
    return TokenStats(
        paragraph_count=len(doc.paragraphs),
        sentence_count=sentences,
        token_count=tokens,
        word_count=words,
        syllable_count=syllables,
    )


def text_stats(text: str) -> TokenStats:
    """doc_stats over text in the plain document format."""
    return doc_stats(parse_document(text))
