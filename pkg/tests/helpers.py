"""Shared test backends and document builders for pipeline tests.

The echo backend answers every stage prompt by parroting the unit being
simplified (and a pass-through plan for the discourse stage), which makes
pipeline output predictable enough to assert exact identities and call
counts without any network.
"""

from __future__ import annotations

import random
import re
from typing import Callable, Sequence

from docsimp.gateway import ChatMessage, FunctionBackend, GenerationParams
from docsimp.stage_filter import DiscoursePlan, Topic
from docsimp.textcore import Document, make_document

PARAMS = GenerationParams(model_id="replay-model", temperature=0.3)

_DISCOURSE_RE = re.compile(r"Source document:\n(.*)\nThe organized content:", re.S)
_TOPIC_RE = re.compile(r"Paragraph to be simplified: (.*)\nThe simplified paragraph:", re.S)
_SUMDS_PARA_RE = re.compile(r"Paragraph to be simplified: (.*)\nSimplified paragraph:", re.S)
_LEXICAL_RE = re.compile(r"Sentence to be simplified:\n(.*)\nThe simplified sentence:", re.S)
_SUMMARY_RE = re.compile(r"Source document: (.*)\nSummary:", re.S)
_UNIT_LINE_RE = re.compile(r"^(\d+)\. ", re.M)


def passthrough_plan_text(n_units: int, sentence_mode: bool = False) -> str:
    """Identity plan: one topic per paragraph, or (in sentence mode) one
    topic holding every sentence so the single source paragraph survives
    as a single paragraph."""
    if sentence_mode:
        return "Section 1: " + ", ".join(str(i) for i in range(1, n_units + 1))
    return "\n".join(f"Section {i}: {i}" for i in range(1, n_units + 1))


def echo_response(
    messages: Sequence[ChatMessage],
    plan_for_units: Callable[..., str] = passthrough_plan_text,
    transform: Callable[[str], str] = lambda s: s,
) -> str:
    """Scripted answer for any pipeline prompt: echo (or transform) the unit."""
    user = messages[-1].content
    m = _DISCOURSE_RE.search(user)
    if m:
        n_units = len(_UNIT_LINE_RE.findall(m.group(1)))
        sentence_mode = "Each sentence in the article is numbered" in messages[0].content
        try:
            return plan_for_units(n_units, sentence_mode)
        except TypeError:
            return plan_for_units(n_units)
    m = _TOPIC_RE.search(user)
    if m:
        return transform(m.group(1))
    m = _LEXICAL_RE.search(user)
    if m:
        return transform(m.group(1))
    m = _SUMDS_PARA_RE.search(user)
    if m:
        return transform(m.group(1))
    if _SUMMARY_RE.search(user):
        return "Echo summary."
    raise AssertionError(f"unrecognized prompt:\n{user[:200]}")


def echo_backend(
    plan_for_units: Callable[[int], str] = passthrough_plan_text,
    transform: Callable[[str], str] = lambda s: s,
) -> FunctionBackend:
    return FunctionBackend(lambda messages, params: echo_response(messages, plan_for_units, transform))


def recording_backend(inner) -> tuple[FunctionBackend, list[str]]:
    """Wrap any backend, capturing every rendered prompt."""
    seen: list[str] = []

    def fn(messages, params):
        seen.append("\n\n".join(m.content for m in messages))
        return inner.generate(messages, params).text

    return FunctionBackend(fn), seen


def random_plan(rng: random.Random, n_units: int | None = None,
                unit_kind: str = "paragraph") -> DiscoursePlan:
    """Random valid plan: shuffled kept subset grouped into topics."""
    n = n_units or rng.randint(1, 12)
    indices = list(range(1, n + 1))
    rng.shuffle(indices)
    kept_count = rng.randint(1, n)
    kept, dropped = indices[:kept_count], indices[kept_count:]
    topics = []
    pos = 0
    while pos < len(kept):
        size = rng.randint(1, min(3, len(kept) - pos))
        words = rng.choices(["History", "Early", "Modern", "Era", "Life", "Work"], k=2)
        topics.append(Topic(" ".join(words), tuple(kept[pos : pos + size])))
        pos += size
    return DiscoursePlan(tuple(topics), frozenset(dropped), unit_kind, n)


NOUNS = ["garden", "station", "window", "market", "harbor", "village", "engine", "museum"]


def make_doc(doc_id: str, sentence_counts: Sequence[int]) -> Document:
    """One paragraph per entry, each with that many >=4-token sentences."""
    paragraphs = []
    unit = 0
    for count in sentence_counts:
        sentences = []
        for _ in range(count):
            noun = NOUNS[unit % len(NOUNS)]
            sentences.append(f"The {noun} item number {unit} stands here.")
            unit += 1
        paragraphs.append(" ".join(sentences))
    return make_document(doc_id, paragraphs)
