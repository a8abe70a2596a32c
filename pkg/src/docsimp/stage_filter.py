"""Structured-output parsing, validation, and the over-generate-then-filter loop.

Validators are pure functions from raw model text to a value; rejection is
signalled with :class:`ValidationRejection` carrying a stable reason code,
which the retry loop records in the attempt log. Nothing here judges the
*quality* of a simplification — only shape and sanity.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Callable, TypeVar

from .textcore import _load_asset_lines, tokenize

logger = logging.getLogger(__name__)

T = TypeVar("T")

UNIT_KINDS = ("paragraph", "sentence")

#: Versioned refusal phrase list; matched case-insensitively near the start
#: of a response.
REFUSAL_PHRASES: tuple[str, ...] = _load_asset_lines("refusal_phrases.txt")

_REFUSAL_WINDOW = 80
_LIST_MARKER_RE = re.compile(r"^\s*(?:[-*]\s+|\d+[.)]\s+)")
_MEMBER_LIST_RE = re.compile(r"^\s*\d+(?:\s*,\s*\d+)*\s*$")

_PREAMBLE_LABELS = (
    "the simplified paragraph:",
    "simplified paragraph:",
    "the simplified sentence:",
    "simplified sentence:",
    "the simplified text:",
    "simplified text:",
    "the simplified document:",
    "simplified document:",
    "summary:",
    "the organized content:",
)


class ValidationRejection(Exception):
    """A model response failed a validator; carries the reason code."""

    def __init__(self, reason: str, detail: str = "") -> None:
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.detail = detail


@dataclass(frozen=True)
class ValidationRule:
    """A named, pure, total check over response strings."""

    name: str
    description: str
    reason: str


#: Every rejection reason a validator in this module can emit, with the rule
#: behind it. Kept in one place so attempt logs stay auditable.
VALIDATION_RULES: tuple[ValidationRule, ...] = (
    ValidationRule("nonempty", "response text remains after stripping fences and labels", "empty-after-strip"),
    ValidationRule("no-refusal", "response does not open with a listed refusal phrase", "refusal-detected"),
    ValidationRule("bounded-length", "output tokens within the expansion factor of the source", "length-exploded"),
    ValidationRule("plan-line-grammar", "every line is '<subheading>: <int>[, <int>]*'", "malformed-line"),
    ValidationRule("plan-unique-members", "no unit index appears in two topics", "duplicate-member"),
    ValidationRule("plan-index-range", "every unit index lies within 1..n_units", "index-range"),
    ValidationRule("plan-nonempty", "at least one topic line parses", "empty-plan"),
    ValidationRule("verdict-final-line", "final line names exactly one of Document 1 / Document 2", "verdict-missing"),
)


class PlanParseError(ValidationRejection):
    """Discourse-plan text did not match the expected grammar."""


@dataclass(frozen=True)
class Topic:
    subheading: str
    members: tuple[int, ...]


@dataclass(frozen=True)
class DiscoursePlan:
    """Ordered topics over 1-based unit indices; unlisted units are deleted."""

    topics: tuple[Topic, ...]
    deleted: frozenset[int]
    unit_kind: str
    n_units: int

    def __post_init__(self) -> None:
        if self.unit_kind not in UNIT_KINDS:
            raise ValueError(f"unit_kind must be one of {UNIT_KINDS}")
        if not self.topics:
            raise ValueError("a plan needs at least one topic")
        members: list[int] = []
        for topic in self.topics:
            if not topic.subheading:
                raise ValueError("subheadings must be nonempty")
            if not topic.members:
                raise ValueError("every topic needs at least one member")
            members.extend(topic.members)
        if len(set(members)) != len(members):
            raise ValueError("unit index assigned to two topics")
        full = set(range(1, self.n_units + 1))
        if not set(members) <= full:
            raise ValueError("member index out of range")
        if set(members) | set(self.deleted) != full or set(members) & set(self.deleted):
            raise ValueError("deleted must be the exact complement of all members")

    def surviving(self) -> list[int]:
        """Member indices in plan order."""
        return [m for topic in self.topics for m in topic.members]


def passthrough_plan(n_units: int, unit_kind: str) -> DiscoursePlan:
    """Fallback plan: one topic per unit, nothing deleted."""
    return DiscoursePlan(
        topics=tuple(Topic(f"Section {i}", (i,)) for i in range(1, n_units + 1)),
        deleted=frozenset(),
        unit_kind=unit_kind,
        n_units=n_units,
    )


def parse_discourse_plan(raw: str, n_units: int, unit_kind: str) -> DiscoursePlan:
    """Parse ``<subheading>: <int>[, <int>]*`` lines into a plan.

    Leading list markers ("1.", "-", "*") are stripped; blank lines are
    skipped; indices not listed anywhere end up deleted. Reason codes:
    malformed-line, duplicate-member, index-range, empty-plan.
    """
    if n_units < 1:
        raise ValueError("n_units must be >= 1")
    topics: list[Topic] = []
    seen: set[int] = set()
    for lineno, line in enumerate(raw.splitlines(), start=1):
        stripped = _LIST_MARKER_RE.sub("", line).strip()
        if not stripped:
            continue
        head, sep, tail = stripped.rpartition(":")
        if not sep or not head.strip() or not _MEMBER_LIST_RE.match(tail):
            raise PlanParseError("malformed-line", f"line {lineno}: {line.strip()!r}")
        members = tuple(int(piece) for piece in tail.split(","))
        for m in members:
            if m in seen or members.count(m) > 1:
                raise PlanParseError("duplicate-member", f"unit {m} listed twice")
            if not 1 <= m <= n_units:
                raise PlanParseError("index-range", f"unit {m} outside 1..{n_units}")
        seen.update(members)
        topics.append(Topic(head.strip(), members))
    if not topics:
        raise PlanParseError("empty-plan", "no topic lines found")
    deleted = frozenset(range(1, n_units + 1)) - seen
    return DiscoursePlan(tuple(topics), deleted, unit_kind, n_units)


def serialize_plan(plan: DiscoursePlan) -> str:
    """Render a plan in the exact grammar parse_discourse_plan accepts."""
    return "\n".join(
        f"{topic.subheading}: {', '.join(str(m) for m in topic.members)}"
        for topic in plan.topics
    )


def _strip_fences(text: str) -> str:
    stripped = text.strip()
    if stripped.startswith("```"):
        stripped = re.sub(r"^```[a-zA-Z]*\n?", "", stripped)
        stripped = re.sub(r"\n?```$", "", stripped)
    return stripped.strip()


def looks_like_refusal(text: str) -> bool:
    head = text[:_REFUSAL_WINDOW].lower()
    return any(phrase.lower() in head for phrase in REFUSAL_PHRASES)


def extract_simplified_text(raw: str, stage: str, source_len_tokens: int,
                            expansion_factor: float = 3.0) -> str:
    """Clean a free-text stage output and reject degenerate responses.

    Strips markdown fences and known preamble labels, then rejects with
    reason codes empty-after-strip, refusal-detected, or length-exploded
    (output longer than ``expansion_factor`` x the source token count).
    """
    if stage not in ("summary", "paragraph", "sentence"):
        raise ValueError(f"unknown stage {stage!r}")
    text = _strip_fences(raw)
    lowered = text.lower()
    for label in _PREAMBLE_LABELS:
        if lowered.startswith(label):
            text = text[len(label):].strip()
            lowered = text.lower()
    if not text:
        raise ValidationRejection("empty-after-strip")
    if looks_like_refusal(text):
        raise ValidationRejection("refusal-detected", text[:60])
    out_tokens = len(tokenize(text))
    if source_len_tokens > 0 and out_tokens > expansion_factor * source_len_tokens:
        raise ValidationRejection(
            "length-exploded", f"{out_tokens} tokens > {expansion_factor} x {source_len_tokens}"
        )
    return text


@dataclass(frozen=True)
class Attempt:
    raw_text: str
    verdict: str  # "accepted" | "rejected"
    reason: str | None = None


@dataclass(frozen=True)
class AttemptLog:
    attempts: tuple[Attempt, ...]
    fallback_used: bool

    def __post_init__(self) -> None:
        accepted = [i for i, a in enumerate(self.attempts) if a.verdict == "accepted"]
        if len(accepted) > 1 or (accepted and accepted[0] != len(self.attempts) - 1):
            raise ValueError("at most one accepted attempt, and it must be last")


def over_generate_filter(
    generate: Callable[[], str],
    validate: Callable[[str], T],
    max_attempts: int,
    fallback: T,
) -> tuple[T, AttemptLog]:
    """Sample until a validator accepts, up to ``max_attempts`` tries.

    Returns the first accepted value, or ``fallback`` (with
    ``fallback_used=True``) after exhaustion. Gateway/transport errors are
    not absorbed — only :class:`ValidationRejection` counts as a bad sample.
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    attempts: list[Attempt] = []
    for _ in range(max_attempts):
        raw = generate()
        try:
            value = validate(raw)
        except ValidationRejection as rejection:
            attempts.append(Attempt(raw, "rejected", rejection.reason))
            continue
        attempts.append(Attempt(raw, "accepted"))
        return value, AttemptLog(tuple(attempts), fallback_used=False)
    logger.warning(
        "all %d attempts rejected (%s); using fallback",
        max_attempts,
        ", ".join(a.reason or "?" for a in attempts),
    )
    return fallback, AttemptLog(tuple(attempts), fallback_used=True)
