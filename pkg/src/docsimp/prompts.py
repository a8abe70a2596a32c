"""Versioned prompt-template catalog with placeholder binding.

Templates live as text assets: the system text, a ``===USER===`` separator
line, then the user text. Placeholders are ``[UPPER_SNAKE]`` names; the
``[Examples]`` line is a special slot filled (or dropped) at render time so
the same template serves zero-shot and few-shot prompting.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from .gateway import ChatMessage

TEMPLATE_NAMES = (
    "summarizer",
    "paragraph_simplifier",
    "discourse",
    "discourse_single_paragraph",
    "topic",
    "lexical",
    "cot_generator",
    "judge",
    "p1",
    "p2",
    "ic",
)

_SEPARATOR = "===USER==="
_PLACEHOLDER_RE = re.compile(r"\[([A-Z][A-Z0-9_]*)\]")
EXAMPLES_SLOT = "[Examples]"


class PromptError(Exception):
    pass


class UnknownTemplateError(PromptError):
    pass


class BindingError(PromptError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    system_text: str
    user_text: str
    required_placeholders: frozenset[str]
    checksum: str

    @property
    def example_slots(self) -> int:
        return self.user_text.count(EXAMPLES_SLOT)


@dataclass(frozen=True)
class RenderedPrompt:
    messages: tuple[ChatMessage, ...]
    template_name: str
    bindings: Mapping[str, str]

    def text(self) -> str:
        return "\n\n".join(m.content for m in self.messages)


def parse_template_text(name: str, raw: str) -> PromptTemplate:
    if f"\n{_SEPARATOR}\n" not in raw:
        raise PromptError(f"template {name!r} is missing the {_SEPARATOR} separator line")
    system_text, user_text = raw.split(f"\n{_SEPARATOR}\n", 1)
    system_text = system_text.strip("\n")
    user_text = user_text.strip("\n")
    placeholders = frozenset(
        _PLACEHOLDER_RE.findall(system_text) + _PLACEHOLDER_RE.findall(user_text)
    )
    for line in user_text.splitlines():
        if EXAMPLES_SLOT in line and line.strip() != EXAMPLES_SLOT:
            raise PromptError(f"template {name!r}: {EXAMPLES_SLOT} must be alone on its line")
    return PromptTemplate(
        name=name,
        system_text=system_text,
        user_text=user_text,
        required_placeholders=placeholders,
        checksum=hashlib.sha256(raw.encode("utf-8")).hexdigest(),
    )


@lru_cache(maxsize=None)
def load_builtin(name: str) -> PromptTemplate:
    """Return the bit-exact builtin template asset for ``name``."""
    if name not in TEMPLATE_NAMES:
        raise UnknownTemplateError(f"unknown template {name!r}; known: {', '.join(TEMPLATE_NAMES)}")
    raw = resources.files("docsimp.assets.templates").joinpath(f"{name}.txt").read_text("utf-8")
    return parse_template_text(name, raw)


def template_checksums() -> dict[str, str]:
    return {name: load_builtin(name).checksum for name in TEMPLATE_NAMES}


class TemplateCatalog:
    """Builtin templates, optionally overridden from a directory of files."""

    def __init__(self, override_dir: str | Path | None = None) -> None:
        self.override_dir = Path(override_dir) if override_dir else None

    def get(self, name: str) -> PromptTemplate:
        if self.override_dir is not None:
            candidate = self.override_dir / f"{name}.txt"
            if candidate.exists():
                return parse_template_text(name, candidate.read_text(encoding="utf-8"))
        return load_builtin(name)

    def checksums(self) -> dict[str, str]:
        return {name: self.get(name).checksum for name in TEMPLATE_NAMES}


def export_templates(directory: str | Path) -> list[Path]:
    """Write every builtin template into ``directory`` (override seed)."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name in TEMPLATE_NAMES:
        raw = resources.files("docsimp.assets.templates").joinpath(f"{name}.txt").read_text("utf-8")
        target = out / f"{name}.txt"
        target.write_text(raw, encoding="utf-8")
        written.append(target)
    return written


def _normalize_example_groups(
    examples: Sequence[str] | Sequence[Sequence[str]] | None,
) -> list[list[str]]:
    if examples is None:
        return []
    items = list(examples)
    if not items:
        return []
    if all(isinstance(item, str) for item in items):
        return [list(items)]  # one flat group fills the first slot
    return [list(group) for group in items]


def _fill_example_slots(user_text: str, groups: list[list[str]], slots: int) -> str:
    lines = user_text.splitlines()
    filled: list[str] = []
    slot_index = 0
    for line in lines:
        if line.strip() == EXAMPLES_SLOT:
            block = "\n\n".join(groups[slot_index]) if slot_index < len(groups) else ""
            slot_index += 1
            if block:
                filled.append(block)
            # empty block: drop the slot line entirely
        else:
            filled.append(line)
    return "\n".join(filled)


def render(
    template: PromptTemplate,
    bindings: Mapping[str, str],
    examples: Sequence[str] | Sequence[Sequence[str]] | None = None,
) -> RenderedPrompt:
    """Bind placeholders and assemble the system/user message pair.

    ``examples`` may be a flat list of preformatted blocks (fills the first
    ``[Examples]`` slot) or a list of per-slot groups. Omitted slots render
    to nothing, collapsing away cleanly for zero-shot use.
    """
    missing = template.required_placeholders - set(bindings)
    if missing:
        raise BindingError(f"missing binding(s): {', '.join(sorted(missing))}")
    extra = set(bindings) - template.required_placeholders
    if extra:
        raise BindingError(f"unexpected binding(s): {', '.join(sorted(extra))}")
    groups = _normalize_example_groups(examples)
    slots = template.example_slots
    if len(groups) > slots:
        raise BindingError(f"template {template.name!r} has {slots} example slot(s), got {len(groups)} group(s)")

    user_text = _fill_example_slots(template.user_text, groups, slots)
    system_text = template.system_text
    for name, value in bindings.items():
        token = f"[{name}]"
        user_text = user_text.replace(token, value)
        system_text = system_text.replace(token, value)
    for name in template.required_placeholders:
        token = f"[{name}]"
        if token in user_text or token in system_text:
            raise PromptError(f"unresolved placeholder {token} after rendering")
    return RenderedPrompt(
        messages=(ChatMessage("system", system_text), ChatMessage("user", user_text)),
        template_name=template.name,
        bindings=dict(bindings),
    )
