"""Document simplification pipelines.

Three families share one runner surface:

* ``progds`` — staged rewriting: a discourse pass groups numbered units
  into subheaded topics (dropping irrelevant ones), a topic pass simplifies
  each surviving paragraph under its subheading, and a lexical pass rewrites
  complex wording sentence by sentence. Optionally iterated, feeding each
  round's output back in as the next source.
* ``sumds`` — summary-guided rewriting: one summary call, then each
  paragraph is simplified under the summary's guidance.
* ``p1`` / ``p2`` / ``ic`` — single-call direct prompting baselines.

Single-paragraph documents switch to sentence units: the discourse pass
numbers sentences instead of paragraphs and each topic's sentences are
treated as one paragraph downstream.

Every model response passes through the over-generate-then-filter loop with
per-stage validators and graceful fallbacks; every unit leaves a trace
record, and the session ledger delta gives the per-document call accounting.
"""

from __future__ import annotations

import hashlib
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence, TypeVar

from .gateway import CallLedger, GenerationParams, LlmSession
from .icl import (
    EmbeddingProvider,
    ExampleBank,
    ExamplePair,
    select_by_embedding,
    select_by_structure,
    select_lexical_examples,
)
from .prompts import TemplateCatalog, render
from .stage_filter import (
    AttemptLog,
    DiscoursePlan,
    Topic,
    ValidationRejection,
    extract_simplified_text,
    over_generate_filter,
    parse_discourse_plan,
    passthrough_plan,
)
from .textcore import Document, normalize_whitespace, parse_document, split_sentences, tokenize

METHODS = ("progds", "sumds", "p1", "p2", "ic")

R = TypeVar("R")

#: Hand-written demonstration for the discourse stage (the only stage whose
#: examples are not drawn from a bank).
DISCOURSE_EXAMPLE_BLOCK = (
    "Source document:\n"
    "1. The town was founded in 1850 by a group of settlers.\n"
    "2. Its first mill opened two years later and employed most families.\n"
    "3. A list of unrelated trivia about the local weather.\n"
    "The organized content:\n"
    "Founding of the town: 1, 2"
)


class PipelineError(Exception):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    method: str
    params: GenerationParams
    iterations: int = 1
    use_icl: bool = False
    k_examples: int = 2
    include_subheadings: bool = True
    max_attempts: int = 5
    parallelism: int = 1
    expansion_factor: float = 3.0
    min_lexical_tokens: int = 4

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.iterations < 1 or self.parallelism < 1 or self.max_attempts < 1:
            raise ValueError("iterations, parallelism, and max_attempts must be >= 1")
        if self.k_examples < 1:
            raise ValueError("k_examples must be >= 1")


@dataclass
class IclResources:
    """Example banks and the embedding provider used when ICL is on."""

    meaning_bank: ExampleBank | None = None
    structure_bank: ExampleBank | None = None
    lexical_bank: ExampleBank | None = None
    provider: EmbeddingProvider | None = None
    document_pair: ExamplePair | None = None  # required by the ic method
    discourse_example: str = DISCOURSE_EXAMPLE_BLOCK


@dataclass
class PipelineDeps:
    session: LlmSession
    catalog: TemplateCatalog = field(default_factory=TemplateCatalog)
    icl: IclResources = field(default_factory=IclResources)


@dataclass(frozen=True)
class StageTrace:
    stage: str
    iteration: int
    unit: str
    prompt_digest: str
    output_digest: str
    attempts: AttemptLog
    fallback_used: bool
    skipped: bool = False

    def to_json_dict(self) -> dict:
        return {
            "stage": self.stage,
            "iteration": self.iteration,
            "unit": self.unit,
            "prompt_digest": self.prompt_digest,
            "output_digest": self.output_digest,
            "fallback_used": self.fallback_used,
            "skipped": self.skipped,
            "attempts": [
                {"verdict": a.verdict, "reason": a.reason} for a in self.attempts.attempts
            ],
        }


@dataclass(frozen=True)
class SimplifiedDocument:
    text: str
    document: Document
    plan_history: tuple[DiscoursePlan, ...]
    traces: tuple[StageTrace, ...]
    ledger: CallLedger

    @property
    def fallbacks(self) -> list[StageTrace]:
        return [t for t in self.traces if t.fallback_used]


def digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def number_units(texts: Sequence[str]) -> str:
    """Render units as the numbered single-line-per-unit prompt body."""
    return "\n".join(f"{i}. {t}" for i, t in enumerate(texts, start=1))


def reassemble(
    plan: DiscoursePlan, unit_texts: Mapping[int, str], include_subheadings: bool
) -> str:
    """Join surviving units in plan order, optionally under ## subheadings."""
    chunks: list[str] = []
    for topic in plan.topics:
        if include_subheadings:
            chunks.append(f"## {topic.subheading}")
        for member in topic.members:
            if member not in unit_texts:
                raise PipelineError(f"no text for unit {member}")
            chunks.append(unit_texts[member])
    return "\n\n".join(chunks)


_STAGE_ORDER = {"discourse": 0, "summary": 0, "direct": 0, "topic": 1, "paragraph": 1, "lexical": 2}
_UNIT_KEY_RE = re.compile(r"^[pt](\d+)(?:\.s(\d+))?$")


def _trace_sort_key(trace: StageTrace) -> tuple:
    m = _UNIT_KEY_RE.match(trace.unit)
    unit_key = (int(m.group(1)), int(m.group(2) or 0)) if m else (0, 0)
    return (trace.iteration, _STAGE_ORDER.get(trace.stage, 9), unit_key)


def _ledger_delta(before: CallLedger, after: CallLedger) -> CallLedger:
    per_stage = {
        stage: after.per_stage_counts.get(stage, 0) - before.per_stage_counts.get(stage, 0)
        for stage in after.per_stage_counts
        if after.per_stage_counts.get(stage, 0) - before.per_stage_counts.get(stage, 0)
    }
    return CallLedger(
        call_count=after.call_count - before.call_count,
        retry_count=after.retry_count - before.retry_count,
        cache_hits=after.cache_hits - before.cache_hits,
        wall_time=after.wall_time - before.wall_time,
        per_stage_counts=per_stage,
    )


def _run_tasks(
    tasks: Sequence[tuple[object, Callable[[], R]]], parallelism: int
) -> dict[object, R]:
    if parallelism <= 1 or len(tasks) <= 1:
        return {key: fn() for key, fn in tasks}
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        futures = [(key, pool.submit(fn)) for key, fn in tasks]
        return {key: future.result() for key, future in futures}


class _Run:
    """Shared plumbing for one document run (traces, filtering, ICL lookups)."""

    def __init__(self, cfg: PipelineConfig, deps: PipelineDeps) -> None:
        self.cfg = cfg
        self.deps = deps
        self.traces: list[StageTrace] = []

    def filtered_call(
        self,
        stage: str,
        iteration: int,
        unit: str,
        messages,
        validate: Callable[[str], R],
        fallback: R,
    ) -> R:
        session = self.deps.session
        value, log = over_generate_filter(
            lambda: session.complete(messages, stage=stage, params=self.cfg.params).text,
            validate,
            self.cfg.max_attempts,
            fallback,
        )
        self.traces.append(
            StageTrace(
                stage=stage,
                iteration=iteration,
                unit=unit,
                prompt_digest=digest("\n".join(m.content for m in messages)),
                output_digest=digest(str(value)),
                attempts=log,
                fallback_used=log.fallback_used,
            )
        )
        return value

    def record_skip(self, stage: str, iteration: int, unit: str, text: str) -> None:
        self.traces.append(
            StageTrace(
                stage=stage,
                iteration=iteration,
                unit=unit,
                prompt_digest="",
                output_digest=digest(text),
                attempts=AttemptLog((), fallback_used=False),
                fallback_used=False,
                skipped=True,
            )
        )

    # -- ICL example assembly ------------------------------------------------

    def meaning_blocks(self, query: str) -> list[str]:
        icl = self.deps.icl
        if not (self.cfg.use_icl and icl.meaning_bank and icl.provider and icl.meaning_bank.entries):
            return []
        pairs = select_by_embedding(query, icl.meaning_bank, self.cfg.k_examples, icl.provider)
        return [p.block() for p in pairs]

    def structure_blocks(self, query: str) -> list[str]:
        icl = self.deps.icl
        if not (self.cfg.use_icl and icl.structure_bank and icl.structure_bank.entries):
            return []
        pairs = select_by_structure(query, icl.structure_bank, self.cfg.k_examples)
        return [p.block() for p in pairs]

    def lexical_blocks(self) -> list[str]:
        icl = self.deps.icl
        if not (self.cfg.use_icl and icl.lexical_bank and icl.lexical_bank.entries):
            return []
        pairs = select_lexical_examples(icl.lexical_bank, self.cfg.k_examples)
        return [p.block() for p in pairs]

    def discourse_blocks(self) -> list[str]:
        if self.cfg.use_icl and self.deps.icl.discourse_example:
            return [self.deps.icl.discourse_example]
        return []


def _clean_or_source(raw: str, stage: str, source: str, expansion_factor: float) -> str:
    try:
        return extract_simplified_text(raw, stage, len(tokenize(source)), expansion_factor)
    except ValidationRejection:
        stripped = raw.strip()
        return stripped if stripped else source


def _progds_iteration(
    doc: Document, cfg: PipelineConfig, run: _Run, iteration: int
) -> tuple[str, str, DiscoursePlan]:
    """One staged pass; returns (body_text, rendered_text, plan)."""
    deps = run.deps
    if len(doc.paragraphs) == 0:
        raise PipelineError("cannot simplify an empty document")
    sentence_mode = len(doc.paragraphs) == 1
    if sentence_mode:
        units = [s.text for s in doc.paragraphs[0].sentences]
        template_name = "discourse_single_paragraph"
        unit_kind = "sentence"
    else:
        units = [p.text for p in doc.paragraphs]
        template_name = "discourse"
        unit_kind = "paragraph"
    n_units = len(units)

    discourse_prompt = render(
        deps.catalog.get(template_name),
        {"SOURCE_DOCUMENT": number_units(units)},
        examples=run.discourse_blocks(),
    )
    plan = run.filtered_call(
        stage="discourse",
        iteration=iteration,
        unit="doc",
        messages=discourse_prompt.messages,
        validate=lambda raw: parse_discourse_plan(raw, n_units, unit_kind),
        fallback=passthrough_plan(n_units, unit_kind),
    )

    # Topic stage: per surviving paragraph; in sentence mode each topic's
    # member sentences form one pseudo-paragraph.
    topic_template = deps.catalog.get("topic")
    if sentence_mode:
        topic_inputs = [
            (t_index, topic.subheading, " ".join(units[m - 1] for m in topic.members))
            for t_index, topic in enumerate(plan.topics, start=1)
        ]
    else:
        topic_inputs = [
            (member, topic.subheading, units[member - 1])
            for topic in plan.topics
            for member in topic.members
        ]

    def topic_task(key: int, subheading: str, text: str) -> Callable[[], str]:
        def call() -> str:
            prompt = render(
                topic_template,
                {"SUBHEADING": subheading, "PARAGRAPH": text},
                examples=[run.meaning_blocks(text), run.structure_blocks(text)],
            )
            raw = run.filtered_call(
                stage="topic",
                iteration=iteration,
                unit=f"p{key}",
                messages=prompt.messages,
                validate=lambda r: extract_simplified_text(
                    r, "paragraph", len(tokenize(text)), cfg.expansion_factor
                ),
                fallback=text,
            )
            return normalize_whitespace(raw)

        return call

    topic_out = _run_tasks(
        [(key, topic_task(key, sub, text)) for key, sub, text in topic_inputs],
        cfg.parallelism,
    )

    # Lexical stage: sentence-by-sentence over the topic-stage output.
    lexical_template = deps.catalog.get("lexical")

    def lexical_task(para_key: int, sent_index: int, sentence: str) -> Callable[[], str]:
        def call() -> str:
            if len(tokenize(sentence)) < cfg.min_lexical_tokens:
                run.record_skip("lexical", iteration, f"p{para_key}.s{sent_index}", sentence)
                return sentence
            prompt = render(
                lexical_template,
                {"SENTENCE": sentence},
                examples=[run.lexical_blocks()],
            )
            raw = run.filtered_call(
                stage="lexical",
                iteration=iteration,
                unit=f"p{para_key}.s{sent_index}",
                messages=prompt.messages,
                validate=lambda r: extract_simplified_text(
                    r, "sentence", len(tokenize(sentence)), cfg.expansion_factor
                ),
                fallback=sentence,
            )
            return normalize_whitespace(raw)

        return call

    lexical_tasks = []
    sentence_lists: dict[int, list[int]] = {}
    for para_key, text in topic_out.items():
        sents = split_sentences(text)
        sentence_lists[para_key] = list(range(1, len(sents) + 1))
        for s in sents:
            lexical_tasks.append(((para_key, s.index), lexical_task(para_key, s.index, s.text)))
    lexical_out = _run_tasks(lexical_tasks, cfg.parallelism)

    final_units = {
        para_key: " ".join(lexical_out[(para_key, i)] for i in indices)
        for para_key, indices in sentence_lists.items()
    }

    if sentence_mode:
        assembly_plan = DiscoursePlan(
            topics=tuple(
                Topic(topic.subheading, (t_index,))
                for t_index, topic in enumerate(plan.topics, start=1)
            ),
            deleted=frozenset(),
            unit_kind="sentence",
            n_units=len(plan.topics),
        )
    else:
        assembly_plan = plan
    body = reassemble(assembly_plan, final_units, include_subheadings=False)
    rendered = reassemble(assembly_plan, final_units, cfg.include_subheadings)
    return body, rendered, plan


def run_progds(doc: Document, cfg: PipelineConfig, deps: PipelineDeps) -> SimplifiedDocument:
    """Staged simplification, iterated ``cfg.iterations`` times."""
    if cfg.method != "progds":
        raise ValueError("run_progds requires method 'progds'")
    run = _Run(cfg, deps)
    before = deps.session.ledger_snapshot()
    plans: list[DiscoursePlan] = []
    current = doc
    rendered = doc.body_text()
    for iteration in range(1, cfg.iterations + 1):
        body, rendered, plan = _progds_iteration(current, cfg, run, iteration)
        plans.append(plan)
        current = parse_document(body, doc_id=doc.id)
    return SimplifiedDocument(
        text=rendered,
        document=current,
        plan_history=tuple(plans),
        traces=tuple(sorted(run.traces, key=_trace_sort_key)),
        ledger=_ledger_delta(before, deps.session.ledger_snapshot()),
    )


def _sumds_iteration(doc: Document, cfg: PipelineConfig, run: _Run, iteration: int) -> str:
    deps = run.deps
    if len(doc.paragraphs) == 0:
        raise PipelineError("cannot simplify an empty document")
    source_text = doc.body_text()
    summary_prompt = render(
        deps.catalog.get("summarizer"), {"SOURCE_DOCUMENT": source_text}
    )  # summary generation stays zero-shot
    summary = run.filtered_call(
        stage="summary",
        iteration=iteration,
        unit="doc",
        messages=summary_prompt.messages,
        validate=lambda raw: extract_simplified_text(
            raw, "summary", len(tokenize(source_text)), cfg.expansion_factor
        ),
        fallback=normalize_whitespace(source_text),
    )

    template = deps.catalog.get("paragraph_simplifier")
    if len(doc.paragraphs) > 1:
        units = [(p.index, p.text) for p in doc.paragraphs]
    else:
        units = [(s.index, s.text) for s in doc.paragraphs[0].sentences]

    def task(key: int, text: str) -> Callable[[], str]:
        def call() -> str:
            prompt = render(
                template,
                {"SUMMARY": summary, "PARAGRAPH": text},
                examples=[run.meaning_blocks(text)],
            )
            raw = run.filtered_call(
                stage="paragraph",
                iteration=iteration,
                unit=f"p{key}",
                messages=prompt.messages,
                validate=lambda r: extract_simplified_text(
                    r, "paragraph", len(tokenize(text)), cfg.expansion_factor
                ),
                fallback=text,
            )
            return normalize_whitespace(raw)

        return call

    outputs = _run_tasks([(key, task(key, text)) for key, text in units], cfg.parallelism)
    joiner = "\n\n" if len(doc.paragraphs) > 1 else " "
    return joiner.join(outputs[key] for key, _ in units)


def run_sumds(doc: Document, cfg: PipelineConfig, deps: PipelineDeps) -> SimplifiedDocument:
    """Summary-guided simplification, iterated ``cfg.iterations`` times."""
    if cfg.method != "sumds":
        raise ValueError("run_sumds requires method 'sumds'")
    run = _Run(cfg, deps)
    before = deps.session.ledger_snapshot()
    current = doc
    text = doc.body_text()
    for iteration in range(1, cfg.iterations + 1):
        text = _sumds_iteration(current, cfg, run, iteration)
        current = parse_document(text, doc_id=doc.id)
    return SimplifiedDocument(
        text=text,
        document=current,
        plan_history=(),
        traces=tuple(sorted(run.traces, key=_trace_sort_key)),
        ledger=_ledger_delta(before, deps.session.ledger_snapshot()),
    )


def format_document_pair(pair: ExamplePair) -> str:
    return f"Complex document:\n{pair.complex}\n\nSimple document:\n{pair.simple}"


def run_direct(doc: Document, cfg: PipelineConfig, deps: PipelineDeps) -> SimplifiedDocument:
    """One-call direct prompting (p1, p2, or ic)."""
    if cfg.method not in ("p1", "p2", "ic"):
        raise ValueError("run_direct requires method p1, p2, or ic")
    raw_text = doc.body_text()
    if not raw_text:
        raise PipelineError("cannot simplify an empty document")
    bindings = {"RAW_TEXT": raw_text}
    if cfg.method == "ic":
        if deps.icl.document_pair is None:
            raise PipelineError("the ic method needs a complex-simple document pair example")
        bindings["EXAMPLE_PAIR"] = format_document_pair(deps.icl.document_pair)
    prompt = render(deps.catalog.get(cfg.method), bindings)
    before = deps.session.ledger_snapshot()
    response = deps.session.complete(prompt.messages, stage="direct", params=cfg.params)
    text = _clean_or_source(response.text, "paragraph", raw_text, float("inf"))
    trace = StageTrace(
        stage="direct",
        iteration=1,
        unit="doc",
        prompt_digest=digest("\n".join(m.content for m in prompt.messages)),
        output_digest=digest(text),
        attempts=AttemptLog((), fallback_used=False),
        fallback_used=False,
    )
    return SimplifiedDocument(
        text=text,
        document=parse_document(text, doc_id=doc.id),
        plan_history=(),
        traces=(trace,),
        ledger=_ledger_delta(before, deps.session.ledger_snapshot()),
    )


def simplify_document(doc: Document, cfg: PipelineConfig, deps: PipelineDeps) -> SimplifiedDocument:
    if cfg.method == "progds":
        return run_progds(doc, cfg, deps)
    if cfg.method == "sumds":
        return run_sumds(doc, cfg, deps)
    return run_direct(doc, cfg, deps)
