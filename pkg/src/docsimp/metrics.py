"""Simplification metrics and the pairwise LLM judge.

SARI scores an output against the source and one or more references with
n-gram edit arithmetic over multisets (n = 1..4): F1 of added n-grams, F1 of
kept n-grams, and precision of deleted n-grams, averaged and scaled to
[0, 100]. Reference counts are fractional (count / number of references).
A component whose candidate and target sides are both empty scores 1; a
component with exactly one empty side scores 0 on the ratios touching it.

D-SARI here is a length-penalized document-level variant: the keep and add
components are multiplied by a token-count ratio and a sentence-count ratio
between the output and the (mean) reference; deletion is unpenalized.

Everything except the judge is pure and reentrant.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

from .gateway import LlmSession
from .prompts import TemplateCatalog, render
from .stage_filter import ValidationRejection, over_generate_filter
from .textcore import TokenStats, count_sentences, count_syllables, tokenize, word_tokens


class MetricError(Exception):
    pass


class JudgeFailure(MetricError):
    """The judge never produced a parseable verdict; excluded from win rates."""


@dataclass(frozen=True)
class ComponentScores:
    add_f1: float
    keep_f1: float
    del_precision: float


@dataclass(frozen=True)
class SariBreakdown:
    per_n: Mapping[int, ComponentScores]
    aggregate: float


def _sari_tokens(text: str) -> list[str]:
    return [t.lower() for t in tokenize(text)]


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _fractional_reference_counts(reference_tokens: list[list[str]], n: int) -> dict:
    total: Counter = Counter()
    for ref in reference_tokens:
        total.update(_ngram_counts(ref, n))
    n_refs = len(reference_tokens)
    return {g: c / n_refs for g, c in total.items()}


def _overlap(candidate: dict, target: dict) -> float:
    return sum(min(c, target.get(g, 0.0)) for g, c in candidate.items())


def _f1_component(candidate: dict, target: dict) -> float:
    cand_total = sum(candidate.values())
    target_total = sum(target.values())
    if cand_total == 0 and target_total == 0:
        return 1.0
    matched = _overlap(candidate, target)
    precision = matched / cand_total if cand_total > 0 else 0.0
    recall = matched / target_total if target_total > 0 else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _precision_component(candidate: dict, target: dict) -> float:
    cand_total = sum(candidate.values())
    target_total = sum(target.values())
    if cand_total == 0 and target_total == 0:
        return 1.0
    if cand_total == 0:
        return 0.0
    return _overlap(candidate, target) / cand_total


def _components_for_n(
    src: list[str], out: list[str], refs: list[list[str]], n: int
) -> ComponentScores:
    i_counts = _ngram_counts(src, n)
    o_counts = _ngram_counts(out, n)
    r_counts = _fractional_reference_counts(refs, n)
    grams = set(i_counts) | set(o_counts) | set(r_counts)

    add_candidate = {g: o_counts[g] - i_counts[g] for g in grams
                     if o_counts[g] - i_counts[g] > 0}
    add_target = {g: r_counts.get(g, 0.0) - i_counts[g] for g in grams
                  if r_counts.get(g, 0.0) - i_counts[g] > 0}
    keep_candidate = {g: min(i_counts[g], o_counts[g]) for g in grams
                      if min(i_counts[g], o_counts[g]) > 0}
    keep_target = {g: min(i_counts[g], r_counts.get(g, 0.0)) for g in grams
                   if min(i_counts[g], r_counts.get(g, 0.0)) > 0}
    del_candidate = {g: i_counts[g] - o_counts[g] for g in grams
                     if i_counts[g] - o_counts[g] > 0}
    del_target = {g: i_counts[g] - r_counts.get(g, 0.0) for g in grams
                  if i_counts[g] - r_counts.get(g, 0.0) > 0}

    return ComponentScores(
        add_f1=_f1_component(add_candidate, add_target),
        keep_f1=_f1_component(keep_candidate, keep_target),
        del_precision=_precision_component(del_candidate, del_target),
    )


def sari(source: str, output: str, references: Sequence[str]) -> SariBreakdown:
    """SARI breakdown over n = 1..4 with the both-empty=1 convention."""
    if not references:
        raise MetricError("sari requires at least one reference")
    src = _sari_tokens(source)
    out = _sari_tokens(output)
    refs = [_sari_tokens(r) for r in references]
    per_n = {n: _components_for_n(src, out, refs, n) for n in range(1, 5)}
    aggregate = 100.0 * sum(
        (c.add_f1 + c.keep_f1 + c.del_precision) / 3.0 for c in per_n.values()
    ) / 4.0
    return SariBreakdown(per_n=per_n, aggregate=aggregate)


def _length_ratio(a: float, b: float) -> float:
    if a == b:
        return 1.0
    return min(a, b) / max(a, b) if max(a, b) > 0 else 0.0


def d_sari(source: str, output: str, references: Sequence[str]) -> float:
    """Length-penalized aggregate in [0, 100]; see the module docstring."""
    if not references:
        raise MetricError("d_sari requires at least one reference")
    breakdown = sari(source, output, references)
    out_tokens = len(_sari_tokens(output))
    mean_ref_tokens = sum(len(_sari_tokens(r)) for r in references) / len(references)
    out_sents = count_sentences(output)
    mean_ref_sents = sum(count_sentences(r) for r in references) / len(references)
    penalty = _length_ratio(out_tokens, mean_ref_tokens) * _length_ratio(out_sents, mean_ref_sents)
    return 100.0 * sum(
        (c.add_f1 * penalty + c.keep_f1 * penalty + c.del_precision) / 3.0
        for c in breakdown.per_n.values()
    ) / 4.0


def fkgl(text: str) -> float:
    """Flesch-Kincaid grade level, unclamped.

    0.39 x (words / sentences) + 11.8 x (syllables / words) - 15.59, where
    words are alphabetic tokens only.
    """
    sentences = count_sentences(text)
    words = word_tokens(text)
    if sentences == 0 or not words:
        raise MetricError("fkgl requires at least one sentence and one word")
    syllables = sum(count_syllables(w) for w in words)
    return 0.39 * (len(words) / sentences) + 11.8 * (syllables / len(words)) - 15.59


@dataclass(frozen=True)
class JudgeVerdict:
    winner: str  # "document_1" | "document_2"
    reasoning: str
    raw: str


_VERDICT_RE = re.compile(r"Document\s*([12])\b")


def parse_judge_verdict(raw: str) -> JudgeVerdict:
    """Winner comes from the final nonempty line, which must name exactly
    one of Document 1 / Document 2."""
    lines = [line for line in raw.strip().splitlines() if line.strip()]
    if not lines:
        raise ValidationRejection("empty-after-strip")
    final = lines[-1]
    numbers = set(_VERDICT_RE.findall(final))
    if len(numbers) != 1:
        raise ValidationRejection("verdict-missing", f"final line: {final[:80]!r}")
    return JudgeVerdict(
        winner=f"document_{numbers.pop()}",
        reasoning="\n".join(lines[:-1]),
        raw=raw,
    )


def gpt_judge(
    baseline_output: str,
    candidate_output: str,
    session: LlmSession,
    catalog: TemplateCatalog | None = None,
    max_attempts: int = 5,
    swap_and_average: bool = False,
) -> JudgeVerdict:
    """Pairwise comparison: baseline as Document 1, candidate as Document 2.

    With ``swap_and_average`` the comparison also runs with positions
    swapped; disagreement counts as a baseline win (conservative).
    """
    if not baseline_output or not candidate_output:
        raise MetricError("both documents must be nonempty")
    catalog = catalog or TemplateCatalog()
    template = catalog.get("judge")

    def run(doc1: str, doc2: str) -> JudgeVerdict:
        bound = render(template, {"DOCUMENT_1": doc1, "DOCUMENT_2": doc2})
        verdict, log = over_generate_filter(
            lambda: session.complete(bound.messages, stage="judge").text,
            parse_judge_verdict,
            max_attempts,
            fallback=None,
        )
        if log.fallback_used:
            raise JudgeFailure(f"no parseable verdict after {max_attempts} attempts")
        return verdict

    forward = run(baseline_output, candidate_output)
    if not swap_and_average:
        return forward
    backward = run(candidate_output, baseline_output)
    flipped = "document_2" if backward.winner == "document_1" else "document_1"
    if forward.winner == flipped:
        return forward
    return JudgeVerdict(winner="document_1", reasoning=forward.reasoning, raw=forward.raw)


def win_rate(verdicts: Sequence[JudgeVerdict]) -> float:
    """Percentage of verdicts won by Document 2 (the candidate)."""
    if not verdicts:
        raise MetricError("win_rate requires at least one verdict")
    wins = sum(1 for v in verdicts if v.winner == "document_2")
    return 100.0 * wins / len(verdicts)


@dataclass(frozen=True)
class MetricReport:
    doc_id: str
    sari: SariBreakdown | None
    sari_joint: float | None
    d_sari: float | None
    fkgl: float
    token_stats_in: TokenStats
    token_stats_out: TokenStats

    def to_json_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "sari": self.sari.aggregate if self.sari else None,
            "sari_joint": self.sari_joint,
            "d_sari": self.d_sari,
            "fkgl": self.fkgl,
            "tokens_in": self.token_stats_in.token_count,
            "tokens_out": self.token_stats_out.token_count,
            "sentences_in": self.token_stats_in.sentence_count,
            "sentences_out": self.token_stats_out.sentence_count,
        }


def _mean_breakdown(parts: list[SariBreakdown]) -> SariBreakdown:
    per_n = {
        n: ComponentScores(
            add_f1=sum(p.per_n[n].add_f1 for p in parts) / len(parts),
            keep_f1=sum(p.per_n[n].keep_f1 for p in parts) / len(parts),
            del_precision=sum(p.per_n[n].del_precision for p in parts) / len(parts),
        )
        for n in range(1, 5)
    }
    return SariBreakdown(per_n=per_n, aggregate=sum(p.aggregate for p in parts) / len(parts))


def score_document(
    doc_id: str,
    source_text: str,
    output_text: str,
    references: Sequence[str],
) -> MetricReport:
    """Per-document report: mean-of-single-reference SARI/D-SARI (default
    reading), the joint multi-reference SARI aggregate, and FKGL of the
    output. Without references the edit metrics are absent."""
    from .textcore import text_stats  # local import avoids a cycle in docs builds

    if references:
        singles = [sari(source_text, output_text, [r]) for r in references]
        mean_sari = _mean_breakdown(singles)
        joint = sari(source_text, output_text, list(references)).aggregate
        d = sum(d_sari(source_text, output_text, [r]) for r in references) / len(references)
    else:
        mean_sari, joint, d = None, None, None
    return MetricReport(
        doc_id=doc_id,
        sari=mean_sari,
        sari_joint=joint,
        d_sari=d,
        fkgl=fkgl(output_text),
        token_stats_in=text_stats(source_text),
        token_stats_out=text_stats(output_text),
    )
