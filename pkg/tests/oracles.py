"""Independent brute-force oracles used to freeze expected test values.

Everything in this module is deliberately naive — explicit n-gram lists,
dict arithmetic, positional loops — and shares no code with the library
implementations it checks (other than the tokenizer, which is not part of
any dual-routed computation).
"""

from __future__ import annotations


def ngram_list(tokens: list[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def count_grams(grams: list[tuple[str, ...]]) -> dict[tuple[str, ...], float]:
    counts: dict[tuple[str, ...], float] = {}
    for g in grams:
        counts[g] = counts.get(g, 0.0) + 1.0
    return counts


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _ratio(numer: float, denom_candidate: float, denom_target: float) -> tuple[float, float]:
    """(precision, recall) with the empty-side conventions."""
    precision = numer / denom_candidate if denom_candidate > 0 else 0.0
    recall = numer / denom_target if denom_target > 0 else 0.0
    return precision, recall


def sari_components_oracle(
    source_tokens: list[str],
    output_tokens: list[str],
    reference_token_lists: list[list[str]],
    n: int,
) -> tuple[float, float, float]:
    """(add_f1, keep_f1, del_precision) for one n-gram order, brute force."""
    i_counts = count_grams(ngram_list(source_tokens, n))
    o_counts = count_grams(ngram_list(output_tokens, n))
    r_counts: dict[tuple[str, ...], float] = {}
    for ref in reference_token_lists:
        for g, c in count_grams(ngram_list(ref, n)).items():
            r_counts[g] = r_counts.get(g, 0.0) + c
    n_refs = float(len(reference_token_lists))
    for g in list(r_counts):
        r_counts[g] = r_counts[g] / n_refs

    every_gram = set(i_counts) | set(o_counts) | set(r_counts)

    add_cand = 0.0
    add_target = 0.0
    add_match = 0.0
    keep_cand = 0.0
    keep_target = 0.0
    keep_match = 0.0
    del_cand = 0.0
    del_target = 0.0
    del_match = 0.0
    for g in sorted(every_gram):
        i = i_counts.get(g, 0.0)
        o = o_counts.get(g, 0.0)
        r = r_counts.get(g, 0.0)

        a_c = max(o - i, 0.0)
        a_t = max(r - i, 0.0)
        add_cand += a_c
        add_target += a_t
        add_match += min(a_c, a_t)

        k_c = min(i, o)
        k_t = min(i, r)
        keep_cand += k_c
        keep_target += k_t
        keep_match += min(k_c, k_t)

        d_c = max(i - o, 0.0)
        d_t = max(i - r, 0.0)
        del_cand += d_c
        del_target += d_t
        del_match += min(d_c, d_t)

    if add_cand == 0.0 and add_target == 0.0:
        add_f1 = 1.0
    else:
        add_f1 = _f1(*_ratio(add_match, add_cand, add_target))

    if keep_cand == 0.0 and keep_target == 0.0:
        keep_f1 = 1.0
    else:
        keep_f1 = _f1(*_ratio(keep_match, keep_cand, keep_target))

    if del_cand == 0.0 and del_target == 0.0:
        del_precision = 1.0
    elif del_cand == 0.0:
        del_precision = 0.0
    else:
        del_precision = del_match / del_cand

    return add_f1, keep_f1, del_precision


def sari_oracle(
    source_tokens: list[str],
    output_tokens: list[str],
    reference_token_lists: list[list[str]],
) -> float:
    """Aggregate score in [0, 100], brute force over n = 1..4."""
    total = 0.0
    for n in range(1, 5):
        add_f1, keep_f1, del_p = sari_components_oracle(
            source_tokens, output_tokens, reference_token_lists, n
        )
        total += (add_f1 + keep_f1 + del_p) / 3.0
    return 100.0 * total / 4.0


def d_sari_oracle(
    source_tokens: list[str],
    output_tokens: list[str],
    reference_token_lists: list[list[str]],
    output_sentences: int,
    reference_sentence_counts: list[int],
) -> float:
    """Length-penalized aggregate: keep/add scaled by token and sentence ratios."""
    len_out = float(len(output_tokens))
    mean_ref = sum(len(r) for r in reference_token_lists) / len(reference_token_lists)
    if len_out == 0.0 and mean_ref == 0.0:
        p_tok = 1.0
    else:
        p_tok = min(len_out, mean_ref) / max(len_out, mean_ref) if max(len_out, mean_ref) > 0 else 0.0
    sent_out = float(output_sentences)
    mean_ref_sent = sum(reference_sentence_counts) / len(reference_sentence_counts)
    if sent_out == 0.0 and mean_ref_sent == 0.0:
        p_sent = 1.0
    else:
        p_sent = (
            min(sent_out, mean_ref_sent) / max(sent_out, mean_ref_sent)
            if max(sent_out, mean_ref_sent) > 0
            else 0.0
        )
    penalty = p_tok * p_sent
    total = 0.0
    for n in range(1, 5):
        add_f1, keep_f1, del_p = sari_components_oracle(
            source_tokens, output_tokens, reference_token_lists, n
        )
        total += (add_f1 * penalty + keep_f1 * penalty + del_p) / 3.0
    return 100.0 * total / 4.0


def vowel_group_syllables(word: str) -> int:
    """Independent syllable trace: explicit scan with the same stated rules."""
    lowered = word.lower()
    assert lowered.isalpha()
    if len(lowered) > 2 and lowered.endswith("ed") and lowered[-3] not in ("t", "d"):
        trimmed = lowered[: len(lowered) - 2]
    elif lowered.endswith("e"):
        trimmed = lowered[: len(lowered) - 1]
    else:
        trimmed = lowered
    count = 0
    for pos in range(len(trimmed)):
        here = trimmed[pos] in "aeiouy"
        before = pos > 0 and trimmed[pos - 1] in "aeiouy"
        if here and not before:
            count += 1
    return count if count >= 1 else 1


def assemble_reference(
    topics: list[tuple[str, list[int]]],
    unit_texts: dict[int, str],
    include_subheadings: bool,
) -> str:
    """Reference assembler for deletion-semantics checks (independent path)."""
    chunks: list[str] = []
    for subheading, members in topics:
        if include_subheadings:
            chunks.append("## " + subheading)
        for m in members:
            chunks.append(unit_texts[m])
    return "\n\n".join(chunks)
