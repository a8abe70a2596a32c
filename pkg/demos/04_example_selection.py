"""Walkthrough: picking in-context examples three different ways.

Run with:  python3 demos/04_example_selection.py
"""

from pathlib import Path

from docsimp.icl import (
    HashedNgramEmbedder,
    load_bank,
    select_by_embedding,
    select_by_structure,
    select_lexical_examples,
    structure_similarity,
)

BANKS = Path(__file__).resolve().parent.parent / "fixtures" / "banks"

# ---------------------------------------------------------------------------
# Meaning similarity: hashed character-n-gram embeddings (offline, exact
# same results on every machine) rank bank entries against the query.
# ---------------------------------------------------------------------------
meaning = load_bank(BANKS / "paragraph_meaning.jsonl", "paragraph_meaning")
embedder = HashedNgramEmbedder()
query = "The council started building a new water reservoir for the town."
print("query:", query)
for pair in select_by_embedding(query, meaning, 2, embedder):
    print("  meaning example:", pair.complex[:60], "...")

# ---------------------------------------------------------------------------
# Structure similarity: sentence length, clause count, POS histogram, and
# function-word ratio, averaged. Useful for picking examples whose *shape*
# matches the sentence being rewritten.
# ---------------------------------------------------------------------------
structure = load_bank(BANKS / "sentence_structure.jsonl", "sentence_structure")
query = "Although the road was closed, the drivers waited, and nobody complained."
print("\nquery:", query)
for pair in select_by_structure(query, structure, 2):
    score = structure_similarity(query, pair.complex)
    print(f"  structure example ({score:.3f}):", pair.complex[:60], "...")

# ---------------------------------------------------------------------------
# Lexical diversity: round-robin over part-of-speech classes so the prompt
# shows substitutions for nouns, verbs, adjectives, adverbs, and idioms
# rather than five of the same kind.
# ---------------------------------------------------------------------------
lexical = load_bank(BANKS / "lexical.jsonl", "lexical")
print()
for pair in select_lexical_examples(lexical, 5):
    print(f"  lexical example [{pair.pos}]: {pair.complex} -> {pair.simple}")
