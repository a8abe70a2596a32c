"""Walkthrough: the text model — tokens, sentences, syllables, document stats.

Run with:  python3 demos/01_text_statistics.py
"""

from docsimp.textcore import (
    count_syllables,
    doc_stats,
    parse_document,
    split_sentences,
    tokenize,
)

# ---------------------------------------------------------------------------
# Tokenization: punctuation splits off as single characters, but listed
# abbreviations like "U.S." or "Dr." stay whole.
# ---------------------------------------------------------------------------
print("tokens:", tokenize("The cat chased the mouse."))
print("tokens:", tokenize("Dr. Smith visited the U.S. in May, briefly."))

# ---------------------------------------------------------------------------
# Sentence splitting respects the same abbreviation list: "Dr." below does
# not end a sentence, the first "." does.
# ---------------------------------------------------------------------------
for s in split_sentences("Dr. Smith arrived at noon. He left an hour later."):
    print(f"sentence {s.index}: {s.text}")

# ---------------------------------------------------------------------------
# Syllables: vowel groups with a silent-suffix rule. These feed the
# readability metric, so the rules are deterministic and documented.
# ---------------------------------------------------------------------------
for word in ["cat", "mouse", "chased", "simplification", "readable"]:
    print(f"{word}: {count_syllables(word)} syllable(s)")

# ---------------------------------------------------------------------------
# Whole-document statistics. Paragraphs are blank-line separated; an
# optional "# title" line names the document.
# ---------------------------------------------------------------------------
doc = parse_document(
    "# A Tiny Document\n"
    "\n"
    "The river runs through the old town. Its current is swift.\n"
    "\n"
    "Merchants once used the waterway to move goods.\n"
)
print("title:", doc.title)
print("stats:", doc_stats(doc))
