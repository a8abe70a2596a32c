"""Walkthrough: scoring a simplification with SARI, D-SARI, and FKGL.

Run with:  python3 demos/02_metrics.py
"""

from docsimp.metrics import d_sari, fkgl, sari

source = "The municipality commenced construction of the reservoir in 1902."
output = "The town started building the reservoir in 1902."
references = [
    "The town started building the reservoir in 1902.",
    "The town began to build the reservoir in 1902.",
]

# ---------------------------------------------------------------------------
# SARI rewards the right edits: keeping what the references keep, adding
# what they add, deleting what they delete. 100 means a perfect match.
# ---------------------------------------------------------------------------
breakdown = sari(source, output, references)
print(f"SARI aggregate: {breakdown.aggregate:.2f}")
for n, comps in sorted(breakdown.per_n.items()):
    print(
        f"  {n}-grams: add F1 {comps.add_f1:.3f}  keep F1 {comps.keep_f1:.3f}  "
        f"del precision {comps.del_precision:.3f}"
    )

# Identity sanity check: output == source == reference scores exactly 100.
print("identity:", sari(source, source, [source]).aggregate)

# ---------------------------------------------------------------------------
# D-SARI penalizes the keep/add components when the output's token or
# sentence counts drift from the reference mean — summaries score lower.
# ---------------------------------------------------------------------------
summary_like = "Reservoir built 1902."
print(f"D-SARI full output : {d_sari(source, output, references):.2f}")
print(f"D-SARI summary-like: {d_sari(source, summary_like, references):.2f}")

# ---------------------------------------------------------------------------
# FKGL estimates reading grade level; lower reads easier.
# ---------------------------------------------------------------------------
print(f"FKGL source: {fkgl(source):.2f}")
print(f"FKGL output: {fkgl(output):.2f}")
print(f"FKGL 'The cat chased the mouse.': {fkgl('The cat chased the mouse.'):.2f}")
