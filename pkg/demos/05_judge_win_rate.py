"""Walkthrough: pairwise judging with scripted verdicts and the win rate.

The judge prompt shows a baseline simplification as Document 1 and the
candidate as Document 2, asks for reasoning, and requires the verdict on
the final line. The replay backend below plays the judge.

Run with:  python3 demos/05_judge_win_rate.py
"""

from docsimp.gateway import ANY_PROMPT, GenerationParams, LlmSession, make_replay_backend
from docsimp.metrics import gpt_judge, win_rate

pairs = [
    ("The town dug a big lake for water.", "The town started building the reservoir in 1902."),
    ("Plants eat light.", "Green plants turn light into food energy."),
    ("The group talked and agreed.", "The committee talked for a long time and then agreed."),
    ("Quakes rose.", "Earthquakes near the fault have become more common."),
]

script = [
    (ANY_PROMPT, "Document 2 keeps the date and reads plainly.\nThe better-simplified document: Document 2"),
    (ANY_PROMPT, "Document 2 is clearer without losing meaning.\nThe better-simplified document: Document 2"),
    (ANY_PROMPT, "Document 1 is shorter and just as faithful.\nThe better-simplified document: Document 1"),
    (ANY_PROMPT, "Document 2 preserves the key facts.\nThe better-simplified document: Document 2"),
]

session = LlmSession(make_replay_backend(script), GenerationParams(model_id="replay-model"))

verdicts = []
for baseline, candidate in pairs:
    verdict = gpt_judge(baseline, candidate, session)
    verdicts.append(verdict)
    print(f"winner={verdict.winner}  reasoning: {verdict.reasoning[:60]}")

# [d2, d2, d1, d2] -> the candidate wins three of four comparisons.
print(f"\ncandidate win rate: {win_rate(verdicts):.1f}%")
print("judge calls:", session.ledger_snapshot().per_stage_counts)
