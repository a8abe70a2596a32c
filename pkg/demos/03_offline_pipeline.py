"""Walkthrough: the staged pipeline running fully offline on a replay script.

The ``progds`` method runs three stages: a discourse pass groups numbered
paragraphs into subheaded topics (and may delete some), a topic pass
simplifies each surviving paragraph under its subheading, and a lexical
pass rewrites complex wording sentence by sentence. Scripted responses
below play the model's part, so the run is deterministic and free.

Run with:  python3 demos/03_offline_pipeline.py
"""

from docsimp.gateway import ANY_PROMPT, GenerationParams, LlmSession, make_replay_backend
from docsimp.pipeline import PipelineConfig, PipelineDeps, run_progds
from docsimp.textcore import make_document

doc = make_document(
    "greywater",
    [
        "The river Greywater runs through the old town. Its current is swift.",
        "Merchants once utilized the waterway to transport goods.",
        "An unrelated aside about the author's travel schedule.",
    ],
)

# The scripted model groups paragraphs 1-2 into topics and DELETES paragraph 3
# ("Irrelevant paragraphs can be deleted"), then answers the topic and lexical
# prompts in the order the pipeline issues them.
script = [
    (ANY_PROMPT, "The river: 1\nTrade history: 2"),
    (ANY_PROMPT, "The Greywater river flows through the old town. The water moves fast."),
    (ANY_PROMPT, "Traders once used the river to move goods."),
    (ANY_PROMPT, "The Greywater river flows through the old town."),
    (ANY_PROMPT, "The water moves fast."),
    (ANY_PROMPT, "Traders once used the river to move goods."),
]

session = LlmSession(make_replay_backend(script), GenerationParams(model_id="replay-model"))
cfg = PipelineConfig(method="progds", params=GenerationParams(model_id="replay-model"))
result = run_progds(doc, cfg, PipelineDeps(session=session))

print("--- simplified document ---")
print(result.text)
print()

plan = result.plan_history[0]
print("topics:", [(t.subheading, list(t.members)) for t in plan.topics])
print("deleted units:", sorted(plan.deleted))

# ---------------------------------------------------------------------------
# Cost accounting: one discourse call, one topic call per surviving
# paragraph, one lexical call per post-topic sentence (1 + 2 + 3 here).
# ---------------------------------------------------------------------------
print("per-stage calls:", dict(result.ledger.per_stage_counts))
print("total calls:", result.ledger.call_count)

print("\n--- stage traces ---")
for trace in result.traces:
    print(
        f"iter {trace.iteration} {trace.stage:9s} unit {trace.unit:6s} "
        f"attempts {len(trace.attempts.attempts)} fallback={trace.fallback_used}"
    )
