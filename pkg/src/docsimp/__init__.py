"""Staged LLM document simplification with offline replay and evaluation."""

from .gateway import (
    ChatMessage,
    GenerationParams,
    HttpBackend,
    LlmSession,
    ModelRoute,
    PromptCache,
    ReplayBackend,
    make_replay_backend,
)
from .metrics import d_sari, fkgl, gpt_judge, sari, win_rate
from .pipeline import (
    IclResources,
    PipelineConfig,
    PipelineDeps,
    SimplifiedDocument,
    run_direct,
    run_progds,
    run_sumds,
    simplify_document,
)
from .textcore import Document, doc_stats, load_document, parse_document

__version__ = "0.1.0"

__all__ = [
    "ChatMessage",
    "Document",
    "GenerationParams",
    "HttpBackend",
    "IclResources",
    "LlmSession",
    "ModelRoute",
    "PipelineConfig",
    "PipelineDeps",
    "PromptCache",
    "ReplayBackend",
    "SimplifiedDocument",
    "d_sari",
    "doc_stats",
    "fkgl",
    "gpt_judge",
    "load_document",
    "make_replay_backend",
    "parse_document",
    "run_direct",
    "run_progds",
    "run_sumds",
    "sari",
    "simplify_document",
    "win_rate",
]
