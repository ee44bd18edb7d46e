"""Python bindings for the logcog log anomaly pipeline."""

from ._logcog import (
    HashedNgramEmbedder,
    LogcogError,
    MockBackend,
    VectorStore,
    canonical_strategies,
    choose_k,
    compute_metrics,
    compute_quotas,
    cosine,
    is_eval_record,
    kmeans,
    normalize,
    parse_line,
    parse_verdict,
    render_report,
    run_cli,
    run_strategy,
    strategy_chain,
)

__all__ = [
    "HashedNgramEmbedder",
    "LogcogError",
    "MockBackend",
    "VectorStore",
    "canonical_strategies",
    "choose_k",
    "compute_metrics",
    "compute_quotas",
    "cosine",
    "is_eval_record",
    "kmeans",
    "normalize",
    "parse_line",
    "parse_verdict",
    "render_report",
    "run_cli",
    "run_strategy",
    "strategy_chain",
]
