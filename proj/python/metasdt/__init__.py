"""Meta-d' and M-ratio analysis of confidence signals.

Trial sets live on the C++ side as :class:`Trials`; estimates, reports and
robustness results come back as plain dicts with the same layout as the
JSON written by the ``metasdt`` command-line tool.
"""

from ._core import (
    DuplicateRecord,
    MetasdtError,
    Trials,
    UnstableEstimate,
    __version__,
    auroc2,
    bootstrap,
    default_config,
    emit_report,
    evaluate,
    fit,
    fit_counts,
    load_trials,
    m_ratio,
    metrics,
    robustness,
    simulate,
    simulate_grid,
    spearman,
    tost,
    type1,
    validate_report,
)

__all__ = [
    "DuplicateRecord",
    "MetasdtError",
    "Trials",
    "UnstableEstimate",
    "__version__",
    "auroc2",
    "bootstrap",
    "default_config",
    "emit_report",
    "evaluate",
    "fit",
    "fit_counts",
    "load_trials",
    "m_ratio",
    "metrics",
    "robustness",
    "simulate",
    "simulate_grid",
    "spearman",
    "tost",
    "type1",
    "validate_report",
]
