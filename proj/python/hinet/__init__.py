"""Heterogeneous information network engine: declared graph schemas populated
by sensors, a chained traversal query language, and query-driven linear
learning with constrained joint prediction."""

from ._hinet import (
    Graph,
    HinetError,
    Learner,
    __version__,
    generate_synthetic_bio,
    load,
    run_family,
)

__all__ = [
    "Graph",
    "HinetError",
    "Learner",
    "__version__",
    "generate_synthetic_bio",
    "load",
    "run_family",
]
