"""Streaming human-in-the-loop detection.

A large pool of cheap expert rules watches an event stream. Any flag raises
an alert for review; the reviewer's judgement evicts the experts that got it
wrong. Variants: deterministic halving, probabilistic (label-agnostic)
eviction, and a budgeted risk-factor auction.
"""

from halfado.core import (
    ActiveSet,
    Event,
    EvictionReport,
    Judgement,
    PoolExhaustedError,
    Verdict,
    VoteConfig,
    apply_judgement,
    evaluate,
    expected_tolerated_mistakes,
    init,
    mistake_bound,
)

__version__ = "0.1.0"

__all__ = [
    "ActiveSet",
    "Event",
    "EvictionReport",
    "Judgement",
    "PoolExhaustedError",
    "Verdict",
    "VoteConfig",
    "apply_judgement",
    "evaluate",
    "expected_tolerated_mistakes",
    "init",
    "mistake_bound",
    "__version__",
]
