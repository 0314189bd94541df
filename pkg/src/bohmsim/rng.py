"""Counter-based random streams.

Every stochastic component draws from a Philox generator keyed by
(master_seed, stream_id).  Distinct stream ids give statistically
independent streams, and a given (seed, id) pair always reproduces the
same sequence regardless of what other streams were consumed.
"""
from __future__ import annotations

import numpy as np

__all__ = ["stream", "substreams"]


def stream(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Return the Generator for (seed, stream_id)."""
    if seed < 0 or stream_id < 0:
        raise ValueError("seed and stream_id must be non-negative")
    key = np.array([seed, stream_id], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def substreams(seed: int, base_id: int, count: int) -> list[np.random.Generator]:
    """Independent per-realization streams ids base_id..base_id+count-1."""
    return [stream(seed, base_id + i) for i in range(count)]
