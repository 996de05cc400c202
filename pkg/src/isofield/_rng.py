"""Deterministic noise substreams for the Monte-Carlo drivers.

Every stochastic routine derives its noise from (master_seed, index,
label) through a keyed counter-based generator, so results do not depend
on scheduling, thread count, or draw order elsewhere in the program.
"""

from __future__ import annotations

import hashlib
import os

import numpy as np
from scipy.special import ndtri

__all__ = ["substream", "standard_normals", "thread_count"]

ENV_THREADS = "ISOFIELD_THREADS"


def substream(master_seed: int, index: int, label: str) -> np.random.Generator:
    """Counter-based generator for one labelled substream.

    The (seed, index, label) triple is hashed to a 128-bit Philox key, so
    distinct labels or indices give statistically independent streams and
    the mapping is stable across platforms and processes.
    """
    msg = "{}:{}:{}".format(master_seed, index, label).encode()
    digest = hashlib.blake2b(msg, digest_size=16).digest()
    key = np.frombuffer(digest, dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def standard_normals(gen: np.random.Generator, shape) -> np.ndarray:
    """Standard normal variates via the inverse CDF.

    Uses the top 53 bits of raw 64-bit draws, mapped into (0, 1) and fed
    through ndtri. Elementwise and order-stable, which keeps chunked
    parallel simulation bit-reproducible.
    """
    shape = tuple(int(s) for s in np.atleast_1d(shape))
    n = int(np.prod(shape)) if shape else 1
    raw = np.frombuffer(gen.bytes(8 * n), dtype=np.uint64)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
    return ndtri(u).reshape(shape)


def thread_count() -> int:
    """Worker count for chunked simulation, from the environment."""
    raw = os.environ.get(ENV_THREADS, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError("%s must be an integer, got %r" % (ENV_THREADS, raw))
    if n < 1:
        raise ValueError("%s must be >= 1, got %d" % (ENV_THREADS, n))
    return n
