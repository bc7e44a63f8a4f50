"""Deterministic random-stream derivation.

Every stochastic unit of work (an attention head, a bootstrap tree, a
replication) draws from its own ``numpy.random.Generator`` derived from the
run seed plus a path of labels. Streams are independent of scheduling
order, so sequential and concurrent execution produce identical results.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _encode(part) -> tuple[int, ...]:
    """Map one path component to uint32 words for a SeedSequence spawn key."""
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError("rng path integers must be non-negative")
        words = []
        value = int(part)
        while True:
            words.append(value & 0xFFFFFFFF)
            value >>= 32
            if value == 0:
                return tuple(words)
    if isinstance(part, str):
        digest = hashlib.sha256(part.encode("utf-8")).digest()[:8]
        return (
            int.from_bytes(digest[:4], "little"),
            int.from_bytes(digest[4:], "little"),
        )
    raise TypeError(f"unsupported rng path component: {part!r}")


def derive_rng(seed: int, *path) -> np.random.Generator:
    """Return the generator for the stream named by ``path`` under ``seed``."""
    key: tuple[int, ...] = ()
    for part in path:
        key = key + _encode(part)
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    return np.random.Generator(np.random.PCG64(seq))
