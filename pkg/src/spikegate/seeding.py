"""Deterministic seed derivation.

A single experiment seed fans out into named sub-seeds (data generation,
parameter init, dropout, poison selection, ...) through a keyed hash, so
sweeps that share a master seed also share data splits while every consumer
gets an independent stream.
"""

import hashlib

import numpy as np


def derive_seed(master: int, *labels: str) -> int:
    """Map (master seed, label path) to a stable 63-bit integer seed."""
    key = ":".join([str(int(master))] + [str(l) for l in labels])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & 0x7FFFFFFFFFFFFFFF


def rng_for(master: int, *labels: str) -> np.random.Generator:
    """Generator seeded by :func:`derive_seed`."""
    return np.random.default_rng(derive_seed(master, *labels))
