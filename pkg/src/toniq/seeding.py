"""Deterministic seed derivation.

Every stochastic stage of the toolkit derives its RNG seed from a master
seed plus a tuple of context labels (purpose string, backend name, run
index, ...). Derivation is hash-based so results are independent of
scheduling order across parallel workers and stable across processes
(Python's built-in ``hash`` is salted per process and must not be used).
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seed(*parts: int | str) -> int:
    """Derive a 64-bit seed from a sequence of integer/string labels."""
    h = hashlib.sha256()
    for part in parts:
        h.update(str(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest()[:8], "little") & _MASK64


def rng_for(*parts: int | str) -> np.random.Generator:
    """A fresh generator seeded by `derive_seed(*parts)`."""
    return np.random.default_rng(derive_seed(*parts))
