"""Deterministic seed derivation.

All randomness in the package flows through ``numpy.random.default_rng``
seeded with integers derived here. Derivation is a cryptographic hash of the
string rendering of the parts, so it is stable across processes, platforms
and Python versions (unlike the builtin ``hash``), and independent of the
order in which work items are scheduled.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(*parts: int | str) -> int:
    """Collapse a tuple of ints/strings into a 63-bit seed."""
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def spawn_rng(*parts: int | str) -> np.random.Generator:
    """A PCG64 generator keyed by the given parts."""
    return np.random.default_rng(derive_seed(*parts))
