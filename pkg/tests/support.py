"""Shared builders for pipeline tests: deterministic stand-in predictors.

An injected member is any callable from a lag window (length p) to a
length-H prediction, which is exactly what the ensemble plumbing accepts.
Affine maps with seeded random coefficients give varied, reproducible
predictors without any training.
"""

import numpy as np


def make_affine_member(p, H, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    A = rng.normal(scale=scale, size=(H, p))
    b = rng.normal(scale=scale, size=H)

    def member(x):
        return A @ np.asarray(x, dtype=float) + b

    return member


def make_affine_members(n_members, p, H, seed, scale=1.0):
    return [make_affine_member(p, H, seed * 1000 + i, scale) for i in range(n_members)]


def make_constant_member(values):
    out = np.asarray(values, dtype=float)

    def member(x):
        return out.copy()

    return member


def random_index_sets(n_members, n_rows, rng):
    return [rng.integers(0, n_rows, size=n_rows) for _ in range(n_members)]
