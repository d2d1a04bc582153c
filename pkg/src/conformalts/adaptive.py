"""Online adaptation machinery: per-horizon miscoverage tracking and fixed
capacity score windows.

The miscoverage update is the standard online correction: each observed
block nudges the working level alpha_h by gamma toward the target, down
after a miss, up after a cover. Clamping keeps the level a valid quantile
argument. The score windows are FIFO: one new score evicts the oldest, so
the conformity evidence ages out at a fixed rate.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .seeding import spawn_rng


@dataclass
class AciState:
    """Working miscoverage levels for each forecast step.

    ``alphas[h-1]`` is the current level for horizon step h. ``target`` is
    the nominal miscoverage alpha the update steers toward and ``gamma`` the
    adaptation rate.
    """

    target: float
    gamma: float
    alphas: np.ndarray

    @classmethod
    def fresh(cls, alpha: float, gamma: float, horizon: int) -> "AciState":
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {alpha}")
        if gamma < 0.0:
            raise ValueError("gamma must be >= 0")
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        return cls(alpha, gamma, np.full(horizon, float(alpha)))


def aci_update(state: AciState, h: int, covered: bool) -> AciState:
    """Apply one online update for horizon step h (1-based), in place.

    alpha_h += gamma * (target - miss) where miss is 1 on a miscover and 0
    otherwise; the result is clamped into [0, 1].
    """
    if not 1 <= h <= state.alphas.size:
        raise ValueError(f"horizon step {h} out of range 1..{state.alphas.size}")
    miss = 0.0 if covered else 1.0
    raw = state.alphas[h - 1] + state.gamma * (state.target - miss)
    state.alphas[h - 1] = min(max(raw, 0.0), 1.0)
    return state


def init_gamma(window_size: int, n_scores: int) -> float:
    """Adaptation rate 1 / max(window_size, n_scores).

    Tied to the larger of the window capacity and the initial score count so
    one update never outweighs the evidence backing the current quantile.
    """
    if window_size < 1 or n_scores < 1:
        raise ValueError("window_size and n_scores must be >= 1")
    return 1.0 / float(max(window_size, n_scores))


@dataclass
class SlidingScoreWindow:
    """Fixed-capacity FIFO multiset of conformity scores."""

    capacity: int
    _scores: deque = field(repr=False, default_factory=deque)

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")
        self._scores = deque(self._scores, maxlen=self.capacity)

    def push(self, score: float) -> None:
        """Insert one score, evicting the oldest when at capacity."""
        s = float(score)
        if not np.isfinite(s):
            raise ValueError("scores must be finite")
        self._scores.append(s)

    def values(self) -> np.ndarray:
        """Current contents, oldest first."""
        return np.asarray(self._scores, dtype=float)

    def __len__(self) -> int:
        return len(self._scores)


def sample_without_replacement(scores, capacity: int, seed: int) -> SlidingScoreWindow:
    """Thin a score set into a window of at most ``capacity`` entries.

    When the set already fits, everything is kept and the window capacity
    shrinks to the set size. Otherwise a uniform subset of ``capacity``
    scores is drawn without replacement; the kept scores stay in their
    original insertion order so later FIFO eviction remains well defined.
    """
    s = np.asarray(scores, dtype=float).reshape(-1)
    if capacity < 1:
        raise ValueError("capacity must be >= 1")
    if s.size <= capacity:
        window = SlidingScoreWindow(capacity=max(s.size, 1))
        for v in s:
            window.push(v)
        return window
    rng = spawn_rng(seed, "window-sample")
    keep = np.sort(rng.choice(s.size, size=capacity, replace=False))
    window = SlidingScoreWindow(capacity=capacity)
    for v in s[keep]:
        window.push(v)
    return window
