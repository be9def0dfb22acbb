"""Corruption and delay adversaries, plus the delayed-feedback queue.

Budget accounting is exact: the corruption policy never flips more than its
budget, and the strategic delay policy front-loads delays so that round t
(for t <= M) arrives exactly at round M+1, spending at most its budget.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np


def starvation_horizon(budget: int) -> int:
    """Largest M with M(M+1)/2 <= budget."""
    if budget < 0:
        raise ValueError("delay budget must be >= 0")
    m = int((-1.0 + math.sqrt(1.0 + 8.0 * budget)) / 2.0)
    # guard against floating point at the boundary
    while (m + 1) * (m + 2) // 2 <= budget:
        m += 1
    while m * (m + 1) // 2 > budget:
        m -= 1
    return m


@dataclass
class CorruptionPolicy:
    budget: int
    strategy: str = "flip_first"  # flip_first | flip_informative
    spent: int = 0
    _margins: list = field(default_factory=list)

    def __post_init__(self):
        if self.budget < 0:
            raise ValueError("corruption budget must be >= 0")
        if self.strategy not in ("flip_first", "flip_informative"):
            raise ValueError(f"unknown corruption strategy {self.strategy!r}")

    def corrupt(self, t: int, outcome: int, margin: float = 0.0) -> int:
        if outcome not in (0, 1):
            raise ValueError("outcome must be a bit")
        if self.spent >= self.budget:
            return outcome
        if self.strategy == "flip_first":
            self.spent += 1
            return 1 - outcome
        # flip_informative: flip only high-leverage duels
        flip = abs(margin) >= self._median() if self._margins else True
        self._margins.append(abs(margin))
        if flip:
            self.spent += 1
            return 1 - outcome
        return outcome

    def _median(self) -> float:
        return float(np.median(self._margins))


@dataclass
class DelayPolicy:
    regime: str  # none | stochastic | strategic
    mu: float = 0.0
    sigma: float = 0.0
    budget: int = 0
    spent: int = 0

    def __post_init__(self):
        if self.regime not in ("none", "stochastic", "strategic"):
            raise ValueError(f"unknown delay regime {self.regime!r}")
        if self.regime == "strategic":
            self.horizon = starvation_horizon(self.budget)
        else:
            self.horizon = 0

    def assign(self, t: int, rng: np.random.Generator) -> int:
        if t < 1:
            raise ValueError("rounds start at 1")
        if self.regime == "none":
            return 0
        if self.regime == "stochastic":
            tau = int(round(max(0.0, rng.normal(self.mu, self.sigma))))
            self.spent += tau
            return tau
        # strategic starvation: round t withheld until round M+1
        tau = self.horizon - t + 1 if t <= self.horizon else 0
        self.spent += tau
        assert self.spent <= self.budget, "strategic delay overspent its budget"
        return tau


class FeedbackQueue:
    """Holds (round, arrival, outcome) entries until their arrival round."""

    def __init__(self):
        self._heap: list[tuple[int, int, int]] = []  # (arrival, round, outcome)
        self._last_tick = 0

    def push(self, round_idx: int, arrival: int, outcome: int) -> None:
        heapq.heappush(self._heap, (arrival, round_idx, outcome))

    def tick(self, t: int) -> list[tuple[int, int]]:
        """Pop all entries with arrival <= t, in ascending round order."""
        if t <= self._last_tick:
            raise ValueError("tick rounds must be strictly increasing")
        self._last_tick = t
        out = []
        while self._heap and self._heap[0][0] <= t:
            arrival, rnd, outcome = heapq.heappop(self._heap)
            out.append((rnd, outcome))
        out.sort()
        return out

    def pending_before(self, t: int) -> int:
        """Number of rounds s < t whose outcome has not arrived (D_t)."""
        return sum(1 for _, rnd, _ in self._heap if rnd < t)

    def __len__(self) -> int:
        return len(self._heap)
