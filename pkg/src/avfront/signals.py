"""Piecewise-constant functions of one variable: initial data, controls, snapshots."""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PiecewiseConstant:
    """Right-continuous step function.

    ``values[0]`` holds on ``(-inf, breaks[0])``, ``values[i]`` on
    ``[breaks[i-1], breaks[i])`` and ``values[-1]`` after the last break.
    """

    breaks: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "breaks", tuple(float(b) for b in self.breaks))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) != len(self.breaks) + 1:
            raise ValueError(
                f"need len(values) == len(breaks) + 1, got {len(self.values)} and {len(self.breaks)}"
            )
        if any(b1 >= b2 for b1, b2 in zip(self.breaks, self.breaks[1:])):
            raise ValueError("breakpoints must be strictly increasing")

    @classmethod
    def constant(cls, value: float) -> PiecewiseConstant:
        return cls((), (value,))

    def __call__(self, x: float) -> float:
        return self.values[bisect.bisect_right(self.breaks, x)]

    def left_limit(self, x: float) -> float:
        return self.values[bisect.bisect_left(self.breaks, x)]

    def evaluate(self, xs) -> np.ndarray:
        idx = np.searchsorted(np.asarray(self.breaks), np.asarray(xs, dtype=float), side="right")
        return np.asarray(self.values)[idx]

    @property
    def total_variation(self) -> float:
        return float(np.sum(np.abs(np.diff(self.values))))

    def variation_after(self, t: float) -> float:
        """Variation carried by jumps strictly after ``t``."""
        i = bisect.bisect_right(self.breaks, t)
        return float(np.sum(np.abs(np.diff(self.values[i:]))))

    def jumps_in(self, lo: float, hi: float) -> list[float]:
        return [b for b in self.breaks if lo < b <= hi]

    def map_values(self, fn) -> PiecewiseConstant:
        """Apply ``fn`` to every value and drop jumps that become zero."""
        vals = [fn(v) for v in self.values]
        breaks: list[float] = []
        kept = [vals[0]]
        for b, v in zip(self.breaks, vals[1:]):
            if v != kept[-1]:
                breaks.append(b)
                kept.append(v)
        return PiecewiseConstant(tuple(breaks), tuple(kept))

    def integral(self, lo: float, hi: float) -> float:
        edges = [lo] + [b for b in self.breaks if lo < b < hi] + [hi]
        return float(sum(self(a) * (b - a) for a, b in zip(edges, edges[1:])))

    def l1_distance(self, other: PiecewiseConstant, lo: float, hi: float) -> float:
        """Exact ``L1(lo, hi)`` distance to another step function."""
        edges = sorted({lo, hi, *(b for b in self.breaks + other.breaks if lo < b < hi)})
        total = 0.0
        for a, b in zip(edges, edges[1:]):
            mid = 0.5 * (a + b)
            total += abs(self(mid) - other(mid)) * (b - a)
        return total


ControlSignal = PiecewiseConstant


@dataclass(frozen=True)
class Profile:
    """Density snapshot at time ``t`` tagged with the scenario it came from."""

    t: float
    density: PiecewiseConstant
    scenario_hash: str = ""
    lo: float = -np.inf
    hi: float = np.inf
