from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Any


@dataclass(frozen=True)
class Schedule:
    """Left-continuous piecewise-constant signal.

    ``values[k]`` holds on ``(breakpoints[k-1], breakpoints[k]]``; the first
    value extends to ``-inf`` and the last to ``+inf``.
    """

    breakpoints: tuple[float, ...]
    values: tuple[Any, ...]

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        vals = tuple(self.values)
        if len(vals) != len(bps) + 1:
            raise ValueError(f"{len(bps)} breakpoints need {len(bps) + 1} values, got {len(vals)}")
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, value) -> "Schedule":
        return cls((), (value,))

    @classmethod
    def periodic(cls, values, period: float, horizon: float, t0: float = 0.0) -> "Schedule":
        """Cycle through ``values``, switching every ``period`` until ``horizon``."""
        n = max(1, int(round(horizon / period)))
        return cls(tuple(t0 + period * k for k in range(1, n)),
                   tuple(values[k % len(values)] for k in range(n)))

    def index_at(self, t: float) -> int:
        return bisect.bisect_left(self.breakpoints, t)

    def __call__(self, t: float):
        return self.values[self.index_at(t)]

    def segments(self, t0: float, t1: float) -> list[tuple[float, float, Any]]:
        """``(start, end, value)`` pieces covering ``[t0, t1]``."""
        cuts = [b for b in self.breakpoints if t0 < b < t1]
        edges = [t0, *cuts, t1]
        return [(a, b, self(0.5 * (a + b))) for a, b in zip(edges, edges[1:])]
