"""Boxes, orthant orders and the tangent-cone projection on boxes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BOX_TOL = 1e-12


def _vec(v) -> np.ndarray:
    return np.atleast_1d(np.asarray(v, dtype=float))


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box ``[lower, upper]``; bounds may be infinite."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo, hi = _vec(self.lower), _vec(self.upper)
        if lo.shape != hi.shape or lo.ndim != 1 or lo.size == 0:
            raise ValueError(f"bound shapes differ or are empty: {lo.shape} vs {hi.shape}")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ValueError("box bounds must not be NaN")
        if np.any(lo > hi):
            raise ValueError(f"lower bound exceeds upper bound: {lo} > {hi}")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def unbounded(cls, dim: int) -> "Box":
        return cls(np.full(dim, -np.inf), np.full(dim, np.inf))

    @classmethod
    def product(cls, *boxes: "Box") -> "Box":
        return cls(np.concatenate([b.lower for b in boxes]),
                   np.concatenate([b.upper for b in boxes]))

    @property
    def dimension(self) -> int:
        return self.lower.size

    @property
    def is_compact(self) -> bool:
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    @property
    def midpoint(self) -> np.ndarray:
        if not self.is_compact:
            raise ValueError("midpoint of an unbounded box is undefined")
        return 0.5 * (self.lower + self.upper)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def corners(self) -> list[np.ndarray]:
        if not self.is_compact:
            raise ValueError("corners of an unbounded box are undefined")
        grids = np.meshgrid(*[(lo, hi) for lo, hi in zip(self.lower, self.upper)], indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        return [p for p in np.unique(pts, axis=0)]

    def contains(self, x, tol: float = BOX_TOL) -> bool:
        x = _vec(x)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def clip(self, x) -> np.ndarray:
        """Euclidean projection onto the box."""
        return np.minimum(np.maximum(_vec(x), self.lower), self.upper)

    def inflate(self, fraction: float) -> "Box":
        pad = fraction * np.where(np.isfinite(self.width), self.width, 0.0)
        return Box(self.lower - pad, self.upper + pad)

    def grid(self, points_per_dim: int) -> np.ndarray:
        """Tensor grid, one row per point."""
        if not self.is_compact:
            raise ValueError("cannot grid an unbounded box")
        axes = [np.linspace(lo, hi, points_per_dim) for lo, hi in zip(self.lower, self.upper)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if not self.is_compact:
            raise ValueError("cannot sample an unbounded box")
        return self.lower + rng.random((n, self.dimension)) * self.width

    def __eq__(self, other):
        if not isinstance(other, Box):
            return NotImplemented
        return (np.array_equal(self.lower, other.lower)
                and np.array_equal(self.upper, other.upper))

    def __repr__(self):
        return f"Box(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


@dataclass(frozen=True, eq=False)
class OrthantOrder:
    """Partial order x >= y iff signs * (x - y) >= 0 componentwise."""

    signs: np.ndarray

    def __post_init__(self):
        s = _vec(self.signs)
        if s.ndim != 1 or s.size == 0 or not np.all(np.isin(s, (-1.0, 1.0))):
            raise ValueError(f"orthant signs must be a nonempty vector over {{+1, -1}}, got {s}")
        s.setflags(write=False)
        object.__setattr__(self, "signs", s)

    @classmethod
    def standard(cls, dim: int) -> "OrthantOrder":
        return cls(np.ones(dim))

    @property
    def dimension(self) -> int:
        return self.signs.size

    def __neg__(self) -> "OrthantOrder":
        return OrthantOrder(-self.signs)

    def __eq__(self, other):
        if not isinstance(other, OrthantOrder):
            return NotImplemented
        return np.array_equal(self.signs, other.signs)


def orthant_leq(x, y, order: OrthantOrder, tol: float = 0.0) -> bool:
    """True iff ``x`` precedes ``y``, i.e. ``y - x`` lies in the orthant."""
    x, y = _vec(x), _vec(y)
    if x.shape != y.shape or x.size != order.dimension:
        raise ValueError(f"dimension mismatch: {x.size}, {y.size}, order {order.dimension}")
    return bool(np.all(order.signs * (y - x) >= -tol))


def box_radius(box: Box) -> float:
    """Largest absolute bound over all coordinates of a compact box."""
    if not box.is_compact:
        raise ValueError("box_radius needs a compact box")
    return float(np.max(np.maximum(np.abs(box.lower), np.abs(box.upper))))


def project_tangent(point, direction, box: Box, tol: float = BOX_TOL) -> np.ndarray:
    """Projection of ``direction`` onto the tangent cone of ``box`` at ``point``.

    Interior coordinates pass through, coordinates on the lower face keep only
    the nonnegative part, coordinates on the upper face keep only the
    nonpositive part, and degenerate coordinates (lower == upper) are zeroed.
    A point within ``tol`` outside the box is clamped first.
    """
    p, v = _vec(point), _vec(direction)
    if p.shape != v.shape or p.size != box.dimension:
        raise ValueError(f"dimension mismatch: point {p.size}, direction {v.size}, box {box.dimension}")
    if not box.contains(p, tol):
        raise ValueError(f"point {p} lies outside {box} beyond tolerance {tol}")
    p = box.clip(p)
    out = v.copy()
    at_lo = p <= box.lower
    at_hi = p >= box.upper
    out[at_lo] = np.maximum(out[at_lo], 0.0)
    out[at_hi] = np.minimum(out[at_hi], 0.0)
    return out


def tangent_residual(point, direction, box: Box) -> float:
    """Sup-norm of the projected direction; zero exactly at box-constrained equilibria."""
    return float(np.max(np.abs(project_tangent(point, direction, box)), initial=0.0))
