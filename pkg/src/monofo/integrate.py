"""Time integration of projected dynamical systems on boxes.

Fields have the signature ``field(t, x) -> dx/dt``.  Every step is an explicit
step of the unprojected field whose endpoint is projected back onto the box;
the step size is controlled by comparing one full Euler step with two half
steps.  The accepted value is the locally extrapolated one, which equals the
projected explicit midpoint step.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Iterator, Sequence

import numpy as np

from .geometry import BOX_TOL, Box

Field = Callable[[float, np.ndarray], np.ndarray]


class IntegrationError(RuntimeError):
    pass


class StepSizeUnderflow(IntegrationError):
    pass


class NonFiniteFieldError(IntegrationError):
    pass


@dataclass(frozen=True)
class StepConfig:
    initial_step: float = 1e-3
    max_step: float = 1.0
    error_tolerance: float = 1e-6
    max_time: float = 10.0
    # record samples on a fixed grid instead of at every accepted step
    output_dt: float | None = None
    min_step: float = 1e-14
    # step cap = stability_factor / (secant Lipschitz estimate of the field)
    stability_factor: float = 1.5

    def __post_init__(self):
        for name in ("initial_step", "max_step", "error_tolerance", "max_time",
                     "min_step", "stability_factor"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ValueError(f"StepConfig.{name} must be positive and finite, got {val}")
        if self.initial_step > self.max_step:
            raise ValueError("initial_step must not exceed max_step")
        if self.output_dt is not None and not self.output_dt > 0:
            raise ValueError("output_dt must be positive")

    def replace(self, **changes) -> "StepConfig":
        from dataclasses import replace
        return replace(self, **changes)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    labels: list[str] = dc_field(default_factory=list)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        if self.states.shape[0] != self.times.size:
            raise ValueError("one state row per time sample required")
        if not self.labels:
            self.labels = [f"x_{i}" for i in range(self.states.shape[1])]

    def __len__(self):
        return self.times.size

    @property
    def final(self) -> np.ndarray:
        return self.states[-1].copy()

    def column(self, label: str) -> np.ndarray:
        return self.states[:, self.labels.index(label)]

    def select(self, prefix: str) -> np.ndarray:
        """All columns labelled ``prefix_<k>``, in order."""
        idx = [i for i, lab in enumerate(self.labels) if lab.rsplit("_", 1)[0] == prefix]
        return self.states[:, idx]

    @staticmethod
    def concatenate(parts: Sequence["Trajectory"]) -> "Trajectory":
        """Join trajectories that share their boundary samples."""
        times, states = [parts[0].times], [parts[0].states]
        for p in parts[1:]:
            skip = 1 if p.times[0] <= times[-1][-1] else 0
            times.append(p.times[skip:])
            states.append(p.states[skip:])
        return Trajectory(np.concatenate(times), np.concatenate(states), list(parts[0].labels))


def _clip(x, lo, hi):
    if lo is None:
        return x
    return np.minimum(np.maximum(x, lo), hi)


def _prepare(box: Box | None, x0) -> tuple[np.ndarray, np.ndarray | None, np.ndarray | None]:
    x0 = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    if box is None:
        return x0, None, None
    if box.dimension != x0.size:
        raise ValueError(f"x0 has dimension {x0.size}, box has {box.dimension}")
    if not box.contains(x0, BOX_TOL):
        raise ValueError(f"initial state {x0} lies outside {box}")
    return box.clip(x0), box.lower, box.upper


def _eval(field: Field, t: float, x: np.ndarray) -> np.ndarray:
    fx = np.asarray(field(t, x), dtype=float)
    if fx.shape != x.shape:
        raise ValueError(f"field returned shape {fx.shape}, expected {x.shape}")
    if not np.isfinite(fx).all():
        raise NonFiniteFieldError(f"non-finite field value at t={t}, x={x}: {fx}")
    return fx


def _march(field: Field, lo, hi, x: np.ndarray, t0: float, t_end: float,
           cfg: StepConfig) -> Iterator[tuple[float, np.ndarray, np.ndarray, bool]]:
    """Yield ``(t, x, field(t, x), is_output_sample)`` for every accepted step."""
    tol = cfg.error_tolerance
    t = t0
    fx = _eval(field, t, x)
    yield t, x, fx, True
    h = min(cfg.initial_step, cfg.max_step)
    lip = 0.0
    dt_out = cfg.output_dt
    k_out = 1
    next_out = t0 + dt_out if dt_out is not None else t_end
    while t < t_end:
        target = min(next_out, t_end)
        if h < cfg.min_step * max(1.0, abs(t)) and h < target - t:
            raise StepSizeUnderflow(f"step size {h:.3e} underflow at t={t}")
        h_try = min(h, target - t)
        half = 0.5 * h_try
        xh = _clip(x + half * fx, lo, hi)
        fh = np.asarray(field(t + half, xh), dtype=float)
        if not np.isfinite(fh).all():
            h = 0.25 * h_try
            if h < cfg.min_step * max(1.0, abs(t)):
                raise NonFiniteFieldError(f"non-finite field value near t={t}, x={xh}")
            continue
        x_euler = _clip(x + h_try * fx, lo, hi)
        x_halves = _clip(xh + half * fh, lo, hi)
        err = float(abs(x_halves - x_euler).max())
        if err > tol:
            h = h_try * max(0.2, 0.9 * np.sqrt(tol / err))
            if h < cfg.min_step * max(1.0, abs(t)):
                raise StepSizeUnderflow(f"step size {h:.3e} underflow at t={t} (error {err:.3e})")
            continue
        # secant Lipschitz estimate of the field along the half step; kept from the
        # previous step when the move is at roundoff level (e.g. resting on a face)
        moved = float(abs(xh - x).max())
        if moved > 1e-14 * (1.0 + float(abs(x).max())):
            lip = float(abs(fh - fx).max()) / moved
        hit = h_try >= target - t
        t = target if hit else t + h_try
        x = _clip(x + h_try * fh, lo, hi)
        fx = _eval(field, t, x)
        grow = 2.0 if err == 0.0 else min(2.0, max(0.2, 0.9 * np.sqrt(tol / err)))
        # a step shortened to land on the output grid does not shrink the controller state
        h = (max(h, h_try) if hit else h_try) * grow
        h = min(h, cfg.max_step)
        if lip > 0.0:
            h = min(h, cfg.stability_factor / lip)
        sample = dt_out is None or t >= t_end
        if hit and dt_out is not None and t >= next_out:
            sample = True
            k_out += 1
            next_out = t0 + k_out * dt_out
        yield t, x, fx, sample


def integrate_projected(field: Field, box: Box | None, x0, config: StepConfig,
                        t0: float = 0.0, labels: list[str] | None = None) -> Trajectory:
    """Integrate ``x' = Pi_box(x, field(t, x))`` from ``t0`` to ``t0 + config.max_time``.

    ``box=None`` integrates the unconstrained system.  Coordinates of ``box``
    with infinite bounds are never clipped.
    """
    x, lo, hi = _prepare(box, x0)
    t_end = t0 + config.max_time
    times, states = [], []
    for t, xs, _, sample in _march(field, lo, hi, x, t0, t_end, config):
        if sample:
            times.append(t)
            states.append(xs)
    return Trajectory(np.array(times), np.array(states), list(labels or []))


@dataclass
class SettleResult:
    state: np.ndarray
    residual: float
    time: float
    converged: bool

    def __bool__(self):
        return self.converged


def projected_residual(x: np.ndarray, fx: np.ndarray, lo, hi) -> float:
    if lo is None:
        return float(np.max(np.abs(fx)))
    v = fx.copy()
    at_lo = x <= lo
    at_hi = x >= hi
    v[at_lo] = np.maximum(v[at_lo], 0.0)
    v[at_hi] = np.minimum(v[at_hi], 0.0)
    return float(np.max(np.abs(v)))


def settle(field: Field, box: Box | None, x0, residual_tol: float = 1e-9,
           max_time: float = 1e4, config: StepConfig | None = None) -> SettleResult:
    """Integrate until the projected residual drops below ``residual_tol``.

    Returns a non-converged :class:`SettleResult` (never raises) when
    ``max_time`` elapses first.
    """
    cfg = (config or StepConfig(max_step=10.0)).replace(max_time=max_time, output_dt=None)
    x, lo, hi = _prepare(box, x0)
    best = None
    for t, xs, fx, _ in _march(field, lo, hi, x, 0.0, max_time, cfg):
        res = projected_residual(xs, fx, lo, hi)
        if res < residual_tol:
            return SettleResult(xs.copy(), res, t, True)
        best = (xs, res, t)
    xs, res, t = best
    return SettleResult(xs.copy(), res, t, False)
