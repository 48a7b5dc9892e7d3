"""Plant models, steady-state maps, sensitivities and monotonicity checks."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .geometry import Box, OrthantOrder, orthant_leq
from .integrate import StepConfig, integrate_projected, settle

MONOTONE_SIGN_TOL = 1e-10
FD_REL_STEP = 1e-5
FD_BOX_INFLATION = 0.01


class SteadyStateError(RuntimeError):
    """The plant did not settle for a constant input."""


def _vec(v) -> np.ndarray:
    return np.atleast_1d(np.asarray(v, dtype=float))


def fd_jacobian(fun: Callable[[np.ndarray], np.ndarray], x, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian, one column per coordinate of ``x``."""
    x = _vec(x)
    cols = []
    for j in range(x.size):
        h = rel_step * (1.0 + abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        cols.append((_vec(fun(xp)) - _vec(fun(xm))) / (2 * h))
    return np.stack(cols, axis=1)


@dataclass(frozen=True)
class PlantModel:
    """``x' = f(x, u, w)``, ``y = g(x)`` with optional analytic steady-state data.

    ``w`` is an exogenous disturbance held by the model; the controller never
    sees it.  Callables taking ``w`` receive ``self.w``.
    """

    state_dim: int
    input_dim: int
    output_dim: int
    dynamics: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    output: Callable[[np.ndarray], np.ndarray]
    jac_x: Callable | None = None
    jac_u: Callable | None = None
    jac_g: Callable | None = None
    k_x: Callable | None = None
    k_y: Callable | None = None
    k_y_jac: Callable | None = None
    # affine steady-state output k_y(u) = S u + s(w)
    affine_gain: np.ndarray | None = None
    affine_offset: Callable | None = None
    w: np.ndarray = field(default_factory=lambda: np.zeros(0))
    state_region: Box | None = None
    input_box: Box | None = None
    name: str = "plant"

    def __post_init__(self):
        for attr in ("state_dim", "input_dim", "output_dim"):
            if int(getattr(self, attr)) < 1:
                raise ValueError(f"{attr} must be a positive integer")
        object.__setattr__(self, "w", _vec(self.w))
        if self.affine_gain is not None:
            S = np.atleast_2d(np.asarray(self.affine_gain, dtype=float))
            if S.shape != (self.output_dim, self.input_dim):
                raise ValueError(f"affine gain must be {self.output_dim}x{self.input_dim}, got {S.shape}")
            object.__setattr__(self, "affine_gain", S)

    def with_disturbance(self, w) -> "PlantModel":
        return replace(self, w=_vec(w))

    def f(self, x, u) -> np.ndarray:
        return _vec(self.dynamics(_vec(x), _vec(u), self.w))

    def g(self, x) -> np.ndarray:
        return _vec(self.output(_vec(x)))

    @property
    def is_affine(self) -> bool:
        return self.affine_gain is not None

    def affine_data(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.is_affine:
            raise ValueError(f"{self.name} has no affine steady-state data")
        s = (_vec(self.affine_offset(self.w)) if self.affine_offset is not None
             else np.zeros(self.output_dim))
        return self.affine_gain.copy(), s

    def dfdx(self, x, u) -> np.ndarray:
        if self.jac_x is not None:
            return np.atleast_2d(np.asarray(self.jac_x(_vec(x), _vec(u), self.w), dtype=float))
        return fd_jacobian(lambda xx: self.f(xx, u), x)

    def dfdu(self, x, u) -> np.ndarray:
        if self.jac_u is not None:
            return np.atleast_2d(np.asarray(self.jac_u(_vec(x), _vec(u), self.w), dtype=float))
        return fd_jacobian(lambda uu: self.f(x, uu), u)

    def dgdx(self, x) -> np.ndarray:
        if self.jac_g is not None:
            return np.atleast_2d(np.asarray(self.jac_g(_vec(x)), dtype=float))
        return fd_jacobian(self.g, x)

    def default_x0(self) -> np.ndarray:
        if self.state_region is not None and self.state_region.is_compact:
            return self.state_region.midpoint
        return np.zeros(self.state_dim)


def _check_input(plant: PlantModel, u) -> np.ndarray:
    u = _vec(u)
    if u.size != plant.input_dim:
        raise ValueError(f"input has dimension {u.size}, plant expects {plant.input_dim}")
    return u


def steady_state(plant: PlantModel, u, tol: float = 1e-9, x0=None,
                 max_time: float = 1e4, use_analytic: bool = True) -> np.ndarray:
    """Equilibrium state for the constant input ``u``.

    Uses the analytic map when available, otherwise simulates from ``x0``
    (default: midpoint of the declared state region) until ``||f|| < tol``.
    """
    u = _check_input(plant, u)
    if use_analytic and plant.k_x is not None:
        return _vec(plant.k_x(u, plant.w))
    x0 = plant.default_x0() if x0 is None else _vec(x0)
    res = settle(lambda t, x: plant.f(x, u), None, x0, residual_tol=tol, max_time=max_time,
                 config=StepConfig(initial_step=1e-3, max_step=10.0, error_tolerance=1e-8))
    if not res.converged:
        raise SteadyStateError(
            f"{plant.name} did not settle for u={u} within t={max_time} (residual {res.residual:.3e})")
    return res.state


def steady_output(plant: PlantModel, u, tol: float = 1e-9, use_analytic: bool = True) -> np.ndarray:
    u = _check_input(plant, u)
    if use_analytic and plant.k_y is not None:
        return _vec(plant.k_y(u, plant.w))
    if use_analytic and plant.is_affine and plant.k_x is None:
        S, s = plant.affine_data()
        return S @ u + s
    return plant.g(steady_state(plant, u, tol=tol, use_analytic=use_analytic))


def sensitivity_fd(plant: PlantModel, u, box: Box | None = None, tol: float = 1e-12,
                   use_analytic: bool = True) -> np.ndarray:
    """Central differences of the steady-state output map.

    Probe steps are ``1e-5 * (1 + |u_i|)``, shortened so that probes stay in
    ``box`` inflated by 1% of its width.
    """
    u = _check_input(plant, u)
    box = box if box is not None else plant.input_box
    lim = box.inflate(FD_BOX_INFLATION) if box is not None else None
    cols = []
    for i in range(u.size):
        h = FD_REL_STEP * (1.0 + abs(u[i]))
        hp = hm = h
        if lim is not None:
            hp = min(h, lim.upper[i] - u[i])
            hm = min(h, u[i] - lim.lower[i])
        up, um = u.copy(), u.copy()
        up[i] += hp
        um[i] -= hm
        yp = steady_output(plant, up, tol=tol, use_analytic=use_analytic)
        ym = steady_output(plant, um, tol=tol, use_analytic=use_analytic)
        cols.append((yp - ym) / (hp + hm))
    return np.stack(cols, axis=1)


def sensitivity(plant: PlantModel, u, box: Box | None = None) -> np.ndarray:
    """``p x m`` Jacobian of the steady-state output map at ``u``."""
    u = _check_input(plant, u)
    if plant.k_y_jac is not None:
        return np.atleast_2d(np.asarray(plant.k_y_jac(u, plant.w), dtype=float)).reshape(
            plant.output_dim, plant.input_dim)
    if plant.is_affine:
        return plant.affine_gain.copy()
    jac = sensitivity_fd(plant, u, box)
    if not np.all(np.isfinite(jac)):
        warnings.warn(f"finite-difference sensitivity of {plant.name} is not finite at u={u}")
    return jac


def sensitivity_provenance(plant: PlantModel) -> str:
    if plant.k_y_jac is not None or plant.is_affine:
        return "analytic"
    return "finite-difference"


def steady_state_provenance(plant: PlantModel) -> str:
    return "analytic" if plant.k_x is not None else "simulated"


# -- monotonicity ------------------------------------------------------------

@dataclass
class MonotonicityViolation:
    x: np.ndarray
    u: np.ndarray
    condition: str
    value: float


@dataclass
class MonotonicityReport:
    violations: list[MonotonicityViolation]
    samples_checked: int
    # always sampled: the sign conditions are only checked on finitely many points
    sampled: bool = True

    @property
    def satisfied(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.satisfied


def check_monotone(plant: PlantModel, samples: Sequence[tuple], orders: tuple | None = None,
                   tol: float = MONOTONE_SIGN_TOL) -> MonotonicityReport:
    """Jacobian sign test for monotonicity at every ``(x, u)`` sample.

    With orders ``(K_U, K_X, K_Y)`` the signs are corrected by the orthant
    patterns; the default is the standard order on all three spaces.
    """
    n, m, p = plant.state_dim, plant.input_dim, plant.output_dim
    if orders is None:
        su, sx, sy = np.ones(m), np.ones(n), np.ones(p)
    else:
        su, sx, sy = (o.signs for o in orders)
    off = ~np.eye(n, dtype=bool)
    violations = []
    count = 0
    for x, u in samples:
        x, u = _vec(x), _vec(u)
        count += 1
        jx = np.outer(sx, sx) * plant.dfdx(x, u)
        ju = np.outer(sx, su) * plant.dfdu(x, u)
        jg = np.outer(sy, sx) * plant.dgdx(x)
        for i, j in zip(*np.nonzero(off & (jx < -tol))):
            violations.append(MonotonicityViolation(x, u, f"df{i}/dx{j} >= 0", float(jx[i, j])))
        for i, j in zip(*np.nonzero(ju < -tol)):
            violations.append(MonotonicityViolation(x, u, f"df{i}/du{j} >= 0", float(ju[i, j])))
        for l, i in zip(*np.nonzero(jg < -tol)):
            violations.append(MonotonicityViolation(x, u, f"dg{l}/dx{i} >= 0", float(jg[l, i])))
    return MonotonicityReport(violations, count)


def monotonicity_samples(state_box: Box, input_box: Box, points_per_dim: int = 5,
                         n_random: int = 50, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Tensor grid over ``state_box x input_box`` plus uniform random samples."""
    joint = Box.product(state_box, input_box)
    n = state_box.dimension
    pts = joint.grid(points_per_dim)
    if n_random:
        pts = np.vstack([pts, joint.sample(np.random.default_rng(seed), n_random)])
    return [(p[:n], p[n:]) for p in pts]


def check_metzler(A, Bs, C) -> bool:
    """True iff ``A`` is Metzler and every ``B`` in ``Bs`` and ``C`` are nonnegative."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got {A.shape}")
    n = A.shape[0]
    if isinstance(Bs, np.ndarray):
        Bs = [Bs]
    mats = []
    for B in Bs:
        B = np.asarray(B, dtype=float)
        B = B.reshape(n, -1) if B.ndim < 2 else B
        if B.shape[0] != n:
            raise ValueError(f"B has {B.shape[0]} rows, A has {n}")
        mats.append(B)
    if C.shape[1] != n:
        raise ValueError(f"C has {C.shape[1]} columns, A has {n}")
    off = A[~np.eye(n, dtype=bool)]
    return bool(np.all(off >= 0) and all(np.all(B >= 0) for B in mats) and np.all(C >= 0))


def _as_signal(u) -> Callable[[float], np.ndarray]:
    if callable(u):
        return lambda t: _vec(u(t))
    const = _vec(u)
    return lambda t: const


@dataclass
class OrderViolation:
    trial: int
    time: float
    kind: str
    margin: float


@dataclass
class OrderPreservationReport:
    violations: list[OrderViolation]
    trials_checked: int
    samples_checked: int

    @property
    def satisfied(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.satisfied


def verify_order_preservation(plant: PlantModel, trials: Sequence[tuple], orders: tuple | None = None,
                              horizon: float = 20.0, dt: float = 0.05, tol: float = 1e-7,
                              config: StepConfig | None = None) -> OrderPreservationReport:
    """Simulate ordered pairs of trials and check the state and output orders.

    Each trial is ``(x0, x0_low, u, u_low)`` with ``x0 >= x0_low`` and
    ``u(t) >= u_low(t)``; inputs are constant vectors or callables of time.
    Both trajectories are sampled on the same grid.
    """
    n, m, p = plant.state_dim, plant.input_dim, plant.output_dim
    ku, kx, ky = orders if orders is not None else (
        OrthantOrder.standard(m), OrthantOrder.standard(n), OrthantOrder.standard(p))
    cfg = (config or StepConfig(error_tolerance=1e-8, max_step=0.1)).replace(
        max_time=horizon, output_dt=dt)
    violations = []
    samples = 0
    for k, (x0, x0_low, u, u_low) in enumerate(trials):
        us, uls = _as_signal(u), _as_signal(u_low)
        if not orthant_leq(x0_low, x0, kx):
            raise ValueError(f"trial {k}: initial states are not ordered")
        hi = integrate_projected(lambda t, x: plant.f(x, us(t)), None, x0, cfg)
        lo = integrate_projected(lambda t, x: plant.f(x, uls(t)), None, x0_low, cfg)
        for t, xa, xb in zip(hi.times, hi.states, lo.states):
            samples += 1
            if not orthant_leq(uls(t), us(t), ku):
                raise ValueError(f"trial {k}: inputs are not ordered at t={t}")
            gap = float(np.min(kx.signs * (xa - xb)))
            if gap < -tol:
                violations.append(OrderViolation(k, float(t), "state", gap))
            ygap = float(np.min(ky.signs * (plant.g(xa) - plant.g(xb))))
            if ygap < -tol:
                violations.append(OrderViolation(k, float(t), "output", ygap))
    return OrderPreservationReport(violations, len(trials), samples)


# the name used by the order-preservation operation; not a pytest test
test_order_preservation = verify_order_preservation
test_order_preservation.__test__ = False
