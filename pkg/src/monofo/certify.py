"""Sufficient conditions for gain-independent convergence of OFO on monotone plants.

Every check here is computational: universally quantified conditions are
evaluated on grids and random samples, so a positive verdict means
"supported on samples", never "proved".  Verdicts that rest on sampling are
flagged in :class:`CertificationReport`.
"""

from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .control import CostModel
from .geometry import Box, box_radius
from .integrate import StepConfig, integrate_projected
from .plant import (PlantModel, check_monotone, fd_jacobian, monotonicity_samples,
                    sensitivity, steady_output, steady_state)

ARGMIN_TOL = 1e-10
ARGMIN_MAX_ITER = 100_000
MULTISTART_AGREEMENT = 1e-6
MAX_CORNER_STARTS = 64
CURVATURE_TOL = 1e-10


class CertificationError(RuntimeError):
    pass


class IterationCapReached(CertificationError):
    pass


class MultiStartDisagreement(CertificationError):
    """Different starts of a convex solve ended at different points."""


class Verdict(str, enum.Enum):
    LEMMA2I = "verified-by-lemma2i"
    LEMMA2II = "verified-by-lemma2ii"
    LEMMA5_SAMPLED = "verified-by-lemma5-sampled"
    LEMMA3I = "verified-by-lemma3i"
    LEMMA3II = "verified-by-lemma3ii"
    LEMMA4 = "verified-by-lemma4"
    COROLLARY1 = "verified-by-corollary1"
    ITERATION = "verified-by-iteration"
    NOT_ESTABLISHED = "not-established"

    def __str__(self):
        return self.value

    @property
    def established(self) -> bool:
        return self is not Verdict.NOT_ESTABLISHED


# -- projected gradient solver -----------------------------------------------

@dataclass
class PGDResult:
    u: np.ndarray
    value: float
    residual: float
    iterations: int


def _residual(u, g, box) -> float:
    return float(np.max(np.abs(u - box.clip(u - g))))


def projected_gradient(fun, grad, box: Box, u0, tol: float = ARGMIN_TOL,
                       max_iter: int = ARGMIN_MAX_ITER, polish: int = 50) -> PGDResult:
    """Projected gradient descent with Armijo backtracking on the step.

    Stops once ``||u - P(u - grad(u))||_inf < tol``; a few extra polishing
    iterations then run while the residual keeps decreasing.
    """
    u = box.clip(np.atleast_1d(np.asarray(u0, dtype=float)))
    fu, g = float(fun(u)), np.asarray(grad(u), dtype=float)
    step = 1.0
    res = _residual(u, g, box)
    extra = None
    for k in range(max_iter):
        if res < tol:
            extra = polish if extra is None else extra
            if extra == 0:
                break
            extra -= 1
        slack = 1e-15 * (1.0 + abs(fu))
        while True:
            un = box.clip(u - step * g)
            d = un - u
            fn = float(fun(un))
            if fn <= fu + float(g @ d) + float(d @ d) / (2 * step) + slack:
                break
            step *= 0.5
            if step < 1e-30:
                raise CertificationError(f"line search failed at u={u}")
        gn = np.asarray(grad(un), dtype=float)
        res_n = _residual(un, gn, box)
        if extra is not None and res_n >= res:
            break
        u, fu, g, res = un, fn, gn, res_n
    else:
        if res >= tol:
            raise IterationCapReached(f"no convergence within {max_iter} iterations (residual {res:.3e})")
    return PGDResult(u, fu, res, k)


def _starts(box: Box) -> list[np.ndarray]:
    starts = [box.midpoint]
    if 2 ** box.dimension <= MAX_CORNER_STARTS:
        starts += box.corners()
    return starts


def _multistart(fun, grad, box: Box, tol: float, max_iter: int) -> list[PGDResult]:
    return [projected_gradient(fun, grad, box, s, tol, max_iter) for s in _starts(box)]


# -- surrogate problem and iterations ------------------------------------------

def surrogate_objective(cost: CostModel, plant: PlantModel, weight: np.ndarray):
    """``u -> Phi_u(u) + k_y(u)' weight`` and its gradient."""
    weight = np.asarray(weight, dtype=float)

    def fun(u):
        return cost.value_u(u) + float(steady_output(plant, u) @ weight)

    def grad(u):
        return cost.grad_u(u) + sensitivity(plant, u).T @ weight

    return fun, grad


def surrogate_argmin(cost: CostModel, plant: PlantModel, box: Box, anchor_u=None, anchor_y=None,
                     tol: float = ARGMIN_TOL, max_iter: int = ARGMIN_MAX_ITER,
                     agreement: float = MULTISTART_AGREEMENT) -> np.ndarray:
    """Minimize ``Phi_u(u) + k_y(u)' grad Phi_y(y_anchor)`` over the box.

    The anchor output is ``k_y(anchor_u)`` or the given ``anchor_y`` (e.g. a
    measured ``g(x)``).  Raises :class:`MultiStartDisagreement` when starts from
    the box corners and midpoint end more than ``agreement`` apart.
    """
    if (anchor_u is None) == (anchor_y is None):
        raise ValueError("give exactly one of anchor_u and anchor_y")
    if not box.is_compact:
        raise ValueError("surrogate_argmin needs a compact box")
    y_anchor = steady_output(plant, anchor_u) if anchor_y is None else np.atleast_1d(anchor_y)
    fun, grad = surrogate_objective(cost, plant, cost.grad_y(y_anchor))
    runs = _multistart(fun, grad, box, tol, max_iter)
    pts = np.array([r.u for r in runs])
    spread = float(np.max(np.abs(pts - pts[0])))
    if spread > agreement:
        raise MultiStartDisagreement(f"starts disagree by {spread:.3e} (anchor {y_anchor})")
    return min(runs, key=lambda r: r.value).u


@dataclass
class SmallGainResult:
    iterates: np.ndarray
    fixed_point: np.ndarray | None
    converged: bool
    rate: float

    def errors(self, reference=None) -> np.ndarray:
        ref = self.iterates[-1] if reference is None else np.atleast_1d(reference)
        return np.max(np.abs(self.iterates - ref), axis=1)


def fit_rate(errors: Sequence[float], floor: float = 0.0) -> float:
    """Least-squares geometric rate over the tail half of an error sequence.

    Errors at or below ``floor`` are dropped before fitting.
    """
    e = np.asarray(errors, dtype=float)
    tail = e[len(e) // 2:]
    idx = np.nonzero(tail > floor)[0]
    if idx.size < 3:
        idx = np.nonzero(e > floor)[0]
        tail = e
    if idx.size < 3:
        return float("nan")
    slope = np.polyfit(idx.astype(float), np.log(tail[idx]), 1)[0]
    return float(np.exp(slope))


def small_gain_iterate(cost: CostModel, plant: PlantModel, box: Box, u0, max_iters: int = 2000,
                       tol: float = 1e-9) -> SmallGainResult:
    """Iterate ``u_{n+1} = argmin_u Phi_u(u) + k_y(u)' grad Phi_y(k_y(u_n))``.

    Stops when consecutive iterates differ by less than ``tol`` (sup norm).
    The rate is fitted on errors against the last iterate, ignoring errors
    below ``1e3 * tol`` where the fixed-point estimate itself is uncertain.
    """
    u = box.clip(np.atleast_1d(np.asarray(u0, dtype=float)))
    if not box.contains(u0):
        raise ValueError(f"u0={u0} lies outside {box}")
    its = [u]
    converged = False
    for _ in range(max_iters):
        un = surrogate_argmin(cost, plant, box, anchor_u=u)
        its.append(un)
        if np.max(np.abs(un - u)) < tol:
            converged = True
            break
        u = un
    arr = np.array(its)
    res = SmallGainResult(arr, arr[-1].copy() if converged else None, converged, float("nan"))
    if converged:
        res.rate = fit_rate(res.errors()[:-1], floor=1e3 * tol)
    return res


@dataclass
class ReferenceOptimum:
    u: np.ndarray
    residual: float
    value: float


def reduced_objective(cost: CostModel, plant: PlantModel):
    """``u -> Phi_u(u) + Phi_y(k_y(u))`` and its chain-rule gradient."""

    def fun(u):
        return cost.value(u, steady_output(plant, u))

    def grad(u):
        return cost.grad_u(u) + sensitivity(plant, u).T @ cost.grad_y(steady_output(plant, u))

    return fun, grad


def solve_reference_optimum(cost: CostModel, plant: PlantModel, box: Box, tol: float = ARGMIN_TOL,
                            max_iter: int = ARGMIN_MAX_ITER) -> ReferenceOptimum:
    """Best critical point of the steady-state problem over the box (multi-start PGD)."""
    if not box.is_compact:
        raise ValueError("the input box must be compact")
    fun, grad = reduced_objective(cost, plant)
    best = min(_multistart(fun, grad, box, tol, max_iter), key=lambda r: r.value)
    return ReferenceOptimum(best.u, best.residual, best.value)


def projected_gradient_residual(cost: CostModel, plant: PlantModel, box: Box, u) -> float:
    """``||Pi_box(u, -grad Phi~(u))||_inf``; zero exactly at critical points."""
    from .geometry import tangent_residual

    _, grad = reduced_objective(cost, plant)
    return tangent_residual(u, -grad(np.atleast_1d(u)), box)


# -- sample sets ---------------------------------------------------------------

def input_grid(box: Box, density: int, max_points: int = 20_000) -> np.ndarray:
    per_dim = max(2, min(density, int(max_points ** (1.0 / box.dimension))))
    return box.grid(per_dim)


def reachable_states(plant: PlantModel, box: Box, x0=None, horizon: float = 400.0,
                     dt: float = 0.5) -> tuple[np.ndarray, Box]:
    """States visited under the constant inputs ``u_min`` and ``u_max``.

    Any input inside the box keeps the state between these two trajectories,
    so their envelope bounds the reachable set.
    """
    x0 = plant.default_x0() if x0 is None else np.atleast_1d(np.asarray(x0, dtype=float))
    cfg = StepConfig(max_time=horizon, output_dt=dt, max_step=dt, error_tolerance=1e-8)
    trajs = [integrate_projected(lambda t, x, u=u: plant.f(x, u), None, x0, cfg).states
             for u in (box.lower, box.upper)]
    states = np.vstack(trajs)
    return states, Box(states.min(axis=0), states.max(axis=0))


def _subsample(rows: np.ndarray, k: int) -> np.ndarray:
    if len(rows) <= k:
        return rows
    return rows[np.linspace(0, len(rows) - 1, k).astype(int)]


def _ky_hessians(plant: PlantModel, u) -> np.ndarray:
    """``p x m x m`` second derivatives of ``k_y`` by differencing the sensitivity."""
    p, m = plant.output_dim, plant.input_dim
    if plant.is_affine:
        return np.zeros((p, m, m))
    jac = fd_jacobian(lambda v: sensitivity(plant, v).ravel(), u, 1e-5)
    return jac.reshape(p, m, m)


def _min_eig(M) -> float:
    M = np.atleast_2d(M)
    return float(np.min(np.linalg.eigvalsh(0.5 * (M + M.T))))


# -- controller monotonicity --------------------------------------------------

def check_lemma2(plant: PlantModel, cost: CostModel, u_samples=None, y_samples=None,
                 tol: float = CURVATURE_TOL) -> Verdict:
    """Monotonicity of the controller subsystem from cost and steady-state structure.

    Assumes the plant itself is already known to be monotone.  Branch (i): SISO
    plant with convex output cost.  Branch (ii): affine ``k_y`` with
    nonnegative gain, input-cost Hessian with nonpositive off-diagonals and
    output-cost Hessian with nonnegative entries.
    """
    m, p = plant.input_dim, plant.output_dim
    u_samples = [] if u_samples is None else list(u_samples)
    y_samples = [] if y_samples is None else list(y_samples)
    if not y_samples:
        y_samples = [np.zeros(p)]
    if m == 1 and p == 1 and all(_min_eig(cost.hess_y(y)) >= -tol for y in y_samples):
        return Verdict.LEMMA2I
    if plant.is_affine:
        S, _ = plant.affine_data()
        off = ~np.eye(m, dtype=bool)
        if (np.all(S >= -tol)
                and all(np.all(cost.hess_u(u)[off] <= tol) for u in u_samples)
                and all(np.all(cost.hess_y(y) >= -tol) for y in y_samples)):
            return Verdict.LEMMA2II
    return Verdict.NOT_ESTABLISHED


def controller_drift(cost: CostModel, plant: PlantModel, v, x) -> np.ndarray:
    """``q(v, x) = -grad Phi_u(v) - grad k_y(v)' grad Phi_y(g(x))``."""
    v = np.atleast_1d(v)
    return -cost.grad_u(v) - sensitivity(plant, v).T @ cost.grad_y(plant.g(x))


@dataclass
class Lemma5Result:
    verified: bool
    pairs_checked: int
    violations: list[tuple]

    @property
    def verdict(self) -> Verdict:
        return Verdict.LEMMA5_SAMPLED if self.verified else Verdict.NOT_ESTABLISHED


def ordered_pairs(box: Box, states: np.ndarray, n_pairs: int, seed: int = 0) -> list[tuple]:
    """Random ``(v, x, v', x')`` with ``v <= v'``, ``x >= x'`` and at least one ``v_i = v'_i``."""
    rng = np.random.default_rng(seed)
    lo, hi = states.min(axis=0), states.max(axis=0)
    m = box.dimension
    pairs = []
    for _ in range(n_pairs):
        vp = box.sample(rng, 1)[0]
        v = box.clip(vp - rng.random(m) * box.width * rng.random())
        tie = rng.random(m) < 0.5
        tie[rng.integers(m)] = True
        v[tie] = vp[tie]
        xp = states[rng.integers(len(states))]
        x = np.minimum(xp + rng.random(xp.size) * (hi - lo) * rng.random(), hi)
        pairs.append((v, x, vp, xp))
    return pairs


def check_lemma5_sampled(cost: CostModel, plant: PlantModel, box: Box, pairs: Sequence[tuple],
                         tol: float = 1e-10) -> Lemma5Result:
    """Sampled tangent-cone condition for monotonicity of the controller subsystem.

    For each ``(v, x, v', x')`` with ``v <= v'`` and ``x >= x'``, the difference
    ``q(v, x) - q(v', x')`` must lie in the tangent cone of the nonpositive
    orthant at ``v - v'``: only coordinates with ``v_i = v'_i`` constrain it,
    and there the difference must be nonpositive.
    """
    violations = []
    for v, x, vp, xp in pairs:
        v, vp = np.atleast_1d(v), np.atleast_1d(vp)
        if np.any(v > vp) or np.any(np.atleast_1d(x) < np.atleast_1d(xp)):
            raise ValueError("pairs must satisfy v <= v' and x >= x'")
        diff = controller_drift(cost, plant, v, x) - controller_drift(cost, plant, vp, xp)
        binding = v == vp
        if np.any(diff[binding] > tol):
            violations.append((v, x, vp, xp, diff))
    return Lemma5Result(not violations, len(pairs), violations)


# -- unique surrogate minimizer -----------------------------------------------

@dataclass
class Lemma3Result:
    verdict: Verdict
    modulus: float
    sampled: bool


def check_lemma3(cost: CostModel, plant: PlantModel, box: Box, states=None, density: int = 41,
                 tol: float = CURVATURE_TOL) -> Lemma3Result:
    """Strict convexity of ``v -> Phi_u(v) + k_y(v)' grad Phi_y(g(x))``.

    Branch (ii) applies to affine ``k_y`` with strictly convex ``Phi_u``
    (exact for quadratic costs).  Branch (i) estimates the convexity modulus
    on a ``v`` grid for every output ``g(x)`` over ``states``.
    """
    grid = input_grid(box, density)
    hess_u_min = min(_min_eig(cost.hess_u(v)) for v in grid)
    if cost.beta_u is not None and cost.hess_phi_u is not None:
        hess_u_min = min(hess_u_min, 2.0 * cost.beta_u)
    if plant.is_affine and hess_u_min > tol:
        return Lemma3Result(Verdict.LEMMA3II, hess_u_min, sampled=cost.beta_u is None)
    if states is None:
        states, _ = reachable_states(plant, box)
    outputs = np.unique(np.array([plant.g(x) for x in _subsample(np.asarray(states), 400)]), axis=0)
    weights = np.array([cost.grad_y(y) for y in outputs])
    modulus = np.inf
    for v in grid:
        H_u, H_k = cost.hess_u(v), _ky_hessians(plant, v)
        for c in weights:
            modulus = min(modulus, _min_eig(H_u + np.tensordot(c, H_k, axes=1)))
    verdict = Verdict.LEMMA3I if modulus > tol else Verdict.NOT_ESTABLISHED
    return Lemma3Result(verdict, float(modulus), sampled=True)


# -- small-gain convergence ---------------------------------------------------

@dataclass
class Constants:
    mu: float
    ell: float
    sigma: float
    eta: float
    provenance: dict[str, str] = field(default_factory=dict)

    @property
    def contraction(self) -> float:
        return self.ell / self.mu


def estimate_constants(cost: CostModel, plant: PlantModel, box: Box, density: int = 41) -> Constants:
    """Curvature ``mu`` and cross-Lipschitz ``ell`` of the surrogate, plus ``sigma`` and ``eta``.

    With a quadratic cost and affine ``k_y``, ``mu = 2 beta_u`` and
    ``ell = 2 beta_y ||S||^2`` exactly.  Otherwise, on a grid over the box:
    ``mu`` is the smallest Hessian eigenvalue of ``u -> Phi~(u, u_bar)``,
    ``ell`` the largest norm of the ``u_bar``-Jacobian of its gradient,
    ``sigma`` the largest sensitivity norm, and ``eta`` the largest difference
    quotient of the sensitivity between grid neighbours.
    """
    if not box.is_compact:
        raise ValueError("estimate_constants needs a compact box")
    grid = input_grid(box, density)
    sens = [sensitivity(plant, u) for u in grid]
    sigma = max(float(np.linalg.norm(S, 2)) for S in sens)
    eta = _grid_lipschitz(box, grid, sens)
    prov = {"sigma": "sampled lower estimate", "eta": "sampled lower estimate"}
    if plant.is_affine:
        S, _ = plant.affine_data()
        prov.update(sigma="analytic", eta="analytic")
        sigma, eta = float(np.linalg.norm(S, 2)), 0.0
    if plant.is_affine and cost.is_quadratic:
        S, _ = plant.affine_data()
        mu = 2.0 * cost.beta_u
        ell = 2.0 * cost.beta_y * float(np.linalg.norm(S, 2)) ** 2
        prov.update(mu="analytic", ell="analytic")
        return Constants(mu, ell, sigma, eta, prov)

    weights = [cost.grad_y(steady_output(plant, ub)) for ub in grid]
    mu = np.inf
    for u, S in zip(grid, sens):
        H_u, H_k = cost.hess_u(u), _ky_hessians(plant, u)
        for c in weights:
            mu = min(mu, _min_eig(H_u + np.tensordot(c, H_k, axes=1)))
    ell = 0.0
    for ub, Sb in zip(grid, sens):
        inner = cost.hess_y(steady_output(plant, ub)) @ Sb
        for S in sens:
            ell = max(ell, float(np.linalg.norm(S.T @ inner, 2)))
    prov.update(mu="sampled upper estimate", ell="sampled lower estimate")
    return Constants(float(mu), float(ell), sigma, eta, prov)


def _grid_lipschitz(box: Box, grid: np.ndarray, values: list[np.ndarray]) -> float:
    per_dim = round(len(grid) ** (1.0 / box.dimension))
    vals = np.array(values).reshape((per_dim,) * box.dimension + values[0].shape)
    pts = grid.reshape((per_dim,) * box.dimension + (box.dimension,))
    best = 0.0
    for ax in range(box.dimension):
        dv = np.diff(vals, axis=ax)
        dx = np.linalg.norm(np.diff(pts, axis=ax), axis=-1)
        norms = np.linalg.norm(dv.reshape(dv.shape[:box.dimension] + (-1,)), axis=-1)
        ok = dx > 0
        if np.any(ok):
            best = max(best, float(np.max(norms[ok] / dx[ok])))
    return best


@dataclass
class Lemma4Result:
    verified: bool
    rate: float

    @property
    def verdict(self) -> Verdict:
        return Verdict.LEMMA4 if self.verified else Verdict.NOT_ESTABLISHED


def check_lemma4(mu: float, ell: float) -> Lemma4Result:
    """Small-gain contraction from ``mu > ell``; the iteration then contracts by ``ell/mu``."""
    if not mu > 0:
        raise ValueError(f"strong convexity modulus must be positive, got {mu}")
    return Lemma4Result(bool(mu > ell), float(ell / mu))


def check_corollary1(beta_u: float, beta_y: float, S, box: Box) -> Verdict:
    """Quadratic costs with linear ``k_y = S u``: ``beta_u > beta_y * u_hat * ||S||^2``."""
    u_hat = box_radius(box)
    S = np.atleast_2d(np.asarray(S, dtype=float))
    ok = beta_u > beta_y * u_hat * float(np.linalg.norm(S, 2)) ** 2
    return Verdict.COROLLARY1 if ok else Verdict.NOT_ESTABLISHED


def suggest_regularization(mu: float, ell: float, margin: float = 0.05) -> float:
    """Smallest ``beta_bar >= 0`` with ``mu + 2 beta_bar >= ell (1 + margin)``.

    Adding ``beta_bar ||u||^2`` to the input cost raises ``mu`` by
    ``2 beta_bar`` and leaves ``ell`` unchanged.
    """
    if ell < 0 or margin < 0:
        raise ValueError("ell and margin must be nonnegative")
    return max(0.0, (ell * (1.0 + margin) - mu) / 2.0)


# -- pipeline ------------------------------------------------------------------

@dataclass
class CertificationReport:
    asm4_i: Verdict
    asm4_ii: Verdict
    asm4_iii: Verdict
    constants: Constants
    fixed_point: np.ndarray | None
    monotone: bool
    psi_modulus: float | None = None
    notes: list[str] = field(default_factory=list)
    label: str = ""

    @property
    def certified(self) -> bool:
        return self.monotone and all(v.established for v in (self.asm4_i, self.asm4_ii, self.asm4_iii))

    @property
    def sampled(self) -> bool:
        return True

    def to_dict(self) -> dict:
        c = self.constants
        return {
            "label": self.label,
            "certified": self.certified,
            "sampled_not_proved": self.sampled,
            "plant_monotone": self.monotone,
            "asm4": {"i": str(self.asm4_i), "ii": str(self.asm4_ii), "iii": str(self.asm4_iii)},
            "constants": {"mu": c.mu, "ell": c.ell, "sigma": c.sigma, "eta": c.eta,
                          "contraction": c.contraction, "provenance": dict(c.provenance)},
            "psi_modulus": self.psi_modulus,
            "fixed_point": None if self.fixed_point is None else self.fixed_point.tolist(),
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def summary(self) -> str:
        c = self.constants
        head = f"[{self.label}] " if self.label else ""
        lines = [
            f"{head}{'CERTIFIED' if self.certified else 'NOT CERTIFIED'} (sampled, not proved)",
            f"  plant monotone (sampled): {self.monotone}",
            f"  controller monotone:   {self.asm4_i}",
            f"  unique minimizer:      {self.asm4_ii}",
            f"  small-gain converges:  {self.asm4_iii}",
            f"  mu = {c.mu:.6g} [{c.provenance.get('mu', '')}]",
            f"  ell = {c.ell:.6g} [{c.provenance.get('ell', '')}]",
            f"  contraction ell/mu = {c.contraction:.6g}",
            f"  sigma = {c.sigma:.6g}, eta = {c.eta:.6g}",
        ]
        if self.psi_modulus is not None:
            lines.append(f"  surrogate convexity modulus = {self.psi_modulus:.6g}")
        if self.fixed_point is not None:
            lines.append(f"  fixed point u* = {np.array2string(self.fixed_point, precision=6)}")
        lines += [f"  note: {n}" for n in self.notes]
        return "\n".join(lines)


def certify(plant: PlantModel, cost: CostModel, box: Box, x0=None, density: int = 41,
            n_random: int = 200, seed: int = 0, label: str = "") -> CertificationReport:
    """Run every check and assemble a :class:`CertificationReport`."""
    notes = []
    states, reach = reachable_states(plant, box, x0)
    region = plant.state_region or reach
    mono = check_monotone(plant, monotonicity_samples(region, box, 5, n_random, seed))
    if not mono.satisfied:
        notes.append(f"plant monotonicity violated at {len(mono.violations)} sample(s)")

    u_grid = input_grid(box, density)
    y_samples = [plant.g(x) for x in _subsample(states, 200)] + [steady_output(plant, u) for u in u_grid]
    a1 = check_lemma2(plant, cost, u_grid, y_samples)
    if not a1.established:
        a1 = check_lemma5_sampled(cost, plant, box, ordered_pairs(box, states, n_random, seed)).verdict

    try:
        l3 = check_lemma3(cost, plant, box, states, density)
        a2, modulus = l3.verdict, l3.modulus
    except MultiStartDisagreement as exc:
        a2, modulus = Verdict.NOT_ESTABLISHED, None
        notes.append(f"surrogate minimizer not unique: {exc}")

    consts = estimate_constants(cost, plant, box, density)
    a3 = Verdict.NOT_ESTABLISHED
    if consts.mu > 0 and check_lemma4(consts.mu, consts.ell).verified:
        a3 = Verdict.LEMMA4
    elif cost.is_quadratic and plant.is_affine and np.allclose(plant.affine_data()[1], 0.0) \
            and np.allclose(cost.y_ref, 0.0) \
            and check_corollary1(cost.beta_u, cost.beta_y, plant.affine_gain, box).established:
        a3 = Verdict.COROLLARY1
    fixed = None
    try:
        runs = [small_gain_iterate(cost, plant, box, s) for s in _starts(box)]
        if all(r.converged for r in runs):
            pts = np.array([r.fixed_point for r in runs])
            if np.max(np.abs(pts - pts[0])) <= MULTISTART_AGREEMENT:
                fixed = pts[0]
                if not a3.established:
                    a3 = Verdict.ITERATION
                    notes.append("small-gain iteration converged from the sampled starts only "
                                 "(corners and midpoint), not from every start")
        if fixed is None:
            notes.append("small-gain iteration did not converge to a common point from all starts")
    except MultiStartDisagreement as exc:
        notes.append(f"surrogate minimizer not unique: {exc}")
        a2 = Verdict.NOT_ESTABLISHED
    if a3 is Verdict.LEMMA4:
        notes.append(f"iterates contract at least by ell/mu = {consts.contraction:.6g}")
    return CertificationReport(a1, a2, a3, consts, fixed, mono.satisfied, modulus, notes, label)
