"""Costs, the OFO control law and closed-loop assembly and simulation."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .geometry import Box
from .integrate import StepConfig, Trajectory, integrate_projected
from .plant import PlantModel, fd_jacobian, sensitivity
from .schedule import Schedule


def _vec(v) -> np.ndarray:
    return np.atleast_1d(np.asarray(v, dtype=float))


@dataclass(frozen=True)
class CostModel:
    """Separable cost ``Phi_u(u) + Phi_y(y - y_ref)``.

    The output callables take the tracking error ``e = y - y_ref``.  Optional
    quadratic metadata ``beta_u``, ``beta_y`` records that
    ``Phi_u(u) = beta_u u'u`` and ``Phi_y(e) = beta_y e'e``.
    """

    input_dim: int
    output_dim: int
    phi_u: Callable[[np.ndarray], float]
    grad_phi_u: Callable[[np.ndarray], np.ndarray]
    phi_y: Callable[[np.ndarray], float]
    grad_phi_y: Callable[[np.ndarray], np.ndarray]
    hess_phi_u: Callable | None = None
    hess_phi_y: Callable | None = None
    y_ref: np.ndarray | None = None
    beta_u: float | None = None
    beta_y: float | None = None

    def __post_init__(self):
        ref = np.zeros(self.output_dim) if self.y_ref is None else _vec(self.y_ref)
        if ref.size != self.output_dim:
            raise ValueError(f"y_ref has dimension {ref.size}, cost output dimension is {self.output_dim}")
        object.__setattr__(self, "y_ref", ref)

    @property
    def is_quadratic(self) -> bool:
        return self.beta_u is not None and self.beta_y is not None

    def with_reference(self, y_ref) -> "CostModel":
        return replace(self, y_ref=_vec(y_ref))

    def value(self, u, y) -> float:
        return self.value_u(u) + self.value_y(y)

    def value_u(self, u) -> float:
        return float(self.phi_u(_vec(u)))

    def value_y(self, y) -> float:
        return float(self.phi_y(_vec(y) - self.y_ref))

    def grad_u(self, u) -> np.ndarray:
        return _vec(self.grad_phi_u(_vec(u)))

    def grad_y(self, y) -> np.ndarray:
        return _vec(self.grad_phi_y(_vec(y) - self.y_ref))

    def hess_u(self, u) -> np.ndarray:
        if self.hess_phi_u is not None:
            return np.atleast_2d(np.asarray(self.hess_phi_u(_vec(u)), dtype=float))
        return fd_jacobian(self.grad_u, u)

    def hess_y(self, y) -> np.ndarray:
        if self.hess_phi_y is not None:
            return np.atleast_2d(np.asarray(self.hess_phi_y(_vec(y) - self.y_ref), dtype=float))
        return fd_jacobian(self.grad_y, y)

    def regularized(self, beta_bar: float) -> "CostModel":
        """Add ``beta_bar * ||u||^2`` to the input cost."""
        b = float(beta_bar)
        pu, gu, hu = self.phi_u, self.grad_phi_u, self.hess_phi_u
        return replace(
            self,
            phi_u=lambda u: pu(u) + b * float(u @ u),
            grad_phi_u=lambda u: _vec(gu(u)) + 2 * b * u,
            hess_phi_u=None if hu is None else (lambda u: hu(u) + 2 * b * np.eye(u.size)),
            beta_u=None if self.beta_u is None else self.beta_u + b,
        )

    def gradient_mismatch(self, u_samples, y_samples) -> float:
        """Largest relative gap between the gradients and central differences."""
        worst = 0.0
        for u in u_samples:
            fd = fd_jacobian(lambda v: np.array([self.value_u(v)]), u, 1e-6)[0]
            worst = max(worst, _rel_gap(self.grad_u(u), fd))
        for y in y_samples:
            fd = fd_jacobian(lambda v: np.array([self.value_y(v)]), y, 1e-6)[0]
            worst = max(worst, _rel_gap(self.grad_y(y), fd))
        return worst


def _rel_gap(a, b) -> float:
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


def quadratic_cost(beta_u: float, beta_y: float, y_ref=0.0, input_dim: int = 1,
                   output_dim: int = 1) -> CostModel:
    """``beta_u u'u + beta_y (y - y_ref)'(y - y_ref)``."""
    bu, by = float(beta_u), float(beta_y)
    return CostModel(
        input_dim=input_dim, output_dim=output_dim,
        phi_u=lambda u: bu * float(u @ u),
        grad_phi_u=lambda u: 2 * bu * u,
        phi_y=lambda e: by * float(e @ e),
        grad_phi_y=lambda e: 2 * by * e,
        hess_phi_u=lambda u: 2 * bu * np.eye(u.size),
        hess_phi_y=lambda e: 2 * by * np.eye(e.size),
        y_ref=np.broadcast_to(_vec(y_ref), (output_dim,)).copy(),
        beta_u=bu, beta_y=by,
    )


@dataclass(frozen=True)
class OfoController:
    """Gain, input box and sensitivity provider ``u -> grad k_y(u)`` (p x m)."""

    alpha: float
    box: Box
    sensitivity: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"gain alpha must be positive, got {self.alpha}")
        if not self.box.is_compact:
            raise ValueError("the input box must be compact")

    @classmethod
    def for_plant(cls, plant: PlantModel, alpha: float, box: Box) -> "OfoController":
        """Controller using the plant's sensitivity (analytic if available).

        The plant is captured as given, so its disturbance acts as the nominal
        value; the controller never reads the disturbance during simulation.
        """
        nominal = plant
        p, m = plant.output_dim, plant.input_dim
        if nominal.is_affine:
            S = nominal.affine_gain.copy()
            return cls(alpha, box, lambda u: S)
        if nominal.k_y_jac is not None:
            jac, w0 = nominal.k_y_jac, nominal.w.copy()
            return cls(alpha, box, lambda u: np.reshape(jac(u, w0), (p, m)))
        return cls(alpha, box, lambda u: sensitivity(nominal, u, box))

    def with_gain(self, alpha: float) -> "OfoController":
        return replace(self, alpha=float(alpha))


def ofo_field(u, y, controller: OfoController, cost: CostModel) -> np.ndarray:
    """Pre-projection drift ``-alpha (grad Phi_u(u) + grad k_y(u)' grad Phi_y(y))``."""
    u, y = _vec(u), _vec(y)
    g = cost.grad_u(u) + controller.sensitivity(u).T @ cost.grad_y(y)
    if not np.all(np.isfinite(g)):
        raise FloatingPointError(f"non-finite cost gradient at u={u}, y={y}")
    return -controller.alpha * g


@dataclass(frozen=True)
class ClosedLoopSystem:
    """Plant in feedback with the OFO controller; state ``omega = (x, u)``."""

    plant: PlantModel
    controller: OfoController
    cost: CostModel

    @property
    def dimension(self) -> int:
        return self.plant.state_dim + self.plant.input_dim

    @property
    def box(self) -> Box:
        return Box.product(Box.unbounded(self.plant.state_dim), self.controller.box)

    @property
    def labels(self) -> list[str]:
        p = self.plant
        return ([f"x_{i}" for i in range(p.state_dim)] + [f"u_{i}" for i in range(p.input_dim)]
                + [f"y_{i}" for i in range(p.output_dim)])

    def split(self, omega) -> tuple[np.ndarray, np.ndarray]:
        n = self.plant.state_dim
        return omega[:n], omega[n:]

    def rebind(self, exogenous: dict | None) -> "ClosedLoopSystem":
        """Same loop with new disturbance ``w`` and/or reference ``y_ref``."""
        if not exogenous:
            return self
        plant, cost = self.plant, self.cost
        if exogenous.get("w") is not None:
            plant = plant.with_disturbance(exogenous["w"])
        if exogenous.get("y_ref") is not None:
            cost = cost.with_reference(exogenous["y_ref"])
        return replace(self, plant=plant, cost=cost)

    def field(self) -> Callable[[float, np.ndarray], np.ndarray]:
        """Unprojected vector field on ``(x, u)``; the integrator projects the u-block."""
        n = self.plant.state_dim
        f, g = self.plant.dynamics, self.plant.output
        w = self.plant.w
        grad_u, grad_y = self.cost.grad_phi_u, self.cost.grad_phi_y
        y_ref = self.cost.y_ref
        sens = self.controller.sensitivity
        alpha = self.controller.alpha

        def rhs(t, omega):
            x, u = omega[:n], omega[n:]
            drift = grad_u(u) + sens(u).T @ grad_y(g(x) - y_ref)
            return np.concatenate((f(x, u, w), -alpha * drift))

        return rhs


def assemble_closed_loop(plant: PlantModel, controller: OfoController, cost: CostModel) -> ClosedLoopSystem:
    m, p = plant.input_dim, plant.output_dim
    if controller.box.dimension != m:
        raise ValueError(f"controller box has dimension {controller.box.dimension}, plant input is {m}")
    if cost.input_dim != m or cost.output_dim != p:
        raise ValueError(f"cost dimensions ({cost.input_dim}, {cost.output_dim}) do not match plant ({m}, {p})")
    probe = controller.box.midpoint
    S = np.atleast_2d(controller.sensitivity(probe))
    if S.shape != (p, m):
        raise ValueError(f"sensitivity has shape {S.shape}, expected {(p, m)}")
    return ClosedLoopSystem(plant, controller, cost)


def simulate_closed_loop(system: ClosedLoopSystem, x0, u0, schedule: Schedule | None,
                         config: StepConfig, t0: float = 0.0) -> Trajectory:
    """Simulate the loop over ``[t0, t0 + config.max_time]``.

    ``schedule`` values are dicts with optional keys ``"w"`` and ``"y_ref"``.
    At a switch the exogenous values change and the state carries over.
    Returned columns: ``x_*``, ``u_*``, ``y_*``.
    """
    x0, u0 = _vec(x0), _vec(u0)
    if x0.size != system.plant.state_dim:
        raise ValueError(f"x0 has dimension {x0.size}, plant state is {system.plant.state_dim}")
    if not system.controller.box.contains(u0):
        raise ValueError(f"u0={u0} lies outside the input box {system.controller.box}")
    schedule = schedule or Schedule.constant({})
    omega = np.concatenate((x0, system.controller.box.clip(u0)))
    parts = []
    for a, b, exo in schedule.segments(t0, t0 + config.max_time):
        loop = system.rebind(exo)
        seg = integrate_projected(loop.field(), loop.box, omega, config.replace(max_time=b - a), t0=a)
        omega = seg.final
        ys = np.array([loop.plant.g(s[:system.plant.state_dim]) for s in seg.states])
        parts.append(Trajectory(seg.times, np.hstack((seg.states, ys)), system.labels))
    return Trajectory.concatenate(parts)


def gradient_flow_reference(cost: CostModel, plant: PlantModel, box: Box, alpha: float, u0,
                            config: StepConfig) -> Trajectory:
    """Model-based projected gradient flow on ``Phi_u(u) + Phi_y(k_y(u))``."""
    from .plant import steady_output

    if not alpha > 0:
        raise ValueError("alpha must be positive")

    def rhs(t, u):
        y = steady_output(plant, u)
        return -alpha * (cost.grad_u(u) + sensitivity(plant, u, box).T @ cost.grad_y(y))

    traj = integrate_projected(rhs, box, u0, config)
    traj.labels = [f"u_{i}" for i in range(box.dimension)]
    return traj
