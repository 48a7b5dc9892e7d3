"""Builtin plant families: linear time-invariant and a gene-expression model."""

from __future__ import annotations

import numpy as np

from .geometry import Box
from .plant import PlantModel


def lti_plant(A, B, C, Bw=None, w=None, input_box: Box | None = None,
              state_region: Box | None = None, name: str = "lti") -> PlantModel:
    """``x' = A x + B u + Bw w``, ``y = C x`` with ``A`` Hurwitz.

    Steady state: ``k_x(u) = -A^{-1}(B u + Bw w)``, so ``S = -C A^{-1} B`` and
    ``s = -C A^{-1} Bw w``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    B = np.asarray(B, dtype=float).reshape(n, -1)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    Bw = np.zeros((n, 0)) if Bw is None else np.asarray(Bw, dtype=float).reshape(n, -1)
    m, p, q = B.shape[1], C.shape[0], Bw.shape[1]
    if C.shape[1] != n:
        raise ValueError(f"C has {C.shape[1]} columns, A has {n}")
    if np.max(np.linalg.eigvals(A).real) >= 0:
        raise ValueError("A must be Hurwitz for the steady-state map to exist")
    w = np.zeros(q) if w is None else np.atleast_1d(np.asarray(w, dtype=float))
    if w.size != q:
        raise ValueError(f"disturbance has dimension {w.size}, Bw has {q} columns")
    Ainv = np.linalg.inv(A)
    S = -C @ Ainv @ B
    Sw = -C @ Ainv @ Bw

    return PlantModel(
        state_dim=n, input_dim=m, output_dim=p,
        dynamics=lambda x, u, w: A @ x + B @ u + Bw @ w,
        output=lambda x: C @ x,
        jac_x=lambda x, u, w: A,
        jac_u=lambda x, u, w: B,
        jac_g=lambda x: C,
        k_x=lambda u, w: -Ainv @ (B @ u + Bw @ w),
        k_y=lambda u, w: S @ u + Sw @ w,
        k_y_jac=lambda u, w: S,
        affine_gain=S,
        affine_offset=lambda w: Sw @ w,
        w=w,
        input_box=input_box,
        state_region=state_region,
        name=name,
    )


def gene_plant(theta1: float = 750.0, theta2: float = 0.58, gamma1: float = 4.02,
               gamma2: float = 37.5, input_box: Box | None = None,
               state_region: Box | None = None, name: str = "gene") -> PlantModel:
    """Two-state gene expression model with saturating degradation.

    ``x1' = u - gamma1 x1``, ``x2' = theta2 x1 - gamma2 x2 / (theta1 + x2)``,
    ``y = x2``.  The steady-state output
    ``k_y(u) = theta1 theta2 u / (gamma1 gamma2 - theta2 u)`` exists while
    ``theta2 u < gamma1 gamma2``.
    """
    t1, t2, g1, g2 = float(theta1), float(theta2), float(gamma1), float(gamma2)
    cap = g1 * g2 / t2

    def dynamics(x, u, w):
        return np.array([u[0] - g1 * x[0], t2 * x[0] - g2 * x[1] / (t1 + x[1])])

    def jac_x(x, u, w):
        return np.array([[-g1, 0.0], [t2, -g2 * t1 / (t1 + x[1]) ** 2]])

    def k_x(u, w):
        if not u[0] < cap:
            raise ValueError(f"no equilibrium for u={u[0]} >= {cap}")
        return np.array([u[0] / g1, t1 * t2 * u[0] / (g1 * g2 - t2 * u[0])])

    def k_y(u, w):
        return k_x(u, w)[1:]

    def k_y_jac(u, w):
        return np.array([[t1 * t2 * g1 * g2 / (g1 * g2 - t2 * u[0]) ** 2]])

    return PlantModel(
        state_dim=2, input_dim=1, output_dim=1,
        dynamics=dynamics,
        output=lambda x: x[1:2],
        jac_x=jac_x,
        jac_u=lambda x, u, w: np.array([[1.0], [0.0]]),
        jac_g=lambda x: np.array([[0.0, 1.0]]),
        k_x=k_x, k_y=k_y, k_y_jac=k_y_jac,
        input_box=input_box,
        state_region=state_region,
        name=name,
    )
