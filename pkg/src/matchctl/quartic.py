"""Linearly non-controllable quartic example.

Flat plant metric on (x, y), force enters the y-equation only, and the
open loop blows up in finite time; the shaped model system makes the
origin an attractor even though no linear law can.  State vectors are
ordered (x, y, x_dot, y_dot).
"""
from __future__ import annotations

import math
from typing import Tuple

import numpy as np

from .errors import PastBlowup
from .geometry import (MetricField, ProjectionField, ScalarField, VelocityMap,
                       ZERO_VELOCITY_MAP, euclidean_metric)
from .matching import MechanicalSystem, SystemPair

GHAT = np.array([[2.0, -1.0], [-1.0, 1.0]])
GHAT_INV = np.array([[1.0, 1.0], [1.0, 2.0]])

SQRT3 = math.sqrt(3.0)


def potential_v(x: float, y: float) -> float:
    """Destabilizing plant potential."""
    return -1.5 * x**4 + 45.0 * x**2 * y**2 + 32.0 * x * y**3


def potential_v_grad(x: float, y: float) -> np.ndarray:
    return np.array([-6.0 * x**3 + 90.0 * x * y**2 + 32.0 * y**3,
                     90.0 * x**2 * y + 96.0 * x * y**2])


def vhat_quartic(x: float, y: float) -> float:
    """Positive-definite model potential (sum of two squares)."""
    a = x * x - 3.0 * x * y
    c = x * x - 4.0 * x * y - 2.0 * y * y
    return a * a + c * c


def vhat_quartic_grad(x: float, y: float) -> np.ndarray:
    a = x * x - 3.0 * x * y
    c = x * x - 4.0 * x * y - 2.0 * y * y
    return np.array([2.0 * a * (2.0 * x - 3.0 * y) + 2.0 * c * (2.0 * x - 4.0 * y),
                     2.0 * a * (-3.0 * x) + 2.0 * c * (-4.0 * x - 4.0 * y)])


def vhat_pde_residual(x: float, y: float) -> float:
    """Residual of the model-potential flow equation (exact polynomial zero)."""
    gx, gy = vhat_quartic_grad(x, y)
    return gx + gy - (-6.0 * x**3 + 90.0 * x * y**2 + 32.0 * y**3)


def control_u_quartic(state: np.ndarray) -> float:
    """Shaping control force on the y-equation.

    u = dV/dy - (Vhat_x + 2 Vhat_y) - (y_dot - x_dot); the induced force
    on the x-equation vanishes identically by the potential PDE.
    """
    x, y, x_dot, y_dot = (float(s) for s in state)
    vy = potential_v_grad(x, y)[1]
    hx, hy = vhat_quartic_grad(x, y)
    return vy - (hx + 2.0 * hy) - (y_dot - x_dot)


def dynamics_quartic(state: np.ndarray, u: float) -> np.ndarray:
    """Open-loop state derivative with input force u on the y-equation."""
    x, y, x_dot, y_dot = (float(s) for s in state)
    gx, gy = potential_v_grad(x, y)
    return np.array([x_dot, y_dot, -gx, u - gy])


def hhat_quartic(state: np.ndarray) -> float:
    """Controlled Hamiltonian of the shaped system."""
    v = np.asarray(state[2:], dtype=float)
    x, y = float(state[0]), float(state[1])
    return 0.5 * float(v @ GHAT @ v) + vhat_quartic(x, y)


def dhhat_dt_quartic(state: np.ndarray) -> float:
    """Closed-loop energy rate, -(y_dot - x_dot)^2."""
    d = float(state[3]) - float(state[2])
    return -d * d


def blowup_time(eps: float) -> float:
    return 1.0 / (SQRT3 * eps)


def blowup_solution(eps: float, t: float) -> np.ndarray:
    """Explicit open-loop solution x = (1/eps - sqrt(3) t)^(-1), y = 0."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if t >= blowup_time(eps):
        raise PastBlowup(f"t = {t} is at or beyond blow-up time {blowup_time(eps)}")
    denom = 1.0 / eps - SQRT3 * t
    x = 1.0 / denom
    return np.array([x, 0.0, SQRT3 * x * x, 0.0])


def origin_linearization() -> Tuple[np.ndarray, np.ndarray]:
    """Linearized pair (A, B) at the origin: x_ddot = 0, y_ddot = u."""
    a = np.zeros((4, 4))
    a[0, 2] = a[1, 3] = 1.0
    b = np.array([[0.0], [0.0], [0.0], [1.0]])
    return a, b


def controllability_rank() -> int:
    a, b = origin_linearization()
    blocks = [b]
    for _ in range(3):
        blocks.append(a @ blocks[-1])
    return int(np.linalg.matrix_rank(np.hstack(blocks)))


def quartic_system_pair() -> SystemPair:
    """Plant/model pair for the quartic example.

    The projection is onto the unactuated x-direction, which is the
    direction consistent with the section and potential flow equations.
    """
    g = euclidean_metric(2)
    plant = MechanicalSystem(
        metric=g,
        potential=ScalarField(value=lambda q: potential_v(q[0], q[1]),
                              partials=lambda q: potential_v_grad(q[0], q[1])),
        dissipation=ZERO_VELOCITY_MAP)

    ghat_field = MetricField(dim=2, components=lambda q: GHAT,
                             partials=lambda q: np.zeros((2, 2, 2)),
                             name="quartic-ghat")
    model = MechanicalSystem(
        metric=ghat_field,
        potential=ScalarField(value=lambda q: vhat_quartic(q[0], q[1]),
                              partials=lambda q: vhat_quartic_grad(q[0], q[1])),
        dissipation=VelocityMap(value=lambda q, v: np.array([0.0, v[1] - v[0]]),
                                odd=True))

    proj = ProjectionField(matrix=lambda q: np.array([[1.0, 0.0], [0.0, 0.0]]),
                           metric=g)
    return SystemPair(plant=plant, model=model, projection=proj)
