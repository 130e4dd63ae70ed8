"""Comparison linear state feedback for the scaled cart.

The published gain vector, plus single-input pole placement on the
linearized cart for re-deriving comparable designs.  The feedback
convention throughout is u = k . (theta, x, theta_dot, x_dot); with the
scaled linearization this means a stabilizing k_theta exceeds 1/b.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .errors import ComplexPolesNotConjugate, NotControllable


@dataclass(frozen=True)
class LinearGains:
    """State-feedback gains with convention u = k . state."""

    k_theta: float
    k_x: float
    k_thetadot: float
    k_xdot: float

    def as_array(self) -> np.ndarray:
        return np.array([self.k_theta, self.k_x, self.k_thetadot, self.k_xdot])

    def u(self, state: np.ndarray) -> float:
        return float(self.as_array() @ np.asarray(state, dtype=float))


def paper_gains() -> LinearGains:
    """The published pole-placement design (poles -5, -6 and double -2)."""
    return LinearGains(k_theta=1021.0, k_x=115.8, k_thetadot=918.5, k_xdot=158.2)


def cart_linearization(b: float) -> Tuple[np.ndarray, np.ndarray]:
    """Linearized scaled cart about the upright equilibrium.

    theta_ddot = (theta - b u) / (1 - b^2), x_ddot = (u - b theta) / (1 - b^2),
    with state (theta, x, theta_dot, x_dot).
    """
    d = 1.0 - b * b
    a = np.zeros((4, 4))
    a[0, 2] = a[1, 3] = 1.0
    a[2, 0] = 1.0 / d
    a[3, 0] = -b / d
    bb = np.array([0.0, 0.0, -b / d, 1.0 / d])
    return a, bb


def closed_loop_matrix(b: float, gains: LinearGains) -> np.ndarray:
    """State matrix of the linearization under u = k . state."""
    a, bb = cart_linearization(b)
    return a + np.outer(bb, gains.as_array())


def _check_conjugate(poles: np.ndarray) -> None:
    complex_poles = sorted((p for p in poles if p.imag != 0.0),
                           key=lambda p: (p.real, abs(p.imag), p.imag))
    while complex_poles:
        p = complex_poles.pop(0)
        conj = np.conj(p)
        for i, q in enumerate(complex_poles):
            if abs(q - conj) < 1e-12 * max(1.0, abs(p)):
                complex_poles.pop(i)
                break
        else:
            raise ComplexPolesNotConjugate(f"pole {p} has no conjugate partner")


def pole_place(b: float, poles: Sequence[complex]) -> LinearGains:
    """Single-input pole placement on the linearized cart (Ackermann).

    Returns gains in the u = k . state convention such that the closed
    loop has the requested eigenvalues.  Complex poles must come in
    conjugate pairs; the linearized pair must be controllable.
    """
    poles = np.asarray(poles, dtype=complex)
    if poles.shape != (4,):
        raise ValueError("exactly four poles are required")
    _check_conjugate(poles)
    a, bb = cart_linearization(b)
    n = 4
    ctrb = np.column_stack([np.linalg.matrix_power(a, i) @ bb for i in range(n)])
    if np.linalg.matrix_rank(ctrb) < n or abs(np.linalg.det(ctrb)) < 1e-12:
        raise NotControllable(f"linearized cart not controllable at b = {b}")
    coeffs = np.real(np.poly(poles))  # desired characteristic polynomial
    if np.max(np.abs(np.imag(np.poly(poles)))) > 1e-9:
        raise ComplexPolesNotConjugate("characteristic polynomial is not real")
    phi_a = np.zeros((n, n))
    for c in coeffs:
        phi_a = phi_a @ a + c * np.eye(n)
    k_std = np.linalg.solve(ctrb.T, np.eye(n)[:, n - 1]) @ phi_a
    k = -k_std  # flip from u = -K s to the u = +k s convention
    return LinearGains(k_theta=float(k[0]), k_x=float(k[1]),
                       k_thetadot=float(k[2]), k_xdot=float(k[3]))


def achieved_poles(b: float, gains: LinearGains) -> np.ndarray:
    """Eigenvalues of the closed-loop linearization, sorted."""
    eig = np.linalg.eigvals(closed_loop_matrix(b, gains))
    return np.array(sorted(eig, key=lambda z: (z.real, z.imag)))


def is_stabilizing(b: float, gains: LinearGains) -> bool:
    return bool(np.all(achieved_poles(b, gains).real < 0.0))
