"""Numerical Riemannian geometry on a single n-dimensional chart.

Metrics, Christoffel symbols, gradients, covariant acceleration and
metric-orthogonal projections.  All quantities are dimensionless; fields
are immutable after construction and every operation is a pure function,
so everything here is safe for unrestricted concurrent use.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import SingularMetric
from .numdiff import DEFAULT_STEP, fd_gradient, fd_jacobian

Point = np.ndarray
Vector = np.ndarray


@dataclass(frozen=True)
class MetricField:
    """Symmetric positive-definite (or at least invertible) metric g_ij.

    ``components(q)`` returns the dim x dim matrix, ``partials(q)`` the
    dim x dim x dim array with entry [l, i, j] = d_l g_ij.  When no
    analytic ``partials`` is supplied, central finite differences with
    step ``fd_step`` are used.  ``det_margin`` is the determinant margin
    below which evaluation raises ``SingularMetric``; ``region`` is an
    optional predicate marking the chart region where the metric is
    declared valid (advisory, used by samplers and diagnostics).
    """

    dim: int
    components: Callable[[Point], np.ndarray]
    partials: Optional[Callable[[Point], np.ndarray]] = None
    det_margin: float = 1e-9
    region: Optional[Callable[[Point], bool]] = None
    name: str = ""
    fd_step: float = field(default=DEFAULT_STEP)

    def matrix(self, q: Point) -> np.ndarray:
        g = np.asarray(self.components(np.asarray(q, dtype=float)), dtype=float)
        if g.shape != (self.dim, self.dim):
            raise ValueError(f"metric {self.name!r} returned shape {g.shape}")
        if np.max(np.abs(g - g.T)) > 1e-12:
            raise ValueError(f"metric {self.name!r} is not symmetric at q={q}")
        return g

    def inverse(self, q: Point) -> np.ndarray:
        g = self.matrix(q)
        det = np.linalg.det(g)
        if abs(det) < self.det_margin:
            raise SingularMetric(
                f"metric {self.name!r}: |det| = {abs(det):.3e} < margin "
                f"{self.det_margin:.3e} at q={np.asarray(q)}")
        return np.linalg.inv(g)

    def partial_matrix(self, q: Point) -> np.ndarray:
        """Array [l, i, j] = d_l g_ij, analytic or finite-difference."""
        q = np.asarray(q, dtype=float)
        if self.partials is not None:
            dg = np.asarray(self.partials(q), dtype=float)
            if dg.shape != (self.dim,) * 3:
                raise ValueError(f"metric {self.name!r} partials shape {dg.shape}")
            return dg
        h = self.fd_step
        out = np.empty((self.dim, self.dim, self.dim))
        for l in range(self.dim):
            qp, qm = q.copy(), q.copy()
            qp[l] += h
            qm[l] -= h
            out[l] = (self.components(qp) - self.components(qm)) / (2.0 * h)
        return out

    def in_region(self, q: Point) -> bool:
        return True if self.region is None else bool(self.region(np.asarray(q, dtype=float)))


@dataclass(frozen=True)
class ScalarField:
    """Scalar function on the chart with gradient access (d V / d x^i)."""

    value: Callable[[Point], float]
    partials: Optional[Callable[[Point], np.ndarray]] = None
    fd_step: float = field(default=DEFAULT_STEP)

    def __call__(self, q: Point) -> float:
        return float(self.value(np.asarray(q, dtype=float)))

    def grad(self, q: Point) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if self.partials is not None:
            return np.asarray(self.partials(q), dtype=float)
        return fd_gradient(self.value, q, self.fd_step)


@dataclass(frozen=True)
class VelocityMap:
    """Fiber-preserving map (q, v) -> tangent vector, e.g. dissipation."""

    value: Callable[[Point, Vector], np.ndarray]
    odd: bool = True

    def __call__(self, q: Point, v: Vector) -> np.ndarray:
        return np.asarray(self.value(np.asarray(q, dtype=float),
                                     np.asarray(v, dtype=float)), dtype=float)


ZERO_VELOCITY_MAP = VelocityMap(lambda q, v: np.zeros_like(v), odd=True)


@dataclass(frozen=True)
class ProjectionField:
    """Pointwise projection P(q), orthogonal with respect to ``metric``."""

    matrix: Callable[[Point], np.ndarray]
    metric: MetricField

    def __call__(self, q: Point) -> np.ndarray:
        return np.asarray(self.matrix(np.asarray(q, dtype=float)), dtype=float)

    def apply(self, q: Point, v: Vector) -> np.ndarray:
        return self(q) @ np.asarray(v, dtype=float)

    def idempotency_residual(self, q: Point) -> float:
        p = self(q)
        return float(np.max(np.abs(p @ p - p)))

    def self_adjointness_residual(self, q: Point) -> float:
        p = self(q)
        gp = self.metric.matrix(q) @ p
        return float(np.max(np.abs(gp - gp.T)))


def christoffel(metric: MetricField, q: Point) -> np.ndarray:
    """Christoffel symbols of the Levi-Civita connection, [k, i, j].

    Koszul formula specialized to coordinate fields:
    Gamma^k_ij = (1/2) g^{kl} (d_i g_jl + d_j g_il - d_l g_ij).
    """
    ginv = metric.inverse(q)
    dg = metric.partial_matrix(q)
    # first-kind symbols [l, i, j] = (1/2)(d_i g_jl + d_j g_il - d_l g_ij)
    first = 0.5 * (np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg)
    return np.einsum("kl,lij->kij", ginv, first)


def gradient(metric: MetricField, scalar: ScalarField, q: Point) -> np.ndarray:
    """Metric gradient g^{ik} dV/dx^i."""
    return metric.inverse(q) @ scalar.grad(q)


def covariant_acceleration(metric: MetricField, q: Point, v: Vector) -> np.ndarray:
    """Quadratic geodesic term Gamma^k_ij v^i v^j."""
    v = np.asarray(v, dtype=float)
    return np.einsum("kij,i,j->k", christoffel(metric, q), v, v)


def covariant_derivative(metric: MetricField, vector_field: Callable[[Point], np.ndarray],
                         q: Point, direction: int,
                         jacobian: Optional[Callable[[Point], np.ndarray]] = None,
                         ) -> np.ndarray:
    """Covariant derivative of a vector field along a coordinate direction.

    (nabla_j W)^k = d_j W^k + Gamma^k_ji W^i with the field's Jacobian
    taken analytically when supplied, else by central differences.
    """
    q = np.asarray(q, dtype=float)
    jac = (np.asarray(jacobian(q), dtype=float) if jacobian is not None
           else fd_jacobian(vector_field, q))
    gamma = christoffel(metric, q)
    w = np.asarray(vector_field(q), dtype=float)
    return jac[:, direction] + gamma[:, direction, :] @ w


@dataclass(frozen=True)
class ConnectionReport:
    """Residuals of the defining properties of the Levi-Civita connection."""

    compatibility: float
    torsion: float


def verify_connection_axioms(metric: MetricField, q: Point,
                             gamma: Optional[np.ndarray] = None) -> ConnectionReport:
    """Check metric compatibility and torsion-freeness at a point.

    Metric compatibility is checked as d_l g_ij (finite differences)
    against its reconstruction from the symbols; torsion-freeness, for
    coordinate fields, reduces to symmetry of Gamma in the lower indices.
    Passing ``gamma`` overrides the computed symbols (negative controls).
    """
    q = np.asarray(q, dtype=float)
    if gamma is None:
        gamma = christoffel(metric, q)
    g = metric.matrix(q)
    h = metric.fd_step
    n = metric.dim
    dg_fd = np.empty((n, n, n))
    for l in range(n):
        qp, qm = q.copy(), q.copy()
        qp[l] += h
        qm[l] -= h
        dg_fd[l] = (metric.components(qp) - metric.components(qm)) / (2.0 * h)
    # d_l g_ij = g(nabla_l e_i, e_j) + g(e_i, nabla_l e_j)
    recon = (np.einsum("kli,kj->lij", gamma, g)
             + np.einsum("klj,ik->lij", gamma, g))
    compat = float(np.max(np.abs(dg_fd - recon)))
    torsion = float(np.max(np.abs(gamma - np.swapaxes(gamma, 1, 2))))
    return ConnectionReport(compatibility=compat, torsion=torsion)


def euclidean_metric(dim: int) -> MetricField:
    """Flat identity metric on a dim-dimensional chart."""
    eye = np.eye(dim)
    zeros = np.zeros((dim, dim, dim))
    return MetricField(dim=dim, components=lambda q: eye,
                       partials=lambda q: zeros, name="euclidean")
