"""Matching machinery for underactuated control synthesis.

Implements the control-force formula, the residual evaluators for the
matching equations (split into quadratic / potential / dissipative
parts) and for the three linear first-order PDEs relating the plant to
the model system, plus the rank-one method-of-characteristics solver
that propagates model data off a noncharacteristic surface.

Only rank-one projections are supported.  All residual operators are
evaluated pointwise with coordinate directions; general directions
follow by linearity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Union

import numpy as np

from .errors import CharacteristicEscape, QuadratureFailure
from .geometry import (MetricField, Point, ProjectionField, ScalarField,
                       Vector, VelocityMap, christoffel,
                       covariant_acceleration, covariant_derivative, gradient)
from .numdiff import fd_jacobian


@dataclass(frozen=True)
class MechanicalSystem:
    """A (metric, potential, dissipation) triple on a common chart."""

    metric: MetricField
    potential: ScalarField
    dissipation: VelocityMap


@dataclass(frozen=True)
class SystemPair:
    """Plant and model systems tied by a metric-orthogonal projection."""

    plant: MechanicalSystem
    model: MechanicalSystem
    projection: ProjectionField

    def __post_init__(self):
        if self.plant.metric.dim != self.model.metric.dim:
            raise ValueError("plant and model dimensions differ")
        if not (self.plant.dissipation.odd and self.model.dissipation.odd):
            raise ValueError("dissipation maps must be odd in velocity")

    @property
    def dim(self) -> int:
        return self.plant.metric.dim


def control_force(pair: SystemPair, q: Point, v: Vector) -> np.ndarray:
    """Input force making plant trajectories follow the model system.

    f = (Gamma - Gamma_hat)(v, v) + grad V - grad_hat V_hat + c(v) - c_hat(v),
    where hatted quantities belong to the model metric and potential.
    """
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    plant, model = pair.plant, pair.model
    quad = (covariant_acceleration(plant.metric, q, v)
            - covariant_acceleration(model.metric, q, v))
    pot = (gradient(plant.metric, plant.potential, q)
           - gradient(model.metric, model.potential, q))
    diss = plant.dissipation(q, v) - model.dissipation(q, v)
    return quad + pot + diss


class MatchingResiduals(NamedTuple):
    quad: np.ndarray
    pot: np.ndarray
    diss: np.ndarray


def matching_residuals(pair: SystemPair, q: Point, v: Vector) -> MatchingResiduals:
    """Projected force split by velocity parity; all three vanish on a match.

    quad is quadratic in v, pot velocity-independent, diss odd in v;
    their sum is the projection of ``control_force``.
    """
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    p = pair.projection(q)
    plant, model = pair.plant, pair.model
    quad = p @ (covariant_acceleration(plant.metric, q, v)
                - covariant_acceleration(model.metric, q, v))
    pot = p @ (gradient(plant.metric, plant.potential, q)
               - gradient(model.metric, model.potential, q))
    diss = p @ (plant.dissipation(q, v) - model.dissipation(q, v))
    return MatchingResiduals(quad=quad, pot=pot, diss=diss)


def _as_field(v: Union[np.ndarray, Callable[[Point], np.ndarray]],
              ) -> Callable[[Point], np.ndarray]:
    if callable(v):
        return v
    arr = np.asarray(v, dtype=float)
    return lambda q: arr


@dataclass(frozen=True)
class LambdaSection:
    """The tensor relating plant and model metrics, restricted to Im P.

    ``base_vector`` is the rank-one generator PX (a constant vector or a
    field), ``image`` the section q -> lambda(PX)(q), assumed
    nonvanishing on the region of interest.  Analytic Jacobians may be
    supplied; central differences are used otherwise.
    """

    base_vector: Union[np.ndarray, Callable[[Point], np.ndarray]]
    image: Callable[[Point], np.ndarray]
    image_jacobian: Optional[Callable[[Point], np.ndarray]] = None
    base_jacobian: Optional[Callable[[Point], np.ndarray]] = None

    def px(self, q: Point) -> np.ndarray:
        return np.asarray(_as_field(self.base_vector)(np.asarray(q, dtype=float)),
                          dtype=float)

    def lam_px(self, q: Point) -> np.ndarray:
        return np.asarray(self.image(np.asarray(q, dtype=float)), dtype=float)

    def _base_jac(self, q: Point) -> np.ndarray:
        if self.base_jacobian is not None:
            return np.asarray(self.base_jacobian(q), dtype=float)
        if not callable(self.base_vector):
            n = np.asarray(self.base_vector).size
            return np.zeros((n, n))
        return fd_jacobian(_as_field(self.base_vector), q)


def lambda_residual(pair: SystemPair, lam: LambdaSection, q: Point,
                    direction: int) -> float:
    """Residual of the first-order equation the section must satisfy.

    g(nabla_Z lambda PX, PX) - g(lambda PX, nabla_Z PX) for a coordinate
    direction Z; zero at every q and Z iff the section solves its PDE.
    """
    q = np.asarray(q, dtype=float)
    g = pair.plant.metric
    d_lampx = covariant_derivative(g, lam.lam_px, q, direction,
                                   jacobian=lam.image_jacobian)
    d_px = covariant_derivative(g, lam.px, q, direction,
                                jacobian=lambda p: lam._base_jac(p))
    gm = g.matrix(q)
    return float(d_lampx @ gm @ lam.px(q) - lam.lam_px(q) @ gm @ d_px)


def _adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                      tol: float, max_depth: int = 48) -> float:
    """Classic adaptive Simpson quadrature with absolute tolerance."""
    if a == b:
        return 0.0

    def simpson(fa, fm, fb, lo, hi):
        return (hi - lo) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(lo, hi, flo, fmid, fhi, whole, eps, depth):
        mid = 0.5 * (lo + hi)
        flm = f(0.5 * (lo + mid))
        frm = f(0.5 * (mid + hi))
        left = simpson(flo, flm, fmid, lo, mid)
        right = simpson(fmid, frm, fhi, mid, hi)
        delta = left + right - whole
        if abs(delta) <= 15.0 * eps:
            return left + right + delta / 15.0
        if depth <= 0:
            raise QuadratureFailure(
                f"adaptive Simpson: tolerance {tol:.1e} not met on "
                f"[{a:.6g}, {b:.6g}]")
        return (recurse(lo, mid, flo, flm, fmid, left, 0.5 * eps, depth - 1)
                + recurse(mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth - 1))

    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, max_depth)


def lambda_general_cart(sigma_fn: Union[float, Callable[[float], float]],
                        mu0: float, b: float,
                        tol: float = 1e-10) -> Callable[[float], float]:
    """General solution mu(theta) of the cart section equation.

    mu = mu0 cos(theta) - (1/b) cos(theta) * integral_0^theta of
    sigma'(t) sec^2(t) dt, anchored at theta = 0 so that mu(0) = mu0.
    A constant sigma short-circuits to mu0 cos(theta).
    """
    if not callable(sigma_fn):
        return lambda theta: mu0 * math.cos(theta)

    dh = 1e-6

    def sigma_prime(t: float) -> float:
        return (sigma_fn(t + dh) - sigma_fn(t - dh)) / (2.0 * dh)

    def integrand(t: float) -> float:
        return sigma_prime(t) / math.cos(t) ** 2

    def mu(theta: float) -> float:
        acc = _adaptive_simpson(integrand, 0.0, float(theta), tol)
        return mu0 * math.cos(theta) - math.cos(theta) * acc / b

    return mu


def ghat_residual(pair: SystemPair, lam: LambdaSection, q: Point,
                  direction: int) -> float:
    """Residual of the transport equation for the model metric.

    lambda PX (ghat(Z,Z)) + 2 ghat([Z, lambda PX], Z)
      - 2 Z(g(PX, Z)) + 2 g(PX, nabla_Z Z)
    for a coordinate direction Z; zero iff the model metric solves its
    transport equation at (q, Z).
    """
    q = np.asarray(q, dtype=float)
    g = pair.plant.metric
    ghat = pair.model.metric
    z = direction
    lampx = lam.lam_px(q)

    dghat = ghat.partial_matrix(q)
    lampx_ghat_zz = float(lampx @ dghat[:, z, z])

    # [Z, lambda PX] = d_z (lambda PX) for a coordinate field Z
    jac = (np.asarray(lam.image_jacobian(q), dtype=float)
           if lam.image_jacobian is not None else fd_jacobian(lam.lam_px, q))
    bracket = jac[:, z]
    ghat_m = ghat.matrix(q)
    bracket_term = 2.0 * float(bracket @ ghat_m[:, z])

    # Z(g(PX, Z)) by central differences of the full scalar (PX may vary)
    h = g.fd_step

    def scalar(p: Point) -> float:
        return float(lam.px(p) @ g.matrix(p)[:, z])

    qp, qm = q.copy(), q.copy()
    qp[z] += h
    qm[z] -= h
    dz_g_px_z = (scalar(qp) - scalar(qm)) / (2.0 * h)

    gamma = christoffel(g, q)
    g_px_nabla = float(lam.px(q) @ g.matrix(q) @ gamma[:, z, z])

    return lampx_ghat_zz + bracket_term - 2.0 * dz_g_px_z + 2.0 * g_px_nabla


def vhat_residual(pair: SystemPair, lam: LambdaSection, q: Point) -> float:
    """Residual d V_hat(lambda PX) - d V(PX), in unmultiplied form.

    The determinant-multiplied local form has spurious zeros where the
    model metric degenerates; this one does not.
    """
    q = np.asarray(q, dtype=float)
    dv = pair.plant.potential.grad(q)
    dvhat = pair.model.potential.grad(q)
    return float(dvhat @ lam.lam_px(q) - dv @ lam.px(q))


def extend_lambda(ghat: MetricField, g: MetricField, q: Point) -> np.ndarray:
    """Extend the section to the full tangent space via ghat^{-1} g."""
    return ghat.inverse(q) @ g.matrix(q)


@dataclass(frozen=True)
class CharacteristicData:
    """Initial data on the noncharacteristic surface theta = 0.

    ``sigma`` is the section coefficient (a constant, or a callable that
    must be effectively constant for this solver; the general
    theta-dependent route lives in ``lambda_general_cart``), ``h`` the
    initial model-metric 11-component on the surface, ``w`` the initial
    model potential.  ``sigma(0) != 0`` is the noncharacteristic
    condition.
    """

    sigma: Union[float, Callable[[float], float]]
    mu0: float
    h: Callable[[float], float]
    w: Callable[[float], float]
    surface_theta: float = 0.0

    def sigma0(self) -> float:
        if callable(self.sigma):
            samples = [float(self.sigma(t)) for t in (-1.0, -0.3, 0.0, 0.4, 1.1)]
            if max(samples) - min(samples) > 1e-12:
                raise ValueError(
                    "characteristics solver requires constant sigma; "
                    "use lambda_general_cart for theta-dependent sections")
            s0 = samples[2]
        else:
            s0 = float(self.sigma)
        if s0 == 0.0:
            raise ValueError("sigma(0) = 0 violates the noncharacteristic condition")
        return s0


@dataclass(frozen=True)
class CharacteristicsSolution:
    """Model metric and potential propagated onto a rectangular grid."""

    theta: np.ndarray
    x: np.ndarray
    ghat11: np.ndarray
    ghat12: np.ndarray
    ghat22: np.ndarray
    vhat: np.ndarray
    lambda_px: np.ndarray  # (n_theta, 2); the section is x-independent

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("theta,x,ghat11,ghat12,ghat22,vhat\n")
            for j, th in enumerate(self.theta):
                for i, xx in enumerate(self.x):
                    row = (th, xx, self.ghat11[j, i], self.ghat12[j, i],
                           self.ghat22[j, i], self.vhat[j, i])
                    fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def solve_characteristics(data: CharacteristicData, b: float,
                          theta_grid: np.ndarray, x_grid: np.ndarray,
                          dt_flow: float = 1e-3) -> CharacteristicsSolution:
    """Propagate model metric and potential data along characteristics.

    Integrates, along the section flow theta = sigma0 t,
    x = a + (mu0/sigma0) sin(sigma0 t),

        d ghat11/dt + 2 sigma0 tan(sigma0 t) ghat11 - 2 tan(sigma0 t) = 0,
        d vhat/dt = -sin(sigma0 t),

    from surface data ghat11(0, x) = h(x), vhat(0, x) = w(x) with
    classical RK4 (fixed step <= ``dt_flow`` in flow time; each grid
    point's characteristic is rescaled to a common unit interval so the
    whole grid integrates as one vectorized pass), then completes
    ghat12, ghat22 from the algebraic relations tying the model metric
    to the plant metric along the section.
    """
    if data.surface_theta != 0.0:
        raise ValueError("only the surface theta = 0 is supported")
    theta = np.asarray(theta_grid, dtype=float)
    xs = np.asarray(x_grid, dtype=float)
    if np.max(np.abs(theta)) >= math.pi / 2.0:
        raise CharacteristicEscape(
            "grid contains |theta| >= pi/2: backward characteristics leave "
            "the valid angular range")
    sigma0 = data.sigma0()
    mu0 = data.mu0

    # characteristic feet a = x - (mu0/sigma0) sin(theta), per grid point
    feet = xs[None, :] - (mu0 / sigma0) * np.sin(theta)[:, None]
    h0 = np.vectorize(data.h, otypes=[float])(feet)
    w0 = np.vectorize(data.w, otypes=[float])(feet)

    tstar = theta / sigma0  # flow time to reach each theta row
    n_steps = max(1, int(math.ceil(np.max(np.abs(tstar)) / dt_flow)))
    ds = 1.0 / n_steps
    col = tstar[:, None]
    th_col = theta[:, None]

    def rhs(s: float, g11: np.ndarray, vh: np.ndarray):
        arg = s * th_col  # = sigma0 * (s * tstar)
        tn = np.tan(arg)
        dg11 = col * (-2.0 * sigma0 * tn * g11 + 2.0 * tn)
        dvh = col * (-np.sin(arg))
        return dg11, dvh

    g11 = h0.copy()
    vh = w0.copy()
    s = 0.0
    for _ in range(n_steps):
        k1g, k1v = rhs(s, g11, vh)
        k2g, k2v = rhs(s + 0.5 * ds, g11 + 0.5 * ds * k1g, vh + 0.5 * ds * k1v)
        k3g, k3v = rhs(s + 0.5 * ds, g11 + 0.5 * ds * k2g, vh + 0.5 * ds * k2v)
        k4g, k4v = rhs(s + ds, g11 + ds * k3g, vh + ds * k3v)
        g11 = g11 + (ds / 6.0) * (k1g + 2.0 * k2g + 2.0 * k3g + k4g)
        vh = vh + (ds / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        s += ds

    cos_t = np.cos(theta)[:, None]
    g12 = (1.0 - sigma0 * g11) / (mu0 * cos_t)
    g22 = (b * cos_t - sigma0 * g12) / (mu0 * cos_t)

    lam = np.column_stack([np.full_like(theta, sigma0), mu0 * np.cos(theta)])
    return CharacteristicsSolution(theta=theta, x=xs, ghat11=g11, ghat12=g12,
                                   ghat22=g22, vhat=vh, lambda_px=lam)
