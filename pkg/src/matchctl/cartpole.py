"""Inverted-pendulum-cart controller family in closed form.

Scaled coordinates q = (theta, x) with theta = 0 upright; state vectors
are ordered (theta, x, theta_dot, x_dot).  The nondimensionalization
reduces the physical cart to the single coupling parameter b in (0, 1);
everything downstream of it is dimensionless.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Callable, Mapping, Union

import numpy as np

from .errors import DegenerateModelMetric, InvalidParameters
from .geometry import (MetricField, ProjectionField, ScalarField, VelocityMap,
                       ZERO_VELOCITY_MAP)
from .matching import MechanicalSystem, SystemPair

DEFAULT_B = 0.188

PAPER_SIGMA0 = -0.05
PAPER_MU0 = 10.0
PAPER_R = 1000.0
PAPER_W1 = 1.5


@dataclass(frozen=True)
class PhysicalCart:
    """Lab cart parameters in SI units."""

    M: float          # base mass (kg)
    m: float          # pendulum mass (kg)
    ell: float        # hinge-to-COM length (m)
    inertia: float    # COM moment of inertia (kg m^2)
    g_grav: float = 9.81

    def __post_init__(self):
        if not (self.M > 0 and self.m > 0 and self.ell > 0
                and self.inertia >= 0 and self.g_grav > 0):
            raise InvalidParameters(f"physical cart parameters out of range: {self}")


def nondimensionalize(cart: PhysicalCart) -> float:
    """Coupling b = m l (M + m)^(-1/2) (m l^2 + I)^(-1/2), in (0, 1)."""
    b = (cart.m * cart.ell
         / math.sqrt(cart.M + cart.m)
         / math.sqrt(cart.m * cart.ell**2 + cart.inertia))
    if not 0.0 < b < 1.0:
        raise InvalidParameters(f"coupling b = {b} outside (0, 1)")
    return b


@dataclass(frozen=True)
class Phi:
    """Strictly positive gain function of (theta, x) from the registry."""

    spec: str
    fn: Callable[[float, float], float]

    def __call__(self, theta: float, x: float) -> float:
        return self.fn(theta, x)

    @property
    def const_value(self) -> Union[float, None]:
        """The constant value when this is a `const:` entry, else None."""
        if self.spec.startswith("const:"):
            return float(self.spec.split(":", 1)[1])
        return None


def make_phi(spec: str) -> Phi:
    """Parse a registry form: `const:c` or `poly:c0,ct,cx`.

    `poly` builds c0 + ct*theta^2 + cx*x^2; all coefficients must be
    nonnegative with c0 > 0 so the result is strictly positive.
    """
    kind, _, arg = spec.partition(":")
    if kind == "const":
        try:
            c = float(arg)
        except ValueError:
            raise InvalidParameters(f"bad phi spec {spec!r}")
        if not c > 0:
            raise InvalidParameters(f"phi must be strictly positive, got {c}")
        return Phi(spec=f"const:{arg}", fn=lambda theta, x: c)
    if kind == "poly":
        try:
            c0, ct, cx = (float(s) for s in arg.split(","))
        except ValueError:
            raise InvalidParameters(f"bad phi spec {spec!r}")
        if not (c0 > 0 and ct >= 0 and cx >= 0):
            raise InvalidParameters(f"phi poly coefficients must keep phi > 0: {spec!r}")
        return Phi(spec=spec, fn=lambda theta, x: c0 + ct * theta**2 + cx * x**2)
    raise InvalidParameters(f"unknown phi registry kind {kind!r}")


PHI_ONE = make_phi("const:1")


@dataclass(frozen=True)
class CartpoleController:
    """Closed-form controller family parameters.

    The stability conditions (mu0 > 0, sigma0 < 0, w1 > 0 and the
    coupling inequality) are reported by ``validity``; construction only
    requires finite values and b in (0, 1) so that invalid parameter
    sets can still be inspected.
    """

    b: float = DEFAULT_B
    sigma0: float = PAPER_SIGMA0
    mu0: float = PAPER_MU0
    r: float = PAPER_R
    w1: float = PAPER_W1
    phi: Phi = PHI_ONE

    def __post_init__(self):
        vals = (self.b, self.sigma0, self.mu0, self.r, self.w1)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidParameters(f"non-finite controller parameters: {vals}")
        if not 0.0 < self.b < 1.0:
            raise InvalidParameters(f"b = {self.b} outside (0, 1)")
        if self.sigma0 == 0.0 or self.mu0 == 0.0:
            raise InvalidParameters("sigma0 and mu0 must be nonzero")


def paper_controller(b: float = DEFAULT_B, phi: Phi = PHI_ONE) -> CartpoleController:
    """The constants used for the published simulations."""
    return CartpoleController(b=b, sigma0=PAPER_SIGMA0, mu0=PAPER_MU0,
                              r=PAPER_R, w1=PAPER_W1, phi=phi)


@dataclass(frozen=True)
class ValidityReport:
    """Stability-condition report for a controller parameter set."""

    ok: bool
    cos2_bound: float
    theta_max: float


def validity(ctrl: CartpoleController) -> ValidityReport:
    """Check the sign conditions and compute the positive-definiteness cone.

    The model mass matrix is positive definite exactly where
    cos^2(theta) exceeds ``cos2_bound``; ``theta_max`` is the cone
    half-angle (nan when the parameters admit no cone at all).
    """
    denom = -ctrl.sigma0 * ctrl.b * ctrl.mu0 * ctrl.r
    if denom == 0.0:
        return ValidityReport(ok=False, cos2_bound=math.inf, theta_max=math.nan)
    cos2_bound = (ctrl.sigma0**2 * ctrl.r + ctrl.b * ctrl.mu0) / denom
    ok = (ctrl.mu0 > 0 and ctrl.sigma0 < 0 and ctrl.w1 > 0 and ctrl.r > 0
          and 0.0 < cos2_bound < 1.0)
    theta_max = math.acos(math.sqrt(cos2_bound)) if 0.0 < cos2_bound < 1.0 else math.nan
    return ValidityReport(ok=ok, cos2_bound=cos2_bound, theta_max=theta_max)


def ghat_cart(ctrl: CartpoleController, theta: float) -> np.ndarray:
    """Model mass matrix in the (theta, x) ordering."""
    c = math.cos(theta)
    g11 = 1.0 / ctrl.sigma0 + ctrl.r * c * c
    g12 = -(ctrl.sigma0 / ctrl.mu0) * ctrl.r * c
    g22 = ctrl.b / ctrl.mu0 + ctrl.sigma0**2 * ctrl.r / ctrl.mu0**2
    return np.array([[g11, g12], [g12, g22]])


def det_ghat(ctrl: CartpoleController, theta: float) -> float:
    """Closed-form determinant of the model mass matrix."""
    c2 = math.cos(theta) ** 2
    return (ctrl.b / (ctrl.sigma0 * ctrl.mu0)
            + ctrl.b * ctrl.r * c2 / ctrl.mu0
            + ctrl.sigma0 * ctrl.r / ctrl.mu0**2)


def det_g(b: float, theta: float) -> float:
    """Determinant of the plant mass matrix, 1 - b^2 cos^2(theta) > 0."""
    return 1.0 - b * b * math.cos(theta) ** 2


def vhat_cart(ctrl: CartpoleController, theta: float, x: float) -> float:
    """Model potential with the quadratic shaping term."""
    z = x - (ctrl.mu0 / ctrl.sigma0) * math.sin(theta)
    return (math.cos(theta) - 1.0) / ctrl.sigma0 + 0.5 * ctrl.w1 * z * z


def vhat_grad_cart(ctrl: CartpoleController, theta: float, x: float) -> np.ndarray:
    """Analytic gradient (d/dtheta, d/dx) of the model potential."""
    ratio = ctrl.mu0 / ctrl.sigma0
    z = x - ratio * math.sin(theta)
    wz = ctrl.w1 * z
    return np.array([-math.sin(theta) / ctrl.sigma0 - wz * ratio * math.cos(theta), wz])


def vhat_hessian_origin(ctrl: CartpoleController) -> np.ndarray:
    """Hessian of the model potential at the origin (closed form)."""
    ratio = ctrl.mu0 / ctrl.sigma0
    w2 = ctrl.w1
    return np.array([[ratio**2 * w2 - 1.0 / ctrl.sigma0, -ratio * w2],
                     [-ratio * w2, w2]])


def control_u(ctrl: CartpoleController, state: np.ndarray) -> float:
    """Closed-form control force on the cart.

    Defined for every state; the formula is smooth outside the validity
    cone too, though the stability guarantee holds only inside.
    """
    theta, x, theta_dot, x_dot = (float(s) for s in state)
    dg = det_g(ctrl.b, theta)
    dgh = det_ghat(ctrl, theta)
    if abs(dgh) < 1e-12:
        raise DegenerateModelMetric(f"det ghat = {dgh:.3e} at theta = {theta}")
    c, s = math.cos(theta), math.sin(theta)
    z = x - (ctrl.mu0 / ctrl.sigma0) * s
    swing = (ctrl.b + ctrl.r * dg / (ctrl.mu0 * dgh)) * (c * s - s * theta_dot**2)
    shape = -(ctrl.w1 * dg / (ctrl.sigma0 * dgh)) * z
    damp = dg * ctrl.phi(theta, x) * (ctrl.mu0 * c * theta_dot - ctrl.sigma0 * x_dot)
    return swing + shape + damp


def hhat(ctrl: CartpoleController, state: np.ndarray) -> float:
    """Controlled Hamiltonian: model kinetic energy plus model potential."""
    theta, x, theta_dot, x_dot = (float(s) for s in state)
    v = np.array([theta_dot, x_dot])
    return 0.5 * float(v @ ghat_cart(ctrl, theta) @ v) + vhat_cart(ctrl, theta, x)


def dhhat_dt_formula(ctrl: CartpoleController, state: np.ndarray) -> float:
    """Closed-form rate of the controlled Hamiltonian.

    Nonpositive wherever the model mass matrix is positive definite; the
    section direction is its zero mode.
    """
    theta, x, theta_dot, x_dot = (float(s) for s in state)
    m = ctrl.mu0 * math.cos(theta) * theta_dot - ctrl.sigma0 * x_dot
    return -det_ghat(ctrl, theta) * ctrl.phi(theta, x) * m * m


def cart_accel(b: float, state: np.ndarray, u: float) -> np.ndarray:
    """Solve the scaled equations of motion for (theta_ddot, x_ddot).

    The mass matrix is the plant metric at theta; its determinant
    1 - b^2 cos^2(theta) is positive for every theta since b < 1.
    """
    theta, _, theta_dot, _ = (float(s) for s in state)
    c, s = math.cos(theta), math.sin(theta)
    bc = b * c
    det = 1.0 - bc * bc
    rhs_theta = s
    rhs_x = u + b * s * theta_dot**2
    return np.array([(rhs_theta - bc * rhs_x) / det,
                     (rhs_x - bc * rhs_theta) / det])


def cart_rhs(b: float, state: np.ndarray, u: float) -> np.ndarray:
    """State derivative for the scaled cart in (theta, x, theta_dot, x_dot)."""
    acc = cart_accel(b, state, u)
    return np.array([state[2], state[3], acc[0], acc[1]])


def open_loop_energy(b: float, state: np.ndarray) -> float:
    """Conserved energy of the uncontrolled cart, (1/2) g(v, v) + cos(theta)."""
    theta, _, theta_dot, x_dot = (float(s) for s in state)
    bc = b * math.cos(theta)
    kin = 0.5 * (theta_dot**2 + 2.0 * bc * theta_dot * x_dot + x_dot**2)
    return kin + math.cos(theta)


# -- geometric field wrappers -------------------------------------------------

def cart_metric(b: float) -> MetricField:
    """Plant metric in the (theta, x) ordering."""

    def components(q):
        bc = b * math.cos(q[0])
        return np.array([[1.0, bc], [bc, 1.0]])

    def partials(q):
        dg = np.zeros((2, 2, 2))
        ds = -b * math.sin(q[0])
        dg[0, 0, 1] = dg[0, 1, 0] = ds
        return dg

    return MetricField(dim=2, components=components, partials=partials, name="cart-g")


def cart_potential() -> ScalarField:
    return ScalarField(value=lambda q: math.cos(q[0]),
                       partials=lambda q: np.array([-math.sin(q[0]), 0.0]))


def cart_projection(b: float, metric: MetricField) -> ProjectionField:
    """Projection onto the unactuated pendulum direction."""

    def matrix(q):
        return np.array([[1.0, b * math.cos(q[0])], [0.0, 0.0]])

    return ProjectionField(matrix=matrix, metric=metric)


def model_metric(ctrl: CartpoleController) -> MetricField:
    """Model mass matrix as a metric field with its validity cone."""
    report = validity(ctrl)

    def components(q):
        return ghat_cart(ctrl, q[0])

    def partials(q):
        theta = q[0]
        c, s = math.cos(theta), math.sin(theta)
        dg = np.zeros((2, 2, 2))
        dg[0, 0, 0] = -2.0 * ctrl.r * c * s
        dg[0, 0, 1] = dg[0, 1, 0] = (ctrl.sigma0 / ctrl.mu0) * ctrl.r * s
        return dg

    def region(q):
        return math.cos(q[0]) ** 2 > report.cos2_bound

    return MetricField(dim=2, components=components, partials=partials,
                       region=region, name="cart-ghat")


def model_potential(ctrl: CartpoleController) -> ScalarField:
    return ScalarField(value=lambda q: vhat_cart(ctrl, q[0], q[1]),
                       partials=lambda q: vhat_grad_cart(ctrl, q[0], q[1]))


def model_dissipation(ctrl: CartpoleController) -> VelocityMap:
    """Admissible model dissipation along the annihilator of the projection."""

    def value(q, v):
        theta, x = q
        k = ctrl.phi(theta, x) * (ctrl.mu0 * math.cos(theta) * v[0]
                                  - ctrl.sigma0 * v[1])
        return k * np.array([ctrl.b * math.cos(theta), -1.0])

    return VelocityMap(value=value, odd=True)


def cart_system_pair(ctrl: CartpoleController) -> SystemPair:
    """Plant/model pair realizing the closed-form controller family."""
    g = cart_metric(ctrl.b)
    plant = MechanicalSystem(metric=g, potential=cart_potential(),
                             dissipation=ZERO_VELOCITY_MAP)
    model = MechanicalSystem(metric=model_metric(ctrl),
                             potential=model_potential(ctrl),
                             dissipation=model_dissipation(ctrl))
    return SystemPair(plant=plant, model=model,
                      projection=cart_projection(ctrl.b, g))


# -- JSON parameter loading ---------------------------------------------------

_KNOWN_KEYS = {"b", "physical", "sigma0", "mu0", "r", "w1", "phi"}
_PHYSICAL_KEYS = {"M", "m", "l", "I", "g"}


def controller_from_dict(doc: Mapping) -> CartpoleController:
    """Build a controller from a parameter document.

    Exactly one of `b` or `physical` must be present; unknown keys are
    rejected.
    """
    unknown = set(doc) - _KNOWN_KEYS
    if unknown:
        raise InvalidParameters(f"unknown controller keys: {sorted(unknown)}")
    has_b, has_phys = "b" in doc, "physical" in doc
    if has_b == has_phys:
        raise InvalidParameters("provide exactly one of 'b' or 'physical'")
    if has_phys:
        phys = dict(doc["physical"])
        unknown = set(phys) - _PHYSICAL_KEYS
        if unknown:
            raise InvalidParameters(f"unknown physical keys: {sorted(unknown)}")
        try:
            cart = PhysicalCart(M=phys["M"], m=phys["m"], ell=phys["l"],
                                inertia=phys["I"], g_grav=phys.get("g", 9.81))
        except KeyError as exc:
            raise InvalidParameters(f"missing physical key: {exc}")
        b = nondimensionalize(cart)
    else:
        b = float(doc["b"])
    ctrl = paper_controller(b=b)
    overrides = {}
    for key in ("sigma0", "mu0", "r", "w1"):
        if key in doc:
            overrides[key] = float(doc[key])
    if "phi" in doc:
        overrides["phi"] = make_phi(str(doc["phi"]))
    return replace(ctrl, **overrides) if overrides else ctrl


def load_controller(path) -> CartpoleController:
    """Load controller parameters from a JSON document."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidParameters(f"malformed controller JSON: {exc}")
    if not isinstance(doc, dict):
        raise InvalidParameters("controller JSON must be an object")
    return controller_from_dict(doc)
