"""Compiled fixed-step RK4 kernels for the heavy simulation paths.

The generic integrator in ``sim`` is plain NumPy and takes arbitrary
controllers; these kernels cover the two concrete systems with
constant-parameter controllers so that basin sweeps and long audits run
in seconds.  Controller selection and parameter packing:

    mode 0: open loop (u = 0)
    mode 1: closed-form nonlinear law, params (b, sigma0, mu0, r, w1, phi)
    mode 2: linear state feedback,     params (b, k_th, k_x, k_thd, k_xd)

Outcome codes match ``sim.classify``: 0 undetermined, 1 settled,
2 diverged.  Settling is decided on sample indices: a run settles when
no sample in the trailing window of ``hold_steps`` samples leaves the
``eps`` box.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

MODE_NONE = 0
MODE_NONLINEAR = 1
MODE_LINEAR = 2

OUT_UNDETERMINED = 0
OUT_SETTLED = 1
OUT_DIVERGED = 2


@njit(cache=True)
def _cart_u(mode, p, th, x, thd, xd):
    if mode == MODE_NONLINEAR:
        b, sigma0, mu0, r, w1, phi = p[0], p[1], p[2], p[3], p[4], p[5]
        c = math.cos(th)
        s = math.sin(th)
        dg = 1.0 - b * b * c * c
        dgh = b / (sigma0 * mu0) + b * r * c * c / mu0 + sigma0 * r / mu0**2
        z = x - (mu0 / sigma0) * s
        return ((b + r * dg / (mu0 * dgh)) * (c * s - s * thd * thd)
                - (w1 * dg / (sigma0 * dgh)) * z
                + dg * phi * (mu0 * c * thd - sigma0 * xd))
    if mode == MODE_LINEAR:
        return p[1] * th + p[2] * x + p[3] * thd + p[4] * xd
    return 0.0


@njit(cache=True, inline="always")
def _cart_deriv(mode, p, b, s0, s1, s2, s3):
    u = _cart_u(mode, p, s0, s1, s2, s3)
    c = math.cos(s0)
    sn = math.sin(s0)
    bc = b * c
    det = 1.0 - bc * bc
    rt = sn
    rx = u + b * sn * s2 * s2
    return s2, s3, (rt - bc * rx) / det, (rx - bc * rt) / det


@njit(cache=True)
def _cart_step(mode, p, b, s0, s1, s2, s3, dt):
    """One classical RK4 step of the closed-loop cart."""
    a0, a1, a2, a3 = _cart_deriv(mode, p, b, s0, s1, s2, s3)
    h = 0.5 * dt
    b0, b1, b2, b3 = _cart_deriv(mode, p, b, s0 + h * a0, s1 + h * a1,
                                 s2 + h * a2, s3 + h * a3)
    c0, c1, c2, c3 = _cart_deriv(mode, p, b, s0 + h * b0, s1 + h * b1,
                                 s2 + h * b2, s3 + h * b3)
    d0, d1, d2, d3 = _cart_deriv(mode, p, b, s0 + dt * c0, s1 + dt * c1,
                                 s2 + dt * c2, s3 + dt * c3)
    w = dt / 6.0
    return (s0 + w * (a0 + 2.0 * b0 + 2.0 * c0 + d0),
            s1 + w * (a1 + 2.0 * b1 + 2.0 * c1 + d1),
            s2 + w * (a2 + 2.0 * b2 + 2.0 * c2 + d2),
            s3 + w * (a3 + 2.0 * b3 + 2.0 * c3 + d3))


@njit(cache=True)
def _cart_energy(cp, th, x, thd, xd):
    b, sigma0, mu0, r, w1, phi = cp[0], cp[1], cp[2], cp[3], cp[4], cp[5]
    c = math.cos(th)
    g11 = 1.0 / sigma0 + r * c * c
    g12 = -(sigma0 / mu0) * r * c
    g22 = b / mu0 + sigma0 * sigma0 * r / mu0**2
    z = x - (mu0 / sigma0) * math.sin(th)
    hh = (0.5 * (g11 * thd * thd + 2.0 * g12 * thd * xd + g22 * xd * xd)
          + (c - 1.0) / sigma0 + 0.5 * w1 * z * z)
    dgh = b / (sigma0 * mu0) + b * r * c * c / mu0 + sigma0 * r / mu0**2
    m = mu0 * c * thd - sigma0 * xd
    return hh, -dgh * phi * m * m


@njit(cache=True)
def _finite4(s0, s1, s2, s3):
    return (math.isfinite(s0) and math.isfinite(s1)
            and math.isfinite(s2) and math.isfinite(s3))


@njit(cache=True)
def cart_trajectory(s0, dt, n_steps, guard, mode, params, energy_params):
    """Integrate and record (states, u, hhat, dhhat_formula).

    ``energy_params`` feeds the controlled-Hamiltonian diagnostics
    regardless of which controller produces u.  Returns the recorded
    arrays (truncated on a guard trip) and the trip flag.
    """
    b = energy_params[0]
    states = np.empty((n_steps + 1, 4))
    us = np.empty(n_steps + 1)
    hh = np.empty(n_steps + 1)
    dh = np.empty(n_steps + 1)
    t0, t1, t2, t3 = s0[0], s0[1], s0[2], s0[3]
    n_valid = 0
    tripped = False
    for i in range(n_steps + 1):
        u = _cart_u(mode, params, t0, t1, t2, t3)
        if not math.isfinite(u):
            tripped = True
            break
        states[i, 0], states[i, 1], states[i, 2], states[i, 3] = t0, t1, t2, t3
        us[i] = u
        hh[i], dh[i] = _cart_energy(energy_params, t0, t1, t2, t3)
        n_valid = i + 1
        if i == n_steps:
            break
        t0, t1, t2, t3 = _cart_step(mode, params, b, t0, t1, t2, t3, dt)
        if (not _finite4(t0, t1, t2, t3) or abs(t0) > guard or abs(t1) > guard
                or abs(t2) > guard or abs(t3) > guard):
            tripped = True
            break
    return states[:n_valid], us[:n_valid], hh[:n_valid], dh[:n_valid], tripped


@njit(cache=True)
def _cart_outcome(s0, s1, s2, s3, dt, n_steps, guard, mode, params,
                  eps, hold_steps):
    """Stream one cell to an outcome without storing the trajectory."""
    b = params[0]
    last_out = -1  # sample index of the last excursion beyond eps
    m = max(abs(s0), max(abs(s1), max(abs(s2), abs(s3))))
    max_exc = m
    if m > eps:
        last_out = 0
    for i in range(n_steps):
        u = _cart_u(mode, params, s0, s1, s2, s3)
        if not math.isfinite(u):
            return OUT_DIVERGED, np.nan, max_exc
        s0, s1, s2, s3 = _cart_step(mode, params, b, s0, s1, s2, s3, dt)
        if (not _finite4(s0, s1, s2, s3) or abs(s0) > guard or abs(s1) > guard
                or abs(s2) > guard or abs(s3) > guard):
            return OUT_DIVERGED, np.nan, max_exc
        m = max(abs(s0), max(abs(s1), max(abs(s2), abs(s3))))
        if m > max_exc:
            max_exc = m
        if m > eps:
            last_out = i + 1
    if n_steps >= hold_steps and last_out < n_steps - hold_steps:
        return OUT_SETTLED, (last_out + 1) * dt, max_exc
    return OUT_UNDETERMINED, np.nan, max_exc


@njit(cache=True, parallel=True)
def cart_sweep(cells, dt, n_steps, guard, mode, params, eps, hold_steps):
    """Per-cell outcomes over initial states (theta0, x0, thetadot0, xdot0)."""
    n = cells.shape[0]
    codes = np.empty(n, dtype=np.int8)
    settle = np.empty(n)
    exc = np.empty(n)
    for i in prange(n):
        c, s, e = _cart_outcome(cells[i, 0], cells[i, 1], cells[i, 2],
                                cells[i, 3], dt, n_steps, guard, mode,
                                params, eps, hold_steps)
        codes[i] = c
        settle[i] = s
        exc[i] = e
    return codes, settle, exc


@njit(cache=True, inline="always")
def _quartic_deriv(s0, s1, s2, s3, controlled):
    a = s0 * s0 - 3.0 * s0 * s1
    c = s0 * s0 - 4.0 * s0 * s1 - 2.0 * s1 * s1
    hx = 2.0 * a * (2.0 * s0 - 3.0 * s1) + 2.0 * c * (2.0 * s0 - 4.0 * s1)
    hy = 2.0 * a * (-3.0 * s0) + 2.0 * c * (-4.0 * s0 - 4.0 * s1)
    vx = -6.0 * s0**3 + 90.0 * s0 * s1 * s1 + 32.0 * s1**3
    vy = 90.0 * s0 * s0 * s1 + 96.0 * s0 * s1 * s1
    if controlled:
        u = vy - (hx + 2.0 * hy) - (s3 - s2)
    else:
        u = 0.0
    return s2, s3, -vx, u - vy, u


@njit(cache=True)
def _quartic_step(s0, s1, s2, s3, dt, controlled):
    a0, a1, a2, a3, _ = _quartic_deriv(s0, s1, s2, s3, controlled)
    h = 0.5 * dt
    b0, b1, b2, b3, _ = _quartic_deriv(s0 + h * a0, s1 + h * a1,
                                       s2 + h * a2, s3 + h * a3, controlled)
    c0, c1, c2, c3, _ = _quartic_deriv(s0 + h * b0, s1 + h * b1,
                                       s2 + h * b2, s3 + h * b3, controlled)
    d0, d1, d2, d3, _ = _quartic_deriv(s0 + dt * c0, s1 + dt * c1,
                                       s2 + dt * c2, s3 + dt * c3, controlled)
    w = dt / 6.0
    return (s0 + w * (a0 + 2.0 * b0 + 2.0 * c0 + d0),
            s1 + w * (a1 + 2.0 * b1 + 2.0 * c1 + d1),
            s2 + w * (a2 + 2.0 * b2 + 2.0 * c2 + d2),
            s3 + w * (a3 + 2.0 * b3 + 2.0 * c3 + d3))


@njit(cache=True)
def quartic_trajectory(s0, dt, n_steps, guard, controlled):
    """Integrate the quartic system, recording states, u and energy."""
    states = np.empty((n_steps + 1, 4))
    us = np.empty(n_steps + 1)
    hh = np.empty(n_steps + 1)
    t0, t1, t2, t3 = s0[0], s0[1], s0[2], s0[3]
    n_valid = 0
    tripped = False
    for i in range(n_steps + 1):
        _, _, _, _, u = _quartic_deriv(t0, t1, t2, t3, controlled)
        if not math.isfinite(u):
            tripped = True
            break
        states[i, 0], states[i, 1], states[i, 2], states[i, 3] = t0, t1, t2, t3
        us[i] = u
        va = t0 * t0 - 3.0 * t0 * t1
        vc = t0 * t0 - 4.0 * t0 * t1 - 2.0 * t1 * t1
        hh[i] = (0.5 * (2.0 * t2 * t2 - 2.0 * t2 * t3 + t3 * t3)
                 + va * va + vc * vc)
        n_valid = i + 1
        if i == n_steps:
            break
        t0, t1, t2, t3 = _quartic_step(t0, t1, t2, t3, dt, controlled)
        if (not _finite4(t0, t1, t2, t3) or abs(t0) > guard or abs(t1) > guard
                or abs(t2) > guard or abs(t3) > guard):
            tripped = True
            break
    return states[:n_valid], us[:n_valid], hh[:n_valid], tripped


@njit(cache=True, parallel=True)
def quartic_probe(initial, dt, n_steps, ball):
    """Last exit time from the state-space ball for each controlled run.

    Returns, per trajectory, the last sample time at which the Euclidean
    state norm exceeded ``ball`` (-1.0 if it never did) and the final
    norm.
    """
    n = initial.shape[0]
    last_exit = np.empty(n)
    final_norm = np.empty(n)
    for j in prange(n):
        t0, t1, t2, t3 = (initial[j, 0], initial[j, 1],
                          initial[j, 2], initial[j, 3])
        last = -1.0
        nr = math.sqrt(t0 * t0 + t1 * t1 + t2 * t2 + t3 * t3)
        if nr > ball:
            last = 0.0
        for i in range(n_steps):
            t0, t1, t2, t3 = _quartic_step(t0, t1, t2, t3, dt, True)
            nr = math.sqrt(t0 * t0 + t1 * t1 + t2 * t2 + t3 * t3)
            if nr > ball:
                last = (i + 1) * dt
        last_exit[j] = last
        final_norm[j] = nr
    return last_exit, final_norm
