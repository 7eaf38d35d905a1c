"""Compiled inner loops for long explicit runs.

The explicit stepper costs ~10 numpy dispatches per step, which dominates the
runtime of CFL-limited runs (millions of steps at fine grids). `explicit_run`
repeats the exact arithmetic of `solver.step_arrays_explicit` in a numba
kernel; an equivalence test keeps the two in lock step.

Flux signals usable inside the kernel are restricted to the closed forms
needed by open-loop runs: a constant and an exponential-in-time flux.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_DEGENERATE = 1
STATUS_BLOWUP = 2
STATUS_CFL = 3

FLUX_CONST = 0
FLUX_EXP = 1


@dataclass(frozen=True)
class ConstFlux:
    q0: float

    def __call__(self, t: float) -> float:
        return self.q0


@dataclass(frozen=True)
class ExpFlux:
    """q(t) = q0 * exp(rate * t)."""

    q0: float
    rate: float

    def __call__(self, t: float) -> float:
        return self.q0 * np.exp(self.rate * t)


def encode_flux(src):
    """Map a flux source onto (kind, p0, p1) if the kernel can evaluate it."""
    if isinstance(src, ConstFlux):
        return (FLUX_CONST, src.q0, 0.0)
    if isinstance(src, ExpFlux):
        return (FLUX_EXP, src.q0, src.rate)
    if isinstance(src, (int, float)):
        return (FLUX_CONST, float(src), 0.0)
    return None


@njit(cache=True)
def _flux_eval(kind, p0, p1, t):
    if kind == FLUX_EXP:
        return p0 * np.exp(p1 * t)
    return p0


@njit(cache=True)
def explicit_run(theta0, s0, t0, horizon, alpha, beta, k, dxi, sf,
                 dt_fixed, min_s, flux_kind, p0, p1, record_dt):
    """Advance the one-phase system explicitly over a horizon.

    dt_fixed <= 0 selects the CFL-derived adaptive step
    sf*(dxi*s)^2/(2*alpha); otherwise dt_fixed is used and checked against
    the bound. Records land on exact multiples of record_dt. Returns
    (status, n_rec, t_rec, s_rec, q_rec, theta_rec, theta_min, ds_min, t_fail).
    """
    n = theta0.size - 1
    t_end = t0 + horizon
    eps = 1e-12 * max(1.0, abs(t_end))

    max_rec = int(horizon / record_dt) + 3
    t_rec = np.empty(max_rec)
    s_rec = np.empty(max_rec)
    q_rec = np.empty(max_rec)
    theta_rec = np.empty((max_rec, n + 1))

    theta = theta0.copy()
    new = np.empty(n + 1)
    s = s0
    t = t0

    t_rec[0] = t
    s_rec[0] = s
    q_rec[0] = _flux_eval(flux_kind, p0, p1, t)
    theta_rec[0, :] = theta
    n_rec = 1
    j_rec = 1

    theta_min = theta.min()
    ds_min = 0.0
    status = STATUS_OK
    t_fail = t

    while t < t_end - eps:
        limit = sf * (dxi * s) ** 2 / (2.0 * alpha)
        if dt_fixed > 0.0:
            if dt_fixed > limit * (1.0 + 1e-9):
                status = STATUS_CFL
                t_fail = t
                break
            dt = dt_fixed
        else:
            dt = limit
        next_rec = t0 + j_rec * record_dt
        if next_rec - t > eps and next_rec - t < dt:
            dt = next_rec - t
        if t_end - t < dt:
            dt = t_end - t

        qc = _flux_eval(flux_kind, p0, p1, t)
        grad_xi = (theta[n - 2] - 4.0 * theta[n - 1] + 3.0 * theta[n]) / (2.0 * dxi)
        sdot = -beta * grad_xi / s

        diff = alpha * dt / (s * s * dxi * dxi)
        adv = dt * sdot / (s * dxi)
        for i in range(1, n):
            new[i] = (theta[i]
                      + diff * (theta[i + 1] - 2.0 * theta[i] + theta[i - 1])
                      + (adv * (i * dxi)) * (theta[i + 1] - theta[i]))
        ghost = theta[1] + 2.0 * dxi * s * qc / k
        new[0] = theta[0] + diff * (theta[1] - 2.0 * theta[0] + ghost)
        new[n] = 0.0

        ds = dt * sdot
        s_new = s + ds
        t += dt

        ok = np.isfinite(s_new)
        m = new[0]
        for i in range(n + 1):
            v = new[i]
            if not np.isfinite(v):
                ok = False
            if v < m:
                m = v
        if not ok:
            status = STATUS_BLOWUP
            t_fail = t
            break
        if s_new < min_s:
            status = STATUS_DEGENERATE
            t_fail = t
            break

        if m < theta_min:
            theta_min = m
        if ds < ds_min:
            ds_min = ds
        s = s_new
        theta, new = new, theta

        if t >= t0 + j_rec * record_dt - eps:
            t_rec[n_rec] = t
            s_rec[n_rec] = s
            q_rec[n_rec] = _flux_eval(flux_kind, p0, p1, t)
            theta_rec[n_rec, :] = theta
            n_rec += 1
            j_rec += 1

    if status == STATUS_OK and t_rec[n_rec - 1] < t - eps:
        t_rec[n_rec] = t
        s_rec[n_rec] = s
        q_rec[n_rec] = _flux_eval(flux_kind, p0, p1, t)
        theta_rec[n_rec, :] = theta
        n_rec += 1

    return status, n_rec, t_rec, s_rec, q_rec, theta_rec, theta_min, ds_min, t_fail
