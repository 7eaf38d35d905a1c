"""One-phase moving-boundary solver on front-fixed coordinates.

The liquid region [0, s(t)] is mapped onto xi in [0, 1] by xi = x/s(t), which
turns the heat equation into

    theta_t = (alpha/s^2) theta_xixi + (xi*sdot/s) theta_xi

with a flux condition theta_xi(0) = -qc*s/k, the interface node pinned to
zero excess, and the interface moving by sdot = -beta * theta_x(s).

Time stepping is method-of-lines: explicit Euler under a CFL guard (default),
or implicit Euler with the interface velocity lagged one step for stiff
parameter sets. The advective term is upwinded with the forward difference,
which is the stable side while the interface advances.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from . import kernels
from .core import DerivedConstants, Grid, OnePhaseState
from .errors import (
    CflViolationError,
    DegenerateInterfaceError,
    InvalidParameterError,
    NumericalBlowupError,
)

EXPLICIT = "explicit"
IMPLICIT = "implicit"

# Relative tolerance used when clipping a step onto a record/horizon boundary.
_TIME_SNAP = 1e-12

_unit_nodes_cache: dict[int, np.ndarray] = {}


def unit_nodes(n: int) -> np.ndarray:
    """Cached, read-only linspace(0, 1, n+1); the per-step stencils reuse it."""
    nodes = _unit_nodes_cache.get(n)
    if nodes is None:
        nodes = np.linspace(0.0, 1.0, n + 1)
        nodes.setflags(write=False)
        _unit_nodes_cache[n] = nodes
    return nodes


@dataclass(frozen=True)
class SolverConfig:
    """Discretization parameters shared by the solvers.

    dt:            fixed time step [s]; None lets explicit runs derive it from the CFL bound
    safety_factor: fraction of the diffusive stability limit used when deriving dt
    min_interface: smallest admissible interface position [m]
    scheme:        "explicit" or "implicit"
    """

    grid: Grid
    dt: float | None = None
    safety_factor: float = 0.4
    min_interface: float = 1e-12
    scheme: str = EXPLICIT

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0.0:
            raise InvalidParameterError(f"dt must be positive, got {self.dt!r}")
        if not 0.0 < self.safety_factor <= 1.0:
            raise InvalidParameterError(
                f"safety_factor must be in (0, 1], got {self.safety_factor!r}"
            )
        if not self.min_interface > 0.0:
            raise InvalidParameterError(
                f"min_interface must be positive, got {self.min_interface!r}"
            )
        if self.scheme not in (EXPLICIT, IMPLICIT):
            raise InvalidParameterError(f"unknown scheme {self.scheme!r}")
        if self.scheme == IMPLICIT and self.dt is None:
            raise InvalidParameterError("implicit stepping needs an explicit dt")


def cfl_dt(s: float, cfg: SolverConfig, consts: DerivedConstants) -> float:
    """Diffusive stability bound dt <= safety_factor*(dxi*s)^2/(2*alpha)."""
    h = cfg.grid.dxi * s
    return cfg.safety_factor * h * h / (2.0 * consts.alpha)


def interface_gradient(state: OnePhaseState) -> float:
    """Physical temperature gradient at the interface, T_x(s(t), t) [C/m].

    Second-order one-sided difference in xi, divided by s. The interface node
    itself carries zero excess, so only the two inner neighbours contribute.
    """
    theta = state.theta
    dxi = 1.0 / state.n_cells
    grad_xi = (theta[-3] - 4.0 * theta[-2] + 3.0 * theta[-1]) / (2.0 * dxi)
    return grad_xi / state.s


def _gradient_xi(theta: np.ndarray, dxi: float) -> float:
    return (theta[-3] - 4.0 * theta[-2] + 3.0 * theta[-1]) / (2.0 * dxi)


def liquid_update_explicit(theta, s, qc, dt, alpha, k, dxi, sdot, forward=True):
    """Explicit Euler update of a flux-heated, interface-pinned phase.

    Shared by the one-phase solver and the liquid half of the two-phase
    solver; `kernels.explicit_run` repeats the same arithmetic in compiled
    form for long open-loop runs. The one-phase solver keeps the forward
    upwind direction fixed (the interface only advances under nonnegative
    flux); the two-phase solver selects it from the sign of sdot.
    """
    n = theta.size - 1
    diff = alpha * dt / (s * s * dxi * dxi)
    adv = dt * sdot / (s * dxi)
    xi = unit_nodes(n)
    ai = adv * xi[1:n]

    new = np.empty_like(theta)
    lap = theta[2:] - 2.0 * theta[1:n] + theta[: n - 1]
    if forward:
        new[1:n] = theta[1:n] + diff * lap + ai * (theta[2:] - theta[1:n])
    else:
        new[1:n] = theta[1:n] + diff * lap + ai * (theta[1:n] - theta[: n - 1])
    ghost = theta[1] + 2.0 * dxi * s * qc / k
    new[0] = theta[0] + diff * (theta[1] - 2.0 * theta[0] + ghost)
    new[n] = 0.0
    return new


def liquid_update_implicit(theta, s, qc, dt, alpha, k, dxi, sdot, forward=True):
    """Implicit Euler update of a flux-heated, interface-pinned phase.

    The update matrix is an M-matrix (diffusion plus upwinded advection), so
    nonnegative profiles stay nonnegative for any dt. sdot enters only the
    advective coefficients (lagged coupling).
    """
    n = theta.size - 1
    diff = alpha * dt / (s * s * dxi * dxi)
    adv = dt * sdot / (s * dxi)
    xi = unit_nodes(n)
    ai = adv * xi[1:n]

    # Unknowns are nodes 0..n-1; the interface node is pinned to zero, so the
    # coupling of the last unknown row to it drops out.
    sub = np.zeros(n)  # coefficient of theta[i-1] in row i (i >= 1)
    dia = np.ones(n)
    sup = np.zeros(n)  # coefficient of theta[i+1] in row i (i <= n-2)
    rhs = theta[:n].copy()

    dia[0] = 1.0 + 2.0 * diff
    sup[0] = -2.0 * diff
    rhs[0] += diff * 2.0 * dxi * s * qc / k

    if forward:
        sub[1:] = -diff
        dia[1:] = 1.0 + 2.0 * diff + ai
        sup[1:n - 1] = -(diff + ai[: n - 2])
    else:
        sub[1:] = -diff + ai
        dia[1:] = 1.0 + 2.0 * diff - ai
        sup[1:n - 1] = -diff

    ab = np.zeros((3, n))
    ab[0, 1:] = sup[: n - 1]
    ab[1, :] = dia
    ab[2, : n - 1] = sub[1:]
    interior = solve_banded((1, 1), ab, rhs, check_finite=False)

    new = np.empty_like(theta)
    new[:n] = interior
    new[n] = 0.0
    return new


def step_arrays_explicit(theta, s, qc, dt, alpha, beta, k, dxi):
    """One explicit one-phase step on raw arrays. Returns (theta_new, s_new, sdot)."""
    grad_xi = _gradient_xi(theta, dxi)
    sdot = -beta * grad_xi / s
    new = liquid_update_explicit(theta, s, qc, dt, alpha, k, dxi, sdot)
    return new, s + dt * sdot, sdot


def step_arrays_implicit(theta, s, qc, dt, alpha, beta, k, dxi):
    """One implicit one-phase step; interface velocity lagged one step."""
    grad_xi = _gradient_xi(theta, dxi)
    sdot = -beta * grad_xi / s
    new = liquid_update_implicit(theta, s, qc, dt, alpha, k, dxi, sdot)
    return new, s + dt * sdot, sdot


def step(state: OnePhaseState, qc: float, cfg: SolverConfig,
         consts: DerivedConstants, k: float, dt: float | None = None) -> OnePhaseState:
    """Advance the system one step under a held boundary flux.

    For the explicit scheme the step must satisfy the diffusive CFL bound;
    pass dt=None to use the bound itself.
    """
    dxi = cfg.grid.dxi
    if state.n_cells != cfg.grid.n_cells:
        raise InvalidParameterError("state and config grids disagree")

    if cfg.scheme == EXPLICIT:
        limit = cfl_dt(state.s, cfg, consts)
        if dt is None:
            dt = cfg.dt if cfg.dt is not None else limit
        if dt > limit * (1.0 + 1e-9):
            raise CflViolationError(
                f"dt={dt:.3e} exceeds explicit stability bound {limit:.3e}"
            )
        theta, s_new, _ = step_arrays_explicit(
            state.theta, state.s, qc, dt, consts.alpha, consts.beta, k, dxi)
    else:
        if dt is None:
            dt = cfg.dt
        theta, s_new, _ = step_arrays_implicit(
            state.theta, state.s, qc, dt, consts.alpha, consts.beta, k, dxi)

    t_new = state.t + dt
    if not np.isfinite(s_new) or not np.all(np.isfinite(theta)):
        raise NumericalBlowupError("non-finite solution values", t_new)
    if s_new < cfg.min_interface:
        raise DegenerateInterfaceError(
            f"interface fell below min_interface={cfg.min_interface:.3e}", t_new)
    return OnePhaseState(t=t_new, s=s_new, theta=theta)


@dataclass(frozen=True)
class TravelingWave:
    """Exact constant-speed melting front used as a solver oracle.

    Under the flux q(t) = (k*v/beta)*exp(v*s(t)/alpha) the system has the
    closed-form solution

        s(t)        = s0 + v*t
        theta(x, t) = (alpha/beta)*(exp(-v*(x - s(t))/alpha) - 1)

    which satisfies the interior equation, the pinned interface, the flux
    condition, and the interface motion law by direct substitution.
    """

    v: float
    s0: float

    def __post_init__(self):
        if not self.v > 0.0:
            raise InvalidParameterError(f"front speed must be positive, got {self.v!r}")
        if not self.s0 > 0.0:
            raise InvalidParameterError(f"initial interface must be positive, got {self.s0!r}")


def traveling_wave_oracle(tw: TravelingWave, consts: DerivedConstants, k: float,
                          t: float, grid: Grid | None = None):
    """Exact (flux, interface, profile) triplet at time t.

    The profile is sampled on the immobilized grid when one is given,
    otherwise None. Raises when the exponent v*s/alpha leaves the range where
    the exponential is numerically sane.
    """
    s_exact = tw.s0 + tw.v * t
    arg = tw.v * s_exact / consts.alpha
    if arg > 20.0:
        raise InvalidParameterError(
            f"traveling-wave exponent v*s/alpha = {arg:.3g} too large (limit 20)")
    flux = (k * tw.v / consts.beta) * np.exp(arg)
    profile = None
    if grid is not None:
        x = grid.xi * s_exact
        profile = (consts.alpha / consts.beta) * (
            np.exp(-tw.v * (x - s_exact) / consts.alpha) - 1.0)
        profile[-1] = 0.0
    return flux, s_exact, profile


def traveling_wave_state(tw: TravelingWave, consts: DerivedConstants, k: float,
                         grid: Grid, t: float = 0.0) -> OnePhaseState:
    """State matching the exact solution at time t."""
    _, s_exact, profile = traveling_wave_oracle(tw, consts, k, t, grid)
    return OnePhaseState(t=t, s=s_exact, theta=profile)


def traveling_wave_flux(tw: TravelingWave, consts: DerivedConstants, k: float):
    """Flux signal realizing the traveling wave; exp-form so the compiled loop can evaluate it."""
    q0 = (k * tw.v / consts.beta) * np.exp(tw.v * tw.s0 / consts.alpha)
    rate = tw.v * tw.v / consts.alpha
    return kernels.ExpFlux(q0, rate)


@dataclass(frozen=True)
class Trajectory:
    """Decimated record of a simulation run.

    theta_min is the minimum excess over every node of every step taken (not
    just recorded ones), ds_min the most negative per-step interface move;
    both back the sign-preservation checks.
    """

    t: np.ndarray
    s: np.ndarray
    qc: np.ndarray
    theta: np.ndarray
    theta_min: float
    ds_min: float
    final_state: OnePhaseState


def simulate(initial: OnePhaseState, flux_source, horizon: float,
             cfg: SolverConfig, consts: DerivedConstants, k: float,
             record_dt: float | None = None) -> Trajectory:
    """Advance under a time-indexed flux signal, recording every record_dt.

    flux_source may be a plain callable t -> qc, a constant, or one of the
    signal objects from `kernels` (ConstFlux/ExpFlux), which run in the
    compiled fast path together with explicit stepping.
    """
    if horizon < 0.0:
        raise InvalidParameterError(f"horizon must be nonnegative, got {horizon!r}")
    if horizon == 0.0:
        one = np.array([initial.t])
        return Trajectory(t=one, s=np.array([initial.s]),
                          qc=np.array([float(_flux_at(flux_source, initial.t))]),
                          theta=initial.theta[None, :].copy(),
                          theta_min=float(initial.theta.min()), ds_min=0.0,
                          final_state=initial)

    if record_dt is None:
        record_dt = horizon / 400.0

    kind = kernels.encode_flux(flux_source)
    if cfg.scheme == EXPLICIT and kind is not None:
        return _simulate_kernel(initial, kind, horizon, cfg, consts, k, record_dt)
    return _simulate_python(initial, flux_source, horizon, cfg, consts, k, record_dt)


def _flux_at(flux_source, t: float) -> float:
    if callable(flux_source):
        return flux_source(t)
    return float(flux_source)


def _simulate_kernel(initial, kind, horizon, cfg, consts, k, record_dt):
    flux_kind, p0, p1 = kind
    dt_fixed = -1.0 if cfg.dt is None else cfg.dt
    (status, n_rec, t_rec, s_rec, q_rec, theta_rec, theta_min, ds_min,
     t_fail) = kernels.explicit_run(
        initial.theta.astype(float), initial.s, initial.t, horizon,
        consts.alpha, consts.beta, k, cfg.grid.dxi, cfg.safety_factor,
        dt_fixed, cfg.min_interface, flux_kind, p0, p1, record_dt)
    if status == kernels.STATUS_CFL:
        raise CflViolationError(
            f"dt={cfg.dt:.3e} exceeds explicit stability bound during run")
    if status == kernels.STATUS_DEGENERATE:
        raise DegenerateInterfaceError("interface fell below min_interface", t_fail)
    if status == kernels.STATUS_BLOWUP:
        raise NumericalBlowupError("non-finite solution values", t_fail)
    final = OnePhaseState(t=float(t_rec[n_rec - 1]), s=float(s_rec[n_rec - 1]),
                          theta=theta_rec[n_rec - 1].copy())
    return Trajectory(t=t_rec[:n_rec].copy(), s=s_rec[:n_rec].copy(),
                      qc=q_rec[:n_rec].copy(), theta=theta_rec[:n_rec].copy(),
                      theta_min=float(theta_min), ds_min=float(ds_min),
                      final_state=final)


def _simulate_python(initial, flux_source, horizon, cfg, consts, k, record_dt):
    theta = initial.theta.astype(float).copy()
    s = initial.s
    t = initial.t
    t_end = initial.t + horizon
    dxi = cfg.grid.dxi

    rec_t = [t]
    rec_s = [s]
    rec_q = [_flux_at(flux_source, t)]
    rec_theta = [theta.copy()]
    j_rec = 1
    theta_min = float(theta.min())
    ds_min = 0.0
    t0 = t
    eps = _TIME_SNAP * max(1.0, abs(t_end))

    while t < t_end - eps:
        if cfg.scheme == EXPLICIT:
            limit = cfl_dt(s, cfg, consts)
            dt = cfg.dt if cfg.dt is not None else limit
            if dt > limit * (1.0 + 1e-9):
                raise CflViolationError(
                    f"dt={dt:.3e} exceeds explicit stability bound {limit:.3e}")
        else:
            dt = cfg.dt
        next_rec = t0 + j_rec * record_dt
        if next_rec - t > eps:
            dt = min(dt, next_rec - t)
        dt = min(dt, t_end - t)
        qc = _flux_at(flux_source, t)
        stepper = step_arrays_explicit if cfg.scheme == EXPLICIT else step_arrays_implicit
        theta, s_new, _ = stepper(theta, s, qc, dt, consts.alpha, consts.beta, k, dxi)
        t += dt
        if not np.isfinite(s_new) or not np.all(np.isfinite(theta)):
            raise NumericalBlowupError("non-finite solution values", t)
        if s_new < cfg.min_interface:
            raise DegenerateInterfaceError(
                f"interface fell below min_interface={cfg.min_interface:.3e}", t)
        ds_min = min(ds_min, s_new - s)
        theta_min = min(theta_min, float(theta.min()))
        s = s_new
        if t >= t0 + j_rec * record_dt - eps:
            rec_t.append(t)
            rec_s.append(s)
            rec_q.append(_flux_at(flux_source, t))
            rec_theta.append(theta.copy())
            j_rec += 1

    if rec_t[-1] < t - eps:
        rec_t.append(t)
        rec_s.append(s)
        rec_q.append(_flux_at(flux_source, t))
        rec_theta.append(theta.copy())

    final = OnePhaseState(t=t, s=s, theta=theta.copy())
    return Trajectory(t=np.array(rec_t), s=np.array(rec_s), qc=np.array(rec_q),
                      theta=np.array(rec_theta), theta_min=theta_min,
                      ds_min=ds_min, final_state=final)
