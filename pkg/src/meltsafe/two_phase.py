"""Two-phase moving-boundary solver: liquid and solid PDEs coupled at the front.

Both phases are front-fixed onto unit intervals: xi = x/s for the liquid,
eta = (x - s)/(L - s) for the solid. The interface moves by the energy
balance gamma*sdot = -k_l*T_lx(s) + k_s*T_sx(s), and the far solid wall
loses heat through an exogenous disturbance flux qf >= 0 that the
controller never sees.

Unlike the one-phase case the interface may recede (net cooling), so the
advective terms are upwinded by the sign of sdot.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import solve_banded

from .core import MaterialProperties, derive_constants, _frozen_profile, _pin_node
from .errors import (
    CflViolationError,
    InvalidParameterError,
    NumericalBlowupError,
    PhaseDisappearanceError,
)
from .solver import (
    EXPLICIT,
    SolverConfig,
    liquid_update_explicit,
    liquid_update_implicit,
    unit_nodes,
)

_TIME_SNAP = 1e-12


@dataclass(frozen=True)
class TwoPhaseMaterial:
    """Liquid and solid property sets sharing a melting temperature, plus domain length [m]."""

    liquid: MaterialProperties
    solid: MaterialProperties
    length: float

    def __post_init__(self):
        if self.liquid.melt_temp != self.solid.melt_temp:
            raise InvalidParameterError("liquid and solid must share the melting temperature")
        if not self.length > 0.0:
            raise InvalidParameterError(f"domain length must be positive, got {self.length!r}")

    @cached_property
    def liquid_consts(self):
        return derive_constants(self.liquid)

    @cached_property
    def solid_consts(self):
        return derive_constants(self.solid)

    @property
    def gamma(self) -> float:
        """Volumetric latent heat of the liquid [J/m^3]; scales the interface motion."""
        return self.liquid.rho * self.liquid.latent_heat


@dataclass(frozen=True)
class TwoPhaseState:
    """Excess profiles of both phases plus interface position.

    theta_l on xi in [0, 1] (expected >= 0), theta_s on eta in [0, 1]
    (expected <= 0); both pinned to zero at the interface node. The s < L
    constraint is enforced wherever the material (and hence L) is in scope.
    """

    t: float
    s: float
    theta_l: np.ndarray
    theta_s: np.ndarray

    def __post_init__(self):
        if not np.isfinite(self.s) or self.s <= 0.0:
            raise InvalidParameterError(f"interface position must be positive, got {self.s!r}")
        tl = _frozen_profile(self.theta_l, "theta_l")
        ts = _frozen_profile(self.theta_s, "theta_s")
        if tl.size != ts.size:
            raise InvalidParameterError("both phases must use the same node count")
        _pin_node(tl, -1, "theta_l")
        _pin_node(ts, 0, "theta_s")
        tl.setflags(write=False)
        ts.setflags(write=False)
        object.__setattr__(self, "theta_l", tl)
        object.__setattr__(self, "theta_s", ts)

    @property
    def n_cells(self) -> int:
        return self.theta_l.size - 1


@dataclass(frozen=True)
class TwoPhaseDataBounds:
    """Declared bounds on the initial data and the disturbance class.

    t_bar_liquid / t_bar_solid: envelope amplitudes for the initial excesses [C]
    eta_liquid / eta_solid:     envelope steepness parameters (positive)
    qf_bar:                     ceiling on the disturbance flux [W/m^2]
    """

    t_bar_liquid: float
    t_bar_solid: float
    eta_liquid: float
    eta_solid: float
    qf_bar: float

    def __post_init__(self):
        for name in ("t_bar_liquid", "t_bar_solid", "eta_liquid", "eta_solid"):
            if not getattr(self, name) > 0.0:
                raise InvalidParameterError(f"{name} must be positive")
        if self.qf_bar < 0.0:
            raise InvalidParameterError("qf_bar must be nonnegative")


def interface_velocity(state: TwoPhaseState, mat: TwoPhaseMaterial) -> float:
    """sdot from the discrete interface energy balance [m/s]."""
    n = state.n_cells
    dxi = 1.0 / n
    tl, ts = state.theta_l, state.theta_s
    grad_l = (tl[n - 2] - 4.0 * tl[n - 1] + 3.0 * tl[n]) / (2.0 * dxi)
    grad_s = (-3.0 * ts[0] + 4.0 * ts[1] - ts[2]) / (2.0 * dxi)
    width = mat.length - state.s
    return (-mat.liquid.k * grad_l / state.s
            + mat.solid.k * grad_s / width) / mat.gamma


def _solid_update_explicit(theta, width, qf, dt, alpha, k, dxi, sdot, forward):
    """Explicit update of the solid phase on eta = (x - s)/(L - s).

    Interface node eta=0 pinned to zero; cooling flux qf applied through a
    ghost node at the far wall eta=1, where the grid advection vanishes.
    """
    n = theta.size - 1
    diff = alpha * dt / (width * width * dxi * dxi)
    adv = dt * sdot / (width * dxi)
    eta = unit_nodes(n)
    bi = adv * (1.0 - eta[1:n])

    new = np.empty_like(theta)
    lap = theta[2:] - 2.0 * theta[1:n] + theta[: n - 1]
    if forward:
        new[1:n] = theta[1:n] + diff * lap + bi * (theta[2:] - theta[1:n])
    else:
        new[1:n] = theta[1:n] + diff * lap + bi * (theta[1:n] - theta[: n - 1])
    ghost = theta[n - 1] - 2.0 * dxi * width * qf / k
    new[n] = theta[n] + diff * (ghost - 2.0 * theta[n] + theta[n - 1])
    new[0] = 0.0
    return new


def _solid_update_implicit(theta, width, qf, dt, alpha, k, dxi, sdot, forward):
    """Implicit counterpart of `_solid_update_explicit`; M-matrix for any dt."""
    n = theta.size - 1
    diff = alpha * dt / (width * width * dxi * dxi)
    adv = dt * sdot / (width * dxi)
    eta = unit_nodes(n)
    bi = adv * (1.0 - eta[1:n])

    # Unknowns are nodes 1..n (local 0..n-1); node 0 is pinned to zero, so
    # couplings of the first unknown row to it drop out.
    m = n
    sub = np.zeros(m)
    dia = np.ones(m)
    sup = np.zeros(m)
    rhs = theta[1:].copy()

    if forward:
        sub[1:m - 1] = -diff
        dia[: m - 1] = 1.0 + 2.0 * diff + bi
        sup[: m - 1] = -(diff + bi)
    else:
        sub[1:m - 1] = (-diff + bi)[1:]
        dia[: m - 1] = 1.0 + 2.0 * diff - bi
        sup[: m - 1] = -diff

    sub[m - 1] = -2.0 * diff
    dia[m - 1] = 1.0 + 2.0 * diff
    rhs[m - 1] -= diff * 2.0 * dxi * width * qf / k

    ab = np.zeros((3, m))
    ab[0, 1:] = sup[: m - 1]
    ab[1, :] = dia
    ab[2, : m - 1] = sub[1:]
    sol = solve_banded((1, 1), ab, rhs, check_finite=False)

    new = np.empty_like(theta)
    new[1:] = sol
    new[0] = 0.0
    return new


def cfl_dt_two_phase(state: TwoPhaseState, mat: TwoPhaseMaterial, cfg: SolverConfig) -> float:
    """Explicit stability bound honoring the stiffer of the two phases."""
    dxi = cfg.grid.dxi
    width = mat.length - state.s
    lim_l = (dxi * state.s) ** 2 / (2.0 * mat.liquid_consts.alpha)
    lim_s = (dxi * width) ** 2 / (2.0 * mat.solid_consts.alpha)
    return cfg.safety_factor * min(lim_l, lim_s)


def step_two_phase(state: TwoPhaseState, qc: float, qf: float,
                   mat: TwoPhaseMaterial, cfg: SolverConfig,
                   dt: float | None = None) -> TwoPhaseState:
    """Advance both phases and the interface one step under held fluxes."""
    if qf < 0.0:
        raise InvalidParameterError(f"disturbance flux must be nonnegative, got {qf!r}")
    if state.n_cells != cfg.grid.n_cells:
        raise InvalidParameterError("state and config grids disagree")
    dxi = cfg.grid.dxi
    s = state.s
    width = mat.length - s
    if width <= 0.0:
        raise PhaseDisappearanceError("solid phase exhausted", state.t)

    sdot = interface_velocity(state, mat)
    forward = sdot >= 0.0
    cl = mat.liquid_consts
    cs = mat.solid_consts

    if cfg.scheme == EXPLICIT:
        limit = cfl_dt_two_phase(state, mat, cfg)
        if dt is None:
            dt = cfg.dt if cfg.dt is not None else limit
        if dt > limit * (1.0 + 1e-9):
            raise CflViolationError(
                f"dt={dt:.3e} exceeds explicit stability bound {limit:.3e}")
        new_l = liquid_update_explicit(state.theta_l, s, qc, dt, cl.alpha,
                                       mat.liquid.k, dxi, sdot, forward)
        new_s = _solid_update_explicit(state.theta_s, width, qf, dt, cs.alpha,
                                       mat.solid.k, dxi, sdot, forward)
    else:
        if dt is None:
            dt = cfg.dt
        new_l = liquid_update_implicit(state.theta_l, s, qc, dt, cl.alpha,
                                       mat.liquid.k, dxi, sdot, forward)
        new_s = _solid_update_implicit(state.theta_s, width, qf, dt, cs.alpha,
                                       mat.solid.k, dxi, sdot, forward)

    s_new = s + dt * sdot
    t_new = state.t + dt
    if not np.isfinite(s_new) or not np.all(np.isfinite(new_l)) or not np.all(np.isfinite(new_s)):
        raise NumericalBlowupError("non-finite solution values", t_new)
    if s_new < cfg.min_interface or s_new > mat.length - cfg.min_interface:
        raise PhaseDisappearanceError(
            f"interface left ({cfg.min_interface:.3e}, L-{cfg.min_interface:.3e})", t_new)
    return TwoPhaseState(t=t_new, s=s_new, theta_l=new_l, theta_s=new_s)


def s_infinity(initial: TwoPhaseState, mat: TwoPhaseMaterial) -> float:
    """Resting interface position under zero boundary fluxes [m].

    Total stored sensible heat of both phases is converted into latent heat:

        s_inf = s0 + (k_l/(alpha_l*gamma)) * int_0^s0 theta_l dx
                   + (k_s/(alpha_s*gamma)) * int_s0^L theta_s dx
    """
    n = initial.n_cells
    dxi = 1.0 / n
    width = mat.length - initial.s
    int_l = initial.s * float(np.trapezoid(initial.theta_l, dx=dxi))
    int_s = width * float(np.trapezoid(initial.theta_s, dx=dxi))
    cl = mat.liquid_consts
    cs = mat.solid_consts
    return (initial.s
            + mat.liquid.k / (cl.alpha * mat.gamma) * int_l
            + mat.solid.k / (cs.alpha * mat.gamma) * int_s)


def stored_energy(state: TwoPhaseState, mat: TwoPhaseMaterial) -> float:
    """Discrete energy bookkeeping total [J/m^2].

    Changes by (qc - qf) per unit time up to discretization error; the
    conservation test leans on this.
    """
    n = state.n_cells
    dxi = 1.0 / n
    width = mat.length - state.s
    cl = mat.liquid_consts
    cs = mat.solid_consts
    int_l = state.s * float(np.trapezoid(state.theta_l, dx=dxi))
    int_s = width * float(np.trapezoid(state.theta_s, dx=dxi))
    return (mat.liquid.k / cl.alpha * int_l
            + mat.solid.k / cs.alpha * int_s
            + mat.gamma * state.s)


def simulate_two_phase(initial: TwoPhaseState, qc_source, qf_source,
                       horizon: float, mat: TwoPhaseMaterial, cfg: SolverConfig,
                       record_dt: float | None = None):
    """Open-loop two-phase run; returns (times, states) at the record cadence."""
    if horizon < 0.0:
        raise InvalidParameterError(f"horizon must be nonnegative, got {horizon!r}")
    if record_dt is None:
        record_dt = horizon / 200.0 if horizon > 0.0 else 1.0

    def _at(src, t):
        return src(t) if callable(src) else float(src)

    state = initial
    t_end = initial.t + horizon
    eps = _TIME_SNAP * max(1.0, abs(t_end))
    states = [state]
    j_rec = 1
    t0 = initial.t
    while state.t < t_end - eps:
        if cfg.scheme == EXPLICIT:
            dt = cfg.dt if cfg.dt is not None else cfl_dt_two_phase(state, mat, cfg)
        else:
            dt = cfg.dt
        next_rec = t0 + j_rec * record_dt
        if next_rec - state.t > eps:
            dt = min(dt, next_rec - state.t)
        dt = min(dt, t_end - state.t)
        state = step_two_phase(state, _at(qc_source, state.t), _at(qf_source, state.t),
                               mat, cfg, dt)
        if state.t >= t0 + j_rec * record_dt - eps:
            states.append(state)
            j_rec += 1
    if states[-1] is not state:
        states.append(state)
    return np.array([st.t for st in states]), states
