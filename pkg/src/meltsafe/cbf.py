"""Barrier outputs whose nonnegativity certifies safe operation.

The central quantity is the energy deficit sigma: the sensible-plus-latent
heat still missing relative to the setpoint equilibrium. Safe operation
keeps sigma, the boundary flux, and the backstepping combination
c1*sigma - qc nonnegative, alongside the pointwise temperature excess.

Quadrature matches the solvers' trapezoid rule node for node, so the
discrete identity d(sigma)/dt = -qc holds to discretization order.
"""

from dataclasses import dataclass

import numpy as np

from .core import ActuatorState, DerivedConstants, OnePhaseState
from .errors import InvalidParameterError
from .two_phase import TwoPhaseMaterial, TwoPhaseState


@dataclass(frozen=True)
class SetpointSpec:
    """Regulation target and optional operating ceilings.

    s_r:          setpoint interface position [m]
    temp_ceiling: largest admissible temperature T* [C], optional
    flux_ceiling: largest admissible heat flux q* [W/m^2], optional
    """

    s_r: float
    temp_ceiling: float | None = None
    flux_ceiling: float | None = None

    def __post_init__(self):
        if not self.s_r > 0.0:
            raise InvalidParameterError(f"setpoint must be positive, got {self.s_r!r}")
        if self.flux_ceiling is not None and not self.flux_ceiling > 0.0:
            raise InvalidParameterError("flux ceiling must be positive when present")

    def flux_bound(self, k: float, melt_temp: float) -> float | None:
        """Flux level q_bar below which the temperature ceiling also holds.

        min{(k/s_r)*(T* - Tm), q*}; None when no ceiling is configured.
        """
        candidates = []
        if self.temp_ceiling is not None:
            if self.temp_ceiling <= melt_temp:
                raise InvalidParameterError("temperature ceiling must exceed melting")
            candidates.append(k / self.s_r * (self.temp_ceiling - melt_temp))
        if self.flux_ceiling is not None:
            candidates.append(self.flux_ceiling)
        return min(candidates) if candidates else None


@dataclass(frozen=True)
class CbfBundle:
    """All barrier values at one instant.

    h1: energy deficit sigma
    h2: boundary heat flux qc
    h3: backstepping barrier c1*sigma - qc (identity by construction)
    h_min: minimum temperature excess over the grid
    h2_star: q_bar - qc, present only when a flux bound is configured
    h4, h5: order-2 actuator barriers, present only with a flux-rate state
    """

    h1: float
    h2: float
    h3: float
    h_min: float
    h2_star: float | None = None
    h4: float | None = None
    h5: float | None = None


def sigma_one_phase(state: OnePhaseState, consts: DerivedConstants,
                    spec: SetpointSpec) -> float:
    """Energy deficit relative to the setpoint equilibrium [J/m^2 scale].

    sigma = -[ rho*cp * int_0^s theta dx + gamma * (s - s_r) ], positive while
    the stored heat falls short of what full melting to s_r requires.
    """
    dxi = 1.0 / state.n_cells
    sensible = consts.heat_capacity_vol * state.s * float(np.trapezoid(state.theta, dx=dxi))
    latent = consts.gamma * (state.s - spec.s_r)
    return -(sensible + latent)


def sigma_two_phase(state: TwoPhaseState, mat: TwoPhaseMaterial,
                    spec: SetpointSpec) -> float:
    """Two-phase energy deficit; the solid's (negative) excess adds to the deficit."""
    n = state.n_cells
    dxi = 1.0 / n
    width = mat.length - state.s
    cl = mat.liquid_consts
    cs = mat.solid_consts
    sens_l = mat.liquid.k / cl.alpha * state.s * float(np.trapezoid(state.theta_l, dx=dxi))
    sens_s = mat.solid.k / cs.alpha * width * float(np.trapezoid(state.theta_s, dx=dxi))
    latent = mat.gamma * (state.s - spec.s_r)
    return -(sens_l + sens_s + latent)


def nonovershooting_rate(c1: float, c2: float, sigma: float, qc: float) -> float:
    """Flux-rate target c1*c2*sigma - (c1 + c2)*qc of the regulating feedback."""
    return c1 * c2 * sigma - (c1 + c2) * qc


def cbf_bundle(state: OnePhaseState, actuator: ActuatorState,
               consts: DerivedConstants, spec: SetpointSpec, c1: float,
               q_bar: float | None = None,
               order2_gains=None) -> CbfBundle:
    """Evaluate every configured barrier for the one-phase system.

    c1 is the rate used by the active controller; order2_gains supplies
    (c1, c2) for the order-2 barriers when the actuator carries a flux rate.
    """
    if not c1 > 0.0:
        raise InvalidParameterError(f"c1 must be positive, got {c1!r}")
    sigma = sigma_one_phase(state, consts, spec)
    qc = actuator.qc
    h2_star = None if q_bar is None else q_bar - qc
    h4 = h5 = None
    if actuator.p is not None and order2_gains is not None:
        p_target = nonovershooting_rate(order2_gains.c1, order2_gains.c2, sigma, qc)
        h4 = p_target - actuator.p
        h5 = actuator.p + order2_gains.c1 * qc
    return CbfBundle(h1=sigma, h2=qc, h3=c1 * sigma - qc,
                     h_min=float(state.theta.min()),
                     h2_star=h2_star, h4=h4, h5=h5)


def cbf_bundle_two_phase(state: TwoPhaseState, actuator: ActuatorState,
                         mat: TwoPhaseMaterial, spec: SetpointSpec, c1: float,
                         q_bar: float | None = None) -> CbfBundle:
    """Two-phase barrier bundle; h_min tracks the liquid profile."""
    if not c1 > 0.0:
        raise InvalidParameterError(f"c1 must be positive, got {c1!r}")
    sigma = sigma_two_phase(state, mat, spec)
    qc = actuator.qc
    h2_star = None if q_bar is None else q_bar - qc
    return CbfBundle(h1=sigma, h2=qc, h3=c1 * sigma - qc,
                     h_min=float(state.theta_l.min()), h2_star=h2_star)
