"""Regulating feedback laws and operator-input safety filters.

The regulating law drives the energy deficit, the boundary flux, and the
backstepping barrier to zero together, reaching the setpoint on the boundary
of the safe set without crossing it. The filters saturate an arbitrary
operator command between two feedback laws: a lower bound that keeps the
flux from going negative and an upper bound that keeps the energy deficit
from going negative (optionally tightened by a flux ceiling).
"""

import math
from dataclasses import dataclass

import numpy as np

from .cbf import SetpointSpec
from .core import DerivedConstants, OnePhaseState
from .errors import AssumptionError, InvalidParameterError
from .two_phase import TwoPhaseDataBounds, TwoPhaseMaterial, TwoPhaseState

CLAMP_NONE = "none"
CLAMP_LOWER = "lower"
CLAMP_UPPER = "upper"
CLAMP_INFEASIBLE = "infeasible-resolved"

VARIANT_NONOV = "nonov-1"
VARIANT_NONOV2 = "nonov-2"
VARIANT_QP = "qp"
VARIANT_UPPER = "upper"
VARIANT_TWO_PHASE = "two-phase"


@dataclass(frozen=True)
class NonovGains:
    """Rates of the regulating feedback; c3 only for the order-2 actuator."""

    c1: float
    c2: float
    c3: float | None = None
    actuator_order: int = 1

    def __post_init__(self):
        if not (self.c1 > 0.0 and self.c2 > 0.0):
            raise InvalidParameterError("c1 and c2 must be positive")
        if self.actuator_order not in (1, 2):
            raise InvalidParameterError("actuator_order must be 1 or 2")
        if self.actuator_order == 2 and (self.c3 is None or not self.c3 > 0.0):
            raise InvalidParameterError("order-2 gains need c3 > 0")
        if self.actuator_order == 1 and self.c3 is not None:
            raise InvalidParameterError("c3 is only meaningful for actuator order 2")

    @property
    def max_rate(self) -> float:
        """Fastest flux-decay rate of the closed loop [1/s] (tolerance scaling)."""
        return self.c1 + self.c2 + (self.c3 if self.c3 is not None else 0.0)


@dataclass(frozen=True)
class QpGains:
    """Filter gains: bound rates k1, k2 and slack widths delta1, delta2."""

    k1: float
    k2: float
    delta1: float = 0.0
    delta2: float = 0.0

    def __post_init__(self):
        if not (self.k1 > 0.0 and self.k2 > 0.0):
            raise InvalidParameterError("k1 and k2 must be positive")
        if self.delta1 < 0.0 or self.delta2 < 0.0:
            raise InvalidParameterError("delta1 and delta2 must be nonnegative")

    @property
    def max_rate(self) -> float:
        """Flux-decay rate of the lower bound [1/s] (tolerance scaling)."""
        return self.k1 + self.delta1


@dataclass(frozen=True)
class FilterDecision:
    """Outcome of one filter evaluation.

    u_applied equals the median of (u_lower, u_operator, u_upper) whenever the
    bounds are ordered; on a reversed-bounds transient the upper bound wins
    and the decision is tagged infeasible-resolved.
    """

    u_applied: float
    u_lower: float
    u_upper: float
    u_operator: float
    clamp: str


def nonovershooting(sigma: float, qc: float, gains: NonovGains) -> float:
    """Regulating input -(c1 + c2)*qc + c1*c2*sigma."""
    return -(gains.c1 + gains.c2) * qc + gains.c1 * gains.c2 * sigma


def nonovershooting_two_phase(sigma2: float, qc: float, gains: NonovGains) -> float:
    """Two-phase regulating law; same form driven by the two-phase deficit."""
    return nonovershooting(sigma2, qc, gains)


def nonovershooting_high(sigma: float, qc: float, p: float, gains: NonovGains) -> float:
    """Order-2 regulating input (heating acceleration).

    c1*c2*c3*sigma - (c1*c2 + c1*c3 + c2*c3)*qc - (c1 + c2 + c3)*p
    """
    if gains.actuator_order != 2:
        raise InvalidParameterError("order-2 law needs order-2 gains")
    c1, c2, c3 = gains.c1, gains.c2, gains.c3
    return (c1 * c2 * c3 * sigma
            - (c1 * c2 + c1 * c3 + c2 * c3) * qc
            - (c1 + c2 + c3) * p)


def _decide(u_o: float, u_lower: float, u_upper: float) -> FilterDecision:
    applied = min(max(u_lower, u_o), u_upper)
    if u_lower > u_upper:
        clamp = CLAMP_INFEASIBLE
    elif u_o < u_lower:
        clamp = CLAMP_LOWER
    elif u_o > u_upper:
        clamp = CLAMP_UPPER
    else:
        clamp = CLAMP_NONE
    return FilterDecision(u_applied=applied, u_lower=u_lower, u_upper=u_upper,
                          u_operator=u_o, clamp=clamp)


def qp_filter(u_o: float, sigma: float, qc: float, gains: QpGains) -> FilterDecision:
    """Saturate the operator input between the two safety feedback laws.

    Closed-form solution of the minimal-modification problem subject to
    U_lower <= u <= U_upper. With both slacks zero the bounds coincide and
    the filter reduces to the regulating law, ignoring the operator.
    """
    u_lower = -(gains.k1 + gains.delta1) * qc + gains.k2 * sigma
    u_upper = -gains.k1 * qc + (gains.k2 + gains.delta2) * sigma
    return _decide(u_o, u_lower, u_upper)


def qp_filter_upper(u_o: float, sigma: float, qc: float, gains: QpGains,
                    q_bar: float) -> FilterDecision:
    """Filter variant whose upper bound also enforces the flux ceiling q_bar.

    The upper bound becomes -k1*qc + max{(k2 + delta2)*sigma, k1*q_bar}: once
    the deficit term decays below k1*q_bar the bound turns into a pure
    ceiling regulation that cannot push the flux past q_bar.
    """
    if not q_bar > 0.0:
        raise InvalidParameterError(f"flux ceiling must be positive, got {q_bar!r}")
    u_lower = -(gains.k1 + gains.delta1) * qc + gains.k2 * sigma
    u_upper = -gains.k1 * qc + max((gains.k2 + gains.delta2) * sigma, gains.k1 * q_bar)
    return _decide(u_o, u_lower, u_upper)


@dataclass(frozen=True)
class CheckResult:
    """One validated inequality; margin >= 0 means the check passed."""

    name: str
    passed: bool
    margin: float
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[CheckResult, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> tuple[CheckResult, ...]:
        return tuple(c for c in self.checks if not c.passed)

    def as_dicts(self) -> list[dict]:
        return [{"name": c.name, "passed": c.passed, "margin": c.margin,
                 "detail": c.detail} for c in self.checks]

    def raise_on_failure(self):
        if not self.ok:
            raise AssumptionError(self)


def _check(name: str, margin: float, detail: str = "", strict: bool = False) -> CheckResult:
    passed = margin > 0.0 if strict else margin >= 0.0
    return CheckResult(name=name, passed=bool(passed), margin=float(margin), detail=detail)


def validate_gains(init, gains, variant: str, q_bar: float | None = None) -> ValidationReport:
    """Check the gain inequalities that make the initial barriers nonnegative.

    init is (sigma0, qc0) or (sigma0, qc0, p0). The checks mirror the safe-set
    membership of the initial condition: each returns a numeric margin.
    """
    sigma0, qc0 = init[0], init[1]
    p0 = init[2] if len(init) > 2 else None
    if not sigma0 > 0.0:
        report = ValidationReport((_check(
            "initial_energy_deficit_positive", sigma0,
            "setpoint must exceed the melt the initial data can reach", strict=True),))
        raise AssumptionError(report)

    checks: list[CheckResult] = []
    if variant == VARIANT_QP:
        checks.append(_check("k1_at_least_flux_deficit_ratio",
                             gains.k1 - qc0 / sigma0, f"qc0/sigma0 = {qc0 / sigma0:.6g}"))
        checks.append(_check("k2_positive", gains.k2, strict=True))
        checks.append(_check("delta1_nonnegative", gains.delta1))
        checks.append(_check("delta2_nonnegative", gains.delta2))
        if q_bar is not None:
            checks.append(_check("initial_flux_below_ceiling", q_bar - qc0))
    elif variant in (VARIANT_NONOV, VARIANT_TWO_PHASE):
        checks.append(_check("c1_at_least_flux_deficit_ratio",
                             gains.c1 - qc0 / sigma0, f"qc0/sigma0 = {qc0 / sigma0:.6g}"))
        checks.append(_check("c2_positive", gains.c2, strict=True))
    elif variant == VARIANT_UPPER:
        if q_bar is None:
            raise InvalidParameterError("upper variant needs a flux ceiling")
        checks.append(_check("c1_at_least_flux_deficit_ratio",
                             gains.c1 - qc0 / sigma0, f"qc0/sigma0 = {qc0 / sigma0:.6g}"))
        denom = gains.c1 * sigma0 - qc0
        if denom > 0.0:
            limit = gains.c1 * q_bar / denom
            checks.append(_check("c2_within_flux_ceiling_budget", limit - gains.c2,
                                 f"limit = {limit:.6g}"))
        else:
            checks.append(_check("c2_within_flux_ceiling_budget", math.inf,
                                 "initial backstepping barrier is zero; no budget limit"))
        checks.append(_check("initial_flux_below_ceiling", q_bar - qc0))
    elif variant == VARIANT_NONOV2:
        if p0 is None:
            raise InvalidParameterError("order-2 validation needs p0")
        if qc0 > 0.0:
            c1_floor = max(qc0 / sigma0, -p0 / qc0)
        else:
            c1_floor = qc0 / sigma0
            checks.append(_check("initial_flux_rate_nonnegative_at_zero_flux", p0))
        checks.append(_check("c1_at_least_barrier_floor", gains.c1 - c1_floor,
                             f"floor = {c1_floor:.6g}"))
        denom = gains.c1 * sigma0 - qc0
        if denom > 0.0:
            c2_floor = (p0 + gains.c1 * qc0) / denom
            checks.append(_check("c2_at_least_rate_barrier_floor", gains.c2 - c2_floor,
                                 f"floor = {c2_floor:.6g}"))
        else:
            checks.append(_check("c2_at_least_rate_barrier_floor", -1.0,
                                 "needs c1*sigma0 > qc0"))
        checks.append(_check("c3_positive", gains.c3, strict=True))
    else:
        raise InvalidParameterError(f"unknown gain-validation variant {variant!r}")
    return ValidationReport(tuple(checks))


def validate_scenario_assumptions(
        initial, spec: SetpointSpec, variant: str, *,
        consts: DerivedConstants | None = None,
        k: float | None = None,
        melt_temp: float | None = None,
        qc0: float = 0.0,
        domain_length: float | None = None,
        mat: TwoPhaseMaterial | None = None,
        bounds: TwoPhaseDataBounds | None = None,
        gains: NonovGains | None = None) -> ValidationReport:
    """Evaluate every data assumption behind the safety guarantees.

    One-phase variants check the initial profile class and the setpoint
    reachability inequality; the upper variant adds the ceiling-compatible
    initial data checks; the two-phase variant checks both phases' envelope
    classes, the well-posedness inequality, the resting-interface window, and
    the disturbance ceiling.
    """
    if variant == VARIANT_TWO_PHASE:
        return _validate_two_phase(initial, spec, mat, bounds, gains, qc0)
    if consts is None:
        raise InvalidParameterError("one-phase validation needs derived constants")
    state: OnePhaseState = initial
    checks = [
        _check("initial_interface_positive", state.s, strict=True),
        _check("initial_profile_above_melting", float(state.theta.min())),
        _check("initial_flux_nonnegative", qc0),
    ]
    if domain_length is not None:
        checks.append(_check("initial_interface_inside_domain",
                             domain_length - state.s, strict=True))
        checks.append(_check("setpoint_inside_domain", domain_length - spec.s_r,
                             strict=True))
    dxi = 1.0 / state.n_cells
    stored = consts.beta / consts.alpha * state.s * float(np.trapezoid(state.theta, dx=dxi))
    checks.append(_check("setpoint_beyond_stored_melt",
                         spec.s_r - (state.s + stored),
                         f"s0 + (beta/alpha)*int(theta0) = {state.s + stored:.6g}"))
    if variant == VARIANT_UPPER or spec.temp_ceiling is not None or spec.flux_ceiling is not None:
        if k is None or melt_temp is None:
            raise InvalidParameterError("ceiling checks need k and melt_temp")
        q_bar = spec.flux_bound(k, melt_temp)
        if q_bar is not None:
            checks.append(_check("initial_flux_below_ceiling", q_bar - qc0,
                                 f"q_bar = {q_bar:.6g}"))
        if spec.temp_ceiling is not None:
            peak = state.s / spec.s_r * (spec.temp_ceiling - melt_temp)
            xi = np.linspace(0.0, 1.0, state.n_cells + 1)
            envelope = peak * (1.0 - xi)
            checks.append(_check("initial_profile_below_affine_envelope",
                                 float(np.min(envelope - state.theta)),
                                 f"envelope peak = {peak:.6g}"))
    return ValidationReport(tuple(checks))


def _validate_two_phase(initial: TwoPhaseState, spec, mat, bounds, gains, qc0):
    from .two_phase import s_infinity

    if mat is None or bounds is None or gains is None:
        raise InvalidParameterError(
            "two-phase validation needs the material, declared bounds, and gains")
    L = mat.length
    cl = mat.liquid_consts
    cs = mat.solid_consts
    checks = [
        _check("initial_interface_positive", initial.s, strict=True),
        _check("initial_interface_inside_domain", L - initial.s, strict=True),
        _check("initial_liquid_above_melting", float(initial.theta_l.min())),
        _check("initial_solid_below_melting", -float(initial.theta_s.max())),
        _check("initial_flux_nonnegative", qc0),
    ]

    # Envelope class of the initial data: amplitudes vanish at the interface
    # and saturate at t_bar away from it.
    x_l = np.linspace(0.0, 1.0, initial.n_cells + 1) * initial.s
    env_l = bounds.t_bar_liquid * (
        1.0 - np.exp(L * bounds.eta_liquid / cl.alpha * (x_l - initial.s)))
    checks.append(_check("initial_liquid_inside_envelope",
                         float(np.min(env_l - initial.theta_l))))
    x_s = initial.s + np.linspace(0.0, 1.0, initial.n_cells + 1) * (L - initial.s)
    env_s = -bounds.t_bar_solid * (
        1.0 - np.exp(L * bounds.eta_solid / cs.alpha * (initial.s - x_s)))
    checks.append(_check("initial_solid_inside_envelope",
                         float(np.min(initial.theta_s - env_s))))

    sigma0 = mat.gamma * (spec.s_r - s_infinity(initial, mat))
    if sigma0 > 0.0:
        q_bar_c = max(qc0,
                      gains.c2 / gains.c1 * (gains.c1 * sigma0 - qc0),
                      bounds.qf_bar)
    else:
        q_bar_c = max(qc0, bounds.qf_bar)
    eps_l = max(bounds.t_bar_liquid, q_bar_c * L / mat.liquid.k)
    eps_s = max(bounds.t_bar_solid, bounds.qf_bar * L / mat.solid.k)
    lhs = max(
        mat.liquid.k * eps_l / cl.alpha * (1.0 + cl.alpha / (L * L * bounds.eta_liquid)),
        mat.solid.k * eps_s / cs.alpha * (1.0 + cs.alpha / (L * L * bounds.eta_solid)))
    checks.append(_check("data_class_well_posed", mat.gamma / 4.0 - lhs,
                         f"bound = {lhs:.6g}, gamma/4 = {mat.gamma / 4.0:.6g}",
                         strict=True))

    s_inf = s_infinity(initial, mat)
    checks.append(_check("resting_interface_positive", s_inf, strict=True))
    checks.append(_check("resting_interface_inside_domain", L - s_inf, strict=True))
    checks.append(_check("setpoint_beyond_resting_interface", spec.s_r - s_inf,
                         f"s_inf = {s_inf:.6g}", strict=True))
    checks.append(_check("setpoint_inside_domain", L - spec.s_r, strict=True))

    ceiling = min(qc0 + gains.c1 * mat.gamma * s_inf,
                  gains.c1 * gains.c2 / (gains.c1 + gains.c2) * mat.gamma * spec.s_r)
    checks.append(_check("disturbance_below_ceiling", ceiling - bounds.qf_bar,
                         f"ceiling = {ceiling:.6g}", strict=True))
    return ValidationReport(tuple(checks))
