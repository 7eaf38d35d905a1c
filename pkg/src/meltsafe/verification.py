"""Runtime safety monitoring, decay metrics, and machine-readable run reports.

The monitor turns every guaranteed inequality into a violation record when
the discrete trajectory breaks it beyond a tolerance. Tolerances default to
zero for barriers computed in closed form from actuator states, and to
discretization-scaled slack for quantities derived from the PDE solution;
sign claims are exact in the continuum but only discretization-accurate on
a grid.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .cbf import CbfBundle, SetpointSpec
from .core import ActuatorState, integrate_profile
from .errors import ConfluentGainsError, DegenerateSeriesError, InvalidParameterError
from .two_phase import TwoPhaseState

# Violation kinds: one per guaranteed inequality.
KIND_H1 = "energy_deficit_negative"
KIND_H2 = "flux_negative"
KIND_LIQUID_SUBCOOLED = "liquid_below_melting"
KIND_OVERSHOOT = "setpoint_overshoot"
KIND_DOMAIN = "interface_out_of_domain"
KIND_FLUX_CEILING = "flux_ceiling_exceeded"
KIND_TEMP_CEILING = "temperature_ceiling_exceeded"
KIND_SOLID_SUPERHEATED = "solid_above_melting"

ALL_KINDS = (KIND_H1, KIND_H2, KIND_LIQUID_SUBCOOLED, KIND_OVERSHOOT, KIND_DOMAIN,
             KIND_FLUX_CEILING, KIND_TEMP_CEILING, KIND_SOLID_SUPERHEATED)

# Every inequality promised by the closed-loop guarantees, mapped to the
# violation kind that reports its failure. The golden test enumerates this.
GUARANTEE_KINDS = {
    "energy deficit stays nonnegative": KIND_H1,
    "boundary heat flux stays nonnegative": KIND_H2,
    "liquid temperature stays at or above melting": KIND_LIQUID_SUBCOOLED,
    "interface never overshoots the setpoint": KIND_OVERSHOOT,
    "interface stays strictly inside the domain": KIND_DOMAIN,
    "heat flux stays at or below its ceiling": KIND_FLUX_CEILING,
    "temperature stays at or below its ceiling": KIND_TEMP_CEILING,
    "solid temperature stays at or below melting": KIND_SOLID_SUPERHEATED,
}


@dataclass(frozen=True)
class SafetyTolerances:
    """Slack applied to each monitored inequality (all nonnegative).

    tol_T:   temperature slack [C]
    tol_s:   interface slack [m]
    tol_q:   flux slack [W/m^2]
    tol_cbf: energy-deficit slack [J/m^2 scale]
    """

    tol_T: float
    tol_s: float
    tol_q: float
    tol_cbf: float

    def __post_init__(self):
        for name in ("tol_T", "tol_s", "tol_q", "tol_cbf"):
            if getattr(self, name) < 0.0:
                raise InvalidParameterError(f"{name} must be nonnegative")

    @classmethod
    def defaults(cls, dxi: float, dt: float, rate: float,
                 sigma_scale: float, theta_scale: float, s_scale: float):
        """Discretization-scaled defaults.

        Closed-form barriers (the flux) get zero slack. PDE-derived
        quantities get (dxi + dt*rate)*scale, with rate the fastest
        closed-loop rate, so the slack vanishes under refinement.
        """
        h = dxi + dt * rate
        return cls(tol_T=1e-9 * max(1.0, theta_scale),
                   tol_s=h * s_scale,
                   tol_q=0.0,
                   tol_cbf=h * abs(sigma_scale))


@dataclass(frozen=True)
class Violation:
    time: float
    kind: str
    magnitude: float

    def as_dict(self):
        return {"t": self.time, "kind": self.kind, "magnitude": self.magnitude}


class Monitor:
    """Per-run safety monitor; fold it over every step of a trajectory."""

    def __init__(self, spec: SetpointSpec, tol: SafetyTolerances,
                 domain_length: float | None = None,
                 q_bar: float | None = None,
                 melt_temp: float | None = None,
                 two_phase: bool = False):
        self.spec = spec
        self.tol = tol
        self.domain_length = domain_length
        self.q_bar = q_bar
        self.melt_temp = melt_temp
        self.two_phase = two_phase
        self.violations: list[Violation] = []

    def check_scalars(self, t: float, s: float, qc: float, bundle: CbfBundle,
                      theta_max: float | None = None,
                      theta_s_max: float | None = None) -> list[Violation]:
        """Check one instant; returns the new violations and accumulates them."""
        tol = self.tol
        out: list[Violation] = []
        if bundle.h1 < -tol.tol_cbf:
            out.append(Violation(t, KIND_H1, -bundle.h1))
        if bundle.h2 < -tol.tol_q:
            out.append(Violation(t, KIND_H2, -bundle.h2))
        if bundle.h_min < -tol.tol_T:
            out.append(Violation(t, KIND_LIQUID_SUBCOOLED, -bundle.h_min))
        if s > self.spec.s_r + tol.tol_s and not self.two_phase:
            out.append(Violation(t, KIND_OVERSHOOT, s - self.spec.s_r))
        if s < tol.tol_s:
            out.append(Violation(t, KIND_DOMAIN, tol.tol_s - s))
        if self.domain_length is not None and s > self.domain_length - tol.tol_s:
            out.append(Violation(t, KIND_DOMAIN, s - (self.domain_length - tol.tol_s)))
        if self.q_bar is not None and qc > self.q_bar + tol.tol_q:
            out.append(Violation(t, KIND_FLUX_CEILING, qc - self.q_bar))
        if (self.spec.temp_ceiling is not None and theta_max is not None
                and self.melt_temp is not None):
            limit = self.spec.temp_ceiling - self.melt_temp
            if theta_max > limit + tol.tol_T:
                out.append(Violation(t, KIND_TEMP_CEILING, theta_max - limit))
        if self.two_phase and theta_s_max is not None and theta_s_max > tol.tol_T:
            out.append(Violation(t, KIND_SOLID_SUPERHEATED, theta_s_max))
        self.violations.extend(out)
        return out


def monitor_step(state, actuator: ActuatorState, bundle: CbfBundle,
                 tol: SafetyTolerances, spec: SetpointSpec,
                 domain_length: float | None = None,
                 q_bar: float | None = None,
                 melt_temp: float | None = None) -> list[Violation]:
    """Single-shot monitor evaluation for one state/bundle pair."""
    two_phase = isinstance(state, TwoPhaseState)
    mon = Monitor(spec, tol, domain_length=domain_length, q_bar=q_bar,
                  melt_temp=melt_temp, two_phase=two_phase)
    if two_phase:
        theta_max = float(state.theta_l.max())
        theta_s_max = float(state.theta_s.max())
    else:
        theta_max = float(state.theta.max())
        theta_s_max = None
    return mon.check_scalars(state.t, state.s, actuator.qc, bundle,
                             theta_max=theta_max, theta_s_max=theta_s_max)


def phi_norm(state, actuator: ActuatorState, spec: SetpointSpec,
             domain_length: float | None = None) -> float:
    """Squared deviation from the setpoint equilibrium.

    Spatial L2 norms of the excess profiles (physical coordinates) plus the
    squared interface error and squared actuator states; the order-2
    actuator adds its flux rate, the two-phase system adds the solid norm
    (which needs the domain length to weight the immobilized integral). The
    quadrature is the same trapezoid rule the deficit uses.
    """
    if isinstance(state, TwoPhaseState):
        if domain_length is None:
            raise InvalidParameterError("two-phase phi needs the domain length")
        dxi = 1.0 / state.n_cells
        phi = state.s * integrate_profile(state.theta_l ** 2, dxi)
        phi += (domain_length - state.s) * integrate_profile(state.theta_s ** 2, dxi)
    else:
        dxi = 1.0 / state.n_cells
        phi = state.s * integrate_profile(state.theta ** 2, dxi)
    phi += (state.s - spec.s_r) ** 2 + actuator.qc ** 2
    if actuator.p is not None:
        phi += actuator.p ** 2
    return float(phi)


@dataclass(frozen=True)
class DecayFit:
    """Exponential envelope phi(t) <= m * phi(0) * exp(-b t) over the samples.

    m is inflated after the least-squares fit so the envelope actually
    majorizes every sample; envelope_ratio records the largest sample-to-
    envelope ratio after inflation (<= 1 by construction).
    """

    m: float
    b: float
    envelope_ratio: float


def fit_decay(times, phis) -> DecayFit:
    """Least-squares exponential envelope of a positive series.

    Fits a line to (t, log phi); the intercept fixes m relative to phi(0),
    the slope gives the decay rate b. The envelope gain is then inflated to
    cover every sample exactly.
    """
    t = np.asarray(times, dtype=float)
    phi = np.asarray(phis, dtype=float)
    if t.size < 10:
        raise DegenerateSeriesError(f"decay fit needs >= 10 samples, got {t.size}")
    if np.any(phi <= 0.0):
        raise DegenerateSeriesError("decay fit needs strictly positive samples")
    slope, intercept = np.polyfit(t, np.log(phi), 1)
    b = -float(slope)
    m = float(np.exp(intercept)) / float(phi[0])
    envelope = m * phi[0] * np.exp(-b * t)
    ratio = float(np.max(phi / envelope))
    if ratio > 1.0:
        m *= ratio
    return DecayFit(m=m, b=b, envelope_ratio=float(
        np.max(phi / (m * phi[0] * np.exp(-b * t)))))


def analytic_h_oracle(h1_0: float, h2_0: float, c1: float, c2: float, t):
    """Closed-form barrier trajectories of the regulated cascade.

    h3 decays at rate c2; h1 and h2 mix rates c1 and c2 through the divided
    difference (exp(-c1 t) - exp(-c2 t))/(c2 - c1). Requires distinct rates;
    the confluent limit is not provided.
    """
    if c1 == c2:
        raise ConfluentGainsError("closed-form barrier solution needs c1 != c2")
    h3_0 = c1 * h1_0 - h2_0
    t = np.asarray(t, dtype=float)
    e1 = np.exp(-c1 * t)
    e2 = np.exp(-c2 * t)
    mix = (e1 - e2) / (c2 - c1)
    h3 = h3_0 * e2
    h1 = h1_0 * e1 + h3_0 * mix
    h2 = h2_0 * e1 + c2 * h3_0 * mix
    if t.ndim == 0:
        return float(h1), float(h2), float(h3)
    return h1, h2, h3


@dataclass
class RunReport:
    """Machine-readable summary of one closed-loop run (SI units).

    Serializes to a stable JSON schema: see README for field documentation.
    decay is present only when the recorded phi series has at least 10
    strictly positive samples.
    """

    violations: list[Violation] = field(default_factory=list)
    phi_times: list[float] = field(default_factory=list)
    phi_values: list[float] = field(default_factory=list)
    decay: DecayFit | None = None
    phi_floor: float | None = None
    clamp_stats: dict = field(default_factory=dict)
    assumption_checks: list[dict] = field(default_factory=list)
    gain_checks: list[dict] = field(default_factory=list)
    final: dict = field(default_factory=dict)
    runtime_seconds: float = 0.0

    def finalize_decay(self):
        if len(self.phi_values) >= 10 and all(v > 0.0 for v in self.phi_values):
            self.decay = fit_decay(self.phi_times, self.phi_values)
        else:
            self.decay = None
            if self.phi_values:
                self.phi_floor = float(min(self.phi_values))

    def as_dict(self) -> dict:
        return {
            "schema_version": 1,
            "violation_count": len(self.violations),
            "violations": [v.as_dict() for v in self.violations[:1000]],
            "phi": {"t": self.phi_times, "value": self.phi_values},
            "decay": (None if self.decay is None else
                      {"m": self.decay.m, "b": self.decay.b,
                       "envelope_ratio": self.decay.envelope_ratio}),
            "phi_floor": self.phi_floor,
            "clamp_stats": self.clamp_stats,
            "assumptions": self.assumption_checks,
            "gains": self.gain_checks,
            "final": self.final,
            "runtime_seconds": self.runtime_seconds,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.as_dict(), **kwargs)
