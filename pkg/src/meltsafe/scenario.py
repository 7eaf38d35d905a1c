"""Closed-loop scenario execution and batch outputs.

Each step: evaluate the barriers from the current state, form the control
decision from the held operator sample, integrate the actuator exactly over
the step (the input is zero-order held), advance the PDE with the resulting
flux, and run the safety monitor. The controller runs at the PDE step rate.
"""

import csv
import time
from dataclasses import dataclass
from pathlib import Path

from .cbf import cbf_bundle, cbf_bundle_two_phase
from .config import ScenarioConfig
from .control import (
    CLAMP_NONE,
    FilterDecision,
    nonovershooting,
    nonovershooting_high,
    qp_filter,
    qp_filter_upper,
)
from .core import ActuatorState
from .errors import InvalidParameterError
from .solver import EXPLICIT, cfl_dt, step as solver_step
from .two_phase import cfl_dt_two_phase, step_two_phase
from .verification import Monitor, RunReport, SafetyTolerances, phi_norm

CSV_COLUMNS = ("t", "s", "qc", "p", "U_applied", "U_o", "U_lower", "U_upper",
               "h1", "h2", "h3", "h2_star", "h4", "h5", "h_min", "Phi", "clamp")


@dataclass(frozen=True)
class TrajectoryRecord:
    """One decimated row of a closed-loop run; optionals stay None when unused."""

    t: float
    s: float
    qc: float
    p: float | None
    u_applied: float
    u_o: float
    u_lower: float
    u_upper: float
    h1: float
    h2: float
    h3: float
    h2_star: float | None
    h4: float | None
    h5: float | None
    h_min: float
    phi: float
    clamp: str

    def csv_row(self) -> list:
        def fmt(v):
            return "" if v is None else repr(float(v))

        return [fmt(self.t), fmt(self.s), fmt(self.qc), fmt(self.p),
                fmt(self.u_applied), fmt(self.u_o), fmt(self.u_lower),
                fmt(self.u_upper), fmt(self.h1), fmt(self.h2), fmt(self.h3),
                fmt(self.h2_star), fmt(self.h4), fmt(self.h5), fmt(self.h_min),
                fmt(self.phi), self.clamp]


class ClosedLoopSim:
    """Deterministic closed-loop stepper shared by batch runs and live sessions."""

    def __init__(self, cfg: ScenarioConfig, tolerances: SafetyTolerances | None = None):
        self.cfg = cfg
        self.state = cfg.initial_state
        self.qc = cfg.actuator0.qc
        self.p = cfg.actuator0.p
        self.two_phase = cfg.model == "two-phase"
        self.tol = tolerances if tolerances is not None else cfg.default_tolerances()
        self.monitor = Monitor(
            cfg.spec, self.tol,
            domain_length=cfg.domain_length,
            q_bar=cfg.q_bar,
            melt_temp=cfg.material.melt_temp,
            two_phase=self.two_phase)
        self.clamp_counts = {CLAMP_NONE: 0, "lower": 0, "upper": 0,
                             "infeasible-resolved": 0}
        self.steps_taken = 0

    # -- observation ------------------------------------------------------

    def bundle(self):
        cfg = self.cfg
        act = ActuatorState(qc=self.qc, p=self.p)
        if self.two_phase:
            return cbf_bundle_two_phase(self.state, act, cfg.two_phase_mat,
                                        cfg.spec, cfg.controller_c1, q_bar=cfg.q_bar)
        return cbf_bundle(self.state, act, cfg.consts, cfg.spec, cfg.controller_c1,
                          q_bar=cfg.q_bar, order2_gains=cfg.nonov_gains
                          if cfg.nonov_gains is not None
                          and cfg.nonov_gains.actuator_order == 2 else None)

    def phi(self) -> float:
        act = ActuatorState(qc=self.qc, p=self.p)
        return phi_norm(self.state, act, self.cfg.spec,
                        domain_length=self.cfg.domain_length)

    def decide(self, bundle, u_o: float) -> FilterDecision:
        cfg = self.cfg
        sigma, qc = bundle.h1, self.qc
        if cfg.variant == "qp":
            return qp_filter(u_o, sigma, qc, cfg.qp_gains)
        if cfg.variant == "qp-upper":
            return qp_filter_upper(u_o, sigma, qc, cfg.qp_gains, cfg.q_bar)
        if cfg.variant in ("nonovershooting", "nonovershooting-upper",
                           "nonovershooting-two-phase"):
            if cfg.qp_gains is not None:
                # -k1*qc + k2*sigma form: a slack-free filter that ignores u_o.
                return qp_filter(u_o, sigma, qc, cfg.qp_gains)
            u = nonovershooting(sigma, qc, cfg.nonov_gains)
            return FilterDecision(u_applied=u, u_lower=u, u_upper=u,
                                  u_operator=u_o, clamp=_clamp_tag(u_o, u, u))
        if cfg.variant == "nonovershooting-order2":
            u = nonovershooting_high(sigma, qc, self.p, cfg.nonov_gains)
            return FilterDecision(u_applied=u, u_lower=u, u_upper=u,
                                  u_operator=u_o, clamp=_clamp_tag(u_o, u, u))
        raise InvalidParameterError(f"unknown controller variant {cfg.variant!r}")

    def monitor_now(self, bundle):
        if self.two_phase:
            theta_max = float(self.state.theta_l.max())
            theta_s_max = float(self.state.theta_s.max())
        else:
            theta_max = float(self.state.theta.max())
            theta_s_max = None
        return self.monitor.check_scalars(self.state.t, self.state.s, self.qc,
                                          bundle, theta_max=theta_max,
                                          theta_s_max=theta_s_max)

    # -- advancing --------------------------------------------------------

    def step_dt(self) -> float:
        """Requested dt when configured; otherwise the explicit stability bound.

        A configured dt that violates the explicit bound is a configuration
        bug and surfaces as the solver's stability error, not a silent clip.
        """
        cfg = self.cfg
        if cfg.solver.scheme == EXPLICIT and cfg.solver.dt is None:
            if self.two_phase:
                return cfl_dt_two_phase(self.state, cfg.two_phase_mat, cfg.solver)
            return cfl_dt(self.state.s, cfg.solver, cfg.consts)
        return cfg.solver.dt

    def advance(self, decision: FilterDecision, dt: float):
        """Exact actuator update over [t, t+dt], then the PDE step with the new flux."""
        u = decision.u_applied
        if self.p is None:
            self.qc += u * dt
        else:
            self.qc += self.p * dt + 0.5 * u * dt * dt
            self.p += u * dt
        cfg = self.cfg
        if self.two_phase:
            qf = cfg.disturbance_signal(self.state.t)
            self.state = step_two_phase(self.state, self.qc, qf,
                                        cfg.two_phase_mat, cfg.solver, dt)
        else:
            self.state = solver_step(self.state, self.qc, cfg.solver,
                                     cfg.consts, cfg.material.k, dt)
        self.clamp_counts[decision.clamp] += 1
        self.steps_taken += 1

    def step_once(self, u_o: float):
        """Observe, decide, monitor, advance; returns (bundle, decision, violations)."""
        bundle = self.bundle()
        decision = self.decide(bundle, u_o)
        violations = self.monitor_now(bundle)
        dt = self.step_dt()
        remaining = self.cfg.horizon - self.state.t
        if remaining > 0.0:
            dt = min(dt, remaining)
        self.advance(decision, dt)
        return bundle, decision, violations

    def record(self, bundle, decision) -> TrajectoryRecord:
        return TrajectoryRecord(
            t=self.state.t, s=self.state.s, qc=self.qc, p=self.p,
            u_applied=decision.u_applied, u_o=decision.u_operator,
            u_lower=decision.u_lower, u_upper=decision.u_upper,
            h1=bundle.h1, h2=bundle.h2, h3=bundle.h3, h2_star=bundle.h2_star,
            h4=bundle.h4, h5=bundle.h5, h_min=bundle.h_min,
            phi=self.phi(), clamp=decision.clamp)


def _clamp_tag(u_o: float, lower: float, upper: float) -> str:
    if u_o < lower:
        return "lower"
    if u_o > upper:
        return "upper"
    return CLAMP_NONE


def run_scenario(cfg: ScenarioConfig,
                 tolerances: SafetyTolerances | None = None):
    """Run the closed loop over the configured horizon.

    Returns (records, report). Solver failures propagate after the partial
    trajectory has been attached to the exception as `partial_records`.
    """
    t_start = time.perf_counter()
    sim = ClosedLoopSim(cfg, tolerances)
    records: list[TrajectoryRecord] = []
    report = RunReport()

    def snapshot():
        bundle = sim.bundle()
        decision = sim.decide(bundle, cfg.operator_signal(sim.state.t))
        row = sim.record(bundle, decision)
        records.append(row)
        report.phi_times.append(row.t)
        report.phi_values.append(row.phi)
        return bundle, decision

    eps = 1e-12 * max(1.0, cfg.horizon)
    try:
        bundle, decision = snapshot()
        sim.monitor_now(bundle)
        while sim.state.t < cfg.horizon - eps:
            dt = min(sim.step_dt(), cfg.horizon - sim.state.t)
            sim.advance(decision, dt)
            bundle = sim.bundle()
            decision = sim.decide(bundle, cfg.operator_signal(sim.state.t))
            sim.monitor_now(bundle)
            if sim.steps_taken % cfg.decimate == 0 or sim.state.t >= cfg.horizon - eps:
                row = sim.record(bundle, decision)
                records.append(row)
                report.phi_times.append(row.t)
                report.phi_values.append(row.phi)
    except Exception as e:
        e.partial_records = records
        _finish_report(report, sim, records, cfg, t_start)
        raise

    _finish_report(report, sim, records, cfg, t_start)
    return records, report


def _finish_report(report, sim, records, cfg, t_start):
    report.violations = list(sim.monitor.violations)
    total = max(1, sum(sim.clamp_counts.values()))
    report.clamp_stats = {k: v / total for k, v in sim.clamp_counts.items()}
    if cfg.assumption_report is not None:
        report.assumption_checks = cfg.assumption_report.as_dicts()
    if cfg.gain_report is not None:
        report.gain_checks = cfg.gain_report.as_dicts()
    report.finalize_decay()
    if records:
        phi0 = records[0].phi
        last = records[-1]
        report.final = {
            "t": float(last.t), "s": float(last.s), "qc": float(last.qc),
            "phi": float(last.phi),
            "phi_ratio": (float(last.phi / phi0) if phi0 > 0.0 else None),
            "sigma": float(last.h1),
            "setpoint_error_rel": float(abs(last.s - cfg.spec.s_r) / cfg.spec.s_r),
        }
    report.runtime_seconds = time.perf_counter() - t_start


def write_trajectory_csv(records, path):
    """Fixed column order; absent optionals are empty fields; floats use repr."""
    path = Path(path)
    with path.open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_COLUMNS)
        for row in records:
            writer.writerow(row.csv_row())


def write_report_json(report: RunReport, path):
    Path(path).write_text(report.to_json(indent=2, sort_keys=True) + "\n")
