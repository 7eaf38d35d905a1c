"""Scenario configuration: flat key-value documents, SI-converted and validated.

Format: one `section.key = value` per line, `#` comments, blank lines
ignored. Length values accept an `mm` or `m` suffix ("0.01 mm"); everything
else is SI already. Unknown keys are rejected with their line number.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import signals
from .cbf import SetpointSpec, sigma_one_phase, sigma_two_phase
from .control import (
    NonovGains,
    QpGains,
    ValidationReport,
    validate_gains,
    validate_scenario_assumptions,
)
from .core import (
    TI6AL4V,
    ActuatorState,
    Grid,
    MaterialProperties,
    OnePhaseState,
    affine_excess_profile,
    derive_constants,
)
from .errors import ConfigError, InvalidParameterError
from .solver import EXPLICIT, SolverConfig
from .two_phase import TwoPhaseDataBounds, TwoPhaseMaterial, TwoPhaseState
from .verification import SafetyTolerances

_KNOWN_KEYS = {
    "model",
    "material.k", "material.rho", "material.cp", "material.latent_heat",
    "material.melt_temp",
    "solid.k", "solid.rho", "solid.cp", "solid.latent_heat",
    "geometry.s0", "geometry.length", "geometry.setpoint",
    "geometry.temp_ceiling", "geometry.flux_ceiling",
    "initial.peak_excess", "initial.solid_peak_excess",
    "actuator.order", "actuator.qc0", "actuator.p0",
    "controller.variant", "controller.k1", "controller.k2",
    "controller.delta1", "controller.delta2",
    "controller.c1", "controller.c2", "controller.c3",
    "operator.kind", "operator.value", "operator.amplitude",
    "operator.period", "operator.offset", "operator.path",
    "disturbance.kind", "disturbance.value", "disturbance.max",
    "disturbance.dwell",
    "bounds.t_bar_liquid", "bounds.t_bar_solid", "bounds.eta_liquid",
    "bounds.eta_solid", "bounds.qf_bar",
    "solver.n", "solver.dt", "solver.cfl", "solver.scheme",
    "solver.min_interface",
    "run.horizon", "run.decimate", "run.seed", "run.timescale",
    "run.frame_rate",
}

VARIANTS = ("nonovershooting", "nonovershooting-upper", "nonovershooting-order2",
            "nonovershooting-two-phase", "qp", "qp-upper")


def _parse_value(text: str, line_no: int):
    parts = text.split()
    if len(parts) == 2 and parts[1] in ("m", "mm"):
        try:
            num = float(parts[0])
        except ValueError:
            raise ConfigError(f"bad numeric value {text!r}", line_no) from None
        return num * (1e-3 if parts[1] == "mm" else 1.0)
    try:
        return float(text)
    except ValueError:
        return text


def parse_document(text: str) -> dict:
    """Parse the flat key-value format into a dict; raises ConfigError with line numbers."""
    values: dict = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line_no)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"unknown key {key!r}", line_no)
        if not value:
            raise ConfigError(f"empty value for {key!r}", line_no)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", line_no)
        values[key] = _parse_value(value, line_no)
    return values


def _get(raw, key, default=None, required=False):
    if key in raw:
        return raw[key]
    if required:
        raise ConfigError(f"missing required key {key!r}")
    return default


def _get_float(raw, key, default=None, required=False):
    v = _get(raw, key, default, required)
    if v is None:
        return None
    if not isinstance(v, float):
        raise ConfigError(f"{key} must be a number, got {v!r}")
    return v


def _get_int(raw, key, default=None, required=False):
    v = _get_float(raw, key, None if default is None else float(default), required)
    if v is None:
        return None
    if v != int(v):
        raise ConfigError(f"{key} must be an integer, got {v!r}")
    return int(v)


def _get_str(raw, key, default=None, required=False):
    v = _get(raw, key, default, required)
    if v is not None and not isinstance(v, str):
        raise ConfigError(f"{key} must be a word, got {v!r}")
    return v


@dataclass
class ScenarioConfig:
    """Fully built and validated scenario, ready to run."""

    name: str
    model: str
    material: MaterialProperties
    two_phase_mat: TwoPhaseMaterial | None
    domain_length: float | None
    spec: SetpointSpec
    initial_state: object
    actuator0: ActuatorState
    variant: str
    nonov_gains: NonovGains | None
    qp_gains: QpGains | None
    q_bar: float | None
    operator_kind: str
    operator_signal: object
    disturbance_signal: object
    bounds: TwoPhaseDataBounds | None
    solver: SolverConfig
    horizon: float
    decimate: int
    seed: int
    timescale: float
    frame_rate: float
    assumption_report: ValidationReport | None = None
    gain_report: ValidationReport | None = None

    @property
    def consts(self):
        return derive_constants(self.material)

    @property
    def controller_c1(self) -> float:
        """Rate used when logging the backstepping barrier."""
        if self.nonov_gains is not None:
            return self.nonov_gains.c1
        return self.qp_gains.k1

    @property
    def controller_max_rate(self) -> float:
        g = self.nonov_gains if self.nonov_gains is not None else self.qp_gains
        return g.max_rate

    def default_tolerances(self) -> SafetyTolerances:
        if self.model == "two-phase":
            sigma0 = sigma_two_phase(self.initial_state, self.two_phase_mat, self.spec)
            theta_scale = max(float(np.max(np.abs(self.initial_state.theta_l))),
                              float(np.max(np.abs(self.initial_state.theta_s))), 1e-30)
        else:
            sigma0 = sigma_one_phase(self.initial_state, self.consts, self.spec)
            theta_scale = max(float(np.max(np.abs(self.initial_state.theta))), 1e-30)
        dt = self.solver.dt if self.solver.dt is not None else 0.0
        return SafetyTolerances.defaults(
            dxi=self.solver.grid.dxi, dt=dt, rate=self.controller_max_rate,
            sigma_scale=sigma0, theta_scale=theta_scale, s_scale=self.spec.s_r)


def _build_material(raw) -> MaterialProperties:
    keys = ("material.k", "material.rho", "material.cp",
            "material.latent_heat", "material.melt_temp")
    if not any(k in raw for k in keys):
        return TI6AL4V
    try:
        return MaterialProperties(
            k=_get_float(raw, "material.k", TI6AL4V.k),
            rho=_get_float(raw, "material.rho", TI6AL4V.rho),
            cp=_get_float(raw, "material.cp", TI6AL4V.cp),
            latent_heat=_get_float(raw, "material.latent_heat", TI6AL4V.latent_heat),
            melt_temp=_get_float(raw, "material.melt_temp", TI6AL4V.melt_temp),
        )
    except InvalidParameterError as e:
        raise ConfigError(str(e)) from e


def _build_controller(raw):
    variant = _get_str(raw, "controller.variant", required=True)
    if variant not in VARIANTS:
        raise ConfigError(f"controller.variant must be one of {VARIANTS}, got {variant!r}")
    has_c = "controller.c1" in raw
    has_k = "controller.k1" in raw
    nonov = qp = None
    try:
        if variant in ("qp", "qp-upper"):
            qp = QpGains(k1=_get_float(raw, "controller.k1", required=True),
                         k2=_get_float(raw, "controller.k2", required=True),
                         delta1=_get_float(raw, "controller.delta1", 0.0),
                         delta2=_get_float(raw, "controller.delta2", 0.0))
        elif variant == "nonovershooting-order2":
            nonov = NonovGains(c1=_get_float(raw, "controller.c1", required=True),
                               c2=_get_float(raw, "controller.c2", required=True),
                               c3=_get_float(raw, "controller.c3", required=True),
                               actuator_order=2)
        elif has_c:
            nonov = NonovGains(c1=_get_float(raw, "controller.c1", required=True),
                               c2=_get_float(raw, "controller.c2", required=True))
        elif has_k:
            # Regulating law in its -k1*qc + k2*sigma form: a slack-free filter.
            qp = QpGains(k1=_get_float(raw, "controller.k1", required=True),
                         k2=_get_float(raw, "controller.k2", required=True))
        else:
            raise ConfigError(f"variant {variant!r} needs c1/c2 or k1/k2 gains")
    except InvalidParameterError as e:
        raise ConfigError(str(e)) from e
    return variant, nonov, qp


def _build_operator(raw, horizon, seed):
    kind = _get_str(raw, "operator.kind", "constant")
    if kind == "constant":
        return kind, signals.Constant(_get_float(raw, "operator.value", 0.0))
    if kind == "sinusoid":
        return kind, signals.Sinusoid(
            amplitude=_get_float(raw, "operator.amplitude", required=True),
            period=_get_float(raw, "operator.period", required=True),
            offset=_get_float(raw, "operator.offset", 0.0))
    if kind == "samples":
        return kind, signals.load_samples(_get_str(raw, "operator.path", required=True))
    if kind == "live":
        return kind, signals.Constant(0.0)
    raise ConfigError(f"unknown operator.kind {kind!r}")


def _build_disturbance(raw, horizon, seed):
    kind = _get_str(raw, "disturbance.kind", "none")
    if kind == "none":
        return signals.Constant(0.0)
    if kind == "constant":
        return signals.Constant(_get_float(raw, "disturbance.value", required=True))
    if kind == "random":
        return signals.random_piecewise(
            seed=seed, lo=0.0, hi=_get_float(raw, "disturbance.max", required=True),
            dwell=_get_float(raw, "disturbance.dwell", required=True),
            horizon=horizon)
    raise ConfigError(f"unknown disturbance.kind {kind!r}")


def load_config(text: str, name: str = "scenario") -> ScenarioConfig:
    """Parse, build, and validate a scenario document.

    Raises ConfigError for malformed documents and AssumptionError (carrying
    the validation report) when the data violates the safety preconditions.
    """
    raw = parse_document(text)

    model = _get_str(raw, "model", "one-phase")
    if model not in ("one-phase", "two-phase"):
        raise ConfigError(f"model must be one-phase or two-phase, got {model!r}")
    material = _build_material(raw)
    consts = derive_constants(material)

    n = _get_int(raw, "solver.n", 200)
    scheme = _get_str(raw, "solver.scheme", EXPLICIT)
    try:
        grid = Grid(n)
        solver_cfg = SolverConfig(
            grid=grid,
            dt=_get_float(raw, "solver.dt"),
            safety_factor=_get_float(raw, "solver.cfl", 0.4),
            min_interface=_get_float(raw, "solver.min_interface", 1e-12),
            scheme=scheme)
    except InvalidParameterError as e:
        raise ConfigError(str(e)) from e

    s0 = _get_float(raw, "geometry.s0", required=True)
    length = _get_float(raw, "geometry.length")
    try:
        spec = SetpointSpec(
            s_r=_get_float(raw, "geometry.setpoint", required=True),
            temp_ceiling=_get_float(raw, "geometry.temp_ceiling"),
            flux_ceiling=_get_float(raw, "geometry.flux_ceiling"))
    except InvalidParameterError as e:
        raise ConfigError(str(e)) from e

    horizon = _get_float(raw, "run.horizon", required=True)
    if horizon < 0.0:
        raise ConfigError("run.horizon must be nonnegative")
    seed = _get_int(raw, "run.seed", 0)
    decimate = _get_int(raw, "run.decimate", 1)
    if decimate < 1:
        raise ConfigError("run.decimate must be >= 1")

    variant, nonov, qp = _build_controller(raw)
    order = _get_int(raw, "actuator.order", 2 if variant == "nonovershooting-order2" else 1)
    qc0 = _get_float(raw, "actuator.qc0", 0.0)
    p0 = _get_float(raw, "actuator.p0", 0.0 if order == 2 else None)
    try:
        actuator0 = ActuatorState(qc=qc0, p=p0 if order == 2 else None)
    except InvalidParameterError as e:
        raise ConfigError(str(e)) from e
    if variant == "nonovershooting-order2" and order != 2:
        raise ConfigError("order-2 controller needs actuator.order = 2")

    peak = _get_float(raw, "initial.peak_excess", 0.0)
    two_phase_mat = None
    bounds = None
    if model == "two-phase":
        if variant != "nonovershooting-two-phase":
            raise ConfigError("two-phase model needs the two-phase controller variant")
        if length is None:
            raise ConfigError("two-phase model needs geometry.length")
        try:
            solid = MaterialProperties(
                k=_get_float(raw, "solid.k", material.k),
                rho=_get_float(raw, "solid.rho", material.rho),
                cp=_get_float(raw, "solid.cp", material.cp),
                latent_heat=_get_float(raw, "solid.latent_heat", material.latent_heat),
                melt_temp=material.melt_temp)
            two_phase_mat = TwoPhaseMaterial(liquid=material, solid=solid, length=length)
        except InvalidParameterError as e:
            raise ConfigError(str(e)) from e
        solid_peak = _get_float(raw, "initial.solid_peak_excess", 0.0)
        if solid_peak < 0.0:
            raise ConfigError("initial.solid_peak_excess is a magnitude, must be >= 0")
        eta = np.linspace(0.0, 1.0, n + 1)
        try:
            initial_state = TwoPhaseState(
                t=0.0, s=s0,
                theta_l=affine_excess_profile(peak, n),
                theta_s=-solid_peak * eta)
            bounds = TwoPhaseDataBounds(
                t_bar_liquid=_get_float(raw, "bounds.t_bar_liquid", required=True),
                t_bar_solid=_get_float(raw, "bounds.t_bar_solid", required=True),
                eta_liquid=_get_float(raw, "bounds.eta_liquid", required=True),
                eta_solid=_get_float(raw, "bounds.eta_solid", required=True),
                qf_bar=_get_float(raw, "bounds.qf_bar", required=True))
        except InvalidParameterError as e:
            raise ConfigError(str(e)) from e
    else:
        if variant == "nonovershooting-two-phase":
            raise ConfigError("two-phase controller variant needs model = two-phase")
        try:
            initial_state = OnePhaseState(t=0.0, s=s0, theta=affine_excess_profile(peak, n))
        except InvalidParameterError as e:
            raise ConfigError(str(e)) from e

    operator_kind, operator_signal = _build_operator(raw, horizon, seed)
    disturbance_signal = _build_disturbance(raw, horizon, seed)

    q_bar = spec.flux_bound(material.k, material.melt_temp)
    if variant in ("qp-upper", "nonovershooting-upper") and q_bar is None:
        raise ConfigError(f"variant {variant!r} needs a temperature or flux ceiling")

    cfg = ScenarioConfig(
        name=name, model=model, material=material, two_phase_mat=two_phase_mat,
        domain_length=length, spec=spec, initial_state=initial_state,
        actuator0=actuator0, variant=variant, nonov_gains=nonov, qp_gains=qp,
        q_bar=q_bar, operator_kind=operator_kind, operator_signal=operator_signal,
        disturbance_signal=disturbance_signal, bounds=bounds, solver=solver_cfg,
        horizon=horizon, decimate=decimate, seed=seed,
        timescale=_get_float(raw, "run.timescale", 1.0),
        frame_rate=_get_float(raw, "run.frame_rate", 30.0))
    _validate(cfg)
    return cfg


def _validate(cfg: ScenarioConfig):
    """Run assumption and gain validation; raises AssumptionError on failure."""
    if cfg.model == "two-phase":
        sigma0 = sigma_two_phase(cfg.initial_state, cfg.two_phase_mat, cfg.spec)
        report = validate_scenario_assumptions(
            cfg.initial_state, cfg.spec, "two-phase", mat=cfg.two_phase_mat,
            bounds=cfg.bounds, gains=cfg.nonov_gains, qc0=cfg.actuator0.qc)
        gain_variant = "two-phase"
        gains = cfg.nonov_gains
    else:
        sigma0 = sigma_one_phase(cfg.initial_state, cfg.consts, cfg.spec)
        report = validate_scenario_assumptions(
            cfg.initial_state, cfg.spec, cfg.variant, consts=cfg.consts,
            k=cfg.material.k, melt_temp=cfg.material.melt_temp,
            qc0=cfg.actuator0.qc, domain_length=cfg.domain_length)
        if cfg.variant == "nonovershooting-order2":
            gain_variant = "nonov-2"
            gains = cfg.nonov_gains
        elif cfg.variant == "nonovershooting-upper":
            gain_variant = "upper"
            gains = cfg.nonov_gains
        elif cfg.nonov_gains is not None:
            gain_variant = "nonov-1"
            gains = cfg.nonov_gains
        else:
            gain_variant = "qp"
            gains = cfg.qp_gains

    cfg.assumption_report = report
    report.raise_on_failure()

    init = (sigma0, cfg.actuator0.qc)
    if cfg.actuator0.p is not None:
        init = (sigma0, cfg.actuator0.qc, cfg.actuator0.p)
    gain_report = validate_gains(init, gains, gain_variant, q_bar=cfg.q_bar)
    cfg.gain_report = gain_report
    gain_report.raise_on_failure()


def load_config_file(path) -> ScenarioConfig:
    p = Path(path)
    return load_config(p.read_text(), name=p.stem)
