import pytest

from conftest import config_text
from meltsafe.config import load_config, parse_document
from meltsafe.errors import AssumptionError, ConfigError

NONDIM_QP = """
material.k = 1
material.rho = 1
material.cp = 1
material.latent_heat = 1
material.melt_temp = 1
geometry.s0 = 0.3
geometry.length = 1.0
geometry.setpoint = 0.6
initial.peak_excess = 0.2
actuator.qc0 = 0.1
controller.variant = qp
controller.k1 = 2
controller.k2 = 3
controller.delta1 = 1
controller.delta2 = 2
operator.kind = sinusoid
operator.amplitude = 0.5
operator.period = 0.05
solver.n = 32
solver.scheme = explicit
run.horizon = 0.05
run.decimate = 5
"""


class TestParsing:
    def test_bundled_regulation_config(self):
        cfg = load_config(config_text("nonovershooting.cfg"), name="nonovershooting")
        assert cfg.initial_state.s == pytest.approx(1e-5)
        assert cfg.spec.s_r == pytest.approx(2e-4)
        assert cfg.qp_gains.k1 == 64.4 and cfg.qp_gains.k2 == 973.0
        assert cfg.qp_gains.delta1 == 0.0 and cfg.qp_gains.delta2 == 0.0
        assert cfg.material.melt_temp == 1650.0  # defaults applied
        assert cfg.assumption_report.ok and cfg.gain_report.ok

    def test_bundled_filter_config(self):
        cfg = load_config(config_text("qp_sine.cfg"), name="qp_sine")
        assert cfg.operator_kind == "sinusoid"
        assert cfg.operator_signal.amplitude == pytest.approx(1.14e7)
        assert cfg.operator_signal.period == pytest.approx(0.02)
        assert cfg.operator_signal.offset == pytest.approx(-5e5)
        assert cfg.qp_gains.delta1 == 129.0 and cfg.qp_gains.delta2 == 195.0

    def test_mm_suffix_converts(self):
        raw = parse_document("geometry.s0 = 0.01 mm\ngeometry.length = 0.5 m\n")
        assert raw["geometry.s0"] == pytest.approx(1e-5)
        assert raw["geometry.length"] == 0.5

    def test_unknown_key_carries_line_number(self):
        with pytest.raises(ConfigError) as e:
            parse_document("model = one-phase\ngeometry.sO = 1\n")
        assert e.value.line == 2

    def test_malformed_line(self):
        with pytest.raises(ConfigError) as e:
            parse_document("just some words\n")
        assert e.value.line == 1

    def test_duplicate_key(self):
        with pytest.raises(ConfigError):
            parse_document("solver.n = 8\nsolver.n = 16\n")

    def test_comments_and_blanks_ignored(self):
        raw = parse_document("# header\n\nsolver.n = 16  # trailing\n")
        assert raw == {"solver.n": 16.0}

    def test_setpoint_below_initial_interface_rejected(self):
        text = NONDIM_QP.replace("geometry.setpoint = 0.6", "geometry.setpoint = 0.2")
        with pytest.raises(AssumptionError) as e:
            load_config(text)
        assert any("setpoint" in c.name for c in e.value.report.failures)

    def test_gain_failure_rejected(self):
        text = NONDIM_QP.replace("controller.k1 = 2", "controller.k1 = 0.1")
        with pytest.raises(AssumptionError) as e:
            load_config(text)
        assert any(c.name == "k1_at_least_flux_deficit_ratio"
                   for c in e.value.report.failures)

    def test_two_phase_needs_bounds(self):
        cfg = load_config(config_text("two_phase_nondim.cfg"), name="tp")
        assert cfg.model == "two-phase"
        assert cfg.bounds.qf_bar == pytest.approx(0.12)
        missing = config_text("two_phase_nondim.cfg").replace(
            "bounds.qf_bar = 0.12", "")
        with pytest.raises(ConfigError):
            load_config(missing)

    def test_upper_variant_needs_ceiling(self):
        text = NONDIM_QP.replace("controller.variant = qp",
                                 "controller.variant = qp-upper")
        with pytest.raises(ConfigError):
            load_config(text)

    def test_every_bundled_config_loads(self):
        for name in ("nonovershooting.cfg", "qp_sine.cfg", "upper_nonov.cfg",
                     "upper_qp.cfg", "order2.cfg", "two_phase_nondim.cfg",
                     "live.cfg"):
            cfg = load_config(config_text(name), name=name)
            assert cfg.assumption_report.ok, name
            assert cfg.gain_report.ok, name
