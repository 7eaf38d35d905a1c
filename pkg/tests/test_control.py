import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from meltsafe.cbf import SetpointSpec
from meltsafe.control import (
    CLAMP_INFEASIBLE,
    NonovGains,
    QpGains,
    nonovershooting,
    nonovershooting_high,
    nonovershooting_two_phase,
    qp_filter,
    qp_filter_upper,
    validate_gains,
    validate_scenario_assumptions,
)
from meltsafe.core import (
    TI6AL4V,
    MaterialProperties,
    OnePhaseState,
    affine_excess_profile,
    derive_constants,
)
from meltsafe.errors import AssumptionError, InvalidParameterError
from meltsafe.two_phase import TwoPhaseDataBounds, TwoPhaseMaterial, TwoPhaseState

UNIT = MaterialProperties(1.0, 1.0, 1.0, 1.0, 1.0)

moderate = st.floats(min_value=-1e4, max_value=1e4, allow_nan=False)
nonneg = st.floats(min_value=0.0, max_value=1e4, allow_nan=False)


class TestRegulatingLaws:
    def test_equilibrium(self):
        assert nonovershooting(0.0, 0.0, NonovGains(1.0, 1.0)) == 0.0

    def test_substitution(self):
        assert nonovershooting(2.0, 1.0, NonovGains(1.0, 2.0)) == pytest.approx(1.0)
        assert nonovershooting(1.0, 2.0, NonovGains(1.0, 1.0)) == pytest.approx(-3.0)

    def test_two_phase_is_same_law(self):
        g = NonovGains(2.0, 3.0)
        assert nonovershooting_two_phase(1.0, 1.0, g) == nonovershooting(1.0, 1.0, g)
        assert nonovershooting_two_phase(1.0, 1.0, g) == pytest.approx(-5.0 + 6.0)

    def test_order2_law(self):
        g = NonovGains(1.0, 1.0, 1.0, actuator_order=2)
        assert nonovershooting_high(0.0, 0.0, 0.0, g) == 0.0
        assert nonovershooting_high(1.0, 1.0, 1.0, g) == pytest.approx(-5.0)

    @given(sigma=moderate, qc=moderate, p=moderate,
           c1=st.floats(min_value=0.1, max_value=10),
           c2=st.floats(min_value=0.1, max_value=10),
           c3=st.floats(min_value=0.1, max_value=10))
    @settings(max_examples=100, deadline=None)
    def test_order2_law_closes_the_rate_barrier_loop(self, sigma, qc, p, c1, c2, c3):
        # under the law, d/dt(p_target - p) = -c3*(p_target - p) identically
        g = NonovGains(c1, c2, c3, actuator_order=2)
        u = nonovershooting_high(sigma, qc, p, g)
        h4 = c1 * c2 * sigma - (c1 + c2) * qc - p
        p_target_rate = c1 * c2 * (-qc) - (c1 + c2) * p
        h4_rate = p_target_rate - u
        assert h4_rate == pytest.approx(-c3 * h4, rel=1e-9, abs=1e-7)

    def test_gain_guards(self):
        with pytest.raises(InvalidParameterError):
            NonovGains(0.0, 1.0)
        with pytest.raises(InvalidParameterError):
            NonovGains(1.0, 1.0, actuator_order=2)
        with pytest.raises(InvalidParameterError):
            NonovGains(1.0, 1.0, c3=1.0)  # c3 without order 2
        with pytest.raises(InvalidParameterError):
            QpGains(1.0, 1.0, delta1=-0.1)


class TestQpFilter:
    def test_inside_band(self):
        g = QpGains(k1=2.0, k2=3.0, delta1=1.0, delta2=4.0)
        d = qp_filter(5.0, 2.0, 1.0, g)
        assert (d.u_lower, d.u_upper) == (pytest.approx(3.0), pytest.approx(12.0))
        assert d.u_applied == 5.0 and d.clamp == "none"

    def test_clamps(self):
        g = QpGains(k1=2.0, k2=3.0, delta1=1.0, delta2=4.0)
        low = qp_filter(0.0, 2.0, 1.0, g)
        assert low.u_applied == pytest.approx(3.0) and low.clamp == "lower"
        high = qp_filter(20.0, 2.0, 1.0, g)
        assert high.u_applied == pytest.approx(12.0) and high.clamp == "upper"

    @given(u_o=moderate)
    @settings(max_examples=60, deadline=None)
    def test_zero_slack_ignores_operator(self, u_o):
        g = QpGains(k1=2.0, k2=3.0)
        d = qp_filter(u_o, 1.5, 0.5, g)
        assert d.u_applied == pytest.approx(-2.0 * 0.5 + 3.0 * 1.5)

    @given(u_o=moderate, sigma=moderate, qc=moderate,
           k1=st.floats(min_value=0.1, max_value=100),
           k2=st.floats(min_value=0.1, max_value=100),
           d1=st.floats(min_value=0, max_value=100),
           d2=st.floats(min_value=0, max_value=100))
    @settings(max_examples=200, deadline=None)
    def test_median_property(self, u_o, sigma, qc, k1, k2, d1, d2):
        d = qp_filter(u_o, sigma, qc, QpGains(k1, k2, d1, d2))
        if d.u_lower <= d.u_upper:
            assert d.u_applied == sorted((d.u_lower, d.u_operator, d.u_upper))[1]
            assert d.u_lower <= d.u_applied <= d.u_upper
            assert d.clamp != CLAMP_INFEASIBLE
        else:
            assert d.u_applied == d.u_upper
            assert d.clamp == CLAMP_INFEASIBLE

    @given(sigma=nonneg, qc=nonneg,
           k1=st.floats(min_value=0.1, max_value=100),
           k2=st.floats(min_value=0.1, max_value=100),
           d1=st.floats(min_value=0, max_value=100),
           d2=st.floats(min_value=0, max_value=100))
    @settings(max_examples=200, deadline=None)
    def test_feasible_on_safe_set(self, sigma, qc, k1, k2, d1, d2):
        # with sigma >= 0 and qc >= 0 the band never inverts
        d = qp_filter(0.0, sigma, qc, QpGains(k1, k2, d1, d2))
        assert d.u_lower <= d.u_upper


class TestQpFilterUpper:
    def test_reduces_to_plain_filter_when_deficit_dominates(self):
        g = QpGains(k1=2.0, k2=3.0, delta1=1.0, delta2=4.0)
        q_bar = 1.0  # (k2+d2)*sigma = 14 >= k1*q_bar = 2
        a = qp_filter_upper(5.0, 2.0, 1.0, g, q_bar)
        b = qp_filter(5.0, 2.0, 1.0, g)
        assert a == b

    def test_ceiling_branch(self):
        g = QpGains(k1=2.0, k2=3.0, delta1=1.0, delta2=4.0)
        d = qp_filter_upper(100.0, 0.0, 1.0, g, q_bar=10.0)
        assert d.u_upper == pytest.approx(-2.0 + 20.0)
        assert d.u_applied == pytest.approx(18.0) and d.clamp == "upper"

    def test_flux_pinned_at_ceiling(self):
        g = QpGains(k1=2.0, k2=3.0)
        d = qp_filter_upper(50.0, 0.0, 10.0, g, q_bar=10.0)
        assert d.u_upper == pytest.approx(0.0, abs=1e-12)
        assert d.u_applied <= 0.0


def _chain_rates(c1, c2):
    def rhs(_, h):
        h1, h2, h3 = h
        return [-c1 * h1 + h3, -c1 * h2 + c2 * h3, -c2 * h3]

    return rhs


class TestBarrierCascade:
    @pytest.mark.parametrize("seed", range(10))
    def test_matches_closed_form(self, seed):
        from meltsafe.verification import analytic_h_oracle

        rng = np.random.default_rng(seed)
        h1_0 = rng.uniform(0.1, 3.0)
        c1 = rng.uniform(0.2, 2.0)
        h2_0 = rng.uniform(0.0, c1 * h1_0)  # keeps h3_0 >= 0
        c2 = c1 + rng.uniform(0.05, 2.0)
        ts = np.linspace(0.0, 10.0, 50)
        sol = solve_ivp(_chain_rates(c1, c2), (0.0, 10.0),
                        [h1_0, h2_0, c1 * h1_0 - h2_0], t_eval=ts,
                        method="DOP853", rtol=1e-13, atol=1e-290)
        ana = np.array(analytic_h_oracle(h1_0, h2_0, c1, c2, ts))
        scale = np.maximum(np.abs(ana), 1e-12 * max(h1_0, h2_0, 1.0))
        assert np.max(np.abs(sol.y - ana) / scale) < 1e-8
        assert sol.y.min() > -1e-10

    def test_flux_bounded_by_initial_data(self):
        # integrating the cascade keeps h2 below max{h2(0), (c2/c1)h3(0)} and q_bar
        sigma0, qc0, q_bar = 2.0, 1.0, 3.0
        c1 = 2.0 * qc0 / sigma0
        c2 = c1 * q_bar / (c1 * sigma0 - qc0)  # ceiling budget exactly
        h3_0 = c1 * sigma0 - qc0
        sol = solve_ivp(_chain_rates(c1, c2), (0.0, 20.0), [sigma0, qc0, h3_0],
                        rtol=1e-10, atol=1e-12, dense_output=True)
        h2 = sol.sol(np.linspace(0, 20, 2000))[1]
        bound = max(qc0, c2 / c1 * h3_0)
        assert np.max(h2) <= bound * (1.0 + 1e-8)
        assert np.max(h2) <= q_bar * (1.0 + 1e-8)
        assert np.min(sol.y) > -1e-10


ORDER2_FLOORS_CASE = dict(qc0=1.0, sigma0=2.0, p0=-3.0)


class TestValidateGains:
    def test_reference_filter_gains_pass(self):
        sigma0 = 212996.532
        qc0 = sigma0 * 8.05
        report = validate_gains((sigma0, qc0), QpGains(64.4, 973.0, 129.0, 195.0), "qp")
        assert report.ok
        ratio_check = next(c for c in report.checks
                           if c.name == "k1_at_least_flux_deficit_ratio")
        assert ratio_check.margin == pytest.approx(64.4 - 8.05, rel=1e-9)

    def test_small_k1_fails_with_margin(self):
        sigma0 = 212996.532
        qc0 = sigma0 * 8.05
        report = validate_gains((sigma0, qc0), QpGains(8.0, 973.0), "qp")
        assert not report.ok
        failed = report.failures[0]
        assert failed.margin == pytest.approx(-0.05, abs=1e-9)

    def test_order2_floor(self):
        c = ORDER2_FLOORS_CASE
        # c1 must clear max{qc0/sigma0, -p0/qc0} = max{0.5, 3} = 3
        bad = validate_gains((c["sigma0"], c["qc0"], c["p0"]),
                             NonovGains(2.9, 10.0, 1.0, actuator_order=2), "nonov-2")
        assert not bad.ok
        good = validate_gains((c["sigma0"], c["qc0"], c["p0"]),
                              NonovGains(3.5, 10.0, 1.0, actuator_order=2), "nonov-2")
        assert good.ok

    def test_upper_budget(self):
        sigma0, qc0, q_bar = 2.0, 1.0, 3.0
        limit = 1.0 * q_bar / (1.0 * sigma0 - qc0)  # c1 = 1
        ok = validate_gains((sigma0, qc0), NonovGains(1.0, limit * 0.9), "upper",
                            q_bar=q_bar)
        assert ok.ok
        bad = validate_gains((sigma0, qc0), NonovGains(1.0, limit * 1.1), "upper",
                             q_bar=q_bar)
        assert not bad.ok

    def test_nonpositive_deficit_raises(self):
        with pytest.raises(AssumptionError):
            validate_gains((0.0, 1.0), QpGains(1.0, 1.0), "qp")


class TestScenarioAssumptions:
    def test_titanium_setup_passes(self):
        state = OnePhaseState(0.0, 1e-5, affine_excess_profile(1.0, 200))
        consts = derive_constants(TI6AL4V)
        report = validate_scenario_assumptions(
            state, SetpointSpec(s_r=2e-4), "nonov-1", consts=consts,
            qc0=1714622.0826, domain_length=5e-4)
        assert report.ok
        reach = next(c for c in report.checks if c.name == "setpoint_beyond_stored_melt")
        # margin = s_r - s0 - (beta/alpha)*int(theta0), dominated by s_r - s0
        assert reach.margin == pytest.approx(2e-4 - 1e-5 - 1.45e-8, rel=1e-3)

    def test_setpoint_below_initial_interface_fails(self):
        state = OnePhaseState(0.0, 1e-5, affine_excess_profile(1.0, 100))
        report = validate_scenario_assumptions(
            state, SetpointSpec(s_r=5e-6), "nonov-1",
            consts=derive_constants(TI6AL4V), qc0=0.0)
        assert not report.ok
        assert any(c.name == "setpoint_beyond_stored_melt" for c in report.failures)

    def test_two_phase_zero_excess(self):
        mat = TwoPhaseMaterial(liquid=UNIT, solid=UNIT, length=1.0)
        state = TwoPhaseState(0.0, 0.35, np.zeros(65), np.zeros(65))
        bounds = TwoPhaseDataBounds(0.1, 0.1, 20.0, 20.0, 0.05)
        report = validate_scenario_assumptions(
            state, SetpointSpec(s_r=0.5), "two-phase", mat=mat, bounds=bounds,
            gains=NonovGains(1.0, 1.0), qc0=0.05)
        assert report.ok
        rest = next(c for c in report.checks if c.name == "resting_interface_positive")
        assert rest.margin == pytest.approx(0.35)

    def test_ceiling_envelope_check(self):
        # peak above the affine envelope fails the ceiling-compatible data check
        state = OnePhaseState(0.0, 1e-5, affine_excess_profile(3.0, 100))
        spec = SetpointSpec(s_r=2e-4, temp_ceiling=1700.0, flux_ceiling=5e6)
        report = validate_scenario_assumptions(
            state, spec, "upper", consts=derive_constants(TI6AL4V),
            k=TI6AL4V.k, melt_temp=TI6AL4V.melt_temp, qc0=1e6, domain_length=5e-4)
        assert any(c.name == "initial_profile_below_affine_envelope"
                   for c in report.failures)
