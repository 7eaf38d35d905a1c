import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from meltsafe.cbf import (
    SetpointSpec,
    cbf_bundle,
    cbf_bundle_two_phase,
    sigma_one_phase,
    sigma_two_phase,
)
from meltsafe.control import NonovGains
from meltsafe.core import (
    TI6AL4V,
    ActuatorState,
    DerivedConstants,
    Grid,
    MaterialProperties,
    OnePhaseState,
    affine_excess_profile,
    derive_constants,
)
from meltsafe.signals import Constant
from meltsafe.solver import SolverConfig, simulate
from meltsafe.two_phase import TwoPhaseMaterial, TwoPhaseState, s_infinity

NONDIM = DerivedConstants(alpha=1.0, beta=1.0, gamma=1.0)
UNIT = MaterialProperties(1.0, 1.0, 1.0, 1.0, 1.0)
MAT = TwoPhaseMaterial(liquid=UNIT, solid=UNIT, length=1.0)

reasonable = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


class TestSigmaOnePhase:
    def test_equilibrium_zero(self):
        state = OnePhaseState(0.0, 2e-4, np.zeros(101))
        spec = SetpointSpec(s_r=2e-4)
        assert sigma_one_phase(state, derive_constants(TI6AL4V), spec) == 0.0

    def test_titanium_initial_deficit(self):
        # frozen hand value: gamma*1.9e-4 - rho*cp*5e-6 = 212996.532
        state = OnePhaseState(0.0, 1e-5, affine_excess_profile(1.0, 200))
        spec = SetpointSpec(s_r=2e-4)
        sigma = sigma_one_phase(state, derive_constants(TI6AL4V), spec)
        assert sigma == pytest.approx(212996.532, abs=1e-3)
        assert sigma == pytest.approx(2.130e5, rel=1e-3)

    def test_sign_past_setpoint(self):
        state = OnePhaseState(0.0, 3e-4, np.zeros(101))
        spec = SetpointSpec(s_r=2e-4)
        assert sigma_one_phase(state, derive_constants(TI6AL4V), spec) < 0.0

    def test_decay_rate_matches_flux(self):
        # discrete energy bookkeeping: sigma shrinks at the applied flux rate
        n, qc, dt = 64, 0.3, 4e-6
        state = OnePhaseState(0.0, 0.3, affine_excess_profile(0.4, n))
        spec = SetpointSpec(s_r=0.7)
        cfg = SolverConfig(grid=Grid(n), dt=dt, scheme="explicit")
        traj = simulate(state, Constant(qc), 0.02, cfg, NONDIM, 1.0, record_dt=dt)
        sigmas = [sigma_one_phase(OnePhaseState(t, s, th), NONDIM, spec)
                  for t, s, th in zip(traj.t, traj.s, traj.theta)]
        rates = np.diff(sigmas) / np.diff(traj.t)
        tol = 2.0 * (1.0 / n + dt) * max(qc, 1.0)
        assert np.max(np.abs(rates + qc)) < tol


class TestSigmaTwoPhase:
    def test_equilibrium_zero(self):
        state = TwoPhaseState(0.0, 0.5, np.zeros(65), np.zeros(65))
        assert sigma_two_phase(state, MAT, SetpointSpec(s_r=0.5)) == 0.0

    def test_pure_latent_term(self):
        state = TwoPhaseState(0.0, 0.3, np.zeros(65), np.zeros(65))
        spec = SetpointSpec(s_r=0.55)
        assert sigma_two_phase(state, MAT, spec) == pytest.approx(
            MAT.gamma * (0.55 - 0.3), rel=1e-14)

    @pytest.mark.parametrize("peak_l,peak_s,s0", [(0.1, 0.05, 0.35), (0.3, 0.0, 0.5),
                                                  (0.0, 0.2, 0.25)])
    def test_links_to_resting_interface(self, peak_l, peak_s, s0):
        eta = np.linspace(0.0, 1.0, 65)
        state = TwoPhaseState(0.0, s0, affine_excess_profile(peak_l, 64),
                              -peak_s * eta)
        spec = SetpointSpec(s_r=0.8)
        sigma = sigma_two_phase(state, MAT, spec)
        assert sigma == pytest.approx(MAT.gamma * (spec.s_r - s_infinity(state, MAT)),
                                      rel=1e-12)


class TestBundle:
    def test_identity_and_values(self):
        state = OnePhaseState(0.0, 0.3, np.zeros(33))
        act = ActuatorState(qc=1.0)
        spec = SetpointSpec(s_r=0.3 + 2.0)  # makes sigma = gamma*2 = 2
        b = cbf_bundle(state, act, NONDIM, spec, c1=2.0)
        assert b.h1 == pytest.approx(2.0, rel=1e-12)
        assert b.h2 == 1.0
        assert b.h3 == pytest.approx(3.0, rel=1e-12)

    def test_equilibrium_zeros(self):
        state = OnePhaseState(0.0, 0.3, np.zeros(33))
        b = cbf_bundle(state, ActuatorState(qc=0.0), NONDIM, SetpointSpec(s_r=0.3), c1=1.0)
        assert (b.h1, b.h2, b.h3) == (0.0, 0.0, 0.0)

    def test_flux_margin(self):
        state = OnePhaseState(0.0, 0.3, np.zeros(33))
        b = cbf_bundle(state, ActuatorState(qc=1.0), NONDIM, SetpointSpec(s_r=0.4),
                       c1=1.0, q_bar=5.0)
        assert b.h2_star == 4.0

    @given(h1=st.floats(min_value=-0.25, max_value=1e3, allow_nan=False),
           h2=reasonable, c1=st.floats(min_value=1e-3, max_value=1e3))
    @settings(max_examples=100, deadline=None)
    def test_backstepping_identity(self, h1, h2, c1):
        # the identity h3 = c1*h1 - h2 holds exactly for every evaluation
        state = OnePhaseState(0.0, 0.3, np.zeros(17))
        b = cbf_bundle(state, ActuatorState(qc=h2), NONDIM,
                       SetpointSpec(s_r=0.3 + h1), c1=c1)
        assert b.h3 == c1 * b.h1 - b.h2

    def test_order2_barriers(self):
        gains = NonovGains(c1=2.0, c2=3.0, c3=1.0, actuator_order=2)
        state = OnePhaseState(0.0, 0.3, np.zeros(33))
        spec = SetpointSpec(s_r=0.3 + 1.0)  # sigma = 1
        act = ActuatorState(qc=0.5, p=0.25)
        b = cbf_bundle(state, act, NONDIM, spec, c1=gains.c1, order2_gains=gains)
        p_target = 2.0 * 3.0 * 1.0 - (2.0 + 3.0) * 0.5
        assert b.h4 == pytest.approx(p_target - 0.25, rel=1e-12)
        assert b.h5 == pytest.approx(0.25 + 2.0 * 0.5, rel=1e-12)

    def test_h_min_scans_full_profile(self):
        theta = affine_excess_profile(1.0, 32)
        theta[10] = -0.5  # interior dip, not at a boundary
        state = OnePhaseState(0.0, 0.3, theta)
        b = cbf_bundle(state, ActuatorState(qc=0.0), NONDIM, SetpointSpec(s_r=0.4), c1=1.0)
        assert b.h_min == -0.5

    def test_two_phase_bundle(self):
        state = TwoPhaseState(0.0, 0.3, np.zeros(65), np.zeros(65))
        b = cbf_bundle_two_phase(state, ActuatorState(qc=0.2), MAT,
                                 SetpointSpec(s_r=0.5), c1=2.0)
        assert b.h1 == pytest.approx(0.2, rel=1e-12)
        assert b.h3 == pytest.approx(2.0 * 0.2 - 0.2, rel=1e-12)
        assert b.h4 is None and b.h5 is None
