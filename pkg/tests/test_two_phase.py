import numpy as np
import pytest

from meltsafe.core import Grid, MaterialProperties, affine_excess_profile
from meltsafe.errors import InvalidParameterError, PhaseDisappearanceError
from meltsafe.signals import random_piecewise
from meltsafe.solver import SolverConfig, step_arrays_explicit, step_arrays_implicit
from meltsafe.two_phase import (
    TwoPhaseMaterial,
    TwoPhaseState,
    interface_velocity,
    s_infinity,
    simulate_two_phase,
    step_two_phase,
    stored_energy,
)

UNIT = MaterialProperties(k=1.0, rho=1.0, cp=1.0, latent_heat=1.0, melt_temp=1.0)
MAT = TwoPhaseMaterial(liquid=UNIT, solid=UNIT, length=1.0)
N = 64


def make_state(s=0.35, peak_l=0.0, peak_s=0.0, t=0.0):
    eta = np.linspace(0.0, 1.0, N + 1)
    return TwoPhaseState(t=t, s=s, theta_l=affine_excess_profile(peak_l, N),
                         theta_s=-peak_s * eta)


def cfg(scheme="implicit", dt=1e-4, **kw):
    return SolverConfig(grid=Grid(N), dt=dt, scheme=scheme, **kw)


class TestStepTwoPhase:
    def test_equilibrium(self):
        st = make_state()
        new = step_two_phase(st, 0.0, 0.0, MAT, cfg())
        assert new.s == st.s
        assert np.all(new.theta_l == 0.0) and np.all(new.theta_s == 0.0)
        assert new.t > st.t

    def test_rejects_negative_disturbance(self):
        with pytest.raises(InvalidParameterError):
            step_two_phase(make_state(), 0.0, -0.1, MAT, cfg())

    @pytest.mark.parametrize("scheme,dt", [("implicit", 1e-4), ("explicit", 4e-6)])
    def test_one_phase_reduction(self, scheme, dt):
        # zero solid excess and zero disturbance reproduce the one-phase solver
        st = make_state(peak_l=0.5)
        theta, s = st.theta_l.copy(), st.s
        stepper = step_arrays_implicit if scheme == "implicit" else step_arrays_explicit
        for _ in range(400):
            st = step_two_phase(st, 0.2, 0.0, MAT, cfg(scheme, dt), dt=dt)
            theta, s, _ = stepper(theta, s, 0.2, dt, 1.0, 1.0, 1.0, 1.0 / N)
        assert np.max(np.abs(st.theta_s)) == 0.0
        assert abs(st.s - s) < 1e-6
        assert np.max(np.abs(st.theta_l - theta)) < 1e-6

    def test_pure_freezing(self):
        st = make_state(s=0.5)
        for _ in range(1000):
            st = step_two_phase(st, 0.0, 0.3, MAT, cfg())
        assert st.s < 0.5
        assert np.all(st.theta_s <= 0.0)
        assert np.all(st.theta_l == 0.0)

    def test_phase_disappearance(self):
        st = make_state(s=0.02)
        with pytest.raises(PhaseDisappearanceError):
            for _ in range(5000):
                st = step_two_phase(st, 0.0, 2.0, MAT, cfg(min_interface=0.01))

    @pytest.mark.parametrize("seed", [0, 1, 5])
    def test_sign_preservation_random_disturbance(self, seed):
        qf = random_piecewise(seed=seed, lo=0.0, hi=0.12, dwell=0.05, horizon=1.0)
        st = make_state(peak_l=0.1, peak_s=0.05)
        c = cfg(dt=2e-4)
        for _ in range(5000):
            st = step_two_phase(st, 0.05, qf(st.t), MAT, c)
            assert st.theta_l.min() >= -1e-9
            assert st.theta_s.max() <= 1e-9
            assert 0.0 < st.s < MAT.length


class TestSInfinity:
    def test_zero_energy(self):
        st = make_state()
        assert s_infinity(st, MAT) == st.s

    def test_affine_liquid(self):
        st = make_state(peak_l=0.1)
        assert s_infinity(st, MAT) == pytest.approx(0.35 + 0.1 * 0.35 / 2.0, rel=1e-12)

    def test_symmetric_cancellation(self):
        # equal-magnitude opposite-sign affine excesses at the midpoint cancel
        st = make_state(s=0.5, peak_l=0.2, peak_s=0.2)
        assert s_infinity(st, MAT) == pytest.approx(0.5, rel=1e-13)


class TestConservation:
    def test_energy_balance(self):
        st = make_state(s=0.4, peak_l=0.2, peak_s=0.1)
        e0 = stored_energy(st, MAT)
        qc, qf, horizon, dt = 0.15, 0.05, 0.2, 1e-4
        c = cfg(dt=dt)
        while st.t < horizon - 1e-12:
            st = step_two_phase(st, qc, qf, MAT, c)
        rate = (stored_energy(st, MAT) - e0) / horizon
        dxi = 1.0 / N
        tol = 1.0 * (dxi + dt) * max(qc, 1.0)
        assert abs(rate - (qc - qf)) < tol


class TestSimulateTwoPhase:
    def test_records_and_interface_velocity_sign(self):
        st = make_state(peak_l=0.1)
        assert interface_velocity(st, MAT) > 0.0
        times, states = simulate_two_phase(st, 0.1, 0.0, 0.05, MAT, cfg(), record_dt=0.01)
        assert len(times) == len(states)
        assert times[-1] == pytest.approx(0.05, rel=1e-9)
        assert states[-1].s > st.s

    def test_state_validation(self):
        with pytest.raises(InvalidParameterError):
            TwoPhaseState(t=0.0, s=0.3, theta_l=np.zeros(N + 1), theta_s=np.ones(N + 1))
        with pytest.raises(InvalidParameterError):
            TwoPhaseState(t=0.0, s=-0.1, theta_l=np.zeros(N + 1), theta_s=np.zeros(N + 1))
        with pytest.raises(InvalidParameterError):
            TwoPhaseMaterial(
                liquid=UNIT,
                solid=MaterialProperties(1.0, 1.0, 1.0, 1.0, 2.0),
                length=1.0)
