import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from safetrack.exceptions import DomainError, InvalidInputError, SingularityError
from safetrack.models import (
    AckermannParams,
    AckermannState,
    DiffDriveParams,
    DiffDriveState,
    DoubleIntegratorParams,
    DoubleIntegratorState,
    ackermann_input_matrix,
    affine_terms,
    curvature_factor,
    native_derivative,
    sigma_bounds,
    singular_values,
    slip_angle,
    state_derivative,
    to_canonical,
)

mp.mp.dps = 40

F1 = AckermannParams(l_f=0.17145, l_r=0.15875, v_min=0.25, v_max=3.0, delta3_max=0.4)

# frozen from the high-precision scalar oracle below
KAPPA = 0.48076923076923077
SLIP_04 = 0.20053393471199587
K_04 = 0.54422301268770403
UPS_2_03_04 = (1.7546529097445758, 0.95978808407111077)
DELTA1_DOT = 1.2547564977462964
SIGMA_UPPER = 1.6326690380631121
SIGMA_LOWER = 0.12019230769230769


def _mp_kappa():
    return mp.mpf("0.15875") / (mp.mpf("0.15875") + mp.mpf("0.17145"))


def _mp_slip(d3):
    return mp.atan(_mp_kappa() * mp.tan(mp.mpf(d3)))


def _mp_K_sec_form(d3):
    k = _mp_kappa()
    t = mp.tan(mp.mpf(d3))
    return k * mp.sec(mp.mpf(d3)) ** 2 / (1 + k**2 * t**2)


def _mp_K_t_form(d3):
    k = _mp_kappa()
    t = mp.tan(mp.mpf(d3)) ** 2
    return k * (1 + t) / (1 + k**2 * t)


def test_oracle_matches_frozen_values():
    assert float(_mp_kappa()) == pytest.approx(KAPPA, abs=1e-15)
    assert float(_mp_slip("0.4")) == pytest.approx(SLIP_04, abs=1e-10)
    assert abs(_mp_K_sec_form("0.4") - _mp_K_t_form("0.4")) < mp.mpf("1e-30")
    assert float(_mp_K_t_form("0.4")) == pytest.approx(K_04, abs=1e-10)
    psi = mp.mpf("0.3") + _mp_slip("0.4")
    assert float(2 * mp.cos(psi)) == pytest.approx(UPS_2_03_04[0], abs=1e-10)
    assert float(2 * mp.sin(psi)) == pytest.approx(UPS_2_03_04[1], abs=1e-10)
    assert float(mp.sin(_mp_slip("0.4")) / mp.mpf("0.15875")) == pytest.approx(DELTA1_DOT, abs=1e-10)
    assert float(3 * _mp_K_t_form("0.4")) == pytest.approx(SIGMA_UPPER, abs=1e-10)


class TestParams:
    def test_kappa(self):
        assert F1.kappa == pytest.approx(KAPPA, abs=1e-15)

    @pytest.mark.parametrize("kw", [
        dict(l_f=0.0), dict(l_r=-1.0), dict(v_min=0.0), dict(v_min=4.0),
        dict(delta3_max=math.pi / 2), dict(v_max=float("nan")),
    ])
    def test_rejects_invalid(self, kw):
        base = dict(l_f=0.17145, l_r=0.15875, v_min=0.25, v_max=3.0, delta3_max=0.4)
        base.update(kw)
        with pytest.raises(InvalidInputError):
            AckermannParams(**base)

    def test_diff_drive_and_di_validation(self):
        with pytest.raises(InvalidInputError):
            DiffDriveParams(v_min=0.3, v_max=0.2, omega_max=1.0)
        with pytest.raises(InvalidInputError):
            DiffDriveParams(v_min=0.01, v_max=0.2, omega_max=0.0)
        with pytest.raises(InvalidInputError):
            DoubleIntegratorParams(a_max=0.0)

    def test_state_rejects_non_finite(self):
        with pytest.raises(InvalidInputError):
            AckermannState(p=(0.0, float("inf")), v=1.0, delta1=0.0, delta3=0.0)
        with pytest.raises(InvalidInputError):
            DiffDriveState(p=(0.0, 0.0, 1.0), v=1.0, theta=0.0)

    def test_state_round_trip_and_equality(self):
        s = AckermannState(p=(1.0, 2.0), v=0.5, delta1=7.0, delta3=-0.1)
        assert AckermannState.from_array(s.as_array()) == s
        assert s != AckermannState(p=(1.0, 2.0), v=0.5, delta1=7.0, delta3=0.1)
        assert hash(s) == hash(AckermannState.from_array(s.as_array()))


class TestSlipAndCurvature:
    def test_slip_values(self):
        assert slip_angle(0.0, F1) == 0.0
        assert float(slip_angle(0.4, F1)) == pytest.approx(SLIP_04, abs=1e-10)
        assert float(slip_angle(-0.4, F1)) == pytest.approx(-SLIP_04, abs=1e-10)

    def test_slip_non_finite(self):
        with pytest.raises(InvalidInputError):
            slip_angle(float("nan"), F1)

    def test_curvature_values(self):
        assert float(curvature_factor(0.0, F1)) == pytest.approx(KAPPA, abs=1e-15)
        assert float(curvature_factor(0.4, F1)) == pytest.approx(K_04, abs=1e-10)
        assert curvature_factor(0.2, F1) < curvature_factor(0.3, F1)

    def test_curvature_forms_agree(self):
        d3 = np.linspace(-1.4, 1.4, 201)
        k = F1.kappa
        sec_form = k / np.cos(d3) ** 2 / (1 + k**2 * np.tan(d3) ** 2)
        np.testing.assert_allclose(curvature_factor(d3, F1), sec_form, rtol=1e-12)

    def test_curvature_domain(self):
        with pytest.raises(DomainError):
            curvature_factor(math.pi / 2, F1)

    def test_curvature_even_and_monotone(self):
        grid = np.linspace(0.0, F1.delta3_max, 10_000)
        K = curvature_factor(grid, F1)
        assert np.all(np.diff(K) > 0)
        np.testing.assert_array_equal(curvature_factor(-grid, F1), K)


class TestCanonical:
    def test_trivial_cases(self):
        c = to_canonical(AckermannState(p=(0, 0), v=1.0, delta1=0.0, delta3=0.0), F1)
        np.testing.assert_allclose(c.upsilon, (1.0, 0.0))
        dd = DiffDriveParams(v_min=0.01, v_max=0.2, omega_max=2.0)
        c = to_canonical(DiffDriveState(p=(0, 0), v=0.2, theta=math.pi / 2), dd)
        np.testing.assert_allclose(c.upsilon, (0.0, 0.2), atol=1e-16)
        s = DoubleIntegratorState(p=(1, 2), upsilon=(3, 4))
        c = to_canonical(s)
        np.testing.assert_array_equal(c.p, (1, 2))
        np.testing.assert_array_equal(c.upsilon, (3, 4))

    def test_ackermann_value(self):
        c = to_canonical(AckermannState(p=(0, 0), v=2.0, delta1=0.3, delta3=0.4), F1)
        np.testing.assert_allclose(c.upsilon, UPS_2_03_04, atol=1e-10)
        assert np.linalg.norm(c.upsilon) == pytest.approx(2.0, abs=1e-14)


class TestAffineTerms:
    def test_diff_drive_identity(self):
        dd = DiffDriveParams(v_min=0.01, v_max=2.0, omega_max=2.0)
        dyn = affine_terms(DiffDriveState(p=(0, 0), v=1.0, theta=0.0), dd)
        np.testing.assert_array_equal(dyn.f_upsilon, (0.0, 0.0))
        np.testing.assert_allclose(dyn.h_upsilon, np.eye(2))

    def test_ackermann_straight(self):
        dyn = affine_terms(AckermannState(p=(0, 0), v=1.0, delta1=0.0, delta3=0.0), F1)
        np.testing.assert_allclose(dyn.f_upsilon, (0.0, 0.0), atol=1e-16)
        np.testing.assert_allclose(dyn.h_upsilon, [[1, 0], [0, KAPPA]], atol=1e-15)

    def test_double_integrator(self):
        dyn = affine_terms(DoubleIntegratorState(p=(5, 5), upsilon=(1, -1)), DoubleIntegratorParams(1.0))
        np.testing.assert_array_equal(dyn.f_upsilon, (0.0, 0.0))
        np.testing.assert_array_equal(dyn.h_upsilon, np.eye(2))

    def test_singular_speed(self):
        with pytest.raises(SingularityError):
            affine_terms(AckermannState(p=(0, 0), v=0.0, delta1=0.0, delta3=0.1), F1)
        dd = DiffDriveParams(v_min=0.01, v_max=0.2, omega_max=2.0)
        with pytest.raises(SingularityError):
            affine_terms(DiffDriveState(p=(0, 0), v=1e-12, theta=0.0), dd)

    def test_factorization_vectorized(self):
        rng = np.random.default_rng(11)
        n = 100_000
        v = rng.uniform(F1.v_min, F1.v_max, n)
        d1 = rng.uniform(-10, 10, n)
        d3 = rng.uniform(-F1.delta3_max, F1.delta3_max, n)
        h = ackermann_input_matrix(v, d1, d3, F1)
        psi = d1 + slip_angle(d3, F1)
        R = np.stack([np.stack([np.cos(psi), -np.sin(psi)], -1),
                      np.stack([np.sin(psi), np.cos(psi)], -1)], -2)
        D = np.zeros((n, 2, 2))
        D[:, 0, 0] = 1.0
        D[:, 1, 1] = curvature_factor(d3, F1) * v
        np.testing.assert_allclose(h, R @ D, atol=1e-12, rtol=0)


class TestDerivative:
    def test_coasting(self):
        s = AckermannState(p=(0, 0), v=1.0, delta1=0.0, delta3=0.0)
        np.testing.assert_allclose(state_derivative(s, (0, 0), (0, 0), F1), [1, 0, 0, 0, 0])

    def test_heading_rate(self):
        s = AckermannState(p=(0, 0), v=1.0, delta1=0.0, delta3=0.4)
        xd = state_derivative(s, (0, 0), (0, 0), F1)
        assert xd[3] == pytest.approx(DELTA1_DOT, abs=1e-10)

    def test_diff_drive(self):
        dd = DiffDriveParams(v_min=0.01, v_max=0.2, omega_max=2.0)
        xd = state_derivative(DiffDriveState(p=(0, 0), v=0.2, theta=0.0), (0.1, 0.5), (0, 0), dd)
        np.testing.assert_allclose(xd, [0.2, 0.0, 0.1, 0.5])

    def test_disturbance_is_matched(self):
        s = AckermannState(p=(0, 0), v=1.0, delta1=0.2, delta3=0.1)
        a = state_derivative(s, (0.3, -0.2), (0.1, 0.05), F1)
        b = state_derivative(s, (0.4, -0.15), (0.0, 0.0), F1)
        np.testing.assert_allclose(a, b, atol=1e-15)

    @pytest.mark.parametrize("kind", ["ackermann", "diff_drive"])
    def test_canonical_derivative_consistency(self, kind):
        # d/dt of (p, upsilon) along the native flow equals (upsilon, f + h (u + d))
        rng = np.random.default_rng(3)
        for _ in range(20):
            if kind == "ackermann":
                params = F1
                s = AckermannState(p=rng.normal(size=2), v=rng.uniform(0.3, 2.9),
                                   delta1=rng.uniform(-3, 3), delta3=rng.uniform(-0.39, 0.39))
            else:
                params = DiffDriveParams(v_min=0.01, v_max=0.2, omega_max=2.0)
                s = DiffDriveState(p=rng.normal(size=2), v=rng.uniform(0.05, 0.2),
                                   theta=rng.uniform(-3, 3))
            u, d = rng.normal(size=2), 0.1 * rng.normal(size=2)
            x0 = s.as_array()
            dyn = affine_terms(s, params)
            c0 = to_canonical(s, params)
            errs = []
            for dt in (1e-3, 5e-4):
                xp = x0 + dt * native_derivative(kind, x0, u + d, params)
                xm = x0 - dt * native_derivative(kind, x0, u + d, params)
                cp = to_canonical(type(s).from_array(xp), params)
                cm = to_canonical(type(s).from_array(xm), params)
                dp = (cp.p - cm.p) / (2 * dt)
                du = (cp.upsilon - cm.upsilon) / (2 * dt)
                np.testing.assert_allclose(dp, c0.upsilon, atol=1e-9)
                errs.append(np.max(np.abs(du - (dyn.f_upsilon + dyn.h_upsilon @ (u + d)))))
            # Euler-step central differences: error shrinks with dt
            assert errs[1] <= errs[0] + 1e-12
            assert errs[1] < 1e-5


class TestSingularValues:
    def test_examples(self):
        np.testing.assert_allclose(singular_values(np.eye(2)), (1.0, 1.0))
        h = ackermann_input_matrix(3.0, 0.7, 0.4, F1)
        lo, hi = singular_values(h)
        assert lo == pytest.approx(1.0, abs=1e-12)
        assert hi == pytest.approx(SIGMA_UPPER, abs=1e-9)

    @given(st.floats(-10, 10), st.floats(0.01, 10), st.floats(0.01, 10))
    @settings(max_examples=200, deadline=None)
    def test_orthogonal_invariance(self, psi, a, b):
        R = np.array([[math.cos(psi), -math.sin(psi)], [math.sin(psi), math.cos(psi)]])
        lo, hi = singular_values(R @ np.diag([a, b]))
        assert lo == pytest.approx(min(a, b), rel=1e-10)
        assert hi == pytest.approx(max(a, b), rel=1e-10)

    @given(st.lists(st.floats(-5, 5), min_size=4, max_size=4))
    @settings(max_examples=300, deadline=None)
    def test_matches_numpy_svd(self, entries):
        h = np.array(entries).reshape(2, 2)
        ref = np.linalg.svd(h, compute_uv=False)[::-1]
        np.testing.assert_allclose(singular_values(h), ref, atol=1e-12 * (1 + ref[-1]))


class TestSigmaBounds:
    def test_f1tenth(self):
        lo, hi = sigma_bounds(F1)
        assert lo == pytest.approx(SIGMA_LOWER, abs=1e-10)
        assert hi == pytest.approx(SIGMA_UPPER, abs=1e-10)

    def test_degenerate_band(self):
        k = F1.kappa
        p = AckermannParams(l_f=F1.l_f, l_r=F1.l_r, v_min=1 / k - 1e-12, v_max=1 / k, delta3_max=1e-9)
        lo, hi = sigma_bounds(p)
        assert lo == pytest.approx(1.0, abs=1e-10)
        assert hi == pytest.approx(1.0, abs=1e-10)

    def test_other_vehicles(self):
        assert sigma_bounds(DiffDriveParams(0.01, 0.2, 2.0)) == (0.01, 1.0)
        assert sigma_bounds(DoubleIntegratorParams(1.0)) == (1.0, 1.0)
