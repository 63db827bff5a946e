import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_state
from tiltsim.controllers import ControlCommand, ControllerKind
from tiltsim.dynamics import (DegenerateInertia, ExtensionMismatch, InvalidParams, InvalidState,
                              NegativeOmega, SimState, VehicleParams, body_accel, j_theta,
                              jerk_decomposition, psi_from_alpha, snap_decomposition,
                              state_derivative, thrust)
from tiltsim.linalg2 import row_rank
from tiltsim.verify import check_jerk_fd, check_snap_fd

P = VehicleParams()
omegas = st.floats(0, 500, allow_nan=False)
alphas = st.floats(-20, 20, allow_nan=False)


def test_thrust_examples():
    assert thrust(0.0, 1e-3) == 0.0
    assert thrust(200.0, 1e-3) == pytest.approx(40.0, rel=1e-15)
    assert thrust(1.0, 1e-3) == pytest.approx(1e-3, rel=1e-15)
    with pytest.raises(NegativeOmega):
        thrust(-1.0, 1e-3)


def test_psi_examples():
    assert psi_from_alpha(0.0, P) == 0.0
    assert psi_from_alpha(2.0, P) == pytest.approx(-1.0, abs=1e-15)
    assert psi_from_alpha(-np.pi, P) == pytest.approx(np.pi / 2, abs=1e-15)


def test_j_theta_examples():
    np.testing.assert_allclose(j_theta(P), [[8.660254e-4, 8.660254e-4], [5.0e-4, -5.0e-4]],
                               rtol=1e-7)
    sym = VehicleParams(k_f1=1.0, k_f2=1.0, theta=np.pi / 4)
    h = np.sqrt(2) / 2
    np.testing.assert_allclose(j_theta(sym), [[h, h], [h, -h]], atol=1e-15)
    assert np.linalg.det(j_theta(P)) == pytest.approx(-1e-6 * np.sin(np.pi / 3), rel=1e-12)


def test_params_validation():
    with pytest.raises(DegenerateInertia):
        VehicleParams(i_t=1e-3, i_b=1e-3)
    with pytest.raises(InvalidParams):
        VehicleParams(mass=0.0)
    with pytest.raises(InvalidParams):
        VehicleParams(theta=np.pi / 2)
    with pytest.raises(InvalidParams):
        VehicleParams(k_f1=float("nan"))
    assert P.inertia_ratio == 0.5 and P.tilt_gain == 0.5


def test_state_validation_and_round_trip():
    with pytest.raises(InvalidState):
        SimState(omega1=-1.0)
    with pytest.raises(InvalidState):
        SimState(domega1=1.0)
    s = SimState(1, 2, 3, 4, 5, 6, 7).with_extension(8, 9, 10)
    assert SimState.from_array(s.to_array()) == s
    assert s.to_array().tolist() == list(range(1, 11))


def test_body_accel_examples():
    np.testing.assert_allclose(body_accel(SimState(), P), [69.282032, 0.0], atol=1e-6)
    assert np.all(body_accel(SimState(omega1=0, omega2=0), P) == 0)


def test_jerk_examples():
    gain = jerk_decomposition(SimState(), P).gain
    np.testing.assert_allclose(gain[:, 2], [0.0, 34.641016], atol=1e-6)
    np.testing.assert_allclose(jerk_decomposition(SimState(omega1=0.0), P).gain[:, 0], 0.0)
    np.testing.assert_allclose(jerk_decomposition(SimState(omega2=0.0), P).gain[:, 1], 0.0)


def test_snap_examples():
    base = SimState().with_extension()
    dec = snap_decomposition(base, P)
    np.testing.assert_array_equal(dec.bias, 0.0)
    np.testing.assert_allclose(dec.gain, jerk_decomposition(SimState(), P).gain, atol=1e-15)
    with pytest.raises(ExtensionMismatch):
        snap_decomposition(SimState(), P)


def test_snap_uncoupled_column_is_scaled():
    s = SimState(alpha=0.4).with_extension(1.0, -2.0, 0.3)
    exact = snap_decomposition(s, P).gain
    loose = snap_decomposition(s, P, yaw_coupled=False).gain
    np.testing.assert_allclose(loose[:, :2], exact[:, :2])
    np.testing.assert_allclose(exact[:, 2], P.tilt_gain * loose[:, 2], rtol=1e-14)


def test_jerk_and_snap_match_finite_differences():
    assert check_jerk_fd(P).passed
    assert check_snap_fd(P).passed
    assert not check_snap_fd(P, yaw_coupled=False).passed


def test_state_derivative_examples():
    zero = SimState(omega1=0, omega2=0)
    cmd = ControlCommand(ControllerKind.FL3, np.zeros(3))
    np.testing.assert_array_equal(state_derivative(zero, cmd, P), 0.0)
    assert state_derivative(SimState(vx=3.0), cmd, P)[0] == 3.0
    cmd = ControlCommand(ControllerKind.FL3, np.array([5.0, -5.0, 0.1]))
    np.testing.assert_array_equal(state_derivative(SimState(), cmd, P)[4:7], [5.0, -5.0, 0.1])
    with pytest.raises(ExtensionMismatch):
        state_derivative(SimState().with_extension(), cmd, P)


@pytest.mark.parametrize("w1,w2,rank", [(0, 0, 0), (0, 1e-9, 2), (1e-9, 0, 2), (0, 1, 2),
                                        (1, 0, 2), (1e-9, 1e-9, 2), (1, 1, 2), (200, 0, 2)])
def test_jerk_gain_rank_boundary(w1, w2, rank):
    # one stopped propeller leaves the other speed column orthogonal to the tilt column
    g = jerk_decomposition(SimState(omega1=w1, omega2=w2, alpha=0.7), P).gain
    assert np.linalg.matrix_rank(g, tol=1e-30) == rank


@settings(max_examples=1000)
@given(omegas, omegas, alphas)
def test_accel_bounded_by_total_thrust(w1, w2, a):
    acc = body_accel(SimState(omega1=w1, omega2=w2, alpha=a), P)
    bound = (P.k_f1 * w1 ** 2 + P.k_f2 * w2 ** 2) / P.mass
    assert np.hypot(*acc) <= bound * (1 + 1e-12) + 1e-300


@settings(max_examples=1000)
@given(st.floats(1e-3, 500), alphas)
def test_equal_speeds_accelerate_along_bisector(w, a):
    acc = body_accel(SimState(omega1=w, omega2=w, alpha=a), P)
    mid = a + psi_from_alpha(a, P)
    # body-lateral component vanishes
    lateral = -np.sin(mid) * acc[0] + np.cos(mid) * acc[1]
    assert abs(lateral) <= 1e-12 * np.hypot(*acc)
    assert np.cos(mid) * acc[0] + np.sin(mid) * acc[1] > 0


@settings(max_examples=1000)
@given(alphas, st.floats(1e-4, 10), st.floats(1e-4, 10))
def test_yaw_tilt_coupling(a, i_t, i_b):
    if abs(i_t - i_b) < 1e-9:
        return
    p = VehicleParams(i_t=i_t, i_b=i_b)
    assert psi_from_alpha(a, p) == -(i_t / i_b) * a


@settings(max_examples=1000)
@given(omegas, omegas, alphas)
def test_jerk_gain_full_rank_unless_both_stopped(w1, w2, a):
    g = jerk_decomposition(SimState(omega1=w1, omega2=w2, alpha=a), P).gain
    if max(w1, w2) > 1e-3:
        assert np.linalg.matrix_rank(g) == 2
    if min(w1, w2) > 1.0:
        assert row_rank(g) == 2
    if w1 == 0 and w2 == 0:
        assert not np.any(g)


def test_random_states_decompositions_are_finite(rng):
    for _ in range(200):
        s = random_state(rng, extended=True)
        dec = snap_decomposition(s, P)
        assert np.all(np.isfinite(dec.bias)) and np.all(np.isfinite(dec.gain))
