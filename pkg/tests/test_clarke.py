import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tdcr.clarke import (
    STRAIGHT_THRESHOLD,
    arc_jacobian,
    arc_to_manifold,
    clarke_matrices,
    forces_to_manifold_torque,
    joints_to_manifold,
    manifold_to_arc,
    manifold_to_joints,
    manifold_torque_to_forces,
)
from tdcr.errors import DomainError, SingularConfigurationError

finite = st.floats(-0.05, 0.05, allow_nan=False)


@pytest.mark.parametrize("n", range(3, 13))
def test_forward_inverse_identity(n):
    cm = clarke_matrices(n)
    assert np.allclose(cm.forward @ cm.inverse, np.eye(2), atol=1e-12)
    assert cm.forward.shape == (2, n) and cm.inverse.shape == (n, 2)


def test_matrices_are_read_only():
    cm = clarke_matrices(5)
    with pytest.raises(ValueError):
        cm.forward[0, 0] = 1.0


def test_tendon_count_below_three_rejected():
    with pytest.raises(DomainError):
        clarke_matrices(2)


def test_inverse_map_example_n5():
    q = manifold_to_joints([0.01, 0.0], 5)
    assert np.allclose(q, [0.01, 0.00309017, -0.00809017, -0.00809017, 0.00309017], atol=1e-8)
    assert np.array_equal(manifold_to_joints([0.0, 0.0], 5), np.zeros(5))


def test_forward_map_of_first_tendon_only():
    # one tendon pulled by 1: (2/n) * (cos 0, sin 0)
    assert np.allclose(joints_to_manifold([1.0, 0, 0, 0, 0]), [0.4, 0.0])


@settings(max_examples=200, deadline=None)
@given(st.integers(3, 12), finite, finite, st.floats(-1, 1))
def test_round_trip_and_constraint(n, a, b, c):
    q = manifold_to_joints([a, b], n)
    assert abs(q.sum()) < 1e-12
    assert np.allclose(joints_to_manifold(q), [a, b], atol=1e-12)
    # a common offset is invisible on the manifold
    assert np.allclose(joints_to_manifold(q + c), [a, b], atol=1e-12)
    assert np.allclose(manifold_to_joints(joints_to_manifold(q), n), q, atol=1e-12)


def test_multi_segment_shapes():
    qm = np.array([[0.01, 0.0], [0.0, 0.02]])
    q = manifold_to_joints(qm, 4)
    assert q.shape == (2, 4)
    assert np.allclose(joints_to_manifold(q), qm)


def test_manifold_to_arc_examples():
    assert np.allclose(manifold_to_arc([0.007, 0.0], 0.007), (0.0, 1.0))
    assert np.allclose(manifold_to_arc([0.0, 0.007], 0.007), (np.pi / 2, 1.0))
    assert tuple(manifold_to_arc([0.0, 0.0], 0.007)) == (0.0, 0.0)


def test_arc_to_manifold_examples():
    assert np.allclose(arc_to_manifold(0.0, 1.0, 0.007), [0.007, 0.0])
    assert np.allclose(arc_to_manifold(1.234, 0.0, 0.007), [0.0, 0.0])


@settings(max_examples=100, deadline=None)
@given(st.floats(-np.pi + 1e-6, np.pi), st.floats(1e-3, 3.0))
def test_arc_round_trip(phi, theta):
    qm = arc_to_manifold(phi, theta, 0.007)
    p, t = manifold_to_arc(qm, 0.007)
    assert np.isclose(p, phi, atol=1e-12) and np.isclose(t, theta, rtol=1e-12)


def test_non_positive_radius_rejected():
    with pytest.raises(DomainError):
        manifold_to_arc([0.01, 0.0], 0.0)


def test_arc_jacobian_block_on_x_axis():
    rho, rd = 0.004, 0.007
    J, Jd = arc_jacobian([rho, 0.0], [0.0, 0.0], rd)
    assert np.allclose(J, [[0.0, 1 / rho], [1 / rd, 0.0]])
    assert np.array_equal(Jd, np.zeros((2, 2)))


def test_arc_jacobian_finite_differences():
    rng = np.random.default_rng(1)
    rd, h = 0.007, 1e-7
    for _ in range(100):
        rho, ang = rng.uniform(1e-3, 0.02), rng.uniform(-np.pi, np.pi)
        q = rho * np.array([np.cos(ang), np.sin(ang)])
        v = rng.normal(size=2)
        J, Jd = arc_jacobian(q, v, rd)

        def f(x):
            phi, th = manifold_to_arc(x, rd)
            return np.array([np.unwrap([ang, phi])[1], th])

        fd = (f(q + h * v) - f(q - h * v)) / (2 * h)
        assert np.allclose(J @ v, fd, rtol=1e-6, atol=0)
        # J_dot is the directional derivative of J along v
        Jp, _ = arc_jacobian(q + h * v, v, rd)
        Jm, _ = arc_jacobian(q - h * v, v, rd)
        assert np.allclose(Jd, (Jp - Jm) / (2 * h), rtol=1e-5, atol=1e-6 * np.abs(Jd).max())


def test_arc_jacobian_refuses_straight():
    with pytest.raises(SingularConfigurationError):
        arc_jacobian([0.5 * STRAIGHT_THRESHOLD, 0.0], [0.0, 0.0], 0.007)
    with pytest.raises(SingularConfigurationError):
        arc_jacobian([0.01, 0.0, 0.0, 0.0], np.zeros(4), 0.007)


def test_force_map_example():
    F = manifold_torque_to_forces([1.0, 0.0], 5)
    assert np.allclose(F, [0.4, 0.123607, -0.323607, -0.323607, 0.123607], atol=1e-6)
    assert np.array_equal(manifold_torque_to_forces([0.0, 0.0], 5), np.zeros(5))


def test_torque_map_examples():
    assert np.allclose(forces_to_manifold_torque([1.0, 0, 0, 0, 0]), [1.0, 0.0])
    assert np.array_equal(forces_to_manifold_torque(np.zeros(5)), np.zeros(2))


@settings(max_examples=200, deadline=None)
@given(st.integers(3, 12), st.floats(-10, 10), st.floats(-10, 10), st.floats(-100, 100))
def test_force_round_trip_and_offset_invariance(n, a, b, c):
    F = manifold_torque_to_forces([a, b], n)
    assert np.allclose(forces_to_manifold_torque(F), [a, b], atol=1e-10)
    assert np.allclose(forces_to_manifold_torque(F + c), [a, b], atol=1e-10)
