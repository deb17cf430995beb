import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tdcr.errors import DomainError
from tdcr.kinematics import (
    RobotSpec,
    SegmentSpec,
    angular_velocity_jacobian,
    backbone_point,
    chain_frames,
    prototype_robot,
    point_jacobian,
    world_point,
)

SEG = SegmentSpec()
ELL, RD = SEG.length, SEG.disk_radius


def _ry(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])


def _rz(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


def _random_q(rng, m, rho_max=0.02):
    rho = rng.uniform(0, rho_max, m)
    ang = rng.uniform(0, 2 * np.pi, m)
    return np.column_stack([rho * np.cos(ang), rho * np.sin(ang)]).reshape(-1)


def _skew_vee(W):
    return np.array([W[2, 1], W[0, 2], W[1, 0]])


def test_segment_defaults_and_derived_values():
    assert SEG.disk_spacing == pytest.approx(0.02)
    assert SEG.backbone_second_moment == pytest.approx(4.9087e-14, rel=1e-4)
    assert SEG.backbone_area == pytest.approx(np.pi * 0.25e-6)


@pytest.mark.parametrize("kw", [{"length": 0.0}, {"disk_count": 0}, {"disk_radius": -1.0}, {"tendon_area": -1e-9}])
def test_segment_validation(kw):
    with pytest.raises(DomainError):
        SegmentSpec(**kw)


def test_robot_validation():
    with pytest.raises(DomainError):
        RobotSpec(segments=(), tendon_count=5)
    with pytest.raises(DomainError):
        RobotSpec(segments=(SEG,), tendon_count=2)


def test_straight_point():
    f = backbone_point(SEG, [0.0, 0.0], 0.13)
    assert np.allclose(f.position, [0, 0, 0.13], atol=1e-15)
    assert np.allclose(f.rotation, np.eye(3), atol=1e-15)


def test_quarter_circle_bend():
    # theta = pi/2 about phi = 0
    f = backbone_point(SEG, [RD * np.pi / 2, 0.0], ELL)
    assert np.allclose(f.position, [2 * ELL / np.pi, 0, 2 * ELL / np.pi], atol=1e-14)
    assert np.allclose(f.rotation, _ry(np.pi / 2), atol=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-4, 3.0), st.floats(-np.pi, np.pi), st.floats(0.0, 1.0))
def test_matches_textbook_arc(theta, phi, frac):
    s = frac * ELL
    kappa = theta / ELL
    f = backbone_point(SEG, RD * theta * np.array([np.cos(phi), np.sin(phi)]), s)
    p_ref = _rz(phi) @ np.array([2 * np.sin(0.5 * kappa * s) ** 2 / kappa, 0, np.sin(kappa * s) / kappa])
    R_ref = _rz(phi) @ _ry(kappa * s) @ _rz(-phi)
    assert np.allclose(f.position, p_ref, atol=1e-14)
    assert np.allclose(f.rotation, R_ref, atol=1e-13)


@settings(max_examples=100, deadline=None)
@given(st.floats(-0.03, 0.03), st.floats(-0.03, 0.03), st.floats(-np.pi, np.pi), st.floats(0.0, 1.0))
def test_clarke_plane_rotation_symmetry(a, b, alpha, frac):
    s = frac * ELL
    c, sn = np.cos(alpha), np.sin(alpha)
    f0 = backbone_point(SEG, [a, b], s)
    f1 = backbone_point(SEG, [c * a - sn * b, sn * a + c * b], s)
    Rz = _rz(alpha)
    assert np.allclose(f1.position, Rz @ f0.position, atol=1e-14)
    assert np.allclose(f1.rotation, Rz @ f0.rotation @ Rz.T, atol=1e-13)


@settings(max_examples=100, deadline=None)
@given(st.floats(-0.05, 0.05), st.floats(-0.05, 0.05), st.floats(0.0, 1.0))
def test_rotation_orthonormal(a, b, frac):
    R = backbone_point(SEG, [a, b], frac * ELL).rotation
    assert np.allclose(R @ R.T, np.eye(3), atol=1e-10)
    assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("alpha", np.linspace(0, 2 * np.pi, 7))
def test_continuity_through_straight(alpha):
    s = ELL
    kappa_s = 1e-9 / RD * s / ELL
    f = backbone_point(SEG, 1e-9 * np.array([np.cos(alpha), np.sin(alpha)]), s)
    # small-bend limit of the arc: (kappa s^2 / 2)(cos, sin), s - kappa^2 s^3 / 6
    lim = np.array([0.5 * kappa_s * s * np.cos(alpha), 0.5 * kappa_s * s * np.sin(alpha), s - kappa_s**2 * s / 6])
    assert np.max(np.abs(f.position - lim)) < 1e-12
    assert np.allclose(f.rotation, np.eye(3), atol=1e-6)


def test_arc_length_preserved():
    rng = np.random.default_rng(3)
    h = 1e-6
    for _ in range(50):
        q = _random_q(rng, 1, 0.03)
        s = rng.uniform(h, ELL - h)
        dp = (backbone_point(SEG, q, s + h).position - backbone_point(SEG, q, s - h).position) / (2 * h)
        assert np.linalg.norm(dp) == pytest.approx(1.0, abs=1e-8)


def test_arc_length_out_of_range():
    with pytest.raises(DomainError):
        backbone_point(SEG, [0, 0], ELL * 1.01)
    with pytest.raises(DomainError):
        backbone_point(SEG, [0, 0], -1e-3)


def test_chain_frames_straight_and_bent():
    robot = prototype_robot(2)
    frames = chain_frames(robot, np.zeros(4))
    assert np.allclose(frames[0].position, 0) and np.allclose(frames[0].rotation, np.eye(3))
    assert np.allclose(frames[1].position, [0, 0, ELL]) and np.allclose(frames[1].rotation, np.eye(3))
    frames = chain_frames(robot, [RD * np.pi / 2, 0, 0, 0])
    assert np.allclose(frames[1].position, [2 * ELL / np.pi, 0, 2 * ELL / np.pi], atol=1e-14)
    assert np.allclose(frames[1].rotation, _ry(np.pi / 2), atol=1e-14)
    assert len(chain_frames(prototype_robot(1), [0, 0])) == 2


def test_straight_jacobian_oracle():
    robot = prototype_robot(1)
    s = 0.15
    J = point_jacobian(robot, [0.0, 0.0], 0, s)
    c = s * s / (2 * ELL * RD)
    assert np.allclose(J, [[c, 0], [0, c], [0, 0]], atol=1e-15)
    assert np.array_equal(point_jacobian(robot, [0.01, 0.0], 0, 0.0), np.zeros((3, 2)))
    assert np.array_equal(angular_velocity_jacobian(robot, [0.01, 0.0], 0, 0.0), np.zeros((3, 2)))


def test_distal_columns_zero():
    robot = prototype_robot(3)
    q = np.array([0.01, 0.0, -0.004, 0.002, 0.003, 0.01])
    J = point_jacobian(robot, q, 1, 0.1)
    assert np.array_equal(J[:, 4:], np.zeros((3, 2)))
    assert np.array_equal(angular_velocity_jacobian(robot, q, 0, 0.1)[:, 2:], np.zeros((3, 4)))


def test_planar_bend_rate_angular_velocity():
    robot = prototype_robot(1)
    w = angular_velocity_jacobian(robot, [0.0, 0.0], 0, ELL) @ np.array([0.5, 0.0])
    # bending in the xz-plane turns the frame about +y at rate v / r_d
    assert np.allclose(w, [0, 0.5 / RD, 0], atol=1e-12)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_jacobians_match_finite_differences(m):
    robot = prototype_robot(m)
    rng = np.random.default_rng(10 + m)
    h = 1e-7
    nq = 2 * m
    for _ in range(100):
        q = _random_q(rng, m)
        i = int(rng.integers(m))
        s = rng.uniform(0, ELL)
        J = point_jacobian(robot, q, i, s)
        Jw = angular_velocity_jacobian(robot, q, i, s)
        R = world_point(robot, q, i, s).rotation
        fd = np.empty((3, nq))
        fdw = np.empty((3, nq))
        for k in range(nq):
            e = np.zeros(nq)
            e[k] = h
            fp, fm = world_point(robot, q + e, i, s), world_point(robot, q - e, i, s)
            fd[:, k] = (fp.position - fm.position) / (2 * h)
            fdw[:, k] = _skew_vee(R.T @ (fp.rotation - fm.rotation) / (2 * h))
        assert np.allclose(J, fd, rtol=1e-5, atol=1e-5 * np.abs(fd).max())
        assert np.allclose(Jw, fdw, rtol=1e-5, atol=1e-5 * np.abs(fdw).max())


def test_zero_rate_zero_angular_velocity():
    robot = prototype_robot(2)
    assert np.array_equal(angular_velocity_jacobian(robot, [0.01, 0, 0, 0.01], 1, 0.1) @ np.zeros(4), np.zeros(3))
