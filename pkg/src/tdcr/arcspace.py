"""Arc-space ``(phi, theta)`` dynamics, kept as an independent check of the manifold model.

Kinematics here use the textbook arc formulas and rotation products
``R_z(phi) R_y(kappa s) R_z(-phi)``; derivatives with respect to the arc
parameters come from complex-step differentiation rather than from the
analytic Clarke-coordinate expressions in :mod:`tdcr._cc`. The model is
singular for straight segments and refuses them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clarke import STRAIGHT_THRESHOLD, arc_jacobian, arc_to_manifold, manifold_to_arc
from .errors import SingularConfigurationError

_CSTEP = 1e-30
# fourth-order central-difference step balancing truncation against roundoff
_FDSTEP = np.finfo(float).eps ** 0.2


@dataclass(frozen=True)
class ArcTerms:
    M: np.ndarray
    C: np.ndarray
    g: np.ndarray
    K: np.ndarray
    D: np.ndarray


def _rz(a):
    c, s = np.cos(a), np.sin(a)
    o, z = np.ones_like(c), np.zeros_like(c)
    return np.array([[c, -s, z], [s, c, z], [z, z, o]], dtype=complex)


def _ry(a):
    c, s = np.cos(a), np.sin(a)
    o, z = np.ones_like(c), np.zeros_like(c)
    return np.array([[c, z, s], [z, o, z], [-s, z, c]], dtype=complex)


def _arc_points(model, a):
    """Positions (P,3) and rotations (P,3,3) for (possibly complex) arc parameters."""
    a = np.asarray(a, dtype=complex)
    pos = np.zeros((model.s.size, 3), dtype=complex)
    rot = np.zeros((model.s.size, 3, 3), dtype=complex)
    bp = np.zeros(3, dtype=complex)
    bR = np.eye(3, dtype=complex)
    for i in range(model.m):
        phi, theta = a[2 * i], a[2 * i + 1]
        ell = model.lengths[i]
        kappa = theta / ell
        idx = np.flatnonzero(model.seg == i)
        s = np.append(model.s[idx], ell)
        ks = kappa * s
        r = (1.0 - np.cos(ks)) / kappa
        lp = np.stack((np.cos(phi) * r, np.sin(phi) * r, np.sin(ks) / kappa), axis=1)
        Rphi = _rz(phi)
        Ry = np.moveaxis(_ry(ks), -1, 0)
        lR = Rphi @ Ry @ Rphi.T
        wp = bp + lp @ bR.T
        wR = bR @ lR
        pos[idx], rot[idx] = wp[:-1], wR[:-1]
        bp, bR = wp[-1], wR[-1]
    return pos, rot


def _vee(W):
    return np.stack((W[..., 2, 1], W[..., 0, 2], W[..., 1, 0]), axis=-1)


def _arc_jacobians(model, a):
    """Complex-step position and body angular-velocity Jacobians w.r.t. arc parameters."""
    a = np.asarray(a, dtype=float)
    nq = a.size
    pos0, rot0 = _arc_points(model, a)
    P = pos0.shape[0]
    jp = np.zeros((P, 3, nq))
    jw = np.zeros((P, 3, nq))
    for k in range(nq):
        ak = a.astype(complex)
        ak[k] += 1j * _CSTEP
        pos, rot = _arc_points(model, ak)
        jp[:, :, k] = pos.imag / _CSTEP
        dR = rot.imag / _CSTEP
        jw[:, :, k] = _vee(np.swapaxes(rot0.real, 1, 2) @ dR)
    return pos0.real, jp, jw


def _tendon_displacements(model, a):
    a = np.asarray(a)
    qm = np.stack((a[1::2] * model.radii * np.cos(a[0::2]), a[1::2] * model.radii * np.sin(a[0::2])),
                  axis=1).reshape(-1)
    return model.tendon_map @ qm


def _check_arc(model, a):
    rho = np.asarray(a)[1::2] * model.radii
    if np.any(rho <= STRAIGHT_THRESHOLD):
        raise SingularConfigurationError(
            f"arc-space model needs every theta_i * r_d > {STRAIGHT_THRESHOLD:g} m, got {rho}"
        )


def arc_mass_gravity(model, a):
    """Arc-space mass matrix and gravity vector."""
    a = np.asarray(a, dtype=float)
    _check_arc(model, a)
    _, jp, jw = _arc_jacobians(model, a)
    M = np.einsum("p,pri,prj->ij", model.mass, jp, jp) + np.einsum("pr,pri,prj->ij", model.inertia, jw, jw)
    g = model.gravity * np.einsum("p,pi->i", model.mass, jp[:, 2, :])
    if model._t2_enabled:
        B = np.zeros((model.tendon_rest.size, a.size))
        for k in range(a.size):
            ak = a.astype(complex)
            ak[k] += 1j * _CSTEP
            B[:, k] = _tendon_displacements(model, ak).imag / _CSTEP
        qt = _tendon_displacements(model, a)
        scale = model.tendon_lin * (model.tendon_rest + qt)
        M = M + (B.T * scale) @ B
    return M, g


def arc_space_terms(robot, a, a_dot, model=None) -> ArcTerms:
    """Arc-space ``M_a, C_a, g_a, K_a, D_a`` with ``a = (phi_1, theta_1, ..., phi_m, theta_m)``.

    ``C_a`` always includes the Christoffel terms (finite differences of
    ``M_a``), regardless of the robot's Coriolis flag.
    """
    from .dynamics import ManifoldModel

    model = model or ManifoldModel(robot)
    a = np.asarray(a, dtype=float).reshape(-1)
    ad = np.asarray(a_dot, dtype=float).reshape(-1)
    M, g = arc_mass_gravity(model, a)
    nq = a.size
    dM = np.empty((nq, nq, nq))
    for k in range(nq):
        h = _FDSTEP * max(1.0, abs(a[k]))
        e = np.zeros(nq)
        e[k] = h
        dM[k] = (8.0 * (arc_mass_gravity(model, a + e)[0] - arc_mass_gravity(model, a - e)[0])
                 - (arc_mass_gravity(model, a + 2 * e)[0] - arc_mass_gravity(model, a - 2 * e)[0])) / (12.0 * h)
    C = 0.5 * (np.einsum("kij,k->ij", dM, ad) + np.einsum("jik,k->ij", dM, ad)
               - np.einsum("ijk,k->ij", dM, ad))
    K = np.diag(np.ravel(np.column_stack((np.zeros(model.m), model.k_theta))))
    theta = a[1::2]
    D = np.diag(np.ravel(np.column_stack((model.d_theta * theta**2, model.d_theta))))
    return ArcTerms(M=M, C=C, g=g, K=K, D=D)


def manifold_terms_via_arc(robot, qm, qm_dot, model=None):
    """Manifold terms obtained by pulling the arc-space model back through ``a = f(q_M)``.

    Returns ``(M, C, g, K_times_q, D)``; the stiffness is returned as the
    force ``J^T K_a a`` because ``K_M`` itself is only defined through it.
    """
    from .dynamics import ManifoldModel

    model = model or ManifoldModel(robot)
    qm = np.asarray(qm, dtype=float).reshape(-1)
    qd = np.asarray(qm_dot, dtype=float).reshape(-1)
    arc = manifold_to_arc(qm.reshape(-1, 2), model.radii)
    a = np.column_stack((arc.phi, arc.theta)).reshape(-1)
    J, Jd = arc_jacobian(qm, qd, model.radii)
    terms = arc_space_terms(robot, a, J @ qd, model=model)
    M = J.T @ terms.M @ J
    C = J.T @ terms.M @ Jd + J.T @ terms.C @ J
    return M, C, J.T @ terms.g, J.T @ (terms.K @ a), J.T @ terms.D @ J


__all__ = ["ArcTerms", "arc_space_terms", "manifold_terms_via_arc", "arc_mass_gravity", "arc_to_manifold"]
