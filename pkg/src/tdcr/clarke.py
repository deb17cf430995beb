"""Generalized Clarke transform for n symmetrically routed tendons.

Maps between joint space (n tendon displacements per segment), the
two-dimensional Clarke manifold embedded in it, and arc space
(bending direction, bending angle). Also maps generalized forces between
the manifold and tendon space.

Array conventions: a single segment is a 1-D array (``(n,)`` joints,
``(2,)`` manifold); several segments stack along the first axis
(``(m, n)`` and ``(m, 2)``). Functions preserve the leading shape.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import DomainError, SingularConfigurationError

#: Below this Clarke-coordinate magnitude (m) the arc parametrization is treated as singular.
STRAIGHT_THRESHOLD = 5e-6


@dataclass(frozen=True)
class ClarkeMatrices:
    """Forward (2 x n) and inverse (n x 2) Clarke matrices for ``n`` tendons."""

    n: int
    forward: np.ndarray
    inverse: np.ndarray
    tendon_angles: np.ndarray


class ArcState(NamedTuple):
    phi: np.ndarray
    theta: np.ndarray


@lru_cache(maxsize=None)
def clarke_matrices(n: int) -> ClarkeMatrices:
    """Build the generalized Clarke matrices.

    Tendon ``j`` (zero-based) sits at angle ``2*pi*j/n``; tendon 0 lies on
    the +x axis of the segment base frame.
    """
    if int(n) != n or n < 3:
        raise DomainError(f"need an integer tendon count n >= 3, got {n!r}")
    n = int(n)
    psi = 2.0 * np.pi * np.arange(n) / n
    inverse = np.column_stack((np.cos(psi), np.sin(psi)))
    forward = (2.0 / n) * inverse.T
    for arr in (psi, inverse, forward):
        arr.setflags(write=False)
    return ClarkeMatrices(n=n, forward=forward, inverse=inverse, tendon_angles=psi)


def _check_last(arr, size, what):
    if arr.shape[-1] != size:
        raise DomainError(f"{what}: expected trailing dimension {size}, got shape {arr.shape}")


def joints_to_manifold(q, n: int | None = None) -> np.ndarray:
    """Project tendon displacements onto Clarke coordinates ``(q_Re, q_Im)``."""
    q = np.asarray(q, dtype=float)
    if n is None:
        n = q.shape[-1]
    _check_last(q, n, "joint displacements")
    return q @ clarke_matrices(n).forward.T


def manifold_to_joints(qm, n: int) -> np.ndarray:
    """Tendon displacements for given Clarke coordinates; they always sum to zero."""
    qm = np.asarray(qm, dtype=float)
    _check_last(qm, 2, "manifold coordinates")
    return qm @ clarke_matrices(n).inverse.T


def manifold_to_arc(qm, r_d: float) -> ArcState:
    """Bending direction and angle. ``phi`` is defined as 0 for a straight segment."""
    r_d = np.asarray(r_d, dtype=float)
    if np.any(r_d <= 0):
        raise DomainError("disk radius must be positive")
    qm = np.asarray(qm, dtype=float)
    _check_last(qm, 2, "manifold coordinates")
    re, im = qm[..., 0], qm[..., 1]
    rho = np.hypot(re, im)
    phi = np.where(rho > 0.0, np.arctan2(im, re), 0.0)
    return ArcState(phi=phi, theta=rho / r_d)


def arc_to_manifold(phi, theta, r_d: float) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0):
        raise DomainError("bending angle must be non-negative")
    rho = theta * r_d
    return np.stack((rho * np.cos(phi), rho * np.sin(phi)), axis=-1)


def arc_jacobian(qm, qm_dot, r_d: float, threshold: float = STRAIGHT_THRESHOLD):
    """Jacobian of the manifold -> arc map and its time derivative.

    Parameters
    ----------
    qm, qm_dot : array_like, shape (2m,) or (m, 2)
        Clarke coordinates and their rates, segment by segment.
    r_d : float or array_like of shape (m,)
        Tendon routing radius per segment.

    Returns
    -------
    J, J_dot : ndarray, shape (2m, 2m)
        Block diagonal; per segment rows are ``(dphi/dq, dtheta/dq)``.

    Raises
    ------
    SingularConfigurationError
        If any segment has ``rho <= threshold``.
    """
    qm = np.asarray(qm, dtype=float).reshape(-1, 2)
    qd = np.asarray(qm_dot, dtype=float).reshape(-1, 2)
    m = qm.shape[0]
    r_d = np.broadcast_to(np.asarray(r_d, dtype=float), (m,))
    J = np.zeros((2 * m, 2 * m))
    Jd = np.zeros((2 * m, 2 * m))
    for i in range(m):
        a, b = qm[i]
        ad, bd = qd[i]
        rho2 = a * a + b * b
        rho = np.sqrt(rho2)
        if rho <= threshold:
            raise SingularConfigurationError(
                f"segment {i}: |q_M| = {rho:.3g} m is below the straight threshold {threshold:g} m"
            )
        rdot = a * ad + b * bd  # = rho * d(rho)/dt
        blk = np.array([[-b / rho2, a / rho2], [a / (rho * r_d[i]), b / (rho * r_d[i])]])
        # d/dt(1/rho^2) = -2 rdot / rho^4, d/dt(1/rho) = -rdot / rho^3
        dblk = np.array(
            [
                [-bd / rho2 + 2.0 * b * rdot / rho2**2, ad / rho2 - 2.0 * a * rdot / rho2**2],
                [
                    (ad / rho - a * rdot / rho**3) / r_d[i],
                    (bd / rho - b * rdot / rho**3) / r_d[i],
                ],
            ]
        )
        J[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = blk
        Jd[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = dblk
    return J, Jd


def manifold_torque_to_forces(tau, n: int) -> np.ndarray:
    """Tendon forces ``(2/n) M_P^-1 tau`` for manifold forces ``tau`` (shape (2,) or (m, 2))."""
    tau = np.asarray(tau, dtype=float)
    _check_last(tau, 2, "manifold torque")
    return (2.0 / n) * (tau @ clarke_matrices(n).inverse.T)


def forces_to_manifold_torque(F) -> np.ndarray:
    """Manifold forces ``(n/2) M_P F``; blind to any uniform offset of ``F``."""
    F = np.asarray(F, dtype=float)
    n = F.shape[-1]
    return (n / 2.0) * (F @ clarke_matrices(n).forward.T)
