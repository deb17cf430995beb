"""Euler-Lagrange dynamics on the Clarke manifold.

The mass matrix is assembled directly in Clarke coordinates from point
masses and inertias sampled along each segment (Gauss-Legendre nodes for
the continuous backbone and tendons, exact disk positions for the spacer
disks)::

    M_M(q) = sum_p m_p Jp^T Jp + Jw^T I_p Jw        (+ tendon-displacement term)
    g_M(q) = gravity * sum_p m_p dz_p/dq

Stiffness and damping are constant on the manifold. The equation of
motion is ``M q'' + C q' + g + K q + D q' = tau``.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import NamedTuple

import numpy as np

from . import _cc
from .clarke import clarke_matrices
from .errors import DomainError, ModelError
from .kinematics import RobotSpec

QUADRATURE_POINTS = 32
CONDITION_LIMIT = 1e12
#: Relative step of the fourth-order differences used for dM/dq.
FD_STEP = np.finfo(float).eps ** 0.2


class DynState(NamedTuple):
    qm: np.ndarray
    qm_dot: np.ndarray
    t: float = 0.0


@dataclass(frozen=True)
class EnergyBreakdown:
    T_b_trans: float
    T_b_rot: float
    T_t1_trans: float
    T_t1_rot: float
    T_t2: float
    T_d_trans: float
    T_d_rot: float
    U_gb: float
    U_gt: float
    U_gd: float
    U_eb: float
    T: float
    U: float

    @property
    def T_trans(self) -> float:
        return self.T_b_trans + self.T_t1_trans + self.T_d_trans

    @property
    def T_rot(self) -> float:
        return self.T_b_rot + self.T_t1_rot + self.T_d_rot

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class ManifoldModelTerms:
    M: np.ndarray
    C: np.ndarray | None
    g: np.ndarray
    K: np.ndarray
    D: np.ndarray


class ManifoldModel:
    """Precomputed sample points and weights for one :class:`RobotSpec`.

    Building this once per robot keeps the right-hand side of the
    simulation cheap; the module-level functions build it on the fly.
    """

    def __init__(self, robot: RobotSpec):
        self.robot = robot
        m, n = robot.m, robot.tendon_count
        self.m, self.n, self.nq = m, n, 2 * m
        x, wx = np.polynomial.legendre.leggauss(QUADRATURE_POINTS)

        seg, s, quad_w, is_disk = [], [], [], []
        for i, sg in enumerate(robot.segments):
            ell = sg.length
            seg += [i] * (QUADRATURE_POINTS + sg.disk_count)
            s += list(0.5 * ell * (x + 1.0)) + [o * sg.disk_spacing for o in range(1, sg.disk_count + 1)]
            quad_w += list(0.5 * ell * wx) + [0.0] * sg.disk_count
            is_disk += [False] * QUADRATURE_POINTS + [True] * sg.disk_count
        self.seg = np.array(seg, dtype=np.int64)
        self.s = np.array(s)
        quad_w = np.array(quad_w)
        is_disk = np.array(is_disk)
        self.is_disk = is_disk

        P = len(s)
        self.w_backbone = np.zeros(P)
        self.w_tendon = np.zeros(P)
        self.w_disk = np.zeros(P)
        self.i_backbone = np.zeros((P, 3))
        self.i_tendon = np.zeros((P, 3))
        self.i_disk = np.zeros((P, 3))
        for p in range(P):
            sg = robot.segments[self.seg[p]]
            if is_disk[p]:
                self.w_disk[p] = sg.disk_mass
                j = sg.disk_mass * sg.disk_radius**2
                self.i_disk[p] = (j / 4.0, j / 4.0, j / 2.0)
            else:
                # distal tendons also run through every proximal segment
                routed = n * (m - self.seg[p])
                Ib, It = sg.backbone_second_moment, sg.tendon_second_moment
                self.w_backbone[p] = sg.backbone_density * sg.backbone_area * quad_w[p]
                self.i_backbone[p] = sg.backbone_density * quad_w[p] * np.array([Ib, Ib, 2 * Ib])
                self.w_tendon[p] = routed * sg.tendon_density * sg.tendon_area * quad_w[p]
                self.i_tendon[p] = routed * sg.tendon_density * quad_w[p] * np.array([It, It, 2 * It])

        flags = robot.flags
        self.mass = self.w_backbone + self.w_disk
        self.inertia = np.zeros((P, 3))
        if flags.include_tendon_energy:
            self.mass = self.mass + self.w_tendon
        if flags.include_rotational_energy:
            self.inertia = self.i_backbone + self.i_disk
            if flags.include_tendon_energy:
                self.inertia = self.inertia + self.i_tendon

        self.lengths = robot.lengths
        self.radii = robot.radii
        self.gravity = robot.gravity
        self.k_theta = np.array([
            (sg.backbone_modulus * sg.backbone_second_moment
             + n * sg.tendon_modulus * sg.tendon_second_moment) / sg.length
            for sg in robot.segments
        ])
        self.d_theta = np.array([sg.damping for sg in robot.segments])
        self.k_diag = np.repeat(self.k_theta / self.radii**2, 2)
        self.d_diag = np.repeat(self.d_theta / self.radii**2, 2)

        # tendon k of segment i is displaced by sum_{j<=i} M_P^-1 q_j
        inv = clarke_matrices(n).inverse
        self.tendon_map = np.zeros((m * n, 2 * m))
        for i in range(m):
            for j in range(i + 1):
                self.tendon_map[i * n:(i + 1) * n, 2 * j:2 * j + 2] = inv
        self.tendon_rest = np.repeat(self.lengths, n)
        self.tendon_lin = np.repeat([sg.tendon_density * sg.tendon_area for sg in robot.segments], n)
        self._t2_enabled = flags.include_tendon_energy and np.any(self.tendon_lin > 0)

    # -- configuration-dependent terms -------------------------------------------------

    def _check(self, q):
        q = np.ascontiguousarray(q, dtype=float).reshape(-1)
        if q.shape[0] != self.nq:
            raise DomainError(f"expected {self.nq} Clarke coordinates, got {q.shape[0]}")
        return q

    def _t2_mass(self, q):
        A = self.tendon_map
        scale = self.tendon_lin * (self.tendon_rest + A @ q)
        B = (A.T * scale) @ A
        return 0.5 * (B + B.T)

    def mass_matrix(self, q) -> np.ndarray:
        q = self._check(q)
        M, _ = _cc.mass_and_gravity(q, self.lengths, self.radii, self.seg, self.s, self.mass, self.inertia)
        if self._t2_enabled:
            M = M + self._t2_mass(q)
        return M

    def mass_and_gravity(self, q):
        q = self._check(q)
        M, G = _cc.mass_and_gravity(q, self.lengths, self.radii, self.seg, self.s, self.mass, self.inertia)
        if self._t2_enabled:
            M = M + self._t2_mass(q)
        return M, self.gravity * G

    def gravity_vector(self, q) -> np.ndarray:
        return self.mass_and_gravity(q)[1]

    @property
    def K(self) -> np.ndarray:
        return np.diag(self.k_diag)

    @property
    def D(self) -> np.ndarray:
        return np.diag(self.d_diag)

    def fd_steps(self, q) -> np.ndarray:
        # M varies on the scale of the routing radius (one radian of bend)
        return np.repeat(FD_STEP * self.radii, 2)

    def mass_derivatives(self, q) -> np.ndarray:
        """Fourth-order central differences dM/dq_k, shape (2m, 2m, 2m) indexed [k, i, j]."""
        q = self._check(q)
        h = self.fd_steps(q)
        dM = np.empty((self.nq, self.nq, self.nq))
        for k in range(self.nq):
            e = np.zeros(self.nq)
            e[k] = h[k]
            dM[k] = (8.0 * (self.mass_matrix(q + e) - self.mass_matrix(q - e))
                     - (self.mass_matrix(q + 2 * e) - self.mass_matrix(q - 2 * e))) / (12.0 * h[k])
        return dM

    def coriolis_matrix(self, q, qd) -> np.ndarray:
        """Christoffel-symbol Coriolis matrix, so that ``Mdot - 2C`` is skew."""
        qd = np.asarray(qd, dtype=float).reshape(-1)
        dM = self.mass_derivatives(q)
        # C_ij = sum_k 1/2 (dM_k[i,j] + dM_j[i,k] - dM_i[j,k]) qd_k
        t1 = np.einsum("kij,k->ij", dM, qd)
        t2 = np.einsum("jik,k->ij", dM, qd)
        t3 = np.einsum("ijk,k->ij", dM, qd)
        return 0.5 * (t1 + t2 - t3)

    def terms(self, q, qd=None, coriolis: bool | None = None) -> ManifoldModelTerms:
        q = self._check(q)
        M, g = self.mass_and_gravity(q)
        if coriolis is None:
            coriolis = self.robot.flags.include_coriolis
        C = None
        if coriolis:
            qd = np.zeros(self.nq) if qd is None else qd
            C = self.coriolis_matrix(q, qd)
        return ManifoldModelTerms(M=M, C=C, g=g, K=self.K, D=self.D)

    def accel(self, q, qd, tau) -> np.ndarray:
        q = self._check(q)
        qd = np.asarray(qd, dtype=float)
        M, g = self.mass_and_gravity(q)
        rhs = np.asarray(tau, dtype=float) - g - self.k_diag * q - self.d_diag * qd
        if self.robot.flags.include_coriolis:
            rhs = rhs - self.coriolis_matrix(q, qd) @ qd
        x, lo, hi = _cc.cholesky_solve(M, rhs)
        if not lo > 0.0 or (hi / lo) ** 2 > CONDITION_LIMIT:
            raise ModelError(f"mass matrix not usable (pivot range {lo:.3g}..{hi:.3g}) at q={q}")
        return x

    # -- energies ------------------------------------------------------------------------

    def potential(self, q) -> float:
        """Total potential energy of the terms that enter the equation of motion."""
        e = self.energies(q, np.zeros(self.nq))
        return e.U

    def energies(self, q, qd) -> EnergyBreakdown:
        q = self._check(q)
        qd = np.asarray(qd, dtype=float).reshape(-1)
        pos, _, jp, jw, _, _ = _cc.robot_points(q, self.lengths, self.radii, self.seg, self.s)
        v2 = np.sum((jp @ qd) ** 2, axis=1)
        om = jw @ qd
        rot = lambda inertia: 0.5 * float(np.sum(inertia * om**2))
        z = pos[:, 2]
        g = self.gravity
        theta2 = (q[0::2] ** 2 + q[1::2] ** 2) / self.radii**2
        qdot_t = self.tendon_map @ qd
        qt = self.tendon_map @ q
        parts = dict(
            T_b_trans=0.5 * float(self.w_backbone @ v2),
            T_b_rot=rot(self.i_backbone),
            T_t1_trans=0.5 * float(self.w_tendon @ v2),
            T_t1_rot=rot(self.i_tendon),
            T_t2=0.5 * float(np.sum(self.tendon_lin * (self.tendon_rest + qt) * qdot_t**2)),
            T_d_trans=0.5 * float(self.w_disk @ v2),
            T_d_rot=rot(self.i_disk),
            U_gb=g * float(self.w_backbone @ z),
            U_gt=g * float(self.w_tendon @ z),
            U_gd=g * float(self.w_disk @ z),
            U_eb=0.5 * float(self.k_theta @ theta2),
        )
        flags = self.robot.flags
        T = parts["T_b_trans"] + parts["T_d_trans"]
        U = parts["U_gb"] + parts["U_gd"] + parts["U_eb"]
        if flags.include_rotational_energy:
            T += parts["T_b_rot"] + parts["T_d_rot"]
        if flags.include_tendon_energy:
            T += parts["T_t1_trans"] + parts["T_t2"]
            U += parts["U_gt"]
            if flags.include_rotational_energy:
                T += parts["T_t1_rot"]
        return EnergyBreakdown(**parts, T=T, U=U)


def _split(state):
    if isinstance(state, DynState):
        return state.qm, state.qm_dot
    qm, qd = state[0], state[1]
    return qm, qd


def energies(robot: RobotSpec, state) -> EnergyBreakdown:
    """All kinetic and potential energy components at ``state = (qm, qm_dot)``."""
    q, qd = _split(state)
    return ManifoldModel(robot).energies(q, qd)


def manifold_terms(robot: RobotSpec, state) -> ManifoldModelTerms:
    """``M_M, C_M, g_M, K_M, D_M`` at a state; ``C_M`` is None unless Coriolis is enabled."""
    q, qd = _split(state)
    return ManifoldModel(robot).terms(q, qd)


def forward_accel(robot: RobotSpec, state, tau_M) -> np.ndarray:
    q, qd = _split(state)
    return ManifoldModel(robot).accel(q, qd, tau_M)


def coriolis_force(model: ManifoldModel, q, qd) -> np.ndarray:
    """``C_M(q, qd) qd`` irrespective of the model's Coriolis flag."""
    return model.coriolis_matrix(q, qd) @ np.asarray(qd, dtype=float)


from .arcspace import ArcTerms, arc_space_terms, manifold_terms_via_arc  # noqa: E402,F401
