"""Compiled constant-curvature kernels written directly in Clarke coordinates.

For a segment of length ``ell`` and routing radius ``r_d`` with Clarke
coordinates ``(a, b)``, the point at arc length ``s`` has

    c = s / (r_d * ell),    w = c * (-b, a, 0),    v = |w|^2 = (c * rho)^2
    p = s * (c * F1(v) * a,  c * F1(v) * b,  F2(v))
    R = exp(skew(w)) = I + F2 K + F1 K^2,   K = skew(w)

with F1 = (1 - cos u)/u^2, F2 = sin(u)/u, u = sqrt(v). All coefficient
functions are even in u, hence smooth in (a, b) through the straight
configuration; power series are used for small v.
"""
import numpy as np
from numba import njit

# below this v = u^2 the power series are used (|u| < 0.3)
_SERIES_V = 0.09
_NTERMS = 9


def _series_tables():
    from math import factorial

    f1 = np.array([(-1.0) ** k / factorial(2 * k + 2) for k in range(_NTERMS)])
    f2 = np.array([(-1.0) ** k / factorial(2 * k + 1) for k in range(_NTERMS)])
    f3 = np.array([(-1.0) ** k / factorial(2 * k + 3) for k in range(_NTERMS)])
    return f1, f2, f3


_F1C, _F2C, _F3C = _series_tables()


@njit(cache=True)
def cc_coeffs(v):
    """Return F1, F2, F3, dF1/dv, dF2/dv at v = u^2 >= 0.

    F3 = (u - sin u)/u^3 is the extra coefficient of the SO(3) right Jacobian.
    """
    if v < _SERIES_V:
        n = _F1C.shape[0]
        f1 = _F1C[n - 1]
        f2 = _F2C[n - 1]
        f3 = _F3C[n - 1]
        d1 = (n - 1) * _F1C[n - 1]
        d2 = (n - 1) * _F2C[n - 1]
        for k in range(n - 2, -1, -1):
            f1 = f1 * v + _F1C[k]
            f2 = f2 * v + _F2C[k]
            f3 = f3 * v + _F3C[k]
            if k >= 1:
                d1 = d1 * v + k * _F1C[k]
                d2 = d2 * v + k * _F2C[k]
        return f1, f2, f3, d1, d2
    u = np.sqrt(v)
    su = np.sin(u)
    cu = np.cos(u)
    h = np.sin(0.5 * u)
    f1 = 2.0 * h * h / v
    f2 = su / u
    f3 = (1.0 - f2) / v
    d1 = (f2 - 2.0 * f1) / (2.0 * v)
    d2 = (cu - f2) / (2.0 * v)
    return f1, f2, f3, d1, d2


@njit(cache=True)
def local_point(a, b, s, ell, rd, lp, lR, ldp, lw):
    """Point at arc length s in the segment base frame.

    Writes position ``lp`` (3), rotation ``lR`` (3x3), position Jacobian
    ``ldp`` (3x2) and body angular-velocity Jacobian ``lw`` (3x2) with
    respect to (a, b).
    """
    c = s / (rd * ell)
    w0 = -c * b
    w1 = c * a
    v = w0 * w0 + w1 * w1
    f1, f2, f3, d1, d2 = cc_coeffs(v)

    lp[0] = s * c * f1 * a
    lp[1] = s * c * f1 * b
    lp[2] = s * f2

    c2 = 2.0 * c * c
    ldp[0, 0] = s * c * (f1 + d1 * c2 * a * a)
    ldp[0, 1] = s * c * d1 * c2 * a * b
    ldp[1, 0] = ldp[0, 1]
    ldp[1, 1] = s * c * (f1 + d1 * c2 * b * b)
    ldp[2, 0] = s * d2 * c2 * a
    ldp[2, 1] = s * d2 * c2 * b

    # K = skew(w) with w2 = 0; K^2 = w w^T - v I
    # rows of K: (0, 0, w1), (0, 0, -w0), (-w1, w0, 0)
    k00 = w0 * w0 - v
    k01 = w0 * w1
    k11 = w1 * w1 - v
    lR[0, 0] = 1.0 + f1 * k00
    lR[0, 1] = f1 * k01
    lR[0, 2] = f2 * w1
    lR[1, 0] = f1 * k01
    lR[1, 1] = 1.0 + f1 * k11
    lR[1, 2] = -f2 * w0
    lR[2, 0] = -f2 * w1
    lR[2, 1] = f2 * w0
    lR[2, 2] = 1.0 - f1 * v

    # body angular velocity: J_r(w) dw/dq, J_r = I - F1 K + F3 K^2, dw/dq = c [[0,-1],[1,0],[0,0]]
    # lw[:, 0] = c J_r[:, 1], lw[:, 1] = -c J_r[:, 0]
    lw[0, 0] = c * f3 * k01
    lw[1, 0] = c * (1.0 + f3 * k11)
    lw[2, 0] = -c * f1 * w0
    lw[0, 1] = -c * (1.0 + f3 * k00)
    lw[1, 1] = -c * f3 * k01
    lw[2, 1] = -c * f1 * w1


@njit(cache=True)
def robot_points(qm, lengths, radii, seg, s):
    """World positions, rotations and Jacobians of sample points on all segments.

    ``seg`` must be sorted ascending; ``s`` holds the arc length of each point
    within its own segment. Returns ``pos (P,3)``, ``rot (P,3,3)``,
    ``jp (P,3,2m)`` (world linear velocity), ``jw (P,3,2m)`` (body angular
    velocity), ``base_pos (m+1,3)``, ``base_rot (m+1,3,3)``.
    """
    m = lengths.shape[0]
    P = s.shape[0]
    nq = 2 * m
    pos = np.zeros((P, 3))
    rot = np.zeros((P, 3, 3))
    jp = np.zeros((P, 3, nq))
    jw = np.zeros((P, 3, nq))
    base_pos = np.zeros((m + 1, 3))
    base_rot = np.zeros((m + 1, 3, 3))

    bp = np.zeros(3)
    bR = np.eye(3)
    bjp = np.zeros((3, nq))
    bjw = np.zeros((3, nq))

    lp = np.zeros(3)
    lR = np.zeros((3, 3))
    ldp = np.zeros((3, 2))
    lw = np.zeros((3, 2))
    tp = np.zeros(3)
    tR = np.zeros((3, 3))
    tjp = np.zeros((3, nq))
    tjw = np.zeros((3, nq))

    p = 0
    for i in range(m):
        base_pos[i] = bp
        base_rot[i] = bR
        a = qm[2 * i]
        b = qm[2 * i + 1]
        # sample points then (k == -1) the segment tip, which becomes the next base
        while True:
            at_tip = not (p < P and seg[p] == i)
            si = lengths[i] if at_tip else s[p]
            local_point(a, b, si, lengths[i], radii[i], lp, lR, ldp, lw)
            _compose(bp, bR, bjp, bjw, lp, lR, ldp, lw, i, tp, tR, tjp, tjw)
            if at_tip:
                break
            pos[p] = tp
            rot[p] = tR
            jp[p] = tjp
            jw[p] = tjw
            p += 1
        bp[:] = tp
        bR[:, :] = tR
        bjp[:, :] = tjp
        bjw[:, :] = tjw
    base_pos[m] = bp
    base_rot[m] = bR
    return pos, rot, jp, jw, base_pos, base_rot


@njit(cache=True)
def _compose(bp, bR, bjp, bjw, lp, lR, ldp, lw, i, tp, tR, tjp, tjw):
    nq = bjp.shape[1]
    for r in range(3):
        acc = bp[r]
        for q in range(3):
            acc += bR[r, q] * lp[q]
        tp[r] = acc
        for q in range(3):
            acc = 0.0
            for k in range(3):
                acc += bR[r, k] * lR[k, q]
            tR[r, q] = acc
    # world velocity = base velocity + bR (omega_base x lp) + bR lp_dot
    # omega_base x lp = -skew(lp) omega_base
    for col in range(nq):
        w0 = bjw[0, col]
        w1 = bjw[1, col]
        w2 = bjw[2, col]
        t0 = w1 * lp[2] - w2 * lp[1]
        t1 = w2 * lp[0] - w0 * lp[2]
        t2 = w0 * lp[1] - w1 * lp[0]
        for r in range(3):
            tjp[r, col] = bjp[r, col] + bR[r, 0] * t0 + bR[r, 1] * t1 + bR[r, 2] * t2
            # body omega at point = lR^T omega_base_body
            tjw[r, col] = lR[0, r] * bjw[0, col] + lR[1, r] * bjw[1, col] + lR[2, r] * bjw[2, col]
    for j in range(2):
        col = 2 * i + j
        for r in range(3):
            tjp[r, col] += bR[r, 0] * ldp[0, j] + bR[r, 1] * ldp[1, j] + bR[r, 2] * ldp[2, j]
            tjw[r, col] += lw[r, j]


@njit(cache=True)
def mass_and_gravity(qm, lengths, radii, seg, s, mass, inertia):
    """Point-mass/inertia reduction: ``M = sum m J^T J + Jw^T I Jw``, ``G = sum m dz/dq``.

    ``inertia`` holds body-frame principal moments per point (P,3). The
    gravity vector is returned per unit gravitational acceleration.
    """
    pos, rot, jp, jw, bpos, brot = robot_points(qm, lengths, radii, seg, s)
    nq = qm.shape[0]
    P = s.shape[0]
    M = np.zeros((nq, nq))
    G = np.zeros(nq)
    for p in range(P):
        mp = mass[p]
        for i in range(nq):
            G[i] += mp * jp[p, 2, i]
            for j in range(i, nq):
                acc = 0.0
                for r in range(3):
                    acc += mp * jp[p, r, i] * jp[p, r, j] + inertia[p, r] * jw[p, r, i] * jw[p, r, j]
                M[i, j] += acc
    for i in range(nq):
        for j in range(i + 1, nq):
            M[j, i] = M[i, j]
    return M, G


@njit(cache=True)
def cholesky_solve(M, rhs):
    """Solve ``M x = rhs`` for SPD ``M``; returns (x, min pivot, max pivot), x = nan if not PD."""
    n = M.shape[0]
    L = np.zeros((n, n))
    lo = np.inf
    hi = 0.0
    x = np.empty(n)
    for j in range(n):
        d = M[j, j]
        for k in range(j):
            d -= L[j, k] * L[j, k]
        if not d > 0.0:
            x[:] = np.nan
            return x, 0.0, hi
        d = np.sqrt(d)
        L[j, j] = d
        lo = min(lo, d)
        hi = max(hi, d)
        for i in range(j + 1, n):
            acc = M[i, j]
            for k in range(j):
                acc -= L[i, k] * L[j, k]
            L[i, j] = acc / d
    y = np.empty(n)
    for i in range(n):
        acc = rhs[i]
        for k in range(i):
            acc -= L[i, k] * y[k]
        y[i] = acc / L[i, i]
    for i in range(n - 1, -1, -1):
        acc = y[i]
        for k in range(i + 1, n):
            acc -= L[k, i] * x[k]
        x[i] = acc / L[i, i]
    return x, lo, hi
