"""Discrete PID/PD control on the Clarke manifold and tendon-force saturation.

The controller outputs generalized manifold forces (two per segment). They
are mapped to tendon tensions, made non-negative by one of the
saturation strategies, and mapped back to the manifold forces that
actually act on the robot.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clarke import clarke_matrices, forces_to_manifold_torque, manifold_torque_to_forces
from .errors import DomainError

MODES = ("PID", "PD")
STRATEGIES = ("none", "clip", "shift", "redistribute")


@dataclass(frozen=True)
class ControllerConfig:
    kp: float = 1500.0
    ki: float = 1500.0
    kd: float = 1.0
    antiwindup_limit: float = 0.2
    control_rate: float = 1000.0
    mode: str = "PID"

    def __post_init__(self):
        if self.mode not in MODES:
            raise DomainError(f"controller mode must be one of {MODES}, got {self.mode!r}")
        for name in ("kp", "ki", "kd", "antiwindup_limit"):
            if not getattr(self, name) >= 0:
                raise DomainError(f"{name} must be >= 0, got {getattr(self, name)!r}")
        if not self.control_rate > 0:
            raise DomainError("control_rate must be > 0")
        if self.mode == "PD" and self.ki != 0:
            object.__setattr__(self, "ki", 0.0)

    @property
    def dt(self) -> float:
        return 1.0 / self.control_rate


@dataclass(frozen=True)
class ControllerState:
    integral: np.ndarray
    prev_error: np.ndarray
    initialized: bool = False

    @classmethod
    def fresh(cls, size: int) -> "ControllerState":
        return cls(np.zeros(size), np.zeros(size), False)


@dataclass(frozen=True)
class SaturationStrategy:
    kind: str = "shift"
    pretension: float = 0.0

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise DomainError(f"strategy must be one of {STRATEGIES}, got {self.kind!r}")
        if not self.pretension >= 0:
            raise DomainError("pretension must be >= 0")


def controller_step(cfg: ControllerConfig, state: ControllerState, qm_meas, qm_des, dt=None):
    """One tick of the discrete controller.

    ``e = qm_des - qm_meas``; the integral accumulates ``ki * e * dt``
    (explicit Euler) and is clamped per component to the anti-windup
    limit; the derivative is the backward difference of ``e`` and is zero
    on the first tick.

    Returns
    -------
    tau_C : ndarray
        Generalized manifold forces, shape (2m,).
    state : ControllerState
        Updated controller state.
    """
    dt = cfg.dt if dt is None else dt
    e = np.asarray(qm_des, dtype=float).reshape(-1) - np.asarray(qm_meas, dtype=float).reshape(-1)
    if cfg.mode == "PID" and cfg.ki:
        lim = cfg.antiwindup_limit
        integral = np.clip(state.integral + cfg.ki * e * dt, -lim, lim)
    else:
        integral = np.zeros_like(e)
    d_term = cfg.kd * (e - state.prev_error) / dt if state.initialized else np.zeros_like(e)
    tau = cfg.kp * e + integral + d_term
    return tau, ControllerState(integral, e, True)


def _redistribute(F):
    n = F.shape[-1]
    cm = clarke_matrices(n)
    out = np.zeros_like(F)
    tau = forces_to_manifold_torque(F)
    sector = 2.0 * np.pi / n
    for i, (re, im) in enumerate(tau.reshape(-1, 2)):
        if re == 0.0 and im == 0.0:
            continue
        ang = np.arctan2(im, re) % (2.0 * np.pi)
        ia = int(ang // sector) % n
        ib = (ia + 1) % n
        if ang == cm.tendon_angles[ia]:
            out[i, ia] = np.hypot(re, im)
            continue
        A = cm.inverse[[ia, ib]].T
        fa, fb = np.linalg.solve(A, (re, im))
        # rounding at a sector boundary can leave a -eps entry
        out[i, ia] = max(fa, 0.0)
        out[i, ib] = max(fb, 0.0)
    return out


def saturate_forces(F, strategy: SaturationStrategy) -> np.ndarray:
    """Make tendon forces non-negative, segment by segment (last axis = tendons)."""
    F = np.asarray(F, dtype=float)
    shape = F.shape
    F2 = F.reshape(-1, shape[-1])
    kind = strategy.kind
    if kind == "none":
        out = F2.copy()
    elif kind == "clip":
        out = np.maximum(F2, 0.0)
    elif kind == "shift":
        fmin = np.minimum(F2.min(axis=1, keepdims=True), 0.0)
        out = F2 - fmin + strategy.pretension
    else:
        out = _redistribute(F2)
    return out.reshape(shape)


def tendon_force_pipeline(tau_C, strategy: SaturationStrategy, n: int):
    """Controller output -> tendon forces -> saturation -> realized manifold forces.

    Returns ``(F_applied (m, n), tau_applied (2m,))``.
    """
    tau_C = np.asarray(tau_C, dtype=float).reshape(-1, 2)
    F_raw = manifold_torque_to_forces(tau_C, n)
    F = saturate_forces(F_raw, strategy)
    if strategy.kind == "none":
        return F, tau_C.reshape(-1).copy()
    return F, forces_to_manifold_torque(F).reshape(-1)
