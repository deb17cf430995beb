"""Closed-loop simulation: reference trajectories, the sampled-data loop, and metrics."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .clarke import joints_to_manifold, manifold_to_joints
from .control import (
    ControllerConfig,
    ControllerState,
    SaturationStrategy,
    controller_step,
    tendon_force_pipeline,
)
from .dynamics import ManifoldModel
from .errors import DomainError, IntegrationError
from .kinematics import RobotSpec
from .ode import DormandPrince, integrate_dp45

TRAJECTORY_KINDS = ("chirp", "step_sequence", "constant")
# bending angle beyond which a run is treated as diverged (segment coiled past a full turn)
DIVERGENCE_ANGLE = 2.0 * np.pi


def chirp(t, A, f0, r, phase=0.0):
    """Linear chirp ``A sin(2 pi (f0 t + r t^2 / 2) + phase)`` and its time derivative."""
    t = np.asarray(t, dtype=float)
    arg = 2.0 * np.pi * (f0 * t + 0.5 * r * t * t) + phase
    return A * np.sin(arg), A * np.cos(arg) * 2.0 * np.pi * (f0 + r * t)


@dataclass(frozen=True)
class TrajectorySpec:
    """Desired Clarke coordinates over time.

    ``chirp`` uses per-channel ``amplitude``, ``f0`` and ``phase`` with a
    common or per-channel frequency ramp. ``constant`` holds ``amplitude``.
    ``step_sequence`` holds ``steps = ((t_start, t_end, target), ...)`` and
    commands the straight configuration outside every window.
    """

    kind: str = "chirp"
    amplitude: tuple = ()
    f0: tuple = ()
    ramp: tuple | float = 0.0
    phase: tuple = ()
    steps: tuple = ()

    def __post_init__(self):
        if self.kind not in TRAJECTORY_KINDS:
            raise DomainError(f"trajectory kind must be one of {TRAJECTORY_KINDS}, got {self.kind!r}")
        if any(a < 0 for a in self.amplitude) and self.kind == "chirp":
            raise DomainError("chirp amplitudes must be >= 0")
        if any(f < 0 for f in self.f0) or np.any(np.asarray(self.ramp) < 0):
            raise DomainError("frequencies and ramps must be >= 0")

    def channels(self) -> int | None:
        if self.kind == "step_sequence":
            return len(self.steps[0][2]) if self.steps else None
        return len(self.amplitude) or None

    def desired(self, t: float, nq: int):
        """Desired position and rate at time ``t`` for ``nq`` channels."""
        if self.kind == "step_sequence":
            for t0, t1, target in self.steps:
                if t0 <= t < t1:
                    return np.asarray(target, dtype=float), np.zeros(nq)
            return np.zeros(nq), np.zeros(nq)
        A = np.broadcast_to(np.asarray(self.amplitude, dtype=float), (nq,)) if self.amplitude else np.zeros(nq)
        if self.kind == "constant":
            return A.copy(), np.zeros(nq)
        f0 = np.broadcast_to(np.asarray(self.f0 or 0.0, dtype=float), (nq,))
        ramp = np.broadcast_to(np.asarray(self.ramp, dtype=float), (nq,))
        phase = np.broadcast_to(np.asarray(self.phase or 0.0, dtype=float), (nq,))
        return chirp(t, A, f0, ramp, phase)


@dataclass
class TrajectoryLog:
    """Uniformly sampled closed-loop record.

    Row ``k`` holds the state at ``t[k]`` and the forces held over the
    following control interval.
    """

    t: np.ndarray
    qm_des: np.ndarray
    qm: np.ndarray
    qm_dot: np.ndarray
    tau: np.ndarray
    forces: np.ndarray
    extras: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.qm.shape[1] // 2

    @property
    def n(self) -> int:
        return self.forces.shape[2]

    def __len__(self):
        return self.t.size

    def columns(self) -> list:
        cols = ["t"]
        for i in range(1, self.m + 1):
            cols += [f"qRe_des_{i}", f"qIm_des_{i}", f"qRe_{i}", f"qIm_{i}", f"qRe_dot_{i}", f"qIm_dot_{i}",
                     f"tauRe_{i}", f"tauIm_{i}"]
            cols += [f"F{j}_{i}" for j in range(1, self.n + 1)]
        return cols

    def to_array(self) -> np.ndarray:
        blocks = [self.t[:, None]]
        for i in range(self.m):
            sl = slice(2 * i, 2 * i + 2)
            blocks += [self.qm_des[:, sl], self.qm[:, sl], self.qm_dot[:, sl], self.tau[:, sl], self.forces[:, i, :]]
        return np.hstack(blocks)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns())
            for row in self.to_array():
                w.writerow([f"{v:.17g}" for v in row])

    @classmethod
    def from_csv(cls, path) -> "TrajectoryLog":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, data = rows[0], np.array([[float(v) for v in r] for r in rows[1:]]).reshape(-1, len(rows[0]))
        m = sum(1 for h in header if h.startswith("qRe_des_"))
        n = sum(1 for h in header if h.startswith("F") and h.endswith("_1"))
        width = 8 + n
        blocks = [data[:, 1 + i * width: 1 + (i + 1) * width] for i in range(m)]
        cat = lambda a, b: np.hstack([blk[:, a:b] for blk in blocks])
        return cls(
            t=data[:, 0],
            qm_des=cat(0, 2),
            qm=cat(2, 4),
            qm_dot=cat(4, 6),
            tau=cat(6, 8),
            forces=np.stack([blk[:, 8:] for blk in blocks], axis=1),
        )


def rmse(log: TrajectoryLog) -> np.ndarray:
    """Per-channel root-mean-square tracking error over the logged grid."""
    if len(log) == 0:
        raise ValueError("cannot compute RMSE of an empty log")
    return np.sqrt(np.mean((log.qm_des - log.qm) ** 2, axis=0))


def run_tracking_experiment(
    robot: RobotSpec,
    ctrl: ControllerConfig,
    strategy: SaturationStrategy,
    trajectory: TrajectorySpec,
    duration: float,
    output_rate: float | None = None,
    rtol: float = 1e-6,
    atol: float = 1e-9,
    initial_state=None,
    model: ManifoldModel | None = None,
) -> TrajectoryLog:
    """Simulate the sampled-data control loop.

    At every tick ``k / control_rate`` the measured Clarke coordinates are
    formed from the tendon displacements, the controller and saturation
    stage produce the applied manifold forces, and the dynamics are
    integrated to the next tick with those forces held constant.

    ``log.extras`` holds the solver counters, the controller integral per
    logged row (``integral``) and its peak magnitude over every tick
    (``integral_peak``). Raises :class:`IntegrationError` if a bending
    angle passes a full turn, which only happens when the loop is unstable.
    """
    if not duration > 0:
        raise DomainError("duration must be > 0")
    nq, n = 2 * robot.m, robot.tendon_count
    ch = trajectory.channels()
    if ch is not None and ch not in (1, nq):
        raise DomainError(f"trajectory has {ch} channels, robot needs {nq}")
    rate = ctrl.control_rate
    output_rate = rate if output_rate is None else output_rate
    stride = rate / output_rate
    if abs(stride - round(stride)) > 1e-9 or round(stride) < 1:
        raise DomainError("control_rate must be an integer multiple of output_rate")
    stride = int(round(stride))
    n_ticks = int(round(duration * rate))

    model = model or ManifoldModel(robot)
    if initial_state is None:
        y0 = np.zeros(2 * nq)
    else:
        y0 = np.concatenate([np.asarray(initial_state[0], float), np.asarray(initial_state[1], float)])
    held = np.zeros(nq)
    theta_cap = DIVERGENCE_ANGLE * robot.radii

    def rhs(t, y):
        return np.concatenate((y[nq:], model.accel(y[:nq], y[nq:], held)))

    solver = DormandPrince(rhs, 0.0, y0, rtol=rtol, atol=atol)
    cstate = ControllerState.fresh(nq)
    dt = 1.0 / rate
    rows = []
    integral_peak = np.zeros(nq)
    for k in range(n_ticks + 1):
        t = k / rate
        y = solver.y
        q, qd = y[:nq], y[nq:]
        # sensing path: tendon displacements projected back onto the manifold
        q_meas = joints_to_manifold(manifold_to_joints(q.reshape(-1, 2), n)).reshape(-1)
        q_des, _ = trajectory.desired(t, nq)
        tau_c, cstate = controller_step(ctrl, cstate, q_meas, q_des, dt)
        np.maximum(integral_peak, np.abs(cstate.integral), out=integral_peak)
        F, tau = tendon_force_pipeline(tau_c, strategy, n)
        if k % stride == 0:
            rows.append((t, q_des, q.copy(), qd.copy(), tau, F, cstate.integral))
        if k == n_ticks:
            break
        held[:] = tau
        solver.reset_rhs()
        t_next = (k + 1) / rate
        while solver.t < t_next:
            solver.step(t_next)
            if np.any(np.hypot(solver.y[0:nq:2], solver.y[1:nq:2]) > theta_cap):
                raise IntegrationError("closed loop diverged: bending angle beyond a full turn",
                                       t=solver.t, y=solver.y.copy())
    t, q_des, q, qd, tau, F, integ = (np.array(c) for c in zip(*rows))
    extras = {"nfev": solver.nfev, "nreject": solver.nreject, "integral": integ, "integral_peak": integral_peak}
    return TrajectoryLog(t=t, qm_des=q_des, qm=q, qm_dot=qd, tau=tau, forces=F, extras=extras)


def free_response(robot: RobotSpec, qm0, qm_dot0, duration: float, sample_rate: float = 100.0,
                  rtol: float = 1e-9, atol: float = 1e-12, tau=None, model: ManifoldModel | None = None):
    """Open-loop response under a constant manifold force (zero by default).

    Returns ``(t, qm, qm_dot)`` sampled at ``sample_rate``.
    """
    model = model or ManifoldModel(robot)
    nq = 2 * robot.m
    tau = np.zeros(nq) if tau is None else np.asarray(tau, dtype=float)
    y0 = np.concatenate([np.asarray(qm0, float).reshape(-1), np.asarray(qm_dot0, float).reshape(-1)])
    t_eval = np.linspace(0.0, duration, int(round(duration * sample_rate)) + 1)
    res = integrate_dp45(lambda t, y: np.concatenate((y[nq:], model.accel(y[:nq], y[nq:], tau))),
                         (0.0, duration), y0, rtol=rtol, atol=atol, t_eval=t_eval)
    return res.t, res.y[:, :nq], res.y[:, nq:]
