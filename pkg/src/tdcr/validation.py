"""Quick self-checks of the library's invariants (the ``validate`` command).

Each check returns ``(ok, detail)``. The whole suite runs in a few
seconds once the compiled kernels are cached.
"""
from __future__ import annotations

import numpy as np

from . import clarke, kinematics
from .control import ControllerConfig, SaturationStrategy, tendon_force_pipeline
from .dynamics import ManifoldModel, manifold_terms_via_arc
from .kinematics import prototype_robot
from .ode import integrate_dp45
from .sim import TrajectorySpec, run_tracking_experiment


def _rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def _random_q(rng, m, rho_max=0.02, rho_min=0.0):
    rho = rng.uniform(rho_min, rho_max, m)
    ang = rng.uniform(0, 2 * np.pi, m)
    return np.column_stack([rho * np.cos(ang), rho * np.sin(ang)]).reshape(-1)


def check_clarke(rng):
    worst = 0.0
    for n in range(3, 13):
        cm = clarke.clarke_matrices(n)
        worst = max(worst, np.max(np.abs(cm.forward @ cm.inverse - np.eye(2))))
        q = rng.normal(size=n)
        worst = max(worst, np.max(np.abs(clarke.joints_to_manifold(q + 3.7) - clarke.joints_to_manifold(q))))
        worst = max(worst, abs(clarke.manifold_to_joints(rng.normal(size=2), n).sum()))
    return worst < 1e-12, f"max residual {worst:.2e}"


def check_kinematic_jacobians(rng):
    robot = prototype_robot(2)
    worst = 0.0
    h = 1e-7
    for _ in range(20):
        q = _random_q(rng, 2)
        i = int(rng.integers(2))
        s = rng.uniform(0, robot.segments[i].length)
        J = kinematics.point_jacobian(robot, q, i, s)
        fd = np.empty_like(J)
        for k in range(4):
            e = np.zeros(4)
            e[k] = h
            fd[:, k] = (kinematics.world_point(robot, q + e, i, s).position
                        - kinematics.world_point(robot, q - e, i, s).position) / (2 * h)
        worst = max(worst, _rel(J, fd))
    return worst < 1e-5, f"max rel. error {worst:.2e}"


def check_straight_oracles(rng):
    model = ManifoldModel(prototype_robot(1))
    M = model.mass_matrix(np.zeros(2))
    errs = (abs(M[0, 0] - 0.4598), abs(model.K[0, 0] - 0.2905), abs(model.D[0, 0] - 23.0))
    ok = errs[0] < 1e-4 and errs[1] < 1e-4 and errs[2] < 1e-3 and abs(M[0, 1]) < 1e-12
    return ok, f"M={M[0, 0]:.5f} K={model.K[0, 0]:.5f} D={model.D[0, 0]:.4f}"


def check_two_paths(rng):
    worst = 0.0
    for m in (1, 2):
        robot = prototype_robot(m, include_rotational_energy=True)
        model = ManifoldModel(robot)
        for _ in range(5):
            q = _random_q(rng, m, rho_min=1e-3)
            qd = rng.normal(scale=0.01, size=2 * m)
            M_arc, C_arc, g_arc, _, _ = manifold_terms_via_arc(robot, q, qd, model)
            M, g = model.mass_and_gravity(q)
            worst = max(worst, _rel(M_arc, M), _rel(g_arc, g), _rel(C_arc, model.coriolis_matrix(q, qd)))
    return worst < 1e-8, f"max rel. difference {worst:.2e}"


def check_gravity_gradient(rng):
    model = ManifoldModel(prototype_robot(2))
    worst = 0.0
    for _ in range(5):
        q = _random_q(rng, 2, rho_min=1e-3)
        g = model.gravity_vector(q) + model.K @ q
        fd = np.empty(4)
        for k in range(4):
            e = np.zeros(4)
            e[k] = 1e-6
            fd[k] = (model.potential(q + e) - model.potential(q - e)) / 2e-6
        worst = max(worst, _rel(g, fd))
    return worst < 1e-6, f"max rel. error {worst:.2e}"


def check_mass_spd(rng):
    model = ManifoldModel(prototype_robot(2, include_rotational_energy=True))
    lo = np.inf
    for k in range(50):
        q = _random_q(rng, 2, rho_max=0.02 if k % 2 else 1e-5)
        lo = min(lo, np.linalg.eigvalsh(model.mass_matrix(q))[0])
    return lo > 0, f"smallest eigenvalue {lo:.3e}"


def check_saturation(rng):
    worst = 0.0
    for _ in range(50):
        tau = rng.normal(size=4)
        for kind in ("shift", "redistribute"):
            F, tau_a = tendon_force_pipeline(tau, SaturationStrategy(kind), 5)
            if F.min() < 0:
                return False, f"{kind} produced a negative tension"
            worst = max(worst, np.max(np.abs(tau_a - tau)))
    return worst < 1e-10, f"max torque change {worst:.2e}"


def check_integrator(rng):
    res = integrate_dp45(lambda t, y: -y, (0.0, 1.0), [1.0], rtol=1e-8, atol=1e-12)
    err = abs(res.y[-1, 0] - np.exp(-1.0))
    return err < 1e-7, f"exp(-1) error {err:.2e}"


def check_zero_tracking(rng):
    robot = prototype_robot(2)
    log = run_tracking_experiment(robot, ControllerConfig(), SaturationStrategy("shift"),
                                  TrajectorySpec("constant", amplitude=(0.0,)), 0.05)
    peak = float(np.max(np.abs(log.qm)))
    return peak == 0.0, f"peak |qm| {peak:.1e}"


CHECKS = (
    ("clarke algebra", check_clarke),
    ("kinematic jacobians", check_kinematic_jacobians),
    ("straight-configuration oracles", check_straight_oracles),
    ("arc-space vs manifold terms", check_two_paths),
    ("gravity + elastic gradient", check_gravity_gradient),
    ("mass matrix positive definite", check_mass_spd),
    ("saturation preserves torque", check_saturation),
    ("integrator accuracy", check_integrator),
    ("zero reference stays straight", check_zero_tracking),
)


def run_all(seed: int = 0, out=print) -> bool:
    rng = np.random.default_rng(seed)
    ok_all = True
    for name, fn in CHECKS:
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # report and keep going
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        ok_all &= ok
        out(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return ok_all
