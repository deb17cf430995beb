import numpy as np
import pytest

from tdcr.control import ControllerConfig, SaturationStrategy
from tdcr.errors import DomainError, IntegrationError
from tdcr.kinematics import prototype_robot
from tdcr.sim import TrajectoryLog, TrajectorySpec, chirp, rmse, run_tracking_experiment

RD = 7e-3


def _log(err, n=8):
    t = np.arange(len(err), dtype=float)
    des = np.zeros((len(err), 2))
    q = -np.column_stack([err, err])
    z = np.zeros((len(err), 2))
    return TrajectoryLog(t=t, qm_des=des, qm=q, qm_dot=z, tau=z, forces=np.zeros((len(err), 1, 5)))


def test_chirp_examples():
    assert chirp(0.0, 0.01, 0.1, 0.005)[0] == 0.0
    assert chirp(10.0, 0.01, 0.1, 0.005)[0] == pytest.approx(0.01, abs=1e-15)


def test_chirp_rate_and_instantaneous_frequency():
    A, f0, r, ph = 0.02, 0.3, 0.01, 0.4
    t = np.linspace(0, 30, 13)
    h = 1e-6
    pos, rate = chirp(t, A, f0, r, ph)
    fd = (chirp(t + h, A, f0, r, ph)[0] - chirp(t - h, A, f0, r, ph)[0]) / (2 * h)
    assert np.allclose(rate, fd, atol=1e-8)
    phase = lambda x: 2 * np.pi * (f0 * x + 0.5 * r * x * x)
    assert np.allclose((phase(t + h) - phase(t - h)) / (2 * h) / (2 * np.pi), f0 + r * t, atol=1e-6)


def test_trajectory_kinds():
    steps = TrajectorySpec("step_sequence", steps=((1.0, 2.0, (0.01, 0.0)),))
    assert np.array_equal(steps.desired(0.5, 2)[0], [0, 0])
    assert np.array_equal(steps.desired(1.0, 2)[0], [0.01, 0])
    assert np.array_equal(steps.desired(2.0, 2)[0], [0, 0])
    const = TrajectorySpec("constant", amplitude=(0.003,))
    assert np.array_equal(const.desired(7.0, 4)[0], [0.003] * 4)
    ch = TrajectorySpec("chirp", amplitude=(0.01, 0.0), f0=(0.1, 0.1), ramp=0.005)
    assert np.allclose(ch.desired(10.0, 2)[0], [0.01, 0.0])


def test_trajectory_validation():
    with pytest.raises(DomainError):
        TrajectorySpec("sawtooth")
    with pytest.raises(DomainError):
        TrajectorySpec("chirp", amplitude=(-0.01,))
    with pytest.raises(DomainError):
        TrajectorySpec("chirp", amplitude=(0.01,), f0=(0.1,), ramp=-1.0)


def test_rmse_examples():
    assert np.allclose(rmse(_log(np.full(17, 0.001))), 0.001)
    assert np.array_equal(rmse(_log(np.zeros(5))), [0.0, 0.0])
    assert np.allclose(rmse(_log(0.002 * (-1.0) ** np.arange(10))), 0.002)
    with pytest.raises(ValueError):
        rmse(_log(np.zeros(0)))


def test_zero_reference_keeps_robot_straight():
    log = run_tracking_experiment(prototype_robot(2), ControllerConfig(), SaturationStrategy("shift"),
                                  TrajectorySpec("constant", amplitude=(0.0,)), 0.2)
    assert np.array_equal(log.qm, np.zeros_like(log.qm))
    assert np.array_equal(rmse(log), np.zeros(4))


def test_log_grid_and_shapes():
    ctrl = ControllerConfig(control_rate=1000.0)
    traj = TrajectorySpec("chirp", amplitude=(0.01, 0.0), f0=(0.5, 0.5))
    log = run_tracking_experiment(prototype_robot(1), ctrl, SaturationStrategy(), traj, 0.1, output_rate=250.0)
    assert len(log) == 26
    assert np.allclose(log.t, np.arange(26) / 250.0, rtol=0, atol=1e-15)
    assert log.forces.shape == (26, 1, 5) and log.tau.shape == (26, 2)
    assert np.all(log.forces >= 0)
    with pytest.raises(DomainError):
        run_tracking_experiment(prototype_robot(1), ctrl, SaturationStrategy(), traj, 0.1, output_rate=300.0)
    with pytest.raises(DomainError):
        run_tracking_experiment(prototype_robot(1), ctrl, SaturationStrategy(), traj, 0.0)
    with pytest.raises(DomainError):
        run_tracking_experiment(prototype_robot(2), ctrl, SaturationStrategy(),
                                TrajectorySpec("constant", amplitude=(0.0, 0.0, 0.0)), 0.1)


def test_runs_are_deterministic():
    args = (prototype_robot(2), ControllerConfig(), SaturationStrategy("clip"),
            TrajectorySpec("chirp", amplitude=(0.01, 0.005, 0.005, 0.025), f0=(0.1, 0.05, 0.15, 0.2), ramp=0.005),
            0.3)
    a, b = run_tracking_experiment(*args), run_tracking_experiment(*args)
    assert np.array_equal(a.to_array(), b.to_array())


def test_shift_matches_unsaturated_forces():
    # shifting never changes the manifold force, so the closed loop matches the ideal one
    args = dict(robot=prototype_robot(1), ctrl=ControllerConfig(),
                trajectory=TrajectorySpec("chirp", amplitude=(0.01, 0.004), f0=(0.5, 0.3)), duration=0.5)
    a = run_tracking_experiment(strategy=SaturationStrategy("shift"), **args)
    b = run_tracking_experiment(strategy=SaturationStrategy("none"), **args)
    assert np.allclose(a.qm, b.qm, rtol=0, atol=1e-12)
    assert np.allclose(a.tau, b.tau, rtol=0, atol=1e-9)


def test_forces_held_between_ticks(monkeypatch):
    import tdcr.sim as sim

    seen = []
    orig = sim.DormandPrince.step

    def spy(self, t_limit=np.inf):
        t0 = self.t
        t1 = orig(self, t_limit)
        seen.append((t0, t1, t_limit))
        return t1

    monkeypatch.setattr(sim.DormandPrince, "step", spy)
    run_tracking_experiment(prototype_robot(1), ControllerConfig(), SaturationStrategy(),
                            TrajectorySpec("constant", amplitude=(0.005, 0.0)), 0.02)
    for t0, t1, lim in seen:
        # every accepted step stays inside one control interval
        k = round(lim * 1000)
        assert lim == k / 1000 and (k - 1) / 1000 <= t0 < t1 <= lim


def test_step_trajectory_settles_on_targets():
    rho = RD * np.pi / 4
    d = rho / np.sqrt(2)
    traj = TrajectorySpec("step_sequence", steps=((0.0, 3.0, (rho, 0.0)), (3.0, 6.0, (d, d))))
    ctrl = ControllerConfig(1500, 1500, 1, antiwindup_limit=np.inf)
    log = run_tracking_experiment(prototype_robot(1), ctrl, SaturationStrategy("shift"), traj, 9.0, output_rate=100.0)
    for t_end, target in ((3.0, (rho, 0.0)), (6.0, (d, d)), (9.0, (0.0, 0.0))):
        k = np.searchsorted(log.t, t_end - 0.02)
        assert np.linalg.norm(log.qm[k] - target) < 0.02 * rho


def test_unstable_loop_reports_failure_time():
    ctrl = ControllerConfig(kp=1e9, ki=0.0, kd=0.0)
    with pytest.raises(IntegrationError) as info:
        run_tracking_experiment(prototype_robot(2), ctrl, SaturationStrategy(),
                                TrajectorySpec("constant", amplitude=(0.001,)), 1.0)
    assert 0.0 < info.value.t < 1.0


def test_csv_round_trip(tmp_path):
    traj = TrajectorySpec("chirp", amplitude=(0.01, 0.005, 0.005, 0.025), f0=(0.1, 0.05, 0.15, 0.2), ramp=0.005)
    log = run_tracking_experiment(prototype_robot(2), ControllerConfig(), SaturationStrategy("clip"), traj, 0.05)
    path = tmp_path / "log.csv"
    log.to_csv(path)
    header = path.read_text().splitlines()[0].split(",")
    assert header[:10] == ["t", "qRe_des_1", "qIm_des_1", "qRe_1", "qIm_1", "qRe_dot_1", "qIm_dot_1",
                           "tauRe_1", "tauIm_1", "F1_1"]
    assert header[-1] == "F5_2" and len(header) == 1 + 2 * 13
    back = TrajectoryLog.from_csv(path)
    for name in ("t", "qm_des", "qm", "qm_dot", "tau", "forces"):
        assert np.array_equal(getattr(back, name), getattr(log, name))
