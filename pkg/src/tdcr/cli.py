"""Command-line entry point: ``tdcr <command> [options]``.

Commands
--------
track               closed-loop run; writes the log CSV and per-channel RMSE
energies            closed-loop run; writes per-component energies per sample
forces-diagnostic   closed-loop run; writes applied vs Coriolis/centrifugal force
compare-saturation  paired clip and shift runs; writes an RMSE comparison table
validate            quick invariant checks; exit 1 if any fails

Exit codes: 0 success, 1 validation failure, 2 config error, 3 numeric failure.
Set ``TDCR_LOG`` (e.g. ``INFO`` or ``DEBUG``) for log output on stderr.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, bundled_config_path, check_config, load_config
from .control import STRATEGIES, SaturationStrategy
from .diagnostics import energy_table, force_table, write_table
from .dynamics import ManifoldModel
from .errors import ConfigError, DomainError, IntegrationError, ModelError, SingularConfigurationError
from .sim import TrajectoryLog, rmse, run_tracking_experiment
from .validation import run_all

log = logging.getLogger("tdcr")

DEFAULT_CONFIG = {
    "track": "paper_sim_2seg.cfg",
    "compare-saturation": "paper_sim_2seg.cfg",
    "energies": "paper_step_1seg.cfg",
    "forces-diagnostic": "paper_step_1seg.cfg",
}


def _parser():
    p = argparse.ArgumentParser(prog="tdcr", description="Tendon-driven continuum robot simulation on the Clarke manifold.")
    p.add_argument("command", choices=["track", "energies", "forces-diagnostic", "compare-saturation", "validate"])
    p.add_argument("--config", metavar="PATH", help="experiment config (default: a bundled reference config)")
    p.add_argument("--out", metavar="DIR", help="output directory (overrides output.dir)")
    p.add_argument("--duration", type=float, metavar="S", help="simulated time in seconds")
    p.add_argument("--strategy", choices=STRATEGIES, help="tendon-force saturation strategy")
    p.add_argument("--rtol", type=float, help="integrator relative tolerance")
    p.add_argument("--atol", type=float, help="integrator absolute tolerance")
    p.add_argument("--seed", type=int, help="random seed (used by validate)")
    return p


def _setup_logging():
    level = os.environ.get("TDCR_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _resolve(args) -> ExperimentConfig:
    path = args.config or bundled_config_path(DEFAULT_CONFIG[args.command])
    cfg = load_config(path)
    kw = {}
    if args.duration is not None:
        if not args.duration > 0:
            raise ConfigError("--duration: must be > 0")
        kw["duration"] = args.duration
    if args.strategy is not None:
        kw["strategy"] = SaturationStrategy(args.strategy, cfg.strategy.pretension)
    for name in ("rtol", "atol"):
        val = getattr(args, name)
        if val is not None:
            if not val > 0:
                raise ConfigError(f"--{name}: must be > 0")
            kw[name] = val
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.out is not None:
        kw["output_dir"] = args.out
    log.info("config %s", path)
    cfg = cfg.replace(**kw)
    check_config(cfg)
    return cfg


def _run(cfg: ExperimentConfig, strategy=None, model=None) -> TrajectoryLog:
    strategy = strategy or cfg.strategy
    t0 = time.perf_counter()
    out = run_tracking_experiment(cfg.robot, cfg.controller, strategy, cfg.trajectory, cfg.duration,
                                  output_rate=cfg.output_rate, rtol=cfg.rtol, atol=cfg.atol, model=model)
    log.info("%s run of %.3g s took %.2f s wall (%d rhs evaluations)",
             strategy.kind, cfg.duration, time.perf_counter() - t0, out.extras["nfev"])
    return out


def _channel_names(m):
    return [f"{part}_{i}" for i in range(1, m + 1) for part in ("qRe", "qIm")]


def cmd_track(cfg, out: Path):
    tl = _run(cfg)
    tl.to_csv(out / "track_log.csv")
    err = rmse(tl)
    with open(out / "rmse.csv", "w") as fh:
        fh.write("channel,rmse_m\n")
        for name, e in zip(_channel_names(cfg.robot.m), err):
            fh.write(f"{name},{e:.17g}\n")
    print(f"strategy {cfg.strategy.kind}, {cfg.duration:g} s")
    for name, e in zip(_channel_names(cfg.robot.m), err):
        print(f"  RMSE {name:8s} {e * 1e3:.4f} mm")
    print(f"wrote {out / 'track_log.csv'} and {out / 'rmse.csv'}")


def cmd_energies(cfg, out: Path):
    model = ManifoldModel(cfg.robot)
    tl = _run(cfg, model=model)
    cols, data = energy_table(model, tl)
    write_table(out / "energies.csv", cols, data)
    t_tr, t_rot = data[:, cols.index("T_trans")].max(), data[:, cols.index("T_rot")].max()
    print(f"peak translational kinetic energy {t_tr:.4e} J")
    print(f"peak rotational kinetic energy    {t_rot:.4e} J")
    if t_rot > 0:
        print(f"ratio {t_tr / t_rot:.1f}")
    print(f"wrote {out / 'energies.csv'}")


def cmd_forces(cfg, out: Path):
    model = ManifoldModel(cfg.robot)
    tl = _run(cfg, model=model)
    cols, data = force_table(model, tl)
    write_table(out / "forces.csv", cols, data)
    tau, cor = data[:, cols.index("tau_norm")].max(), data[:, cols.index("coriolis_norm")].max()
    print(f"peak |applied force|           {tau:.4e} N")
    print(f"peak |Coriolis + centrifugal|  {cor:.4e} N")
    if tau > 0:
        print(f"ratio {cor / tau:.4f}")
    print(f"wrote {out / 'forces.csv'}")


def cmd_compare(cfg, out: Path):
    model = ManifoldModel(cfg.robot)
    res = {}
    for kind in ("clip", "shift"):
        tl = _run(cfg, SaturationStrategy(kind, cfg.strategy.pretension), model=model)
        tl.to_csv(out / f"track_{kind}.csv")
        res[kind] = rmse(tl)
    red = 1.0 - res["shift"] / res["clip"]
    names = _channel_names(cfg.robot.m)
    with open(out / "compare.csv", "w") as fh:
        fh.write("channel,rmse_clip_m,rmse_shift_m,reduction\n")
        for k, name in enumerate(names):
            fh.write(f"{name},{res['clip'][k]:.17g},{res['shift'][k]:.17g},{red[k]:.17g}\n")
    print(f"{'channel':8s} {'clip [mm]':>10s} {'shift [mm]':>11s} {'reduction':>10s}")
    for k, name in enumerate(names):
        print(f"{name:8s} {res['clip'][k] * 1e3:10.4f} {res['shift'][k] * 1e3:11.4f} {red[k] * 100:9.1f}%")
    print(f"average reduction {np.mean(red) * 100:.1f}%")
    print(f"shift lower on all channels: {bool(np.all(res['shift'] < res['clip']))}")
    print(f"wrote {out / 'compare.csv'}")


COMMANDS = {
    "track": cmd_track,
    "energies": cmd_energies,
    "forces-diagnostic": cmd_forces,
    "compare-saturation": cmd_compare,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    _setup_logging()
    try:
        if args.command == "validate":
            if args.config:
                _resolve(args)  # still reject a broken config
            ok = run_all(seed=args.seed or 0)
            print("all checks passed" if ok else "some checks FAILED")
            return 0 if ok else 1
        cfg = _resolve(args)
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, out)
        return 0
    except (ConfigError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except IntegrationError as exc:
        where = f" at t = {exc.t:.9g} s" if exc.t is not None else ""
        print(f"integration failed{where}: {exc}", file=sys.stderr)
        return 3
    except (ModelError, SingularConfigurationError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
