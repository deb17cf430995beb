"""Experiment configuration files.

A config is a YAML mapping. Every key is optional; omitted robot fields
take the prototype values of :class:`tdcr.kinematics.SegmentSpec`.
Unknown keys are rejected. Example::

    duration: 60.0
    robot:
      tendon_count: 5
      segment_count: 2
      segment: {length: 0.2}        # applied to every segment
      model: {include_coriolis: false}
    controller: {kp: 1500, ki: 1500, kd: 1, antiwindup_limit: .inf}
    strategy: {kind: shift}
    trajectory:
      kind: chirp
      amplitude: [0.01, 0.005, 0.005, 0.025]
      f0: [0.1, 0.05, 0.15, 0.2]
      ramp: 0.005
    solver: {rtol: 1.0e-6, atol: 1.0e-9}
    output: {rate: 1000, dir: out}
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .control import ControllerConfig, SaturationStrategy
from .errors import ConfigError, DomainError
from .kinematics import ModelFlags, RobotSpec, SegmentSpec
from .ode import MIN_RTOL
from .sim import TrajectorySpec

BUNDLED = ("paper_sim_2seg.cfg", "paper_step_1seg.cfg")


@dataclass(frozen=True)
class ExperimentConfig:
    robot: RobotSpec = RobotSpec()
    controller: ControllerConfig = ControllerConfig()
    strategy: SaturationStrategy = SaturationStrategy()
    trajectory: TrajectorySpec = TrajectorySpec(
        "chirp", amplitude=(0.01, 0.0), f0=(0.1, 0.1), ramp=0.005)
    duration: float = 60.0
    rtol: float = 1e-6
    atol: float = 1e-9
    seed: int = 0
    output_rate: float = 1000.0
    output_dir: str = "out"

    def replace(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)


def bundled_config_path(name: str) -> Path:
    if name not in BUNDLED:
        raise ConfigError(f"no bundled config named {name!r}; choose from {BUNDLED}")
    return Path(str(resources.files("tdcr") / "configs" / name))


# -- parsing helpers -------------------------------------------------------------------------

class _Ctx:
    def __init__(self, root_node):
        self.root = root_node

    def line(self, path):
        node = self.root
        for key in path:
            if not isinstance(node, yaml.MappingNode):
                return None
            for knode, vnode in node.value:
                if knode.value == key:
                    if key == path[-1]:
                        return knode.start_mark.line + 1
                    node = vnode
                    break
            else:
                return None
        return None

    def error(self, path, msg):
        where = ".".join(path) or "<root>"
        line = self.line(path) if path else None
        loc = f" (line {line})" if line else ""
        return ConfigError(f"{where}{loc}: {msg}")


def _mapping(ctx, data, path, allowed):
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ctx.error(path, "expected a mapping")
    unknown = [k for k in data if k not in allowed]
    if unknown:
        raise ctx.error(path + [str(unknown[0])], f"unknown key; allowed: {sorted(allowed)}")
    return data


def _num(ctx, v, path, integer=False):
    # PyYAML reads e.g. "1e-6" (no dot) as a string
    try:
        if isinstance(v, bool):
            raise TypeError
        x = float(v)
    except (TypeError, ValueError):
        raise ctx.error(path, f"expected a number, got {v!r}") from None
    if integer:
        if x != int(x):
            raise ctx.error(path, f"expected an integer, got {v!r}")
        return int(x)
    return x


def _bool(ctx, v, path):
    if not isinstance(v, bool):
        raise ctx.error(path, f"expected true/false, got {v!r}")
    return v


def _vec(ctx, v, path):
    if not isinstance(v, (list, tuple)):
        v = [v]
    return tuple(_num(ctx, x, path) for x in v)


_SEG_INT = {"disk_count"}


def _segment(ctx, data, path, base: SegmentSpec) -> SegmentSpec:
    names = {f.name for f in fields(SegmentSpec)}
    data = _mapping(ctx, data, path, names)
    kw = {k: _num(ctx, v, path + [k], integer=k in _SEG_INT) for k, v in data.items()}
    try:
        return replace(base, **kw)
    except DomainError as exc:
        raise ctx.error(path, str(exc)) from None


def _robot(ctx, data, path) -> RobotSpec:
    data = _mapping(ctx, data, path, {"tendon_count", "gravity", "segment_count", "segment", "segments", "model"})
    common = _segment(ctx, data.get("segment"), path + ["segment"], SegmentSpec())
    if "segments" in data:
        segs = data["segments"]
        if not isinstance(segs, list) or not segs:
            raise ctx.error(path + ["segments"], "expected a non-empty list of segment mappings")
        segments = tuple(_segment(ctx, s, path + ["segments"], common) for s in segs)
        if "segment_count" in data and _num(ctx, data["segment_count"], path, True) != len(segments):
            raise ctx.error(path + ["segment_count"], "does not match the length of 'segments'")
    else:
        count = _num(ctx, data.get("segment_count", 1), path + ["segment_count"], integer=True)
        if count < 1:
            raise ctx.error(path + ["segment_count"], "must be >= 1")
        segments = (common,) * count
    flag_names = {f.name for f in fields(ModelFlags)}
    mdata = _mapping(ctx, data.get("model"), path + ["model"], flag_names)
    flags = ModelFlags(**{k: _bool(ctx, v, path + ["model", k]) for k, v in mdata.items()})
    try:
        return RobotSpec(
            segments=segments,
            tendon_count=_num(ctx, data.get("tendon_count", 5), path + ["tendon_count"], integer=True),
            gravity=_num(ctx, data.get("gravity", 9.81), path + ["gravity"]),
            flags=flags,
        )
    except DomainError as exc:
        raise ctx.error(path, str(exc)) from None


def _controller(ctx, data, path) -> ControllerConfig:
    names = {f.name for f in fields(ControllerConfig)}
    data = _mapping(ctx, data, path, names)
    kw = {}
    for k, v in data.items():
        if k == "mode":
            if not isinstance(v, str):
                raise ctx.error(path + [k], "expected PID or PD")
            kw[k] = v.upper()
        else:
            kw[k] = _num(ctx, v, path + [k])
    try:
        return ControllerConfig(**kw)
    except DomainError as exc:
        raise ctx.error(path, str(exc)) from None


def _strategy(ctx, data, path) -> SaturationStrategy:
    data = _mapping(ctx, data, path, {"kind", "pretension"})
    try:
        return SaturationStrategy(kind=str(data.get("kind", "shift")),
                                  pretension=_num(ctx, data.get("pretension", 0.0), path + ["pretension"]))
    except DomainError as exc:
        raise ctx.error(path, str(exc)) from None


def _trajectory(ctx, data, path, default: TrajectorySpec) -> TrajectorySpec:
    if data is None:
        return default
    data = _mapping(ctx, data, path, {"kind", "amplitude", "f0", "ramp", "phase", "steps"})
    kw = {"kind": str(data.get("kind", "chirp"))}
    for key in ("amplitude", "f0", "phase"):
        if key in data:
            kw[key] = _vec(ctx, data[key], path + [key])
    if "ramp" in data:
        r = _vec(ctx, data["ramp"], path + ["ramp"])
        kw["ramp"] = r[0] if len(r) == 1 else r
    if "steps" in data:
        steps = []
        if not isinstance(data["steps"], list):
            raise ctx.error(path + ["steps"], "expected a list")
        for k, st in enumerate(data["steps"]):
            sp = path + ["steps"]
            st = _mapping(ctx, st, sp, {"start", "end", "target"})
            if not {"start", "end", "target"} <= set(st):
                raise ctx.error(sp, f"step {k} needs start, end and target")
            steps.append((_num(ctx, st["start"], sp), _num(ctx, st["end"], sp), _vec(ctx, st["target"], sp)))
        kw["steps"] = tuple(steps)
    try:
        return TrajectorySpec(**kw)
    except DomainError as exc:
        raise ctx.error(path, str(exc)) from None


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    try:
        data = yaml.safe_load(text)
        root = yaml.compose(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f" line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"{source}:{where}: {exc.problem}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    ctx = _Ctx(root)
    top = {"duration", "seed", "robot", "controller", "strategy", "trajectory", "solver", "output"}
    data = _mapping(ctx, data, [], top)
    base = ExperimentConfig()
    robot = _robot(ctx, data.get("robot"), ["robot"])
    solver = _mapping(ctx, data.get("solver"), ["solver"], {"rtol", "atol"})
    output = _mapping(ctx, data.get("output"), ["output"], {"rate", "dir"})
    default_traj = base.trajectory
    if robot.m != 1:
        default_traj = replace(default_traj, amplitude=default_traj.amplitude * robot.m, f0=default_traj.f0 * robot.m)
    cfg = ExperimentConfig(
        robot=robot,
        controller=_controller(ctx, data.get("controller"), ["controller"]),
        strategy=_strategy(ctx, data.get("strategy"), ["strategy"]),
        trajectory=_trajectory(ctx, data.get("trajectory"), ["trajectory"], default_traj),
        duration=_num(ctx, data.get("duration", base.duration), ["duration"]),
        rtol=_num(ctx, solver.get("rtol", base.rtol), ["solver", "rtol"]),
        atol=_num(ctx, solver.get("atol", base.atol), ["solver", "atol"]),
        seed=_num(ctx, data.get("seed", base.seed), ["seed"], integer=True),
        output_rate=_num(ctx, output.get("rate", base.output_rate), ["output", "rate"]),
        output_dir=str(output.get("dir", base.output_dir)),
    )
    check_config(cfg)
    return cfg


def check_config(cfg: ExperimentConfig) -> None:
    """Cross-field consistency checks; raises :class:`ConfigError`."""
    nq = 2 * cfg.robot.m
    tr = cfg.trajectory
    sizes = {"amplitude": len(tr.amplitude), "f0": len(tr.f0), "phase": len(tr.phase)}
    if tr.kind != "step_sequence":
        for key, size in sizes.items():
            if size not in (0, 1, nq):
                raise ConfigError(f"trajectory.{key}: has {size} entries, robot has {nq} manifold channels")
        if np.ndim(tr.ramp) and len(tr.ramp) not in (1, nq):
            raise ConfigError(f"trajectory.ramp: has {len(tr.ramp)} entries, robot has {nq} manifold channels")
    for k, (t0, t1, target) in enumerate(tr.steps):
        if len(target) != nq:
            raise ConfigError(f"trajectory.steps[{k}].target: has {len(target)} entries, robot needs {nq}")
        if not t1 > t0:
            raise ConfigError(f"trajectory.steps[{k}]: end must be after start")
    if not cfg.duration > 0:
        raise ConfigError("duration: must be > 0")
    if not (cfg.rtol > 0 and cfg.atol > 0):
        raise ConfigError("solver: rtol and atol must be > 0")
    if cfg.rtol < MIN_RTOL:
        raise ConfigError(f"solver.rtol: below {MIN_RTOL:.3g}, unreachable in double precision")
    if not cfg.output_rate > 0:
        raise ConfigError("output.rate: must be > 0")
    ratio = cfg.controller.control_rate / cfg.output_rate
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
        raise ConfigError("output.rate: control_rate must be an integer multiple of it")


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, source=str(path))

