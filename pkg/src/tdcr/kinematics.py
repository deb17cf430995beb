"""Constant-curvature kinematics of multi-segment TDCRs in Clarke coordinates.

Each segment bends as a circular arc. The rotation of the frame at arc
length ``s`` is ``R_z(phi) R_y(theta*s/ell) R_z(-phi)``, which the compiled
kernel in :mod:`tdcr._cc` evaluates as a smooth function of the Clarke
coordinates so that straight segments need no special casing.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from . import _cc
from .errors import DomainError


@dataclass(frozen=True)
class SegmentSpec:
    """Geometry, material and damping of one segment (SI units).

    Defaults describe the single-segment, five-tendon prototype: a 0.2 m
    Nitinol backbone of 1 mm diameter with ten 0.81 g spacer disks whose
    tendon holes lie on a 7 mm circle. Tendon properties default to zero
    (massless, no bending stiffness).
    """

    length: float = 0.2
    disk_count: int = 10
    disk_radius: float = 7e-3
    disk_mass: float = 0.81e-3
    backbone_density: float = 6400.0
    backbone_diameter: float = 1e-3
    backbone_modulus: float = 58e6
    tendon_density: float = 0.0
    tendon_area: float = 0.0
    tendon_modulus: float = 0.0
    tendon_second_moment: float = 0.0
    damping: float = 11.27e-4

    def __post_init__(self):
        positive = ("length", "disk_radius", "disk_mass", "backbone_density", "backbone_diameter",
                    "backbone_modulus")
        for name in positive:
            if not getattr(self, name) > 0:
                raise DomainError(f"segment {name} must be > 0, got {getattr(self, name)!r}")
        if int(self.disk_count) != self.disk_count or self.disk_count < 1:
            raise DomainError(f"disk_count must be a positive integer, got {self.disk_count!r}")
        for name in ("tendon_density", "tendon_area", "tendon_modulus", "tendon_second_moment",
                     "damping"):
            if getattr(self, name) < 0:
                raise DomainError(f"segment {name} must be >= 0, got {getattr(self, name)!r}")

    @property
    def disk_spacing(self) -> float:
        return self.length / self.disk_count

    @property
    def backbone_area(self) -> float:
        return np.pi * self.backbone_diameter**2 / 4.0

    @property
    def backbone_second_moment(self) -> float:
        return np.pi * self.backbone_diameter**4 / 64.0


@dataclass(frozen=True)
class ModelFlags:
    include_rotational_energy: bool = False
    include_tendon_energy: bool = False
    include_coriolis: bool = False


@dataclass(frozen=True)
class RobotSpec:
    """An m-segment robot with ``tendon_count`` tendons per segment.

    Gravity acts along the -z axis of the base frame; the backbone leaves
    the base along +z.
    """

    segments: tuple = (SegmentSpec(),)
    tendon_count: int = 5
    gravity: float = 9.81
    flags: ModelFlags = field(default_factory=ModelFlags)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise DomainError("a robot needs at least one segment")
        if int(self.tendon_count) != self.tendon_count or self.tendon_count < 3:
            raise DomainError(f"tendon_count must be an integer >= 3, got {self.tendon_count!r}")
        if self.gravity < 0:
            raise DomainError("gravity magnitude must be >= 0")

    @property
    def m(self) -> int:
        return len(self.segments)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([sg.length for sg in self.segments])

    @property
    def radii(self) -> np.ndarray:
        return np.array([sg.disk_radius for sg in self.segments])

    def with_flags(self, **kw) -> "RobotSpec":
        return replace(self, flags=replace(self.flags, **kw))


def prototype_robot(m: int = 1, **flags) -> RobotSpec:
    """Robot with ``m`` identical prototype segments and five tendons each."""
    return RobotSpec(segments=(SegmentSpec(),) * m, tendon_count=5, flags=ModelFlags(**flags))


class Frame(NamedTuple):
    position: np.ndarray
    rotation: np.ndarray


def _flat_qm(robot, qm):
    qm = np.asarray(qm, dtype=float).reshape(-1)
    if qm.shape[0] != 2 * robot.m:
        raise DomainError(f"expected {2 * robot.m} Clarke coordinates, got {qm.shape[0]}")
    return qm


def _eval(robot, qm, i, s):
    if not 0 <= i < robot.m:
        raise DomainError(f"segment index {i} out of range for {robot.m} segments")
    ell = robot.segments[i].length
    if not -1e-12 <= s <= ell * (1 + 1e-12):
        raise DomainError(f"arc length {s} outside [0, {ell}]")
    s = min(max(s, 0.0), ell)
    qm = _flat_qm(robot, qm)
    return _cc.robot_points(qm, robot.lengths, robot.radii, np.array([i]), np.array([s]))


def backbone_point(seg: SegmentSpec, qm_i, s: float) -> Frame:
    """Frame at arc length ``s`` of a single segment, relative to its base."""
    robot = RobotSpec(segments=(seg,))
    pos, rot, *_ = _eval(robot, qm_i, 0, s)
    return Frame(pos[0], rot[0])


def chain_frames(robot: RobotSpec, qm) -> list:
    """Base frame of every segment (segment 0 at the origin) followed by the tip frame."""
    qm = _flat_qm(robot, qm)
    *_, bpos, brot = _cc.robot_points(qm, robot.lengths, robot.radii, np.zeros(0, dtype=np.int64),
                                      np.zeros(0))
    return [Frame(bpos[k], brot[k]) for k in range(robot.m + 1)]


def world_point(robot: RobotSpec, qm, i: int, s: float) -> Frame:
    """Frame at arc length ``s`` of segment ``i`` in the robot base frame."""
    pos, rot, *_ = _eval(robot, qm, i, s)
    return Frame(pos[0], rot[0])


def point_jacobian(robot: RobotSpec, qm, i: int, s: float) -> np.ndarray:
    """d(world position of point s on segment i)/d(q_M), shape (3, 2m)."""
    _, _, jp, *_ = _eval(robot, qm, i, s)
    return jp[0]


def angular_velocity_jacobian(robot: RobotSpec, qm, i: int, s: float) -> np.ndarray:
    """Map from Clarke rates to the body-frame angular velocity at point s, shape (3, 2m)."""
    _, _, _, jw, *_ = _eval(robot, qm, i, s)
    return jw[0]


def sample_points(robot: RobotSpec, qm, seg, s):
    """Vectorized evaluation: positions, rotations and both Jacobians at many points.

    ``seg`` must be sorted ascending.
    """
    qm = _flat_qm(robot, qm)
    seg = np.asarray(seg, dtype=np.int64)
    s = np.asarray(s, dtype=float)
    if seg.size and np.any(np.diff(seg) < 0):
        raise DomainError("segment indices must be sorted")
    pos, rot, jp, jw, _, _ = _cc.robot_points(qm, robot.lengths, robot.radii, seg, s)
    return pos, rot, jp, jw
