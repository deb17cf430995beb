"""Tendon-driven continuum robot dynamics and control on the Clarke manifold."""
from .clarke import (
    ArcState,
    arc_jacobian,
    arc_to_manifold,
    clarke_matrices,
    forces_to_manifold_torque,
    joints_to_manifold,
    manifold_to_arc,
    manifold_to_joints,
    manifold_torque_to_forces,
)
from .control import (
    ControllerConfig,
    ControllerState,
    SaturationStrategy,
    controller_step,
    saturate_forces,
    tendon_force_pipeline,
)
from .dynamics import (
    DynState,
    EnergyBreakdown,
    ManifoldModel,
    arc_space_terms,
    energies,
    forward_accel,
    manifold_terms,
)
from .errors import (
    ConfigError,
    DomainError,
    IntegrationError,
    ModelError,
    SingularConfigurationError,
    TDCRError,
)
from .kinematics import (
    ModelFlags,
    RobotSpec,
    SegmentSpec,
    angular_velocity_jacobian,
    backbone_point,
    chain_frames,
    prototype_robot,
    point_jacobian,
    world_point,
)
from .sim import TrajectoryLog, TrajectorySpec, chirp, free_response, rmse, run_tracking_experiment

__version__ = "0.1.0"
