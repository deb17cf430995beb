"""Post-processing of closed-loop logs: energy split and force magnitudes."""
from __future__ import annotations

import numpy as np

from .dynamics import EnergyBreakdown, ManifoldModel
from .sim import TrajectoryLog

ENERGY_FIELDS = tuple(f for f in EnergyBreakdown.__dataclass_fields__)


def energy_table(model: ManifoldModel, log: TrajectoryLog):
    """Per-sample energy components.

    Returns ``(columns, data)``; columns are ``t``, every component of
    :class:`EnergyBreakdown`, then ``T_trans`` and ``T_rot``. Components are
    evaluated regardless of which terms the model uses in its dynamics.
    """
    cols = ["t", *ENERGY_FIELDS, "T_trans", "T_rot"]
    data = np.empty((len(log), len(cols)))
    for k, (q, qd) in enumerate(zip(log.qm, log.qm_dot)):
        e = model.energies(q, qd)
        data[k] = (log.t[k], *(getattr(e, f) for f in ENERGY_FIELDS), e.T_trans, e.T_rot)
    return cols, data


def force_table(model: ManifoldModel, log: TrajectoryLog):
    """Applied manifold force against the Coriolis and centrifugal force ``C(q, qd) qd``.

    Returns ``(columns, data)`` with per-channel values followed by the
    norms ``tau_norm`` and ``coriolis_norm``.
    """
    nq = log.qm.shape[1]
    cols = ["t"]
    for i in range(1, nq // 2 + 1):
        cols += [f"tauRe_{i}", f"tauIm_{i}"]
    for i in range(1, nq // 2 + 1):
        cols += [f"corRe_{i}", f"corIm_{i}"]
    cols += ["tau_norm", "coriolis_norm"]
    data = np.empty((len(log), len(cols)))
    for k, (q, qd) in enumerate(zip(log.qm, log.qm_dot)):
        cq = model.coriolis_matrix(q, qd) @ qd
        data[k] = (log.t[k], *log.tau[k], *cq, np.linalg.norm(log.tau[k]), np.linalg.norm(cq))
    return cols, data


def write_table(path, cols, data) -> None:
    np.savetxt(path, data, delimiter=",", header=",".join(cols), comments="", fmt="%.17g")
