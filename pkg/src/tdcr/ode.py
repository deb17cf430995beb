"""Adaptive Dormand-Prince 5(4) integration with dense output.

:class:`DormandPrince` keeps its step size between calls to
:meth:`DormandPrince.advance`, so a sampled-data loop can integrate
exactly up to each controller tick, change the held input, and continue.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import IntegrationError, ModelError

# Butcher tableau (Dormand & Prince 1980); the last stage is FSAL
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# difference between the 5th and embedded 4th order weights (7 stages incl. FSAL)
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# continuous extension: y(t0 + x h) = y0 + h * K^T P [x, x^2, x^3, x^4]
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
MIN_STEP = 1e-12
# tighter relative tolerances cannot be met in double precision
MIN_RTOL = 100 * np.finfo(float).eps


class DormandPrince:
    """Stateful DP5(4) stepper.

    Parameters
    ----------
    fun : callable
        ``fun(t, y) -> dy/dt``.
    t0, y0 :
        Initial time and state.
    rtol, atol : float
        Mixed error tolerance per component: ``atol + rtol * |y|``.
    max_step : float
        Upper bound on the step size.
    """

    def __init__(self, fun, t0, y0, rtol=1e-6, atol=1e-9, max_step=np.inf, first_step=None):
        if not (rtol > 0 and np.all(np.asarray(atol) > 0)):
            raise ValueError("rtol and atol must be positive")
        self.fun = fun
        self.t = float(t0)
        self.y = np.array(y0, dtype=float)
        self.rtol = max(rtol, MIN_RTOL)
        self.atol = atol
        self.max_step = max_step
        self.nfev = 0
        self.naccept = 0
        self.nreject = 0
        self._f = None
        self.h = first_step
        self._K = np.empty((7, self.y.size))
        self._last = None  # (t_old, h, y_old, K) of the last accepted step

    def _eval(self, t, y):
        self.nfev += 1
        return np.asarray(self.fun(t, y), dtype=float)

    def reset_rhs(self, fun=None):
        """Drop the cached derivative, e.g. after the held input changed."""
        if fun is not None:
            self.fun = fun
        self._f = None

    def _initial_step(self, f0):
        # Hairer, Norsett & Wanner, II.4
        scale = self.atol + np.abs(self.y) * self.rtol
        d0 = np.sqrt(np.mean((self.y / scale) ** 2))
        d1 = np.sqrt(np.mean((f0 / scale) ** 2))
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        f1 = self._eval(self.t + h0, self.y + h0 * f0)
        d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
        if max(d1, d2) <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** (1 / 5)
        return min(100 * h0, h1, self.max_step)

    def _try_step(self, h):
        t, y, K = self.t, self.y, self._K
        K[0] = self._f
        for s in range(1, 6):
            K[s] = self._eval(t + _C[s] * h, y + h * (_A[s] @ K[:s]))
        y_new = y + h * (_B @ K[:6])
        K[6] = self._eval(t + h, y_new)
        err = h * (_E @ K)
        scale = self.atol + self.rtol * np.maximum(np.abs(y), np.abs(y_new))
        return y_new, float(np.sqrt(np.mean((err / scale) ** 2)))

    def step(self, t_limit=np.inf):
        """Take one accepted step, not passing ``t_limit``. Returns the new time."""
        if self._f is None:
            self._f = self._eval(self.t, self.y)
        if self.h is None:
            self.h = self._initial_step(self._f)
        h = min(self.h, self.max_step)
        clipped = False
        if self.t + h >= t_limit:
            h = t_limit - self.t
            clipped = True
        while True:
            if h < MIN_STEP:
                raise IntegrationError(
                    f"step size {h:.3g} s below {MIN_STEP:g} s at t = {self.t:.9g} s", t=self.t, y=self.y.copy()
                )
            try:
                y_new, err = self._try_step(h)
            except ModelError:
                # a trial stage left the model's valid region; retry shorter
                err = np.inf
            if np.isfinite(err) and err <= 1.0:
                break
            self.nreject += 1
            if not np.isfinite(err):
                factor = MIN_FACTOR
            else:
                factor = max(MIN_FACTOR, SAFETY * err ** -0.2)
            h *= factor
            clipped = False
        factor = MAX_FACTOR if err == 0 else min(MAX_FACTOR, SAFETY * err ** -0.2)
        # a step shortened to hit t_limit says nothing about the achievable size
        self.h = max(self.h, h * factor) if clipped else h * factor
        self._last = (self.t, h, self.y, self._K.copy())
        self.t = t_limit if clipped else self.t + h
        self.y = y_new
        self._f = self._K[6].copy()
        self.naccept += 1
        return self.t

    def advance(self, t_target):
        """Integrate up to exactly ``t_target`` and return the state there."""
        while self.t < t_target:
            self.step(t_target)
        return self.y

    def dense(self, t):
        """Interpolate inside the last accepted step (4th order)."""
        t_old, h, y_old, K = self._last
        x = (np.asarray(t, dtype=float) - t_old) / h
        powers = np.stack([x, x**2, x**3, x**4])
        Q = K.T @ _P
        return (y_old[:, None] + h * (Q @ powers)).T if np.ndim(t) else y_old + h * (Q @ powers)


@dataclass
class OdeResult:
    t: np.ndarray
    y: np.ndarray
    nfev: int
    naccept: int
    nreject: int
    steps: list = field(default_factory=list, repr=False)


def integrate_dp45(fun, t_span, y0, rtol=1e-6, atol=1e-9, t_eval=None, max_step=np.inf) -> OdeResult:
    """Integrate ``y' = fun(t, y)`` over ``t_span`` with adaptive DP5(4).

    If ``t_eval`` is given the solution is sampled there via the continuous
    extension; otherwise the accepted step points are returned.
    """
    t0, t1 = map(float, t_span)
    if not t1 > t0:
        raise ValueError("t_span must be increasing")
    solver = DormandPrince(fun, t0, y0, rtol=rtol, atol=atol, max_step=max_step)
    if t_eval is None:
        ts, ys = [t0], [solver.y.copy()]
        while solver.t < t1:
            ts.append(solver.step(t1))
            ys.append(solver.y.copy())
        return OdeResult(np.array(ts), np.array(ys), solver.nfev, solver.naccept, solver.nreject)
    t_eval = np.asarray(t_eval, dtype=float)
    if np.any(np.diff(t_eval) < 0) or t_eval[0] < t0 or t_eval[-1] > t1:
        raise ValueError("t_eval must be sorted and inside t_span")
    out = np.empty((t_eval.size, solver.y.size))
    k = 0
    while k < t_eval.size and t_eval[k] == t0:
        out[k] = solver.y
        k += 1
    while k < t_eval.size:
        solver.step(t1)
        while k < t_eval.size and t_eval[k] <= solver.t:
            out[k] = solver.y if t_eval[k] == solver.t else solver.dense(t_eval[k])
            k += 1
    return OdeResult(t_eval, out, solver.nfev, solver.naccept, solver.nreject)
