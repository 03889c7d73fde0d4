"""Initial guesses for the stage fixed-point iterations from the time history.

Only interface temperatures are extrapolated.  The quadratic predictors are
evaluated from node/value pairs in Lagrange form; :func:`lagrange_weights` is
the single place where the weights are formed.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, SequencingError

PREDICTORS = ("none", "linear", "quadratic")


@dataclass
class TimeHistory:
    """Interface temperatures of the last accepted steps.

    ``theta_prev`` lives at ``t_n - dt_prev``, ``theta_half_prev`` at
    ``t_n - dt_prev + c1*dt_prev`` (stage 1 of the previous step) and
    ``theta_n`` at ``t_n``.  ``theta_stage1`` is filled in once stage 1 of the
    current step has converged.
    """

    theta_n: np.ndarray
    dt_n: float
    theta_prev: Optional[np.ndarray] = None
    theta_half_prev: Optional[np.ndarray] = None
    dt_prev: Optional[float] = None
    theta_stage1: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.dt_n > 0:
            raise ConfigurationError("dt_n must be positive")
        if self.dt_prev is not None and not self.dt_prev > 0:
            raise ConfigurationError("dt_prev must be positive")
        n = np.size(self.theta_n)
        for v in (self.theta_prev, self.theta_half_prev, self.theta_stage1):
            if v is not None and np.size(v) != n:
                raise ConfigurationError("history vectors must share one length")

    def advance(self, theta_stage1, theta_new, dt):
        """History after accepting a step of size ``dt`` ending in ``theta_new``."""
        return TimeHistory(
            theta_n=np.asarray(theta_new, dtype=float),
            dt_n=dt,
            theta_prev=self.theta_n,
            theta_half_prev=np.asarray(theta_stage1, dtype=float),
            dt_prev=dt,
        )


def lagrange_weights(nodes, target):
    nodes = [float(t) for t in nodes]
    w = []
    for i, ti in enumerate(nodes):
        num = 1.0
        den = 1.0
        for j, tj in enumerate(nodes):
            if j != i:
                num *= target - tj
                den *= ti - tj
        if den == 0.0:
            raise ConfigurationError("coincident interpolation nodes")
        w.append(num / den)
    return w


def _combine(weights, values):
    return sum(w * np.asarray(v, dtype=float) for w, v in zip(weights, values))


def _has_two_level_history(h):
    return h.theta_prev is not None and h.dt_prev is not None


def stage1_linear_weights(dt_prev, dt_n, c1):
    ratio = c1 * dt_n / dt_prev
    return 1.0 + ratio, -ratio


def predict_stage1_linear(h, c1):
    """Line through ``(t_{n-1}, theta_prev)`` and ``(t_n, theta_n)`` at ``t_n + c1 dt_n``."""
    if not _has_two_level_history(h):
        return np.array(h.theta_n, dtype=float)
    w_n, w_prev = stage1_linear_weights(h.dt_prev, h.dt_n, c1)
    return _combine((w_n, w_prev), (h.theta_n, h.theta_prev))


def stage1_quadratic_weights(dt_prev, dt_n, c1):
    """Weights of ``(theta_prev, theta_half_prev, theta_n)``."""
    nodes = (-dt_prev, -dt_prev + c1 * dt_prev, 0.0)
    return lagrange_weights(nodes, c1 * dt_n)


def predict_stage1_quadratic(h, c1):
    if not _has_two_level_history(h):
        return np.array(h.theta_n, dtype=float)
    if h.theta_half_prev is None:
        return predict_stage1_linear(h, c1)
    w = stage1_quadratic_weights(h.dt_prev, h.dt_n, c1)
    return _combine(w, (h.theta_prev, h.theta_half_prev, h.theta_n))


def stage2_linear_weights(c1):
    return 1.0 - 1.0 / c1, 1.0 / c1


def _require_stage1(h):
    if h.theta_stage1 is None:
        raise SequencingError("stage 2 prediction needs the converged stage 1 value")


def predict_stage2_linear(h, c1):
    """Line through ``(t_n, theta_n)`` and ``(t_n + c1 dt_n, theta_stage1)`` at ``t_{n+1}``."""
    _require_stage1(h)
    w_n, w_1 = stage2_linear_weights(c1)
    return _combine((w_n, w_1), (h.theta_n, h.theta_stage1))


def stage2_quadratic_weights(dt_prev, dt_n, c1):
    """Weights of ``(theta_prev, theta_n, theta_stage1)``."""
    nodes = (-dt_prev, 0.0, c1 * dt_n)
    return lagrange_weights(nodes, dt_n)


def predict_stage2_quadratic(h, c1):
    _require_stage1(h)
    if not _has_two_level_history(h):
        return predict_stage2_linear(h, c1)
    w = stage2_quadratic_weights(h.dt_prev, h.dt_n, c1)
    return _combine(w, (h.theta_prev, h.theta_n, h.theta_stage1))


def predict(kind, stage_index, h, c1):
    """Dispatch on predictor name; ``"none"`` returns ``None`` (use starting vector)."""
    if kind == "none":
        return None
    if kind not in PREDICTORS:
        raise ConfigurationError(f"unknown predictor {kind!r}")
    table = {
        ("linear", 1): predict_stage1_linear,
        ("linear", 2): predict_stage2_linear,
        ("quadratic", 1): predict_stage1_quadratic,
        ("quadratic", 2): predict_stage2_quadratic,
    }
    return table[kind, stage_index](h, c1)
