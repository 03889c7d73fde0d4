"""SDIRK2 coefficients, stage bookkeeping and step size control.

The two-stage scheme has diagonal coefficient ``alpha = 1 - sqrt(2)/2`` and is
stiffly accurate, so the second stage value is the new step value.  The embedded
first order solution uses the weights ``(1 - alpha_hat, alpha_hat)`` with
``alpha_hat = 2 - 5/4 sqrt(2)``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, SequencingError


@dataclass(frozen=True)
class SdirkTableau:
    A: tuple
    b: tuple
    b_hat: tuple
    c: tuple
    order: int = 2
    embedded_order: int = 1

    @property
    def stages(self):
        return len(self.b)

    @property
    def alpha(self):
        return self.A[0][0]

    @property
    def c1(self):
        return self.c[0]

    @property
    def error_weights(self):
        return tuple(bj - bh for bj, bh in zip(self.b, self.b_hat))

    def stability_function(self, z):
        """Rational stability function ``R(z)`` of the two-stage scheme."""
        a = self.alpha
        return (1 + z * (1 - 2 * a) + z**2 * (a * a - 2 * a + 0.5)) / (1 - a * z) ** 2


def _sdirk2():
    alpha = 1.0 - math.sqrt(2.0) / 2.0
    alpha_hat = 2.0 - 1.25 * math.sqrt(2.0)
    return SdirkTableau(
        A=((alpha, 0.0), (1.0 - alpha, alpha)),
        b=(1.0 - alpha, alpha),
        b_hat=(1.0 - alpha_hat, alpha_hat),
        c=(alpha, 1.0),
    )


SDIRK2 = _sdirk2()


@dataclass(frozen=True)
class StageContext:
    """Everything a subsolver needs to set up one stage system."""

    stage_index: int
    t_n: float
    dt: float
    dt_prev: float
    tableau: SdirkTableau = SDIRK2
    inner_tol: float = 1e-8

    def __post_init__(self):
        if not 1 <= self.stage_index <= self.tableau.stages:
            raise ConfigurationError(f"stage index {self.stage_index} out of range")
        if not self.dt > 0:
            raise ConfigurationError(f"step size must be positive, got {self.dt}")

    @property
    def a_ii(self):
        i = self.stage_index - 1
        return self.tableau.A[i][i]

    @property
    def c1(self):
        return self.tableau.c1

    @property
    def t_stage(self):
        return self.t_n + self.tableau.c[self.stage_index - 1] * self.dt

    @property
    def dt_aii(self):
        return self.dt * self.a_ii


def compute_starting_vector(u_n, stage_derivatives, tableau, stage_index, dt):
    """Known part ``s_i = u_n + dt * sum_{j<i} a_ij k_j`` of stage ``i`` (1-based)."""
    if len(stage_derivatives) < stage_index - 1:
        raise SequencingError(
            f"stage {stage_index} needs {stage_index - 1} stored stage derivatives, "
            f"got {len(stage_derivatives)}"
        )
    s = np.array(u_n, dtype=float, copy=True)
    row = tableau.A[stage_index - 1]
    for j in range(stage_index - 1):
        s += dt * row[j] * np.asarray(stage_derivatives[j])
    return s


def scaled_error_norm(error, y):
    """RMS of ``error / (1 + |y|)``.

    This equals ``TOL`` times the usual mixed norm with ``atol = rtol = TOL``, so
    the result is directly comparable with ``TOL``.
    """
    error = np.asarray(error, dtype=float)
    if error.size == 0:
        return 0.0
    w = 1.0 + np.abs(np.asarray(y, dtype=float))
    return float(np.sqrt(np.mean((error / w) ** 2)))


def embedded_error(u_new, stage_derivatives, tableau, dt):
    """Scaled norm of ``dt * sum_j (b_j - b_hat_j) k_j``."""
    if len(stage_derivatives) < tableau.stages:
        raise SequencingError("local error requested before all stages were committed")
    err = np.zeros_like(np.asarray(u_new, dtype=float))
    for w, k in zip(tableau.error_weights, stage_derivatives):
        err += dt * w * np.asarray(k)
    return scaled_error_norm(err, u_new)


def aggregate_error(est_fluid, est_structure):
    """Combine the subsolver estimates conservatively (maximum)."""
    if est_fluid < 0 or est_structure < 0:
        raise ConfigurationError("local error estimates must be nonnegative")
    return max(est_fluid, est_structure)


@dataclass(frozen=True)
class StepController:
    """Elementary controller ``dt * safety * (TOL/est)^(1/2)`` with limiter."""

    tol: float
    safety: float = 0.9
    f_min: float = 0.2
    f_max: float = 5.0
    dt_min: float = 1e-12
    dt_max: float = math.inf
    exponent: float = 0.5

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigurationError("controller tolerance must be positive")
        if not 0 < self.safety <= 1:
            raise ConfigurationError("safety factor must lie in (0, 1]")
        if not 0 < self.f_min < 1 < self.f_max:
            raise ConfigurationError("step limiter needs 0 < f_min < 1 < f_max")
        if not 0 < self.dt_min <= self.dt_max:
            raise ConfigurationError("need 0 < dt_min <= dt_max")


def next_step_size(est, dt, ctrl):
    if est < 0 or not dt > 0:
        raise ConfigurationError("need est >= 0 and dt > 0")
    if est == 0:
        factor = ctrl.f_max
    else:
        factor = min(ctrl.f_max, max(ctrl.f_min, ctrl.safety * (ctrl.tol / est) ** ctrl.exponent))
    return min(ctrl.dt_max, max(ctrl.dt_min, dt * factor))
