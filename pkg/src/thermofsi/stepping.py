"""Partitioned adaptive SDIRK2 master loop."""

import dataclasses
import logging
from dataclasses import dataclass, field

import numpy as np

from .coupling import check_roles, gauss_seidel_stage_solve
from .errors import (
    ConfigurationError,
    CouplingNonConvergence,
    StepSizeUnderflow,
    SubsolverError,
)
from .predictors import TimeHistory, predict
from .sdirk import SDIRK2, StageContext, StepController, aggregate_error, next_step_size

log = logging.getLogger(__name__)


@dataclass
class StepResult:
    accepted: bool
    t_n: float
    dt: float
    dt_next: float
    error_estimate: float
    stage_iterations: list = field(default_factory=list)
    residual_norms: list = field(default_factory=list)
    theta_stage1: np.ndarray = None
    theta_end: np.ndarray = None
    failure: str = ""

    @property
    def iterations(self):
        return sum(self.stage_iterations)


def sdirk2_step(fluid, structure, t_n, dt, dt_prev, cfg, history=None, controller=None,
                tableau=SDIRK2, force_reject=False):
    """Attempt one coupled SDIRK2 step from ``t_n`` with size ``dt``.

    On acceptance both subsolvers advance to ``t_n + dt``.  On rejection (error
    estimate above tolerance, coupling failure, or ``force_reject``) both are
    restored bitwise to their state at ``t_n`` and ``dt_next`` is the proposed
    retry size.  In fixed step mode (``cfg.adaptive`` false) the error estimate is
    computed and reported but never rejects.
    """
    controller = controller or StepController(cfg.tol)
    dt_prev = dt if dt_prev is None else dt_prev
    for s in (fluid, structure):
        s.begin_step()
    result = StepResult(False, t_n, dt, dt, float("nan"))
    hist = None
    if history is not None:
        hist = dataclasses.replace(history, dt_n=dt, theta_stage1=None)

    for i in range(1, tableau.stages + 1):
        ctx = StageContext(i, t_n, dt, dt_prev, tableau, inner_tol=cfg.inner_tol)
        fluid.prepare_stage(ctx)
        structure.prepare_stage(ctx)
        guess = None
        if hist is not None:
            guess = predict(cfg.predictor, i, hist, tableau.c1)
        if guess is None:
            guess = structure.starting_interface_values()
        try:
            stage = gauss_seidel_stage_solve(fluid, structure, ctx, guess, cfg, check=False)
        except (CouplingNonConvergence, SubsolverError) as exc:
            if isinstance(exc, CouplingNonConvergence):
                result.stage_iterations.append(exc.iterations)
            result.failure = str(exc)
            fluid.reject_step()
            structure.reject_step()
            result.dt_next = dt / 2.0
            if result.dt_next < controller.dt_min:
                raise StepSizeUnderflow(f"step size {result.dt_next:g} below dt_min") from exc
            if not cfg.adaptive:
                raise
            return result
        fluid.record_stage_derivative()
        structure.record_stage_derivative()
        result.stage_iterations.append(stage.iterations)
        result.residual_norms.append(stage.residual_norms)
        if i == 1:
            result.theta_stage1 = stage.theta
            if hist is not None:
                hist.theta_stage1 = stage.theta
        result.theta_end = stage.theta

    est = aggregate_error(fluid.estimate_local_error(), structure.estimate_local_error())
    result.error_estimate = est
    result.dt_next = next_step_size(est, dt, controller)
    result.accepted = (not cfg.adaptive or est <= cfg.tol) and not force_reject
    if result.accepted:
        fluid.accept_step()
        structure.accept_step()
    else:
        fluid.reject_step()
        structure.reject_step()
        if force_reject:
            result.failure = "forced"
        if cfg.adaptive and dt <= controller.dt_min:
            raise StepSizeUnderflow(f"step rejected at the minimum step size {dt:g}")
    return result


@dataclass
class RunRecord:
    """Log of a complete coupled simulation."""

    label: str
    tol: float
    accelerator: str
    predictor: str
    adaptive: bool
    steps: list = field(default_factory=list)
    final_time: float = 0.0
    final_structure: np.ndarray = None
    final_fluid: np.ndarray = None
    end_error: float = float("nan")
    dnf: bool = False
    failure: str = ""

    @property
    def total_iterations(self):
        return sum(s.iterations for s in self.steps)

    @property
    def accepted_steps(self):
        return sum(1 for s in self.steps if s.accepted)

    @property
    def rejections(self):
        return sum(1 for s in self.steps if not s.accepted)

    @property
    def step_sizes(self):
        return [s.dt for s in self.steps if s.accepted]


def simulate(fluid, structure, cfg, t_end, dt0, controller=None, label="", max_steps=1_000_000):
    """Integrate the coupled problem from the subsolvers' current state to ``t_end``.

    Adaptive runs start from ``dt0`` and are steered by ``controller``; fixed
    runs use ``dt0`` throughout (the last step is shortened to hit ``t_end``).
    """
    if not t_end > 0 or not dt0 > 0:
        raise ConfigurationError("t_end and dt0 must be positive")
    check_roles(fluid, structure)
    controller = controller or StepController(cfg.tol, dt_max=t_end)
    record = RunRecord(label, cfg.tol, cfg.accelerator, cfg.predictor, cfg.adaptive)
    t0 = t = structure.t
    theta = structure.interface_values(structure.u)
    history = TimeHistory(theta_n=theta, dt_n=dt0) if cfg.predictor != "none" else None
    dt = dt0
    dt_prev = None
    n_fixed = 0
    eps = 1e-12 * t_end
    while t < t_end - eps:
        if len(record.steps) >= max_steps:
            raise StepSizeUnderflow(f"step limit {max_steps} reached at t={t:g}")
        if cfg.adaptive:
            dt = min(dt, t_end - t)
        else:
            dt = min(dt0, t_end - t)
        try:
            step = sdirk2_step(fluid, structure, t, dt, dt_prev, cfg, history, controller)
        except (CouplingNonConvergence, SubsolverError, StepSizeUnderflow) as exc:
            record.dnf = True
            record.failure = str(exc)
            log.warning("run %s did not finish: %s", label, exc)
            break
        record.steps.append(step)
        if step.accepted:
            n_fixed += 1
            t = t + dt if cfg.adaptive else min(t_end, t0 + n_fixed * dt0)
            if history is not None:
                history = history.advance(step.theta_stage1, step.theta_end, dt)
            dt_prev = dt
        if cfg.adaptive:
            dt = step.dt_next
    record.final_time = t
    record.final_structure = structure.u.copy()
    record.final_fluid = fluid.u.copy()
    return record
