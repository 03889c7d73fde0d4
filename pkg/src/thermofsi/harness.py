"""Experiment runner: single-stage residual study, iteration-count matrix and the
fixed versus adaptive comparison on the plate cooling problem.

Each (TOL, method) cell builds its own solver instances, so cells can run in a
process pool.  Results come back in submission order, which keeps the output
independent of ``jobs``.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .coupling import CouplingConfig, check_roles, gauss_seidel_stage_solve
from .errors import CouplingNonConvergence, SubsolverError
from .fluid import FluidSurrogate
from .material import ConstantMaterial, Material51CrV4
from .sdirk import StageContext, StepController
from .stepping import simulate
from .structure import StructureMesh, StructureSolver

log = logging.getLogger(__name__)


def build_material(p):
    if p.material == "constant":
        return ConstantMaterial(p.density, p.heat_capacity, p.conductivity)
    return Material51CrV4(units=p.units)


def build_problem(cfg, stiffness=None):
    """Fresh ``(fluid, structure)`` pair at the initial state."""
    sp = cfg.structure
    mesh = StructureMesh(sp.length, sp.elements, sp.order)
    structure = StructureSolver(mesh, build_material(sp), sp.initial_temperature,
                                jacobian=sp.jacobian)
    overrides = {} if stiffness is None else {"stiffness": stiffness}
    fluid = FluidSurrogate(cfg.fluid.surrogate_config(**overrides),
                           structure.interface_values(structure.u))
    check_roles(fluid, structure)
    return fluid, structure


def coupling_config(cfg, tol, accelerator="none", predictor="none", adaptive=True, **kw):
    cp = cfg.coupling
    params = dict(tol=tol, divisor=cp.divisor, max_iterations=cp.max_iterations,
                  accelerator=accelerator, predictor=predictor, omega0=cp.omega0,
                  window=cp.window, termination=cp.termination,
                  inner_tol_factor=cp.inner_tol_factor, adaptive=adaptive)
    params.update(kw)
    return CouplingConfig(**params)


def step_controller(cfg, tol):
    c = cfg.controller
    dt_max = cfg.end_time if c.dt_max is None else c.dt_max
    return StepController(tol, safety=c.safety, f_min=c.f_min, f_max=c.f_max,
                          dt_min=c.dt_min, dt_max=dt_max)


def method_label(accelerator, predictor):
    if predictor == "none":
        return accelerator
    if accelerator == "none":
        return predictor
    return f"{accelerator}+{predictor}"


def method_grid(cfg):
    """(label, accelerator, predictor) triples of the matrix columns."""
    if cfg.combine:
        pairs = [(a, p) for a in cfg.accelerators for p in cfg.predictors]
    else:
        pairs = [(a, "none") for a in cfg.accelerators]
        pairs += [("none", p) for p in cfg.predictors if p != "none"]
        if "none" not in cfg.accelerators and "none" in cfg.predictors:
            pairs.insert(0, ("none", "none"))
    seen = []
    for a, p in pairs:
        if (a, p) not in seen:
            seen.append((a, p))
    return [(method_label(a, p), a, p) for a, p in seen]


def run_cell(cfg, tol, accelerator="none", predictor="none", adaptive=True, dt0=None, label=None):
    """One complete coupled simulation, returned as a RunRecord (DNF on failure)."""
    fluid, structure = build_problem(cfg)
    ccfg = coupling_config(cfg, tol, accelerator, predictor, adaptive)
    dt0 = cfg.dt0 if dt0 is None else dt0
    label = method_label(accelerator, predictor) if label is None else label
    return simulate(fluid, structure, ccfg, cfg.end_time, dt0,
                    controller=step_controller(cfg, tol), label=label)


def _run_cell_args(args):
    cfg, kw = args
    return run_cell(cfg, **kw)


def run_cells(cfg, cells, jobs=1):
    """Run a list of ``run_cell`` keyword dicts, preserving order."""
    if jobs is None or jobs <= 1 or len(cells) <= 1:
        return [run_cell(cfg, **kw) for kw in cells]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_cell_args, [(cfg, kw) for kw in cells]))


def relative_error(field, reference):
    if field is None or reference is None:
        return math.nan
    return float(np.linalg.norm(field - reference) / np.linalg.norm(reference))


def run_reference(cfg):
    """Tight tolerance run that defines the global error; a DNF leaves errors undefined."""
    ref = run_cell(cfg, cfg.reference_tol, label="reference")
    if ref.dnf:
        log.warning("reference run at TOL=%g failed: %s", cfg.reference_tol, ref.failure)
    return ref


def end_error(rec, reference):
    if rec.dnf or reference.dnf:
        return math.nan
    return relative_error(rec.final_structure, reference.final_structure)


def _attach_errors(records, reference):
    for rec in records:
        rec.end_error = end_error(rec, reference)
    return records


# -- single stage study -------------------------------------------------------

@dataclass(frozen=True)
class StageStudyRow:
    dt: float
    method: str
    iteration: int
    residual_norm: float


def stage_residuals(cfg, accelerator, dt):
    """Residual norms of the first stage of the first step for one accelerator."""
    st = cfg.study
    fluid, structure = build_problem(cfg, stiffness=st.stiffness)
    ccfg = coupling_config(cfg, st.tol, accelerator, max_iterations=st.max_iterations)
    for s in (fluid, structure):
        s.begin_step()
    ctx = StageContext(1, 0.0, dt, dt, inner_tol=st.tol)
    fluid.prepare_stage(ctx)
    structure.prepare_stage(ctx)
    try:
        res = gauss_seidel_stage_solve(fluid, structure, ctx,
                                       structure.starting_interface_values(), ccfg)
    except (CouplingNonConvergence, SubsolverError) as exc:
        log.warning("stage study %s dt=%g stopped: %s", accelerator, dt, exc)
        return []
    return res.residual_norms


def run_single_stage_study(cfg):
    rows = []
    for dt in cfg.study.dts:
        for acc in cfg.accelerators:
            for k, r in enumerate(stage_residuals(cfg, acc, dt), start=1):
                rows.append(StageStudyRow(dt, acc, k, r))
    return rows


# -- iteration count matrix ---------------------------------------------------

@dataclass
class MatrixResult:
    records: list
    reference: object

    @property
    def dnf(self):
        return self.reference.dnf or any(r.dnf for r in self.records)


def run_iteration_count_matrix(cfg, jobs=1, reference=None):
    cells = [dict(tol=tol, accelerator=a, predictor=p, label=label)
             for tol in cfg.sorted_tols for label, a, p in method_grid(cfg)]
    records = run_cells(cfg, cells, jobs)
    reference = reference or run_reference(cfg)
    return MatrixResult(_attach_errors(records, reference), reference)


# -- fixed versus adaptive ----------------------------------------------------

@dataclass
class FixedAdaptiveRow:
    tol: float
    adaptive: object
    fixed: object
    fixed_dt: float

    @property
    def ratio(self):
        if self.fixed is None or self.adaptive.dnf or self.fixed.dnf:
            return math.nan
        return self.fixed.total_iterations / self.adaptive.total_iterations


@dataclass
class FixedAdaptiveResult:
    rows: list
    reference: object

    @property
    def records(self):
        out = []
        for row in self.rows:
            out.append(row.adaptive)
            if row.fixed is not None:
                out.append(row.fixed)
        return out

    @property
    def dnf(self):
        return self.reference.dnf or any(r.adaptive.dnf or r.fixed is None for r in self.rows)


def match_fixed_step(cfg, tol, target_error, reference, max_steps=4096):
    """Smallest fixed step count whose error is within a factor two of the target.

    The step count doubles until the error bound holds, then bisection finds
    the smallest count in the last bracket that still satisfies it.  Returns
    ``(record, n_steps)`` or ``(None, None)`` when no count up to ``max_steps``
    works.
    """
    bound = 2.0 * target_error
    cache = {}

    def trial(n):
        if n not in cache:
            rec = run_cell(cfg, tol, adaptive=False, dt0=cfg.end_time / n, label="fixed")
            rec.end_error = end_error(rec, reference)
            cache[n] = rec
        rec = cache[n]
        return rec, (not rec.dnf and rec.end_error <= bound)

    lo, hi = 0, 1
    while not trial(hi)[1]:
        lo, hi = hi, hi * 2
        if hi > max_steps:
            return None, None
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if trial(mid)[1]:
            hi = mid
        else:
            lo = mid
    return cache[hi], hi


def run_fixed_vs_adaptive(cfg, jobs=1, reference=None):
    reference = reference or run_reference(cfg)
    adaptive = run_cells(cfg, [dict(tol=t, label="adaptive") for t in cfg.sorted_tols], jobs)
    _attach_errors(adaptive, reference)
    rows = []
    for tol, rec in zip(cfg.sorted_tols, adaptive):
        fixed, n = (None, None)
        if not (rec.dnf or reference.dnf):
            fixed, n = match_fixed_step(cfg, tol, rec.end_error, reference)
        rows.append(FixedAdaptiveRow(tol, rec, fixed, cfg.end_time / n if n else math.nan))
    return FixedAdaptiveResult(rows, reference)
