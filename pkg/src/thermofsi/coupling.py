"""Dirichlet-Neumann fixed-point coupling of one SDIRK stage.

One iteration hands the current interface temperature to the fluid (Dirichlet),
passes the resulting interface heat flux to the structure (Neumann) and takes the
structure's interface temperature, possibly transformed by an accelerator, as
the next iterate.
"""

from dataclasses import dataclass, field

import numpy as np

from .acceleration import ACCELERATORS, Accelerator
from .errors import (
    ConfigurationError,
    CouplingNonConvergence,
    DegenerateScalingError,
)
from .predictors import PREDICTORS
from .subsolver import DIRICHLET, NEUMANN


@dataclass(frozen=True)
class CouplingConfig:
    """Parameters of the coupled time integration.

    ``tol`` is the time integration tolerance; the fixed-point loop stops once
    the interface update is below ``tol / divisor`` relative to the first iterate.
    ``termination`` selects which update is measured: ``"accepted"`` compares
    consecutive (post-acceleration) iterates, ``"raw"`` uses the interface
    residual ``G(x) - x``.
    """

    tol: float = 1e-4
    divisor: float = 5.0
    max_iterations: int = 100
    accelerator: str = "none"
    predictor: str = "none"
    omega0: float = 0.8
    window: int = None
    termination: str = "accepted"
    inner_tol_factor: float = 0.01
    adaptive: bool = True

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigurationError("tol must be positive")
        if not self.divisor > 0:
            raise ConfigurationError("divisor must be positive")
        if self.max_iterations < 2:
            raise ConfigurationError("max_iterations must be at least 2")
        if self.accelerator not in ACCELERATORS:
            raise ConfigurationError(f"unknown accelerator {self.accelerator!r}")
        if self.predictor not in PREDICTORS:
            raise ConfigurationError(f"unknown predictor {self.predictor!r}")
        if self.termination not in ("accepted", "raw"):
            raise ConfigurationError("termination must be 'accepted' or 'raw'")
        if self.window is not None and self.window < 2:
            raise ConfigurationError("history window must hold at least two pairs")

    @property
    def inner_tol(self):
        return self.tol * self.inner_tol_factor


def as_interface_vector(values):
    v = np.atleast_1d(np.asarray(values, dtype=float))
    if v.ndim != 1 or v.size == 0:
        raise ConfigurationError("interface vector must be a non-empty 1D array")
    if not np.all(np.isfinite(v)):
        raise ConfigurationError("interface temperatures must be finite")
    return v


def interface_residual(theta_new, theta_old):
    a = np.atleast_1d(np.asarray(theta_new, dtype=float))
    b = np.atleast_1d(np.asarray(theta_old, dtype=float))
    if a.shape != b.shape:
        raise ConfigurationError(f"interface length mismatch: {a.shape} vs {b.shape}")
    return a - b


def termination_check(r, theta0, cfg):
    """``|r|_2 <= (tol/divisor) |theta0|_2``."""
    ref = float(np.linalg.norm(theta0))
    if ref == 0.0:
        raise DegenerateScalingError("reference interface norm is zero")
    return float(np.linalg.norm(r)) <= cfg.tol / cfg.divisor * ref


def check_roles(fluid, structure):
    """Reject swapped roles: the less conductive side must get the temperature."""
    if fluid.role != DIRICHLET or structure.role != NEUMANN:
        raise ConfigurationError(
            f"fluid must be the Dirichlet side and structure the Neumann side "
            f"(got {fluid.role!r}/{structure.role!r})"
        )
    _, lam_f = fluid.conductivity_range()
    lam_s, _ = structure.conductivity_range()
    if not lam_f < lam_s:
        raise ConfigurationError(
            f"Dirichlet side conductivity {lam_f:g} must be below the Neumann side "
            f"minimum {lam_s:g}; swap the roles"
        )


@dataclass
class StageSolveResult:
    theta: np.ndarray
    iterations: int
    residual_norms: list = field(default_factory=list)
    update_norms: list = field(default_factory=list)
    flux: np.ndarray = None


def gauss_seidel_stage_solve(fluid, structure, ctx, initial_guess, cfg, check=True):
    """Solve the coupled stage system by nonlinear Gauss-Seidel iteration.

    Both subsolvers must already have the stage prepared (or are prepared here
    from ``ctx``).  Returns a :class:`StageSolveResult` whose ``iterations``
    counts fluid/structure solve pairs.  ``residual_norms`` holds the 2-norms of
    the interface residuals ``G(x) - x`` and ``update_norms`` the norms used by
    the termination test.
    """
    if check:
        check_roles(fluid, structure)
    for solver in (fluid, structure):
        if solver.ctx is not ctx:
            solver.prepare_stage(ctx)
    theta0 = as_interface_vector(initial_guess)
    ref = float(np.linalg.norm(theta0))
    if ref == 0.0:
        raise DegenerateScalingError("initial interface guess has zero norm")
    threshold = cfg.tol / cfg.divisor * ref
    acc = Accelerator(cfg.accelerator, omega0=cfg.omega0, window=cfg.window)
    theta = theta0
    result = StageSolveResult(theta0, 0)
    for nu in range(1, cfg.max_iterations + 1):
        flux = fluid.solve_stage(theta)
        raw = as_interface_vector(structure.solve_stage(flux))
        r = interface_residual(raw, theta)
        theta_next = acc(theta, raw)
        update = r if cfg.termination == "raw" else interface_residual(theta_next, theta)
        result.residual_norms.append(float(np.linalg.norm(r)))
        result.update_norms.append(float(np.linalg.norm(update)))
        result.iterations = nu
        result.flux = flux
        theta = theta_next
        if result.update_norms[-1] <= threshold:
            result.theta = theta
            return result
    raise CouplingNonConvergence(cfg.max_iterations, result.update_norms[-1])
