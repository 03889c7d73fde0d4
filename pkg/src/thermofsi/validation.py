"""Analytic-oracle checks run by ``thermofsi validate``.

Each check compares library output with an independently computed closed-form
value and returns a :class:`Check`.  Random cases draw from
``numpy.random.default_rng(seed)``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .acceleration import AitkenState, IterationHistory, aitken_update, mpe_extrapolate, rre_extrapolate
from .coupling import CouplingConfig
from .fluid import FluidSurrogate, FluidSurrogateConfig
from .material import ConstantMaterial, cp1_eval, cp2_eval, cp_eval, lambda_eval
from .predictors import TimeHistory, predict
from .sdirk import SDIRK2, StepController
from .stepping import sdirk2_step, simulate
from .structure import StructureMesh, StructureSolver
from .subsolver import NullSubsolver, ODESubsolver


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def _scalar_ode(lam, y0=1.0):
    return ODESubsolver(lambda t, y: lam * y, lambda t, y: lam * np.eye(1), [y0])


def sdirk_order(dts=(0.1, 0.05, 0.025, 0.0125), t_end=1.0):
    """Errors and observed orders of fixed-step SDIRK2 on ``y' = -y``."""
    cfg = CouplingConfig(tol=1e-6, adaptive=False)
    errs = []
    for dt in dts:
        ode = _scalar_ode(-1.0)
        simulate(NullSubsolver(), ode, cfg, t_end, dt)
        errs.append(abs(ode.u[0] - math.exp(-t_end)))
    orders = [math.log(errs[i] / errs[i + 1]) / math.log(dts[i] / dts[i + 1])
              for i in range(len(dts) - 1)]
    return errs, orders


def stability_mismatch(zs=(-0.1, -1.0, -10.0)):
    cfg = CouplingConfig(tol=1e-6, adaptive=False)
    out = []
    for z in zs:
        ode = _scalar_ode(z)
        sdirk2_step(NullSubsolver(), ode, 0.0, 1.0, None, cfg)
        out.append(abs(ode.u[0] - SDIRK2.stability_function(z)))
    return out


def aitken_sequence(a=0.5, b=1.0, x0=0.0, omega=0.8, iterations=3):
    """Relaxed iterates of ``G(x) = a x + b``, seeded with ``omega``."""
    state = AitkenState(omega)
    hist = IterationHistory()
    x = np.array([x0])
    seq = [float(x[0])]
    for _ in range(iterations):
        hist.append(x, a * x + b)
        x, state = aitken_update(hist, state)
        seq.append(float(x[0]))
    return seq


def random_affine(rng, d, radius=0.9):
    """Diagonalizable ``A = V diag(lam) V^-1`` with spectral radius < radius, and ``b``."""
    lam = rng.uniform(-radius, radius, d) * 0.999
    V = rng.standard_normal((d, d)) + 2.0 * np.eye(d)
    while np.linalg.cond(V) > 1e3:
        V = rng.standard_normal((d, d)) + 2.0 * np.eye(d)
    A = V @ np.diag(lam) @ np.linalg.inv(V)
    return A, rng.standard_normal(d)


def extrapolation_error(method, A, b, x0=None):
    """Relative error of MPE/RRE over ``d + 1`` post-``x0`` iterates of ``x -> Ax + b``."""
    d = b.size
    x = np.zeros(d) if x0 is None else x0
    xs = [x]
    for _ in range(d + 1):
        xs.append(A @ xs[-1] + b)
    hist = IterationHistory.from_iterates(xs)
    fn = mpe_extrapolate if method == "mpe" else rre_extrapolate
    exact = np.linalg.solve(np.eye(d) - A, b)
    return float(np.linalg.norm(fn(hist) - exact) / np.linalg.norm(exact))


def predictor_exactness(rng, trials=50):
    """Worst relative error of predictors on polynomial trajectories of their degree."""
    c1 = SDIRK2.c1
    worst = 0.0
    for _ in range(trials):
        dt_prev, dt_n = rng.uniform(0.1, 2.0, 2)
        t_prev, t_n = -dt_prev, 0.0
        for degree, kind in ((1, "linear"), (2, "quadratic")):
            coef = rng.standard_normal((degree + 1, 3))
            coef[0] += 10.0  # keep the values away from zero for a relative measure
            f = lambda t: sum(coef[k] * t**k for k in range(degree + 1))  # noqa: E731
            h = TimeHistory(theta_n=f(t_n), dt_n=dt_n, theta_prev=f(t_prev),
                            theta_half_prev=f(t_prev + c1 * dt_prev), dt_prev=dt_prev)
            p1 = predict(kind, 1, h, c1)
            worst = max(worst, np.max(np.abs(p1 - f(c1 * dt_n)) / np.abs(f(c1 * dt_n))))
            h.theta_stage1 = f(c1 * dt_n)
            p2 = predict(kind, 2, h, c1)
            worst = max(worst, np.max(np.abs(p2 - f(dt_n)) / np.abs(f(dt_n))))
    return worst


def two_slab_problem(tol=1e-5, t_end=100.0):
    """Linear two-slab transient: returns ``(times, interface temperatures, contact value)``.

    Structure: 5 cm of a constant material with effusivity 1000 starting at
    900 K.  Fluid: 2 cm of a gas layer with effusivity 500 starting at 273 K.
    Both diffusion lengths stay well inside their domains up to ``t_end``.
    """
    mat = ConstantMaterial(density=1000.0, heat_capacity=1000.0, conductivity=1.0)
    structure = StructureSolver(StructureMesh(0.05, 50, 2), mat, 900.0)
    fcfg = FluidSurrogateConfig(length=0.02, conductivity=0.25, heat_capacity=1e6,
                                far_field=273.0, cells=80, initial="uniform")
    fluid = FluidSurrogate(fcfg, [900.0])
    e_f = math.sqrt(fcfg.conductivity * fcfg.heat_capacity)
    e_s = mat.effusivity
    contact = (e_f * fcfg.far_field + e_s * 900.0) / (e_f + e_s)
    rec = simulate(fluid, structure, CouplingConfig(tol=tol), t_end, 1e-3,
                   controller=StepController(tol, dt_max=t_end))
    times, temps = [], []
    for s in rec.steps:
        if s.accepted:
            times.append(s.t_n + s.dt)
            temps.append(float(s.theta_end[0]))
    return np.array(times), np.array(temps), contact, rec


def run_validation(seed=0, trials=100):
    rng = np.random.default_rng(seed)
    checks = []

    errs, orders = sdirk_order()
    checks.append(Check("SDIRK2 order on y'=-y", all(1.8 <= p <= 2.2 for p in orders),
                        "orders " + ", ".join(f"{p:.3f}" for p in orders)))

    mis = stability_mismatch()
    checks.append(Check("stability function", max(mis) <= 1e-12, f"max mismatch {max(mis):.2e}"))

    seq = aitken_sequence()
    ok = any(abs(x - 2.0) < 1e-12 for x in seq[1:4])
    checks.append(Check("Aitken on G(x)=0.5x+1", ok, " -> ".join(f"{x:.12g}" for x in seq)))

    for method in ("mpe", "rre"):
        worst = 0.0
        for d in (2, 3, 5):
            for _ in range(trials):
                A, b = random_affine(rng, d)
                worst = max(worst, extrapolation_error(method, A, b))
        checks.append(Check(f"{method.upper()} exactness on affine maps", worst <= 1e-10,
                            f"worst relative error {worst:.2e} over {3 * trials} trials"))

    worst = predictor_exactness(rng)
    checks.append(Check("predictor polynomial exactness", worst <= 1e-12,
                        f"worst relative error {worst:.2e}"))

    vals = [float(lambda_eval(t)) for t in (0.0, 100.0, 1000.0)]
    ok = all(math.isclose(v, e, rel_tol=1e-14) for v, e in zip(vals, (40.1, 44.149, 39.1)))
    checks.append(Check("conductivity fit values", ok, f"{vals}"))

    grid = np.arange(273.0, 1301.0)
    lo = np.minimum(cp1_eval(grid), cp2_eval(grid))
    cp = cp_eval(grid)
    ok = bool(np.all(cp >= lo - 1e-9) and np.all(cp <= lo + 10 * math.log(2) + 1e-9))
    checks.append(Check("heat capacity soft-min bound", ok,
                        f"max excess {np.max(cp - lo):.4f} <= {10 * math.log(2):.4f}"))

    times, temps, contact, rec = two_slab_problem()
    window = times >= 1.0
    dev = float(np.max(np.abs(temps[window] - contact)) / contact)
    checks.append(Check("two-slab contact temperature", dev <= 0.02 and not rec.dnf,
                        f"max relative deviation {dev:.2e} for t in [1, 100] s"))
    return checks
