"""Acceptance criteria, one reported PASS/FAIL line each.

Run ``pytest tests/test_acceptance.py -v`` (the lines are printed even under
output capture) or ``python tests/test_acceptance.py``.
"""

import math
import sys
import time

import numpy as np
import pytest

from thermofsi import SDIRK2, IterationHistory, TimeHistory, harness
from thermofsi.acceleration import mpe_extrapolate, rre_extrapolate
from thermofsi.config import ExperimentConfig, parse_config
from thermofsi.material import cp1_eval, cp2_eval, cp_eval, lambda_eval
from thermofsi.predictors import (
    lagrange_weights,
    predict,
    stage1_linear_weights,
    stage1_quadratic_weights,
    stage2_linear_weights,
    stage2_quadratic_weights,
)
from thermofsi.validation import (
    aitken_sequence,
    random_affine,
    sdirk_order,
    stability_mismatch,
    two_slab_problem,
)

ALPHA = 1 - math.sqrt(2) / 2


@pytest.fixture
def report(capsys):
    def emit(number, title, passed, detail):
        with capsys.disabled():
            print(f"\n[criterion {number:2d}] {'PASS' if passed else 'FAIL'}  {title}: {detail}")
        return passed
    return emit


@pytest.fixture(scope="module")
def model():
    return ExperimentConfig()


@pytest.fixture(scope="module")
def reference(model):
    return harness.run_reference(model)


@pytest.fixture(scope="module")
def matrix(model, reference):
    cfg = parse_config("[experiment]\ntols = 1e-2, 1e-3, 1e-4, 1e-5\n")
    res = harness.run_iteration_count_matrix(cfg, reference=reference)
    return {(r.tol, r.label): r for r in res.records}


def test_sdirk2_order(report):
    t0 = time.perf_counter()
    _, orders = sdirk_order((0.1, 0.05, 0.025, 0.0125))
    elapsed = time.perf_counter() - t0
    ok = all(1.8 <= p <= 2.2 for p in orders) and elapsed < 1.0
    assert report(1, "SDIRK2 order on y'=-y", ok,
                  f"orders {[round(p, 4) for p in orders]}, {elapsed:.3f} s")


def test_stability_function(report):
    a = ALPHA
    zs = (-0.1, -1.0, -10.0)
    closed = [(1 + z * (1 - 2 * a) + z * z * (a * a - 2 * a + 0.5)) / (1 - a * z) ** 2 for z in zs]
    assert all(abs(SDIRK2.stability_function(z) - c) < 1e-14 for z, c in zip(zs, closed))
    mis = stability_mismatch(zs)
    assert report(2, "stability function", max(mis) <= 1e-12, f"max mismatch {max(mis):.2e}")


def test_aitken_exactness(report):
    seq = aitken_sequence(0.5, 1.0, 0.0, 0.8, iterations=3)
    hit = next((k for k, x in enumerate(seq[1:], start=1) if abs(x - 2.0) < 1e-12), None)
    ok = hit is not None and hit <= 3 and abs(seq[1] - 0.8) < 1e-15
    assert report(3, "Aitken on G(x)=0.5x+1", ok,
                  f"sequence {[float(f'{x:.15g}') for x in seq]}, exact after {hit} iterations")


def test_mpe_rre_exactness(report):
    rng = np.random.default_rng(2024)
    worst = {"mpe": 0.0, "rre": 0.0}
    for d in (2, 3, 5):
        for _ in range(100):
            A, b = random_affine(rng, d)
            assert max(abs(np.linalg.eigvals(A))) < 0.9
            xs = [rng.standard_normal(d)]
            for _ in range(d + 1):
                xs.append(A @ xs[-1] + b)
            h = IterationHistory.from_iterates(xs)
            exact = np.linalg.solve(np.eye(d) - A, b)
            for name, fn in (("mpe", mpe_extrapolate), ("rre", rre_extrapolate)):
                err = np.linalg.norm(fn(h) - exact) / np.linalg.norm(exact)
                worst[name] = max(worst[name], err)
    ok = max(worst.values()) <= 1e-10
    assert report(4, "MPE/RRE exactness, 300 trials each", ok,
                  f"worst relative error MPE {worst['mpe']:.2e}, RRE {worst['rre']:.2e}")


def test_predictor_exactness(report):
    rng = np.random.default_rng(7)
    c = SDIRK2.c1
    worst, worst_sum = 0.0, 0.0
    worst_printed = 0.0
    for _ in range(200):
        # consecutive step ratios are limited to [f_min, f_max] = [0.2, 5] by the controller
        P = rng.uniform(0.01, 5.0)
        D = P * math.exp(rng.uniform(math.log(0.2), math.log(5.0)))
        for degree, kind in ((1, "linear"), (2, "quadratic")):
            coef = rng.standard_normal((degree + 1, 2))
            coef[0] += 10.0
            f = lambda t: sum(coef[k] * t**k for k in range(degree + 1))  # noqa: E731
            h = TimeHistory(theta_n=f(0.0), dt_n=D, theta_prev=f(-P),
                            theta_half_prev=f(-P + c * P), dt_prev=P)
            worst = max(worst, np.max(np.abs(predict(kind, 1, h, c) / f(c * D) - 1)))
            h.theta_stage1 = f(c * D)
            worst = max(worst, np.max(np.abs(predict(kind, 2, h, c) / f(D) - 1)))
        for w in (stage1_linear_weights(P, D, c), stage2_linear_weights(c),
                  stage1_quadratic_weights(P, D, c), stage2_quadratic_weights(P, D, c)):
            worst_sum = max(worst_sum, abs(math.fsum(w) - 1.0))
        printed = [
            ((1 + c * D / P), -c * D / P),
            ((c * D + (1 - c) * P) * c * D / (c * P**2),
             -(c * D + P) * c * D / (c * P**2 * (1 - c)),
             (c * D + P) * (c * D + (1 - c) * P) / ((1 - c) * P**2)),
            (1 - 1 / c, 1 / c),
            (D**2 * (1 - c) / (P * (P + c * D)),
             -(P + D) * (1 - c) * D / (P * c * D),
             (P + D) * D / ((c * D + P) * c * D)),
        ]
        oracle = [
            lagrange_weights((0.0, -P), c * D),
            lagrange_weights((-P, -P + c * P, 0.0), c * D),
            lagrange_weights((0.0, c * D), D),
            lagrange_weights((-P, 0.0, c * D), D),
        ]
        for p, o in zip(printed, oracle):
            worst_printed = max(worst_printed,
                                max(abs(x - y) / max(1.0, abs(y)) for x, y in zip(p, o)))
    ok = worst <= 1e-12 and worst_sum <= 1e-13 and worst_printed <= 1e-11
    assert report(5, "predictor degree exactness", ok,
                  f"worst relative error {worst:.1e}, worst |sum w - 1| {worst_sum:.1e}, "
                  f"printed vs Lagrange coefficients {worst_printed:.1e} (no discrepancy)")


def test_material_model(report):
    vals = [float(lambda_eval(t)) for t in (0.0, 100.0, 1000.0)]
    # 39.1 is not a binary float; allow a couple of ulps
    vals_ok = all(math.isclose(v, e, rel_tol=4 * sys.float_info.epsilon)
                  for v, e in zip(vals, (40.1, 44.149, 39.1)))
    grid = np.arange(273.0, 1301.0, 1.0)
    lo = np.minimum(cp1_eval(grid), cp2_eval(grid))
    cp = cp_eval(grid)
    slack = 1e-9
    bound_ok = bool(np.all(cp >= lo - slack) and np.all(cp <= lo + 10 * math.log(2) + slack))
    assert report(6, "material model", vals_ok and bound_ok,
                  f"lambda(0,100,1000) = {vals}; soft-min excess in "
                  f"[{np.min(cp - lo):.4f}, {np.max(cp - lo):.4f}] vs 10 ln 2 = {10 * math.log(2):.4f}")


def test_two_slab_contact_temperature(report):
    t0 = time.perf_counter()
    times, temps, contact, rec = two_slab_problem()
    elapsed = time.perf_counter() - t0
    # fronts: sqrt(kappa t) at t = 100 s is 1 cm (solid, 5 cm) and 5 mm (gas, 2 cm)
    window = times >= 1.0
    dev = float(np.max(np.abs(temps[window] - contact)) / contact)
    ok = dev <= 0.02 and elapsed < 30 and not rec.dnf
    assert report(7, "two-slab contact temperature", ok,
                  f"contact {contact:.2f} K, max relative deviation {dev:.2e} on t in [1, 100] s, "
                  f"{elapsed:.2f} s")


def test_predictor_savings(report, matrix):
    lines, ok = [], True
    for tol in (1e-3, 1e-4, 1e-5):
        none, lin, quad = (matrix[tol, m].total_iterations for m in ("none", "linear", "quadratic"))
        saving = 1 - lin / none
        quad_gain = 1 - quad / lin
        ok &= saving >= 0.10 and quad_gain <= 0.05
        lines.append(f"TOL {tol:g}: none {none}, linear {lin} ({saving:.0%} saved), quadratic {quad}")
    assert report(8, "time-history predictors", ok, "; ".join(lines))


def test_accelerator_totals(report, matrix):
    lines, ok = [], True
    for tol in (1e-2, 1e-3, 1e-4, 1e-5):
        n = {m: matrix[tol, m].total_iterations for m in ("none", "aitken", "mpe", "rre")}
        if tol in (1e-2, 1e-3):
            ok &= all(abs(n[m] - n["none"]) <= 0.05 * n["none"] for m in ("mpe", "rre"))
        ok &= n["aitken"] <= 1.05 * n["none"]
        lines.append(f"TOL {tol:g}: " + "/".join(str(n[m]) for m in ("none", "aitken", "mpe", "rre")))
    assert report(9, "accelerator totals none/aitken/mpe/rre", ok, "; ".join(lines))


def test_fixed_vs_adaptive(report, reference):
    cfg = parse_config("[experiment]\ntols = 1e-5\n")
    res = harness.run_fixed_vs_adaptive(cfg, reference=reference)
    row = res.rows[0]
    ok = not res.dnf and row.ratio >= 1.5
    assert report(10, "adaptive vs accuracy-matched fixed step", ok,
                  f"TOL 1e-5: adaptive {row.adaptive.total_iterations} it (err "
                  f"{row.adaptive.end_error:.2e}), fixed dt {row.fixed_dt:.4g} s "
                  f"{row.fixed.total_iterations} it (err {row.fixed.end_error:.2e}), "
                  f"ratio {row.ratio:.2f}")


def test_stage_study(report, model):
    rows = harness.run_single_stage_study(model)
    ok, lines = True, []
    for dt in model.study.dts:
        seqs = {m: [r.residual_norm for r in rows if r.dt == dt and r.method == m]
                for m in model.accelerators}
        first = {m: next((k for k, r in enumerate(s, 1) if r <= 1e-8), None) for m, s in seqs.items()}
        base = seqs["none"]
        ok &= all(first[m] is not None and first[m] <= first["none"] for m in seqs)
        ok &= all(s[:2] == base[:2] for s in seqs.values())
        ok &= all(b < a for a, b in zip(base, base[1:]))
        lines.append(f"dt {dt:g} s: iterations to 1e-8 " +
                     ", ".join(f"{m} {first[m]}" for m in seqs))
    assert report(11, f"stage residual decay, stiffness x{model.study.stiffness:g}", ok,
                  "; ".join(lines) + "; iterations 1-2 identical")


def test_rejection_safety(report):
    from conftest import make_cooling_pair
    from thermofsi import CouplingConfig, sdirk2_step

    cfg = CouplingConfig(tol=1e-3)
    f, s = make_cooling_pair()
    sdirk2_step(f, s, 0.0, 0.5, None, cfg)
    before = [x.backup() for x in (f, s)]
    sdirk2_step(f, s, s.t, 2.0, 0.5, cfg, force_reject=True)
    after = [x.backup() for x in (f, s)]
    restored = all(a["u"].tobytes() == b["u"].tobytes() and a["t"] == b["t"]
                   for a, b in zip(before, after))
    retry = sdirk2_step(f, s, s.t, 1.0, 0.5, cfg)
    f2, s2 = make_cooling_pair()
    sdirk2_step(f2, s2, 0.0, 0.5, None, cfg)
    direct = sdirk2_step(f2, s2, s2.t, 1.0, 0.5, cfg)
    same = (s.u.tobytes() == s2.u.tobytes() and f.u.tobytes() == f2.u.tobytes()
            and retry.stage_iterations == direct.stage_iterations)
    assert report(12, "rejection safety", restored and same and retry.accepted,
                  f"bitwise restore {restored}, retry reproduces direct step {same}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
