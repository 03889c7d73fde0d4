import math

import numpy as np
import pytest

from conftest import make_cooling_pair
from thermofsi import (
    CouplingConfig,
    CouplingNonConvergence,
    StepController,
    TimeHistory,
    sdirk2_step,
    simulate,
)


def snapshot(*solvers):
    return [(s.u.copy(), s.t, [k.copy() for k in s.stage_derivatives]) for s in solvers]


def assert_bitwise(a, b):
    for (u1, t1, k1), (u2, t2, k2) in zip(a, b):
        assert u1.tobytes() == u2.tobytes() and t1 == t2
        assert len(k1) == len(k2) and all(x.tobytes() == y.tobytes() for x, y in zip(k1, k2))


def test_forced_rejection_restores_bitwise():
    f, s = make_cooling_pair()
    cfg = CouplingConfig(tol=1e-4)
    sdirk2_step(f, s, 0.0, 0.5, None, cfg)
    before = snapshot(f, s)
    res = sdirk2_step(f, s, s.t, 1.0, 0.5, cfg, force_reject=True)
    assert not res.accepted and res.failure == "forced"
    assert_bitwise(before, snapshot(f, s))


def test_retry_after_rejection_matches_fresh_step():
    cfg = CouplingConfig(tol=1e-3)
    f1, s1 = make_cooling_pair()
    sdirk2_step(f1, s1, 0.0, 1.0, None, cfg, force_reject=True)
    a = sdirk2_step(f1, s1, 0.0, 0.5, None, cfg)
    f2, s2 = make_cooling_pair()
    b = sdirk2_step(f2, s2, 0.0, 0.5, None, cfg)
    assert a.accepted and b.accepted
    assert s1.u.tobytes() == s2.u.tobytes() and f1.u.tobytes() == f2.u.tobytes()


def test_error_rejection_restores_state():
    f, s = make_cooling_pair()
    cfg = CouplingConfig(tol=1e-7)
    before = snapshot(f, s)
    res = sdirk2_step(f, s, 0.0, 20.0, None, cfg)
    assert not res.accepted and res.dt_next < 20.0
    assert_bitwise(before, snapshot(f, s))


def test_coupling_failure_halves_step():
    f, s = make_cooling_pair(stiffness=30.0)
    cfg = CouplingConfig(tol=1e-6, max_iterations=2)
    res = sdirk2_step(f, s, 0.0, 5.0, None, cfg)
    assert not res.accepted and res.dt_next == 2.5 and res.failure


def test_fixed_mode_reraises_coupling_failure():
    f, s = make_cooling_pair(stiffness=30.0)
    cfg = CouplingConfig(tol=1e-6, max_iterations=2, adaptive=False)
    with pytest.raises(CouplingNonConvergence):
        sdirk2_step(f, s, 0.0, 5.0, None, cfg)


def test_runs_are_deterministic():
    recs = []
    for _ in range(2):
        f, s = make_cooling_pair()
        recs.append(simulate(f, s, CouplingConfig(tol=1e-4, accelerator="aitken", predictor="linear"),
                             20.0, 0.5))
    a, b = recs
    assert a.final_structure.tobytes() == b.final_structure.tobytes()
    assert [x.stage_iterations for x in a.steps] == [x.stage_iterations for x in b.steps]
    assert [x.dt for x in a.steps] == [x.dt for x in b.steps]


def test_totals_are_sums_of_stage_counts():
    f, s = make_cooling_pair()
    rec = simulate(f, s, CouplingConfig(tol=1e-4), 30.0, 0.5)
    assert rec.total_iterations == sum(sum(x.stage_iterations) for x in rec.steps)
    assert rec.accepted_steps + rec.rejections == len(rec.steps)
    assert math.isclose(sum(rec.step_sizes), 30.0, rel_tol=1e-12)
    assert rec.final_time == pytest.approx(30.0)


def test_fixed_steps_hit_end_time():
    f, s = make_cooling_pair()
    rec = simulate(f, s, CouplingConfig(tol=1e-4, adaptive=False), 10.0, 10.0 / 7)
    assert rec.accepted_steps == 7 and rec.rejections == 0
    assert rec.final_time == 10.0


@pytest.mark.parametrize("tol", [1e-3, 1e-4])
def test_adaptive_step_grows_on_smooth_cooling(tol):
    f, s = make_cooling_pair()
    rec = simulate(f, s, CouplingConfig(tol=tol), 100.0, 0.5,
                   controller=StepController(tol, dt_max=100.0))
    # skip the two startup steps; the last step is cut to hit the end time
    sizes = rec.step_sizes[2:-1]
    assert all(b >= a for a, b in zip(sizes, sizes[1:]))


def test_adaptive_uses_fewer_steps_than_fixed_at_dt0():
    f, s = make_cooling_pair()
    ad = simulate(f, s, CouplingConfig(tol=1e-4), 50.0, 0.5)
    f, s = make_cooling_pair()
    fx = simulate(f, s, CouplingConfig(tol=1e-4, adaptive=False), 50.0, 0.5)
    assert ad.accepted_steps <= fx.accepted_steps


def test_underflow_is_reported_as_dnf():
    f, s = make_cooling_pair(stiffness=30.0)
    rec = simulate(f, s, CouplingConfig(tol=1e-6, max_iterations=2), 10.0, 1.0,
                   controller=StepController(1e-6, dt_min=0.1))
    assert rec.dnf and "dt_min" in rec.failure


def test_predictor_history_only_from_accepted_steps():
    cfg = CouplingConfig(tol=1e-4, predictor="linear")
    f, s = make_cooling_pair()
    h = TimeHistory(theta_n=np.array([900.0]), dt_n=0.5)
    res = sdirk2_step(f, s, 0.0, 0.5, None, cfg, history=h, force_reject=True)
    assert not res.accepted
    assert h.theta_stage1 is None and h.theta_prev is None
