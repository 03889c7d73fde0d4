import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermofsi import SDIRK2, ConfigurationError, SequencingError, StepController
from thermofsi.sdirk import (
    StageContext,
    aggregate_error,
    compute_starting_vector,
    embedded_error,
    next_step_size,
    scaled_error_norm,
)

ALPHA = 1.0 - math.sqrt(2.0) / 2.0


def test_tableau_coefficients():
    A = np.array(SDIRK2.A)
    assert A[0, 0] == pytest.approx(ALPHA, abs=1e-15)
    assert A[1, 1] == pytest.approx(ALPHA, abs=1e-15)
    assert A[1, 0] == pytest.approx(1 - ALPHA, abs=1e-15)
    assert A[0, 1] == 0.0
    assert np.allclose(SDIRK2.c, [ALPHA, 1.0], atol=1e-15)
    # stiffly accurate
    assert np.array_equal(np.array(SDIRK2.b), A[1])
    assert sum(SDIRK2.b) == pytest.approx(1.0, abs=1e-15)
    assert sum(SDIRK2.b_hat) == pytest.approx(1.0, abs=1e-15)


def test_order_conditions():
    b, c = np.array(SDIRK2.b), np.array(SDIRK2.c)
    assert b @ c == pytest.approx(0.5, abs=1e-15)
    # embedded pair is first order only
    assert np.array(SDIRK2.b_hat) @ c != pytest.approx(0.5, abs=1e-3)


@pytest.mark.parametrize("z", [-0.1, -1.0, -10.0, -1e3, 0.3])
def test_stability_function_closed_form(z):
    a = ALPHA
    expected = (1 + z * (1 - 2 * a) + z * z * (a * a - 2 * a + 0.5)) / (1 - a * z) ** 2
    assert SDIRK2.stability_function(z) == pytest.approx(expected, rel=1e-14)


def test_stability_function_l_stable_limit():
    assert abs(SDIRK2.stability_function(-1e12)) < 1e-10


def test_starting_vector_stage_one_is_u_n():
    u = np.array([3.0, -1.0])
    assert np.array_equal(compute_starting_vector(u, [], SDIRK2, 1, 0.7), u)


def test_starting_vector_zero_derivative():
    u = np.array([1.0])
    assert np.array_equal(compute_starting_vector(u, [np.zeros(1)], SDIRK2, 2, 0.5), u)


def test_starting_vector_scalar_example():
    s = compute_starting_vector(np.array([1.0]), [np.array([2.0])], SDIRK2, 2, 0.5)
    assert s[0] == pytest.approx(1.70711, abs=1e-5)
    assert s[0] == pytest.approx(1 + 0.5 * (1 - ALPHA) * 2, abs=1e-15)


def test_starting_vector_missing_derivative():
    with pytest.raises(SequencingError):
        compute_starting_vector(np.ones(1), [], SDIRK2, 2, 0.1)


def test_stage_context_validation():
    ctx = StageContext(2, 1.0, 0.5, 0.25)
    assert ctx.t_stage == 1.5
    assert ctx.dt_aii == pytest.approx(0.5 * ALPHA)
    with pytest.raises(ConfigurationError):
        StageContext(3, 0.0, 1.0, 1.0)
    with pytest.raises(ConfigurationError):
        StageContext(1, 0.0, 0.0, 1.0)


def test_scaled_norm_matches_mixed_tolerance_norm():
    rng = np.random.default_rng(1)
    e, y = rng.standard_normal(7), rng.standard_normal(7) * 100
    tol = 1e-4
    standard = np.sqrt(np.mean((e / (tol + tol * np.abs(y))) ** 2))
    assert scaled_error_norm(e, y) == pytest.approx(tol * standard, rel=1e-13)


def test_embedded_error_needs_all_stages():
    with pytest.raises(SequencingError):
        embedded_error(np.ones(2), [np.ones(2)], SDIRK2, 0.1)


def test_aggregate_is_maximum():
    assert aggregate_error(1e-3, 2e-4) == 1e-3
    with pytest.raises(ConfigurationError):
        aggregate_error(-1.0, 0.0)


def test_controller_validation():
    with pytest.raises(ConfigurationError):
        StepController(1e-3, f_min=1.2)
    with pytest.raises(ConfigurationError):
        StepController(1e-3, safety=1.5)
    with pytest.raises(ConfigurationError):
        StepController(0.0)


def test_controller_zero_error_grows_by_fmax():
    ctrl = StepController(1e-4)
    assert next_step_size(0.0, 0.1, ctrl) == pytest.approx(0.5)


@given(est=st.floats(1e-12, 1e3), dt=st.floats(1e-6, 10.0), tol=st.floats(1e-8, 1e-1))
@settings(max_examples=200, deadline=None)
def test_controller_limits(est, dt, tol):
    ctrl = StepController(tol, dt_min=1e-12, dt_max=1e6)
    new = next_step_size(est, dt, ctrl)
    assert ctrl.f_min * dt * (1 - 1e-12) <= new <= ctrl.f_max * dt * (1 + 1e-12)
    if est <= tol * 0.9**2 / 25:
        assert new == pytest.approx(ctrl.f_max * dt)


def test_controller_clamps_to_bounds():
    ctrl = StepController(1e-4, dt_min=1e-3, dt_max=2.0)
    assert next_step_size(1e3, 1e-3, ctrl) == 1e-3
    assert next_step_size(0.0, 1.0, ctrl) == 2.0
