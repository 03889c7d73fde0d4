import math

import numpy as np
import pytest

from thermofsi import ConfigurationError, FluidSurrogate, FluidSurrogateConfig, StageContext


def fluid(**kw):
    cfg = FluidSurrogateConfig(**{"length": 1e-3, "cells": 10, **kw})
    return FluidSurrogate(cfg, [900.0])


def test_config_validation():
    for bad in ({"length": 0.0}, {"stiffness": 0.0}, {"cells": 1}, {"flux_order": 3},
                {"initial": "hot"}, {"far_field": -1.0}):
        with pytest.raises(ConfigurationError):
            FluidSurrogateConfig(**bad)


def test_steady_initial_profile_is_preserved():
    f = fluid()
    u0 = f.u.copy()
    f.begin_step()
    f.prepare_stage(StageContext(1, 0.0, 10.0, 10.0))
    q = f.solve_stage([900.0])
    assert np.allclose(f.stage_value, u0, rtol=1e-13)
    assert q[0] == pytest.approx(f.steady_flux(900.0), rel=1e-12)
    assert q[0] < 0  # hot wall, cold gas: heat leaves the structure


def test_flux_sign_and_stiffness_scaling():
    a, b = fluid(), fluid(stiffness=4.0)
    assert b.steady_flux(900.0) == pytest.approx(4 * a.steady_flux(900.0))
    assert b.conductivity_range() == (0.12, 0.12)


@pytest.mark.parametrize("order,rate", [(1, 1.0), (2, 2.0)])
def test_flux_stencil_grid_convergence(order, rate):
    L = 1e-3
    f_exact = lambda x: 300 + 50 * np.exp(-x / (0.3 * L))  # noqa: E731
    dfdx0 = -50 / (0.3 * L)
    errs = []
    for n in (20, 40, 80, 160):
        f = FluidSurrogate(FluidSurrogateConfig(length=L, cells=n, flux_order=order), [350.0])
        q = f.interface_flux(f_exact(f.x), f_exact(0.0))
        errs.append(abs(q - 0.03 * dfdx0))
    rates = [math.log2(errs[i] / errs[i + 1]) for i in range(3)]
    assert rates[-1] == pytest.approx(rate, abs=0.15)


def test_second_order_stencil_exact_on_quadratics():
    f = fluid()
    g = lambda x: 400 + 3e4 * x - 2e7 * x * x  # noqa: E731
    assert f.interface_flux(g(f.x), g(0.0)) == pytest.approx(0.03 * 3e4, rel=1e-9)


def test_operator_consistency_interior():
    f = fluid(initial="uniform")
    g = lambda x: 400 + 1e8 * x * x  # noqa: E731
    r = f.rate(g(f.x), g(0.0))
    kappa = 0.03 / f.config.heat_capacity
    assert np.allclose(r[1:-1], kappa * 2e8, rtol=1e-8)


def test_stage_flux_is_affine_in_interface_temperature():
    f = fluid(initial="uniform")
    f.begin_step()
    f.prepare_stage(StageContext(1, 0.0, 0.1, 0.1))
    q = [f.solve_stage([t])[0] for t in (400.0, 500.0, 600.0)]
    assert q[2] - q[1] == pytest.approx(q[1] - q[0], rel=1e-10)
