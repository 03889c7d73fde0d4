"""Conduction surrogate for the gas side (Dirichlet partner).

The gas layer ``0 <= x <= L`` is a cell-centred finite volume discretisation of
``(rho c) T_t = lambda T_xx`` with the interface temperature imposed at ``x = 0``
and the far-field temperature at ``x = L``.  The reported flux is the heat flux
*into the structure*, ``lambda dT/dx`` at ``x = 0``, so a colder gas returns a
negative value.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConfigurationError, SubsolverError
from .subsolver import DIRICHLET, Subsolver


@dataclass(frozen=True)
class FluidSurrogateConfig:
    length: float = 2e-4
    conductivity: float = 0.03
    heat_capacity: float = 1.2 * 1005.0
    far_field: float = 273.0
    cells: int = 20
    stiffness: float = 1.0
    flux_order: int = 2
    initial: str = "steady"

    def __post_init__(self):
        if not (self.length > 0 and self.conductivity > 0 and self.heat_capacity > 0):
            raise ConfigurationError("fluid length, conductivity and heat capacity must be positive")
        if not self.stiffness > 0:
            raise ConfigurationError("stiffness multiplier must be positive")
        if not self.far_field > 0:
            raise ConfigurationError("far-field temperature must be positive (kelvin)")
        if self.cells < 2:
            raise ConfigurationError("the surrogate needs at least two cells")
        if self.flux_order not in (1, 2):
            raise ConfigurationError("flux_order must be 1 or 2")
        if self.initial not in ("steady", "uniform"):
            raise ConfigurationError("initial must be 'steady' or 'uniform'")

    @property
    def effective_conductivity(self):
        return self.conductivity * self.stiffness


class FluidSurrogate(Subsolver):
    role = DIRICHLET

    def __init__(self, config, interface_temperature):
        self.config = config
        n = config.cells
        self.h = config.length / n
        self.x = (np.arange(n) + 0.5) * self.h
        t_gamma = float(np.ravel(interface_temperature)[0])
        if config.initial == "steady":
            u0 = t_gamma + (config.far_field - t_gamma) * self.x / config.length
        else:
            u0 = np.full(n, config.far_field)
        super().__init__(u0)
        self._build_operator()

    def conductivity_range(self):
        lam = self.config.effective_conductivity
        return lam, lam

    def _build_operator(self):
        """Tridiagonal ``A`` and boundary couplings of ``dT/dt = A T + g``."""
        cfg = self.config
        n, h = cfg.cells, self.h
        lam = cfg.effective_conductivity
        k = lam / (cfg.heat_capacity * h * h)
        lower = np.full(n - 1, k)
        upper = np.full(n - 1, k)
        diag = np.full(n, -2.0 * k)
        if cfg.flux_order == 2:
            # quadratic reconstruction through the wall value and two cell centres
            diag[0] = diag[-1] = -4.0 * k
            upper[0] = lower[-1] = 4.0 * k / 3.0
            self._g_wall = 8.0 * k / 3.0
        else:
            diag[0] = diag[-1] = -3.0 * k
            self._g_wall = 2.0 * k
        self._diag, self._lower, self._upper = diag, lower, upper

    def rate(self, T, t_gamma):
        """Semi-discrete right-hand side ``A T + g(t_gamma)``."""
        T = np.asarray(T, dtype=float)
        r = self._diag * T
        r[:-1] += self._upper * T[1:]
        r[1:] += self._lower * T[:-1]
        r[0] += self._g_wall * t_gamma
        r[-1] += self._g_wall * self.config.far_field
        return r

    def interface_flux(self, T, t_gamma):
        lam = self.config.effective_conductivity
        if self.config.flux_order == 2:
            grad = (-8.0 * t_gamma + 9.0 * T[0] - T[1]) / (3.0 * self.h)
        else:
            grad = (T[0] - t_gamma) / (0.5 * self.h)
        return lam * grad

    def _solve(self, data, guess):
        if data.size != 1:
            raise ConfigurationError("the 1D surrogate has a single interface node")
        t_gamma = float(data[0])
        hs = self.ctx.dt_aii
        n = self.config.cells
        ab = np.zeros((3, n))
        ab[0, 1:] = -hs * self._upper
        ab[1, :] = 1.0 - hs * self._diag
        ab[2, :-1] = -hs * self._lower
        rhs = self.start.copy()
        rhs[0] += hs * self._g_wall * t_gamma
        rhs[-1] += hs * self._g_wall * self.config.far_field
        try:
            T = scipy.linalg.solve_banded((1, 1), ab, rhs)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SubsolverError(f"fluid stage solve failed: {exc}") from exc
        if not np.all(np.isfinite(T)):
            raise SubsolverError("fluid stage solve produced non-finite temperatures")
        return T, np.array([self.interface_flux(T, t_gamma)])

    def interface_values(self, field):
        # the fluid has no interface unknown; report the adjacent cell value
        return np.array([field[0]])

    def steady_flux(self, t_gamma):
        cfg = self.config
        return -cfg.effective_conductivity * (t_gamma - cfg.far_field) / cfg.length
