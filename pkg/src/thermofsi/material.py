"""Temperature dependent thermal properties of the structure.

Both material classes expose the same vectorised interface used by the finite
element assembly: ``conductivity``, ``heat_capacity`` (specific, per kg) and their
derivatives with respect to temperature, plus a constant ``density``.
"""

import math

import numpy as np

from .errors import ConfigurationError

KELVIN_OFFSET = 273.15

# Range over which the property fits are trusted and validated (K).
VALID_RANGE = (273.0, 1300.0)


def lambda_eval(theta):
    """Heat conductivity fit of 51CrV4 in W/(m K)."""
    theta = np.asarray(theta, dtype=float)
    return 40.1 + 0.05 * theta - 0.0001 * theta**2 + 4.9e-8 * theta**3


def dlambda_eval(theta):
    theta = np.asarray(theta, dtype=float)
    return 0.05 - 0.0002 * theta + 3 * 4.9e-8 * theta**2


def cp1_eval(theta):
    theta = np.asarray(theta, dtype=float)
    return 34.2 * np.exp(0.0026 * theta) + 421.15


def cp2_eval(theta):
    theta = np.asarray(theta, dtype=float)
    with np.errstate(over="ignore"):
        return 956.5 * np.exp(-0.012 * (theta - 900.0)) + 0.45 * theta


def cp_eval(theta):
    """Specific heat of 51CrV4 in J/(kg K).

    Smooth minimum of the two branch fits ``cp1`` and ``cp2``,
    ``-10 ln((exp(-cp1/10) + exp(-cp2/10)) / 2)``, evaluated with ``logaddexp``
    so that the large ``cp2`` values at low temperature cannot overflow.
    """
    a = -cp1_eval(theta) / 10.0
    b = -cp2_eval(theta) / 10.0
    return -10.0 * (np.logaddexp(a, b) - math.log(2.0))


def dcp_eval(theta):
    theta = np.asarray(theta, dtype=float)
    c1 = cp1_eval(theta)
    c2 = cp2_eval(theta)
    dc1 = 34.2 * 0.0026 * np.exp(0.0026 * theta)
    with np.errstate(over="ignore", invalid="ignore"):
        dc2 = -0.012 * 956.5 * np.exp(-0.012 * (theta - 900.0)) + 0.45
        # softmax weights of the two branches
        w1 = 1.0 / (1.0 + np.exp(np.clip((c1 - c2) / 10.0, -700, 700)))
        return np.where(w1 == 1.0, dc1, w1 * dc1 + (1.0 - w1) * dc2)


class Material51CrV4:
    """Empirical thermal model of the steel 51CrV4.

    Parameters
    ----------
    units : {"K", "C"}
        Unit in which the property fits expect their argument.  Solver state is
        always in kelvin; with ``"C"`` the state is shifted by 273.15 before the
        fits are evaluated.
    """

    density = 7836.0

    def __init__(self, units="K"):
        if units not in ("K", "C"):
            raise ConfigurationError(f"material units must be 'K' or 'C', got {units!r}")
        self.units = units
        self._shift = KELVIN_OFFSET if units == "C" else 0.0

    def __repr__(self):
        return f"Material51CrV4(units={self.units!r})"

    def conductivity(self, theta):
        return lambda_eval(np.asarray(theta, dtype=float) - self._shift)

    def d_conductivity(self, theta):
        return dlambda_eval(np.asarray(theta, dtype=float) - self._shift)

    def heat_capacity(self, theta):
        return cp_eval(np.asarray(theta, dtype=float) - self._shift)

    def d_heat_capacity(self, theta):
        return dcp_eval(np.asarray(theta, dtype=float) - self._shift)

    def conductivity_bounds(self, lo=VALID_RANGE[0], hi=VALID_RANGE[1], samples=2049):
        lam = self.conductivity(np.linspace(lo, hi, samples))
        return float(lam.min()), float(lam.max())


class ConstantMaterial:
    """Material with temperature independent properties (linear heat equation)."""

    def __init__(self, density, heat_capacity, conductivity):
        if min(density, heat_capacity, conductivity) <= 0:
            raise ConfigurationError("constant material properties must be positive")
        self.density = float(density)
        self._cp = float(heat_capacity)
        self._lam = float(conductivity)

    def __repr__(self):
        return (f"ConstantMaterial(density={self.density}, heat_capacity={self._cp}, "
                f"conductivity={self._lam})")

    def conductivity(self, theta):
        return np.full(np.shape(theta), self._lam)

    def d_conductivity(self, theta):
        return np.zeros(np.shape(theta))

    def heat_capacity(self, theta):
        return np.full(np.shape(theta), self._cp)

    def d_heat_capacity(self, theta):
        return np.zeros(np.shape(theta))

    def conductivity_bounds(self, lo=None, hi=None, samples=None):
        return self._lam, self._lam

    @property
    def effusivity(self):
        return math.sqrt(self._lam * self.density * self._cp)
