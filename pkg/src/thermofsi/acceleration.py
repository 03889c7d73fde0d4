"""Convergence acceleration of the interface fixed-point iteration.

All accelerators work on an :class:`IterationHistory`, i.e. on pairs of
interface temperatures handed to the fluid (``inputs``) and the temperatures the
structure returned for them (``outputs``).  For a plain fixed-point sequence
``x_{k+1} = G(x_k)`` both lists are shifted copies of the same sequence.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConfigurationError

# condition estimate above which the least squares solve switches to pivoted QR
PIVOT_CONDITION = 1e12
RANK_RTOL = 1e-13


@dataclass
class IterationHistory:
    inputs: list = field(default_factory=list)
    outputs: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.inputs) != len(self.outputs):
            raise ConfigurationError("history needs one output per input")

    @classmethod
    def from_iterates(cls, iterates):
        """History of a plain fixed-point sequence ``x_0, x_1 = G(x_0), ...``."""
        xs = [np.asarray(x, dtype=float) for x in iterates]
        return cls(inputs=xs[:-1], outputs=xs[1:])

    def append(self, theta_in, theta_out):
        self.inputs.append(np.asarray(theta_in, dtype=float))
        self.outputs.append(np.asarray(theta_out, dtype=float))

    def window(self, size):
        """The newest ``size`` pairs (all of them for ``size`` None)."""
        if size is None or size >= len(self.inputs):
            return self
        return IterationHistory(self.inputs[-size:], self.outputs[-size:])

    def __len__(self):
        return len(self.inputs)

    @property
    def iterates(self):
        if not self.inputs:
            return []
        return list(self.inputs) + [self.outputs[-1]]

    @property
    def residuals(self):
        return [g - x for x, g in zip(self.inputs, self.outputs)]


@dataclass(frozen=True)
class AitkenState:
    omega: float = 0.8


def aitken_update(history, state, relax_first=True):
    """One Aitken relaxation step; returns ``(theta_tilde, new_state)``.

    With a single residual the newest output is relaxed with the prescribed
    ``state.omega`` (or passed through unchanged when ``relax_first`` is false, in
    which case the applied factor 1 becomes the seed of the recursion).  From two
    residuals on the factor follows the vector recursion
    ``omega <- -omega * r_old.(r_new - r_old) / |r_new - r_old|^2``.
    """
    n = len(history)
    if n == 0:
        raise ConfigurationError("Aitken update needs at least one residual")
    g_new = history.outputs[-1]
    x_old = history.inputs[-1]
    if n == 1:
        if not relax_first:
            return g_new.copy(), AitkenState(1.0)
        omega = state.omega
        return omega * g_new + (1.0 - omega) * x_old, state
    r_old = history.outputs[-2] - history.inputs[-2]
    r_new = g_new - x_old
    dr = r_new - r_old
    denom = float(dr @ dr)
    if denom == 0.0:
        return g_new.copy(), state
    omega = -state.omega * float(r_old @ dr) / denom
    return omega * g_new + (1.0 - omega) * x_old, AitkenState(omega)


def lstsq_qr(A, b):
    """Minimum norm least squares solution of ``A x ~ b`` by Householder QR.

    Well conditioned full column rank systems use a plain QR factorisation.
    Otherwise a column pivoted QR determines the numerical rank and a second QR
    of the leading rows (complete orthogonal decomposition) gives the minimum
    norm solution.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if n == 0:
        return np.zeros(0)
    if m >= n:
        Q, R = np.linalg.qr(A)
        d = np.abs(np.diag(R))
        if d.min() > 0 and d.max() / d.min() <= PIVOT_CONDITION:
            return scipy.linalg.solve_triangular(R, Q.T @ b)
    Q, R, perm = scipy.linalg.qr(A, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    if d.size == 0 or d[0] == 0.0:
        return np.zeros(n)
    rank = int(np.sum(d > RANK_RTOL * d[0]))
    qtb = Q[:, :rank].T @ b
    R1 = R[:rank, :]
    if rank == n:
        y = scipy.linalg.solve_triangular(R1, qtb)
    else:
        # R1^T = Z T  ->  x = Z T^{-T} qtb is the minimum norm solution of R1 x = qtb
        Z, T = np.linalg.qr(R1.T)
        y = Z @ scipy.linalg.solve_triangular(T, qtb, trans="T")
    x = np.empty(n)
    x[perm] = y
    return x


def _combine(history, gamma):
    # weights act on the outputs paired with each residual
    return np.tensordot(gamma, np.asarray(history.outputs), axes=1)


def mpe_weights(residuals):
    """Normalised MPE weights for residuals ``r_0..r_k`` (``c_k = 1`` fixed).

    Returns ``None`` when the coefficients sum to zero.
    """
    R = np.column_stack(residuals)
    if R.shape[1] == 1:
        return np.ones(1)
    c = np.empty(R.shape[1])
    c[:-1] = lstsq_qr(R[:, :-1], -R[:, -1])
    c[-1] = 1.0
    total = c.sum()
    if abs(total) <= 1e-14 * np.abs(c).sum():
        return None
    return c / total


def rre_weights(residuals):
    """RRE weights: minimise ``|sum_j g_j r_j|`` subject to ``sum_j g_j = 1``.

    The constraint is eliminated through ``g_k = 1 - sum_{j<k} g_j``, which turns
    the problem into an ordinary least squares problem in the differences
    ``r_j - r_k``.
    """
    R = np.column_stack(residuals)
    k = R.shape[1] - 1
    gamma = np.empty(k + 1)
    if k == 0:
        gamma[0] = 1.0
        return gamma
    D = R[:, :-1] - R[:, -1:]
    beta = lstsq_qr(D, -R[:, -1])
    gamma[:-1] = beta
    gamma[-1] = 1.0 - beta.sum()
    return gamma


def mpe_extrapolate(history):
    """Minimal polynomial extrapolation over the whole history."""
    if len(history) == 0:
        raise ConfigurationError("MPE needs at least one residual")
    residuals = history.residuals
    if not any(np.any(r) for r in residuals):
        return history.outputs[-1].copy()
    gamma = mpe_weights(residuals)
    if gamma is None:
        return history.outputs[-1].copy()
    return _combine(history, gamma)


def rre_extrapolate(history):
    """Reduced rank extrapolation over the whole history."""
    if len(history) == 0:
        raise ConfigurationError("RRE needs at least one residual")
    residuals = history.residuals
    if not any(np.any(r) for r in residuals):
        return history.outputs[-1].copy()
    return _combine(history, rre_weights(residuals))


ACCELERATORS = ("none", "aitken", "mpe", "rre")


class Accelerator:
    """Stateful wrapper used by the coupling loop for one stage solve.

    By default the first residual is never modified, so every method starts
    acting once two fixed-point iterations are available.  ``relax_first=True``
    applies the prescribed Aitken factor ``omega0`` to the very first iterate.
    """

    def __init__(self, method="none", omega0=0.8, window=None, relax_first=False):
        method = (method or "none").lower()
        if method not in ACCELERATORS:
            raise ConfigurationError(f"unknown accelerator {method!r}")
        self.method = method
        self.omega0 = omega0
        self.window = window
        self.relax_first = relax_first
        self.reset()

    def reset(self):
        self.history = IterationHistory()
        self.aitken = AitkenState(self.omega0)

    def __call__(self, theta_in, theta_out):
        """Register ``theta_out = G(theta_in)`` and return the next Dirichlet datum."""
        self.history.append(theta_in, theta_out)
        if self.method == "aitken":
            theta, self.aitken = aitken_update(self.history, self.aitken, self.relax_first)
            return theta
        if self.method == "none" or len(self.history) < 2:
            return self.history.outputs[-1].copy()
        hist = self.history.window(self.window)
        if self.method == "mpe":
            return mpe_extrapolate(hist)
        return rre_extrapolate(hist)
