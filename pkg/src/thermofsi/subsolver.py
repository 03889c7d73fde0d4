"""Subsolver interface for the partitioned SDIRK master.

A subsolver owns the full field of one subdomain.  It only ever solves stage
systems of backward Euler type ``M(u) (u - s) = dt*a_ii * f(u, data)``; the
master supplies the stage context and the interface data, the subsolver keeps
the starting vector, the stage derivatives and a backup of the step start state.
"""

import copy
from abc import ABC, abstractmethod

import numpy as np

from .errors import SequencingError, SubsolverError
from .sdirk import compute_starting_vector, embedded_error

DIRICHLET = "dirichlet"
NEUMANN = "neumann"


class Subsolver(ABC):
    """Base class with the DIRK bookkeeping shared by all subsolvers.

    Subclasses implement :meth:`_solve` and :meth:`interface_values`, and set
    ``role`` to ``"dirichlet"`` (receives interface temperature, returns flux)
    or ``"neumann"`` (receives flux, returns interface temperature).
    """

    role = None

    def __init__(self, u0):
        self.u = np.array(u0, dtype=float)
        self.t = 0.0
        self.stage_derivatives = []
        self.ctx = None
        self.start = None
        self.stage_value = None
        self._backup = None

    # -- coupling-relevant material information -------------------------
    def conductivity_range(self):
        """(min, max) heat conductivity seen by the interface."""
        return (0.0, 0.0) if self.role == DIRICHLET else (np.inf, np.inf)

    # -- per-step protocol ----------------------------------------------
    def begin_step(self):
        self._backup = self.backup()
        self.stage_derivatives = []
        self.ctx = None
        self.stage_value = None

    def prepare_stage(self, ctx):
        if len(self.stage_derivatives) != ctx.stage_index - 1:
            raise SequencingError(
                f"stage {ctx.stage_index} prepared with {len(self.stage_derivatives)} "
                "committed stages"
            )
        self.ctx = ctx
        self.start = compute_starting_vector(
            self.u, self.stage_derivatives, ctx.tableau, ctx.stage_index, ctx.dt
        )
        self.stage_value = None
        return self.start

    def solve_stage(self, data, ctx=None):
        """Solve the current stage with the given interface data; return the output."""
        if ctx is not None and ctx is not self.ctx:
            self.prepare_stage(ctx)
        if self.ctx is None:
            raise SequencingError("solve_stage called before prepare_stage")
        guess = self.start if self.stage_value is None else self.stage_value
        self.stage_value, out = self._solve(np.asarray(data, dtype=float), guess)
        return out

    def record_stage_derivative(self):
        if self.stage_value is None:
            raise SequencingError("no stage solution to record")
        k = (self.stage_value - self.start) / self.ctx.dt_aii
        self.stage_derivatives.append(k)
        return k

    def estimate_local_error(self):
        if self.ctx is None:
            raise SequencingError("no step in progress")
        return embedded_error(self.stage_value, self.stage_derivatives, self.ctx.tableau, self.ctx.dt)

    def accept_step(self):
        if len(self.stage_derivatives) != self.ctx.tableau.stages:
            raise SequencingError("step accepted before all stages were committed")
        # stiffly accurate: the last stage value is the step value
        self.u = self.stage_value.copy()
        self.t = self.ctx.t_n + self.ctx.dt
        self.stage_derivatives = []
        self.ctx = None
        self._backup = None

    def reject_step(self):
        if self._backup is None:
            raise SequencingError("no backup to restore")
        self.restore(self._backup)
        self._backup = None

    def starting_interface_values(self):
        """Starting vector of the current stage restricted to the interface."""
        if self.start is None:
            raise SequencingError("no stage prepared")
        return self.interface_values(self.start)

    # -- state snapshots --------------------------------------------------
    def backup(self):
        return {
            "u": self.u.copy(),
            "t": self.t,
            "stage_derivatives": [k.copy() for k in self.stage_derivatives],
            "extra": copy.deepcopy(self._extra_state()),
        }

    def restore(self, snapshot):
        self.u = snapshot["u"].copy()
        self.t = snapshot["t"]
        self.stage_derivatives = [k.copy() for k in snapshot["stage_derivatives"]]
        self._restore_extra(copy.deepcopy(snapshot["extra"]))
        self.ctx = None
        self.start = None
        self.stage_value = None

    def _extra_state(self):
        return None

    def _restore_extra(self, extra):
        pass

    # -- subclass hooks ---------------------------------------------------
    @abstractmethod
    def _solve(self, data, guess):
        """Return ``(stage_value, interface_output)`` for the prepared stage."""

    @abstractmethod
    def interface_values(self, field):
        """Restrict a full field vector to the interface."""


class NullSubsolver(Subsolver):
    """Dirichlet partner without unknowns; always returns zero flux.

    Lets a single-field ODE be advanced through the coupled machinery.
    """

    role = DIRICHLET

    def __init__(self, n_interface=1):
        super().__init__(np.zeros(0))
        self.n_interface = n_interface

    def _solve(self, data, guess):
        return np.zeros(0), np.zeros(self.n_interface)

    def interface_values(self, field):
        return np.zeros(self.n_interface)


class ODESubsolver(Subsolver):
    """Neumann-side wrapper around ``y' = f(t, y) + q`` with Newton stage solves.

    The whole state is treated as the interface; ``q`` is the flux handed over by
    the Dirichlet partner (zero for :class:`NullSubsolver`).
    """

    role = NEUMANN

    def __init__(self, rhs, jac, y0, max_newton=25):
        super().__init__(np.atleast_1d(np.asarray(y0, dtype=float)))
        self.rhs = rhs
        self.jac = jac
        self.max_newton = max_newton
        self.newton_iterations = 0

    def _solve(self, q, guess):
        ctx = self.ctx
        h = ctx.dt_aii
        t = ctx.t_stage
        y = np.array(guess, dtype=float)
        n = y.size
        for it in range(1, self.max_newton + 1):
            res = y - self.start - h * (np.asarray(self.rhs(t, y)) + q)
            J = np.eye(n) - h * np.atleast_2d(self.jac(t, y))
            dy = np.linalg.solve(J, -res)
            y = y + dy
            if np.max(np.abs(dy)) <= ctx.inner_tol * max(1.0, np.max(np.abs(y))):
                self.newton_iterations = it
                return y, y.copy()
        raise SubsolverError("ODE stage Newton iteration did not converge")

    def interface_values(self, field):
        return np.array(field, dtype=float)
