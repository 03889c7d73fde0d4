"""Nonlinear 1D heat conduction in the workpiece (Neumann partner).

Galerkin finite elements of order 1 or 2 on ``0 <= x <= L`` give

    M(theta) dtheta/dt + K(theta) theta = q e_0,

where ``q`` is the heat flux entering the structure through the coupling
interface at ``x = 0``; the far end is insulated.  Stage systems are solved by
Newton's method with the exact Jacobian (including the derivatives of the
temperature dependent coefficients) and a banded direct solver.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConfigurationError, SubsolverError
from .subsolver import NEUMANN, Subsolver

_SHAPES = {
    1: (
        lambda xi: np.stack([(1 - xi) / 2, (1 + xi) / 2], axis=-1),
        lambda xi: np.stack([np.full_like(xi, -0.5), np.full_like(xi, 0.5)], axis=-1),
    ),
    2: (
        lambda xi: np.stack([xi * (xi - 1) / 2, 1 - xi * xi, xi * (xi + 1) / 2], axis=-1),
        lambda xi: np.stack([xi - 0.5, -2 * xi, xi + 0.5], axis=-1),
    ),
}


@dataclass(frozen=True)
class StructureMesh:
    length: float
    elements: int
    order: int = 2

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ConfigurationError("element order must be 1 or 2")
        if self.elements < 1:
            raise ConfigurationError("need at least one element")
        if not self.length > 0:
            raise ConfigurationError("structure length must be positive")

    @property
    def n_nodes(self):
        return self.elements * self.order + 1

    @property
    def nodes(self):
        return np.linspace(0.0, self.length, self.n_nodes)

    @property
    def connectivity(self):
        p = self.order
        return np.arange(self.elements)[:, None] * p + np.arange(p + 1)[None, :]

    interface_node = 0


class _Quadrature:
    """Shape function values on every element at the Gauss points."""

    def __init__(self, mesh, nodes=None):
        x = mesh.nodes if nodes is None else np.asarray(nodes, dtype=float)
        conn = mesh.connectivity
        xe = x[conn]
        he = xe[:, -1] - xe[:, 0]
        if np.any(he <= 0):
            raise ConfigurationError("mesh has an element of non-positive length")
        xi, w = np.polynomial.legendre.leggauss(mesh.order + 1)
        shape, dshape = _SHAPES[mesh.order]
        self.conn = conn
        self.N = shape(xi)                                  # (g, a)
        jac = he / 2.0                                       # (e,)
        self.B = dshape(xi)[None, :, :] / jac[:, None, None]  # (e, g, a)
        self.wj = w[None, :] * jac[:, None]                  # (e, g)
        self.n = x.size
        self.bw = mesh.order


def _element_fields(q, theta):
    te = theta[q.conn]                                  # (e, a)
    val = te @ q.N.T                                    # (e, g)
    grad = np.einsum("ega,ea->eg", q.B, te)
    return te, val, grad


def assemble(theta, mesh, material, nodes=None):
    """Dense heat capacity matrix ``M`` and conductivity matrix ``K`` at ``theta``."""
    q = _Quadrature(mesh, nodes)
    theta = np.asarray(theta, dtype=float)
    _, val, _ = _element_fields(q, theta)
    rc = material.density * material.heat_capacity(val) * q.wj     # (e, g)
    lam = material.conductivity(val) * q.wj
    Me = np.einsum("eg,ga,gb->eab", rc, q.N, q.N)
    Ke = np.einsum("eg,ega,egb->eab", lam, q.B, q.B)
    M = np.zeros((q.n, q.n))
    K = np.zeros((q.n, q.n))
    rows = q.conn[:, :, None]
    cols = q.conn[:, None, :]
    np.add.at(M, (rows, cols), Me)
    np.add.at(K, (rows, cols), Ke)
    return M, K


def _to_banded(A, bw):
    n = A.shape[0]
    ab = np.zeros((2 * bw + 1, n))
    for d in range(-bw, bw + 1):
        diag = np.diagonal(A, offset=d)
        if d >= 0:
            ab[bw - d, d:] = diag
        else:
            ab[bw - d, : n + d] = diag
    return ab


class StructureSolver(Subsolver):
    """Finite element heat conduction subsolver.

    Parameters
    ----------
    mesh : StructureMesh
    material : Material51CrV4 or ConstantMaterial
    initial_temperature : float or array
        Uniform value or nodal field in kelvin.
    jacobian : {"newton", "picard"}
        ``"picard"`` drops the coefficient derivatives from the Jacobian.
    """

    role = NEUMANN

    def __init__(self, mesh, material, initial_temperature, jacobian="newton", max_newton=25):
        if jacobian not in ("newton", "picard"):
            raise ConfigurationError("jacobian must be 'newton' or 'picard'")
        theta0 = np.broadcast_to(np.asarray(initial_temperature, dtype=float), (mesh.n_nodes,))
        if not np.all(np.isfinite(theta0)) or np.any(theta0 <= 0):
            raise ConfigurationError("initial temperatures must be positive and finite (kelvin)")
        super().__init__(theta0.copy())
        self.mesh = mesh
        self.material = material
        self.jacobian = jacobian
        self.max_newton = max_newton
        self._q = _Quadrature(mesh)
        self.newton_history = []

    def conductivity_range(self):
        return self.material.conductivity_bounds()

    def interface_values(self, field):
        return np.array([field[self.mesh.interface_node]])

    def total_energy(self, theta):
        """``sum(M(theta) theta)``, the discrete thermal energy per unit area."""
        M, _ = assemble(theta, self.mesh, self.material)
        return float(np.sum(M @ theta))

    def stage_residual(self, theta, start, flux, dt_aii):
        q = self._q
        mat = self.material
        te, val, grad = _element_fields(q, theta)
        _, vval, _ = _element_fields(q, theta - start)
        rc = mat.density * mat.heat_capacity(val)
        lam = mat.conductivity(val)
        Re = np.einsum("eg,ga->ea", q.wj * rc * vval, q.N)
        Re += dt_aii * np.einsum("eg,ega->ea", q.wj * lam * grad, q.B)
        R = np.zeros(q.n)
        np.add.at(R, q.conn, Re)
        R[self.mesh.interface_node] -= dt_aii * flux
        return R

    def stage_jacobian(self, theta, start, dt_aii):
        q = self._q
        mat = self.material
        _, val, grad = _element_fields(q, theta)
        _, vval, _ = _element_fields(q, theta - start)
        rc = q.wj * mat.density * mat.heat_capacity(val)
        lam = q.wj * mat.conductivity(val)
        Je = np.einsum("eg,ga,gb->eab", rc, q.N, q.N)
        Je += dt_aii * np.einsum("eg,ega,egb->eab", lam, q.B, q.B)
        if self.jacobian == "newton":
            drc = q.wj * mat.density * mat.d_heat_capacity(val) * vval
            dlam = q.wj * mat.d_conductivity(val) * grad
            Je += np.einsum("eg,ga,gb->eab", drc, q.N, q.N)
            Je += dt_aii * np.einsum("eg,ega,gb->eab", dlam, q.B, q.N)
        J = np.zeros((q.n, q.n))
        np.add.at(J, (q.conn[:, :, None], q.conn[:, None, :]), Je)
        return J

    def _solve(self, data, guess):
        if data.size != 1:
            raise ConfigurationError("the 1D structure has a single interface node")
        flux = float(data[0])
        hs = self.ctx.dt_aii
        tol = self.ctx.inner_tol
        theta = np.array(guess, dtype=float)
        bw = self.mesh.order
        history = []
        for _ in range(self.max_newton):
            R = self.stage_residual(theta, self.start, flux, hs)
            J = self.stage_jacobian(theta, self.start, hs)
            history.append(float(np.max(np.abs(R))))
            try:
                delta = scipy.linalg.solve_banded((bw, bw), _to_banded(J, bw), -R)
            except (np.linalg.LinAlgError, ValueError) as exc:
                raise SubsolverError(f"structure Newton solve failed: {exc}") from exc
            theta = theta + delta
            if not np.all(np.isfinite(theta)) or np.any(theta <= 0):
                raise SubsolverError("structure Newton iteration left the physical range "
                                     "(non-finite or non-positive temperatures)")
            if np.max(np.abs(delta)) <= tol * np.max(np.abs(theta)):
                self.newton_history = history
                return theta, self.interface_values(theta)
        self.newton_history = history
        raise SubsolverError(f"structure Newton iteration did not converge in {self.max_newton} steps")
