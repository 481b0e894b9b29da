"""Stationary heat conduction with convective (Robin) boundary conditions.

Solves ``div(k grad T) = 0`` in the component with
``k dT/dn = eta (T_e - T)`` on the whole boundary using P1 elements. Both
boundary parts carry the Robin condition; the clamping tag only matters for
elasticity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .exceptions import NumericalError, ValidationError
from .expressions import as_field_function
from .fields import ScalarField, VectorField, cell_gradients, recover_gradient
from .geometry import Shape
from .linalg import solve_spd
from .mesh import Mesh

# the linear solve reproduces a constant ambient to about 1e-13 of its size
ROUNDOFF_REL = 1e-10

__all__ = [
    "RobinData",
    "GradientField",
    "TemperatureBounds",
    "assemble_heat",
    "solve_heat",
    "temperature_bounds_check",
    "gradient_field",
]


@dataclass(frozen=True)
class RobinData:
    """Heat transfer coefficient ``eta``, ambient temperature ``T_e`` and conductivity.

    ``eta`` and ``T_e`` are numbers, expression strings or callables
    ``f(points, normals)``.
    """

    eta: object
    T_e: object
    k_cond: float

    def __post_init__(self):
        if not self.k_cond > 0:
            raise ValidationError("thermal conductivity must be positive")
        object.__setattr__(self, "eta", as_field_function(self.eta))
        object.__setattr__(self, "T_e", as_field_function(self.T_e))

    def boundary_values(self, mesh: Mesh):
        """``eta`` and ``T_e`` at the boundary quadrature points, plus the quadrature itself."""
        pts, w, bary, ids = mesh.facet_quadrature_points()
        normals = np.broadcast_to(mesh.facet_normals[ids][:, None, :], pts.shape)
        eta = np.broadcast_to(np.asarray(self.eta(pts, normals), dtype=float), w.shape)
        Te = np.broadcast_to(np.asarray(self.T_e(pts, normals), dtype=float), w.shape)
        return eta, Te, pts, w, bary, ids


def _scatter_matrix(n, rows_idx, cols_idx, vals):
    return sp.coo_matrix((vals.ravel(), (rows_idx.ravel(), cols_idx.ravel())), shape=(n, n)).tocsr()


def assemble_heat(mesh: Mesh, data: RobinData):
    """Stiffness-plus-Robin matrix and load vector of the P1 heat problem."""
    G = mesh.shape_gradients
    vol = np.abs(mesh.cell_volumes)
    Ke = data.k_cond * vol[:, None, None] * np.einsum("cad,cbd->cab", G, G)
    c = mesh.cells
    K = _scatter_matrix(mesh.n_nodes, np.repeat(c[:, :, None], c.shape[1], 2), np.repeat(c[:, None, :], c.shape[1], 1), Ke)

    eta, Te, _, w, bary, ids = data.boundary_values(mesh)
    if np.any(eta < 0) or not np.all(np.isfinite(eta)):
        raise ValidationError("heat transfer coefficient must be positive on the boundary")
    if np.max(eta) <= 1e-300:
        raise NumericalError("heat transfer coefficient vanishes on the boundary: singular heat system")
    if np.any(eta <= 0):
        raise ValidationError("heat transfer coefficient must be positive at every boundary point")
    f = mesh.facets[ids]
    Me = np.einsum("fq,qa,qb->fab", w * eta, bary, bary)
    M = _scatter_matrix(mesh.n_nodes, np.repeat(f[:, :, None], f.shape[1], 2), np.repeat(f[:, None, :], f.shape[1], 1), Me)
    load = np.zeros(mesh.n_nodes)
    np.add.at(load, f, np.einsum("fq,qa->fa", w * eta * Te, bary))
    return (K + M).tocsr(), load


def _mesh_of(shape_or_mesh) -> Mesh:
    return shape_or_mesh.mesh if isinstance(shape_or_mesh, Shape) else shape_or_mesh


def solve_heat(shape, data: RobinData, solver: str = "cg") -> ScalarField:
    """Temperature field solving the Robin heat problem on ``shape`` (a Shape or Mesh)."""
    mesh = _mesh_of(shape)
    A, b = assemble_heat(mesh, data)
    return ScalarField(mesh, solve_spd(A, b, method=solver))


@dataclass(frozen=True)
class TemperatureBounds:
    T_min: float
    T_max: float
    Te_min: float
    Te_max: float
    tol: float
    slack_used: float
    passed: bool


def temperature_bounds_check(T: ScalarField, data: RobinData, Te_range=None) -> TemperatureBounds:
    """Discrete maximum principle: ``min T_e - tol <= T <= max T_e + tol``.

    The ambient range defaults to ``T_e`` sampled at boundary nodes and
    boundary quadrature points; ``tol = 1e-3 (max T_e - min T_e)`` plus a
    roundoff floor of ``1e-10`` relative to the temperature scale.
    """
    mesh = T.mesh
    if Te_range is None:
        _, Te_q, *_ = data.boundary_values(mesh)
        bnodes = np.unique(mesh.facets)
        Te_n = data.T_e(mesh.nodes[bnodes], None) if not getattr(data.T_e, "uses_normal", False) else Te_q
        Te_all = np.concatenate([np.ravel(Te_q), np.ravel(Te_n)])
        lo, hi = float(Te_all.min()), float(Te_all.max())
    else:
        lo, hi = map(float, Te_range)
    tol = 1e-3 * (hi - lo) + ROUNDOFF_REL * max(abs(lo), abs(hi), 1.0)
    tmin, tmax = float(T.values.min()), float(T.values.max())
    slack = max(0.0, lo - tmin, tmax - hi)
    return TemperatureBounds(tmin, tmax, lo, hi, tol, slack, slack <= tol)


@dataclass(frozen=True, eq=False)
class GradientField:
    """Per-cell gradients and their volume-weighted nodal recovery."""

    cell: np.ndarray
    nodal: VectorField


def gradient_field(T: ScalarField) -> GradientField:
    mesh = T.mesh
    return GradientField(cell_gradients(mesh, T.values), VectorField(mesh, recover_gradient(mesh, T.values)))
