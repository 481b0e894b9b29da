"""Linear thermoelasticity with P1 elements.

Weak form: find ``u`` with ``u = 0`` on the clamped (DIRICHLET) boundary and

    int sigma(u) : eps(v) dx = int f . v dx + int_N g . v dA
                               + int rho (3 lam + 2 mu) (T - T0) div v dx

for all admissible ``v``. The last term is the integrated-by-parts form of
the volume force ``-rho (3 lam + 2 mu) grad T`` together with the thermal
surface load on the traction boundary.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .exceptions import ValidationError
from .expressions import as_field_function
from .fields import ScalarField, VectorField, cell_gradients
from .geometry import Shape
from .linalg import solve_spd
from .material import MaterialParams, thermoelastic_stress
from .mesh import BoundaryTag, Mesh

# relative to the temperature scale; the heat solve is accurate to about 1e-13 of it
ROUNDOFF_DT = 1e-10

__all__ = ["LoadData", "StressField", "assemble_elasticity", "solve_elasticity", "stress"]


@dataclass(frozen=True)
class LoadData:
    """Volume force ``f`` and traction ``g`` (vector expressions or callables).

    ``traction_bound`` (k1) optionally caps ``max |g|`` on the traction boundary.
    """

    f: object = ("0", "0")
    g: object = ("0", "0")
    traction_bound: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "f", as_field_function(self.f, vector=True))
        object.__setattr__(self, "g", as_field_function(self.g, vector=True))

    @classmethod
    def zero(cls, dim: int = 2):
        return cls(("0",) * dim, ("0",) * dim)


def _mesh_of(shape_or_mesh) -> Mesh:
    return shape_or_mesh.mesh if isinstance(shape_or_mesh, Shape) else shape_or_mesh


def _elastic_cell_matrices(mesh: Mesh, lam: float, mu: float):
    G = mesh.shape_gradients
    vol = np.abs(mesh.cell_volumes)
    d = mesh.dim
    eye = np.eye(d)
    GG = np.einsum("cak,cbk->cab", G, G)
    Ke = (
        lam * np.einsum("cai,cbj->caibj", G, G)
        + mu * np.einsum("cab,ij->caibj", GG, eye)
        + mu * np.einsum("caj,cbi->caibj", G, G)
    )
    k = d + 1
    return vol[:, None, None] * Ke.reshape(mesh.n_cells, k * d, k * d)


def _cell_dofs(mesh: Mesh):
    d = mesh.dim
    return (mesh.cells[:, :, None] * d + np.arange(d)).reshape(mesh.n_cells, -1)


def assemble_elasticity(mesh: Mesh, p: MaterialParams) -> sp.csr_matrix:
    """Global stiffness matrix with node-major DOF numbering ``node * d + component``."""
    Ke = _elastic_cell_matrices(mesh, p.lam, p.mu)
    dofs = _cell_dofs(mesh)
    n = mesh.n_nodes * mesh.dim
    rows = np.repeat(dofs[:, :, None], dofs.shape[1], 2)
    cols = np.repeat(dofs[:, None, :], dofs.shape[1], 1)
    return sp.coo_matrix((Ke.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n)).tocsr()


def assemble_load(mesh: Mesh, loads: LoadData, T: ScalarField, p: MaterialParams) -> np.ndarray:
    d = mesh.dim
    b = np.zeros(mesh.n_nodes * d)
    dofs = _cell_dofs(mesh)

    pts, w, bary = mesh.cell_quadrature_points(2)
    fq = loads.f(pts, None)
    np.add.at(b, dofs, np.einsum("cq,qa,cqi->cai", w, bary, fq).reshape(mesh.n_cells, -1))

    dT = T.values[mesh.cells].mean(axis=1) - p.T0
    # temperature offsets at solver-noise level carry no load; keeps the unloaded state exactly zero
    dT[np.abs(dT) <= ROUNDOFF_DT * max(abs(p.T0), np.max(np.abs(T.values)), 1.0)] = 0.0
    vol = np.abs(mesh.cell_volumes)
    thermal = p.thermal_modulus * (vol * dT)[:, None, None] * mesh.shape_gradients
    np.add.at(b, dofs, thermal.reshape(mesh.n_cells, -1))

    pts, w, fbary, ids = mesh.facet_quadrature_points(BoundaryTag.ROBIN_NEUMANN)
    if len(ids):
        normals = np.broadcast_to(mesh.facet_normals[ids][:, None, :], pts.shape)
        gq = loads.g(pts, normals)
        if loads.traction_bound is not None and np.max(np.linalg.norm(gq, axis=-1)) > loads.traction_bound:
            raise ValidationError(f"surface traction exceeds the admissible bound k1 = {loads.traction_bound}")
        fdofs = (mesh.facets[ids][:, :, None] * d + np.arange(d)).reshape(len(ids), -1)
        np.add.at(b, fdofs, np.einsum("fq,qa,fqi->fai", w, fbary, gq).reshape(len(ids), -1))
    return b


def solve_elasticity(
    shape,
    loads: LoadData,
    T: ScalarField,
    p: MaterialParams,
    dirichlet_values=None,
    solver: str = "cg",
) -> VectorField:
    """Displacement field of the thermoelastic problem.

    ``dirichlet_values`` (callable ``points -> (n, d)``) replaces the zero
    clamping on the DIRICHLET boundary; it exists for patch tests.
    """
    mesh = _mesh_of(shape)
    if T.mesh is not mesh and (T.mesh.n_nodes != mesh.n_nodes or not np.array_equal(T.mesh.nodes, mesh.nodes)):
        raise ValidationError("temperature field lives on a different mesh")
    d = mesh.dim
    fixed_nodes = mesh.boundary_nodes(BoundaryTag.DIRICHLET)
    if len(fixed_nodes) == 0:
        raise ValidationError("no clamped (DIRICHLET) boundary: rigid body modes make the problem singular")
    K = assemble_elasticity(mesh, p)
    b = assemble_load(mesh, loads, T, p)
    n = mesh.n_nodes * d
    fixed = (fixed_nodes[:, None] * d + np.arange(d)).ravel()
    u = np.zeros(n)
    if dirichlet_values is not None:
        u[fixed] = np.asarray(dirichlet_values(mesh.nodes[fixed_nodes]), dtype=float).reshape(-1)
    free = np.setdiff1d(np.arange(n), fixed)
    rhs = b[free] - K[free][:, fixed] @ u[fixed]
    u[free] = solve_spd(K[free][:, free], rhs, method=solver)
    return VectorField(mesh, u.reshape(-1, d))


@dataclass(frozen=True, eq=False)
class StressField:
    """Per-cell thermoelastic stress tensors ``(c, d, d)``."""

    mesh: Mesh
    tensors: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.tensors, dtype=float)
        scale = max(float(np.max(np.abs(t), initial=0.0)), 1e-300)
        if np.max(np.abs(t - np.swapaxes(t, 1, 2)), initial=0.0) > 1e-12 * scale:
            raise ValidationError("stress tensors must be symmetric")
        object.__setattr__(self, "tensors", t)

    def to_rows(self):
        d = self.mesh.dim
        comps = [(i, j) for i in range(d) for j in range(i, d)]
        names = ["cell_id", *("cx", "cy", "cz")[:d], *[f"s{i + 1}{j + 1}" for i, j in comps]]
        rows = [
            [c, *map(float, self.mesh.centroids[c]), *(float(self.tensors[c, i, j]) for i, j in comps)]
            for c in range(self.mesh.n_cells)
        ]
        return names, rows

    def to_csv(self, path) -> None:
        names, rows = self.to_rows()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names)
            w.writerows([[repr(v) if isinstance(v, float) else v for v in r] for r in rows])

    def to_json(self, path) -> None:
        Path(path).write_text(
            json.dumps({"kind": "stress", "centroids": self.mesh.centroids.tolist(), "tensors": self.tensors.tolist()})
        )


def stress(shape, u: VectorField, T: ScalarField, p: MaterialParams) -> StressField:
    """Cellwise ``lam div(u) I + mu (grad u + grad u^T) - rho (3 lam + 2 mu)(T - T0) I`` with cell-averaged T."""
    mesh = _mesh_of(shape)
    if u.mesh.n_nodes != mesh.n_nodes or T.mesh.n_nodes != mesh.n_nodes:
        raise ValidationError("fields must live on the shape's mesh")
    grad_u = cell_gradients(mesh, u.values)
    return StressField(mesh, thermoelastic_stress(grad_u, T.at_cells(), p))
