"""Simplicial meshes with tagged boundary facets, quadrature rules and mesh I/O."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .exceptions import ValidationError

__all__ = [
    "BoundaryTag",
    "Mesh",
    "simplex_quadrature",
    "facet_quadrature",
    "write_mesh_text",
    "read_mesh_text",
    "write_mesh_json",
    "read_mesh_json",
]


class BoundaryTag(IntEnum):
    DIRICHLET = 1
    ROBIN_NEUMANN = 2


@lru_cache(maxsize=None)
def simplex_quadrature(dim: int, n: int = 2):
    """Collapsed-coordinate Gauss rule on the reference simplex.

    Returns ``(bary, weights)`` with barycentric coordinates of shape
    ``(q, dim + 1)`` and weights summing to 1 (multiply by the cell measure).
    The rule integrates polynomials of degree ``2 n - 1`` exactly.
    """
    if dim == 0:
        return np.ones((1, 1)), np.ones(1)
    if dim == 1:
        x, w = roots_legendre(n)
        s = 0.5 * (x + 1)
        return np.column_stack([1 - s, s]), 0.5 * w
    if dim == 2:
        xs, ws = roots_jacobi(n, 1.0, 0.0)
        xt, wt = roots_legendre(n)
        s = 0.5 * (xs + 1)
        t = 0.5 * (xt + 1)
        S, Tt = np.meshgrid(s, t, indexing="ij")
        W = np.outer(ws / 4.0, wt / 2.0)
        xi = S
        eta = (1 - S) * Tt
        bary = np.column_stack([(1 - xi - eta).ravel(), xi.ravel(), eta.ravel()])
        return bary, 2.0 * W.ravel()
    if dim == 3:
        xs, ws = roots_jacobi(n, 2.0, 0.0)
        xt, wt = roots_jacobi(n, 1.0, 0.0)
        xv, wv = roots_legendre(n)
        s, t, v = 0.5 * (xs + 1), 0.5 * (xt + 1), 0.5 * (xv + 1)
        S, Tt, V = np.meshgrid(s, t, v, indexing="ij")
        W = np.einsum("i,j,k->ijk", ws / 8.0, wt / 4.0, wv / 2.0)
        xi = S
        eta = (1 - S) * Tt
        zeta = (1 - S) * (1 - Tt) * V
        bary = np.column_stack([(1 - xi - eta - zeta).ravel(), xi.ravel(), eta.ravel(), zeta.ravel()])
        return bary, 6.0 * W.ravel()
    raise ValidationError(f"unsupported simplex dimension {dim}")


def facet_quadrature(dim: int):
    """Order-2 Gauss rule on boundary facets of a ``dim``-dimensional mesh."""
    return simplex_quadrature(dim - 1, 2)


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming simplicial mesh.

    Attributes
    ----------
    nodes : (n, d) float array
    cells : (c, d + 1) int array, positively oriented
    facets : (f, d) int array of boundary facets
    facet_tags : (f,) int array of :class:`BoundaryTag` values
    """

    nodes: np.ndarray
    cells: np.ndarray
    facets: np.ndarray
    facet_tags: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=float)
        cells = np.ascontiguousarray(self.cells, dtype=np.int64)
        facets = np.ascontiguousarray(self.facets, dtype=np.int64)
        tags = np.ascontiguousarray(self.facet_tags, dtype=np.int64)
        d = nodes.shape[1]
        if d not in (2, 3):
            raise ValidationError(f"mesh dimension must be 2 or 3, got {d}")
        if cells.shape[1] != d + 1 or facets.shape[1] != d or tags.shape != (len(facets),):
            raise ValidationError("inconsistent mesh array shapes")
        if not set(np.unique(tags)) <= {int(BoundaryTag.DIRICHLET), int(BoundaryTag.ROBIN_NEUMANN)}:
            raise ValidationError("unknown facet tag")
        for name, arr in (("nodes", nodes), ("cells", cells), ("facets", facets), ("facet_tags", tags)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def with_nodes(self, nodes) -> "Mesh":
        """Same connectivity and tags on new node coordinates."""
        return Mesh(nodes, self.cells, self.facets, self.facet_tags, dict(self.meta))

    # --- cell geometry -------------------------------------------------------

    @cached_property
    def _cell_jacobians(self):
        X = self.nodes[self.cells]
        return np.swapaxes(X[:, 1:, :] - X[:, :1, :], 1, 2)

    @cached_property
    def cell_volumes(self) -> np.ndarray:
        """Signed cell measures (positive for a valid mesh)."""
        fact = 2.0 if self.dim == 2 else 6.0
        return np.linalg.det(self._cell_jacobians) / fact

    @cached_property
    def shape_gradients(self) -> np.ndarray:
        """Gradients of the P1 basis functions, shape ``(c, d + 1, d)``."""
        J = self._cell_jacobians
        Jinv = np.linalg.inv(J)
        ref = np.vstack([-np.ones(self.dim), np.eye(self.dim)])
        return np.einsum("ad,cdk->cak", ref, Jinv)

    @cached_property
    def cell_diameters(self) -> np.ndarray:
        X = self.nodes[self.cells]
        k = self.dim + 1
        diam = np.zeros(self.n_cells)
        for a in range(k):
            for b in range(a + 1, k):
                diam = np.maximum(diam, np.linalg.norm(X[:, a] - X[:, b], axis=1))
        return diam

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.nodes[self.cells].mean(axis=1)

    def cell_quadrature_points(self, n: int = 2):
        """Physical quadrature points ``(c, q, d)``, weights ``(c, q)`` and barycentrics."""
        bary, w = simplex_quadrature(self.dim, n)
        pts = np.einsum("qa,cad->cqd", bary, self.nodes[self.cells])
        return pts, np.abs(self.cell_volumes)[:, None] * w[None, :], bary

    @cached_property
    def edges(self) -> np.ndarray:
        k = self.dim + 1
        pairs = [(a, b) for a in range(k) for b in range(a + 1, k)]
        e = np.concatenate([self.cells[:, [a, b]] for a, b in pairs])
        return np.unique(np.sort(e, axis=1), axis=0)

    # --- boundary geometry ---------------------------------------------------

    @cached_property
    def _facet_owner(self):
        k = self.dim + 1
        faces, owners, opposite = [], [], []
        for skip in range(k):
            keep = [a for a in range(k) if a != skip]
            faces.append(self.cells[:, keep])
            owners.append(np.arange(self.n_cells))
            opposite.append(self.cells[:, skip])
        faces = np.sort(np.concatenate(faces), axis=1)
        owners = np.concatenate(owners)
        opposite = np.concatenate(opposite)
        uniq, inv, counts = np.unique(faces, axis=0, return_inverse=True, return_counts=True)
        inv = inv.ravel()
        lookup = {tuple(f): i for i, f in enumerate(uniq)}
        idx = np.array([lookup.get(tuple(f), -1) for f in np.sort(self.facets, axis=1)], dtype=np.int64)
        if np.any(idx < 0) or np.any(counts[idx] != 1):
            raise ValidationError("tagged facets are not boundary faces of the cells")
        first = np.full(len(uniq), -1, dtype=np.int64)
        order = np.arange(len(inv))
        first[inv[::-1]] = order[::-1]
        return owners[first[idx]], opposite[first[idx]], counts

    @property
    def facet_cells(self) -> np.ndarray:
        return self._facet_owner[0]

    @cached_property
    def facet_measures(self) -> np.ndarray:
        X = self.nodes[self.facets]
        if self.dim == 2:
            return np.linalg.norm(X[:, 1] - X[:, 0], axis=1)
        return 0.5 * np.linalg.norm(np.cross(X[:, 1] - X[:, 0], X[:, 2] - X[:, 0]), axis=1)

    @cached_property
    def facet_normals(self) -> np.ndarray:
        """Outward unit normals of the boundary facets."""
        X = self.nodes[self.facets]
        if self.dim == 2:
            t = X[:, 1] - X[:, 0]
            n = np.column_stack([t[:, 1], -t[:, 0]])
        else:
            n = np.cross(X[:, 1] - X[:, 0], X[:, 2] - X[:, 0])
        n /= np.linalg.norm(n, axis=1)[:, None]
        _, opposite, _ = self._facet_owner
        outward = np.einsum("fd,fd->f", X.mean(axis=1) - self.nodes[opposite], n)
        return n * np.sign(outward)[:, None]

    def facet_quadrature_points(self, tags=None):
        """Boundary quadrature: points ``(f, q, d)``, weights ``(f, q)``, barycentrics, facet ids."""
        ids = self.facets_with_tags(tags)
        bary, w = facet_quadrature(self.dim)
        pts = np.einsum("qa,fad->fqd", bary, self.nodes[self.facets[ids]])
        return pts, self.facet_measures[ids][:, None] * w[None, :], bary, ids

    def facets_with_tags(self, tags=None) -> np.ndarray:
        if tags is None:
            return np.arange(len(self.facets))
        tags = [int(t) for t in np.atleast_1d(tags)]
        return np.flatnonzero(np.isin(self.facet_tags, tags))

    def boundary_nodes(self, tag) -> np.ndarray:
        return np.unique(self.facets[self.facet_tags == int(tag)])

    def boundary_measure(self, tag=None) -> float:
        return float(self.facet_measures[self.facets_with_tags(tag)].sum())

    # --- validation ----------------------------------------------------------

    def check(self):
        """Raise :class:`ValidationError` unless the mesh invariants hold."""
        if np.any(self.cell_volumes <= 0):
            raise ValidationError("mesh has non-positive cell volumes")
        _, _, counts = self._facet_owner
        if np.any(counts > 2):
            raise ValidationError("non-conforming mesh: a facet is shared by more than two cells")
        n_boundary = int(np.sum(counts == 1))
        if n_boundary != len(self.facets):
            raise ValidationError(
                f"boundary has {n_boundary} faces but {len(self.facets)} tagged facets"
            )
        for tag in BoundaryTag:
            if self.boundary_measure(tag) <= 0:
                raise ValidationError(f"boundary part {tag.name} has zero measure")
        return self


# --- I/O ---------------------------------------------------------------------

_HEADER = "# lcfshape mesh v1"


def write_mesh_text(mesh: Mesh, path) -> None:
    """Plain-text mesh: ``dim``, ``nodes``, ``cells`` and ``facets`` sections."""
    lines = [_HEADER, f"dim {mesh.dim}", f"nodes {mesh.n_nodes}"]
    lines += [f"{i} " + " ".join(repr(float(c)) for c in x) for i, x in enumerate(mesh.nodes)]
    lines.append(f"cells {mesh.n_cells}")
    lines += [f"{i} " + " ".join(str(int(v)) for v in c) for i, c in enumerate(mesh.cells)]
    lines.append(f"facets {len(mesh.facets)}")
    lines += [
        f"{i} " + " ".join(str(int(v)) for v in f) + f" {BoundaryTag(int(t)).name}"
        for i, (f, t) in enumerate(zip(mesh.facets, mesh.facet_tags))
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh_text(path) -> Mesh:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    it = iter(lines)

    def section(name):
        key, count = next(it).split()
        if key != name:
            raise ValidationError(f"expected section {name!r}, found {key!r}")
        return [next(it).split()[1:] for _ in range(int(count))]

    key, dim = next(it).split()
    if key != "dim":
        raise ValidationError("mesh file must start with 'dim'")
    nodes = np.array([[float(v) for v in row] for row in section("nodes")]).reshape(-1, int(dim))
    cells = np.array([[int(v) for v in row] for row in section("cells")], dtype=np.int64)
    frows = section("facets")
    facets = np.array([[int(v) for v in row[:-1]] for row in frows], dtype=np.int64)
    tags = np.array([BoundaryTag[row[-1]] for row in frows], dtype=np.int64)
    return Mesh(nodes, cells.reshape(-1, int(dim) + 1), facets.reshape(-1, int(dim)), tags)


def mesh_to_dict(mesh: Mesh) -> dict:
    return {
        "dim": mesh.dim,
        "nodes": mesh.nodes.tolist(),
        "cells": mesh.cells.tolist(),
        "facets": mesh.facets.tolist(),
        "facet_tags": [BoundaryTag(int(t)).name for t in mesh.facet_tags],
    }


def write_mesh_json(mesh: Mesh, path) -> None:
    Path(path).write_text(json.dumps(mesh_to_dict(mesh)))


def read_mesh_json(path) -> Mesh:
    data = json.loads(Path(path).read_text())
    d = int(data["dim"])
    return Mesh(
        np.array(data["nodes"], dtype=float).reshape(-1, d),
        np.array(data["cells"], dtype=np.int64).reshape(-1, d + 1),
        np.array(data["facets"], dtype=np.int64).reshape(-1, d),
        np.array([BoundaryTag[t] for t in data["facet_tags"]], dtype=np.int64),
    )
