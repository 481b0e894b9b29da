"""Nodal P1 fields on a mesh and their export formats."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import ValidationError
from .mesh import Mesh

__all__ = ["ScalarField", "VectorField", "cell_gradients", "recover_gradient"]

_COORDS = ("x", "y", "z")


@dataclass(frozen=True, eq=False)
class ScalarField:
    """One value per mesh node."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.mesh.n_nodes,):
            raise ValidationError(f"scalar field needs {self.mesh.n_nodes} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def at_cells(self) -> np.ndarray:
        """Cell averages."""
        return self.values[self.mesh.cells].mean(axis=1)

    def to_rows(self):
        names = ["node_id", *_COORDS[: self.mesh.dim], "value"]
        rows = [[i, *map(float, x), float(v)] for i, (x, v) in enumerate(zip(self.mesh.nodes, self.values))]
        return names, rows

    def to_csv(self, path) -> None:
        _write_csv(path, *self.to_rows())

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps({"kind": "scalar", "values": self.values.tolist()}))


@dataclass(frozen=True, eq=False)
class VectorField:
    """``d`` values per mesh node."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.mesh.n_nodes, self.mesh.dim):
            raise ValidationError(
                f"vector field needs shape {(self.mesh.n_nodes, self.mesh.dim)}, got {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValidationError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def max_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.values, axis=1))) if len(self.values) else 0.0

    def to_rows(self):
        d = self.mesh.dim
        names = ["node_id", *_COORDS[:d], *[f"v{c}" for c in _COORDS[:d]]]
        rows = [[i, *map(float, x), *map(float, v)] for i, (x, v) in enumerate(zip(self.mesh.nodes, self.values))]
        return names, rows

    def to_csv(self, path) -> None:
        _write_csv(path, *self.to_rows())

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps({"kind": "vector", "values": self.values.tolist()}))


def _write_csv(path, names, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        w.writerows([[repr(v) if isinstance(v, float) else v for v in r] for r in rows])


def cell_gradients(mesh: Mesh, values) -> np.ndarray:
    """Piecewise-constant gradient of a P1 field.

    ``values`` of shape ``(n,)`` gives ``(c, d)``; shape ``(n, k)`` gives
    ``(c, k, d)`` (rows are gradients of each component).
    """
    values = np.asarray(values, dtype=float)
    G = mesh.shape_gradients
    # differences to the first vertex: shape gradients sum to zero, so constants give exactly 0
    local = values[mesh.cells] - values[mesh.cells[:, :1]]
    if values.ndim == 1:
        return np.einsum("ca,cad->cd", local, G)
    return np.einsum("cak,cad->ckd", local, G)


def recover_gradient(mesh: Mesh, values) -> np.ndarray:
    """Nodal gradient as the volume-weighted mean of adjacent cell gradients."""
    values = np.asarray(values, dtype=float)
    g = cell_gradients(mesh, values)
    vol = np.abs(mesh.cell_volumes)
    flat = g.reshape(mesh.n_cells, -1) * vol[:, None]
    acc = np.zeros((mesh.n_nodes, flat.shape[1]))
    wsum = np.zeros(mesh.n_nodes)
    for a in range(mesh.dim + 1):
        np.add.at(acc, mesh.cells[:, a], flat)
        np.add.at(wsum, mesh.cells[:, a], vol)
    return (acc / wsum[:, None]).reshape((mesh.n_nodes,) + g.shape[1:])
