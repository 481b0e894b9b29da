"""Baseline design, deformation maps, meshing, volumes and admissibility checks.

The baseline design is a disk of radius ``R0`` centred at the origin with a
ball ``B(z, r)`` removed. Shapes are images of the baseline under
``Phi(x) = x + sum_j theta_j psi_j(x)``, where every ``psi_j`` is a smooth
field supported in an annulus around the hole centre: it vanishes near the
hole (which stays clamped in place) and near the boundary of the exterior
ball ``B(z, R_ext)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.special import expit

from .exceptions import AdmissibilityError, ValidationError
from .fields import ScalarField, VectorField, recover_gradient
from .mesh import BoundaryTag, Mesh

__all__ = [
    "BaselineDesign",
    "RadialBump",
    "FourierRadialField",
    "TranslationField",
    "DeformationMap",
    "AffineMap",
    "Shape",
    "AdmissibilityReport",
    "build_baseline",
    "apply_deformation",
    "make_shape",
    "volume",
    "check_admissible",
    "holder_seminorm_estimate",
    "grid_norm_estimate",
]


@dataclass(frozen=True)
class BaselineDesign:
    """Disk ``B(0, R0)`` minus the hole ``B(z, r)``, inside the container ``B(z, R_ext)``."""

    outer_radius: float
    hole_center: tuple = (0.0, 0.0)
    hole_radius: float = 0.3
    ext_radius: float = 1.5

    def __post_init__(self):
        z = tuple(float(c) for c in self.hole_center)
        if len(z) != 2:
            raise ValidationError("hole_center must have two coordinates (in-plane centre)")
        object.__setattr__(self, "hole_center", z)
        if self.hole_radius <= 0 or self.outer_radius <= 0:
            raise ValidationError("radii must be positive")
        if self.clearance <= 0:
            raise ValidationError(
                f"hole B(z, r) must keep positive distance from the outer boundary "
                f"(R0 - |z| - r = {self.clearance})"
            )
        if self.ext_radius <= self.outer_radius + math.hypot(*z):
            raise ValidationError("ext_radius must exceed R0 + |z| so the container holds the design")

    @property
    def clearance(self) -> float:
        return self.outer_radius - math.hypot(*self.hole_center) - self.hole_radius

    @property
    def center(self) -> np.ndarray:
        return np.array(self.hole_center)

    def area(self) -> float:
        return math.pi * (self.outer_radius**2 - self.hole_radius**2)

    def default_bump(self) -> "RadialBump":
        r, D = self.hole_radius, self.clearance
        zn = math.hypot(*self.hole_center)
        return RadialBump(r + 0.1 * D, r + 0.6 * D, self.outer_radius + zn, self.ext_radius)


# --- smooth basis fields -----------------------------------------------------


def _smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1; returns value and derivative."""
    t = np.asarray(t, dtype=float)
    inside = (t > 0) & (t < 1)
    ti = np.where(inside, t, 0.5)
    with np.errstate(over="ignore"):
        s = expit(1.0 / (1.0 - ti) - 1.0 / ti)
    ds = s * (1 - s) * (1.0 / ti**2 + 1.0 / (1.0 - ti) ** 2)
    val = np.where(inside, s, (t >= 1).astype(float))
    der = np.where(inside, ds, 0.0)
    return val, der


@dataclass(frozen=True)
class RadialBump:
    """Radial profile rising smoothly from 0 at ``a0`` to 1 at ``a1`` and falling back to 0 between ``b0`` and ``b1``."""

    a0: float
    a1: float
    b0: float
    b1: float

    def __post_init__(self):
        if not 0 <= self.a0 < self.a1 <= self.b0 < self.b1:
            raise ValidationError("bump radii must satisfy 0 <= a0 < a1 <= b0 < b1")

    def __call__(self, rho):
        up, dup = _smooth_step((rho - self.a0) / (self.a1 - self.a0))
        down, ddown = _smooth_step((rho - self.b0) / (self.b1 - self.b0))
        value = up * (1 - down)
        deriv = dup / (self.a1 - self.a0) * (1 - down) - up * ddown / (self.b1 - self.b0)
        return value, deriv


class _PlanarField:
    """In-plane vector field around ``center``; a 3D point moves only in x, y."""

    def __init__(self, bump: RadialBump, center):
        self.bump = bump
        self.center = np.asarray(center, dtype=float)

    def _polar(self, x):
        w = x[..., :2] - self.center
        rho = np.linalg.norm(w, axis=-1)
        safe = np.where(rho > 0, rho, 1.0)
        e = w / safe[..., None]
        e = np.where((rho > 0)[..., None], e, np.array([1.0, 0.0]))
        t = np.stack([-e[..., 1], e[..., 0]], axis=-1)
        phi = np.arctan2(w[..., 1], w[..., 0])
        return rho, safe, e, t, phi

    def _embed(self, x, v2, D2):
        d = x.shape[-1]
        if d == 2:
            return v2, D2
        v = np.zeros(x.shape)
        v[..., :2] = v2
        D = np.zeros(x.shape + (d,))
        D[..., :2, :2] = D2
        return v, D

    def evaluate(self, x):
        """Field values ``(..., d)`` and Jacobians ``(..., d, d)``."""
        raise NotImplementedError

    def __call__(self, x):
        return self.evaluate(np.asarray(x, dtype=float))[0]

    def jacobian(self, x):
        return self.evaluate(np.asarray(x, dtype=float))[1]


class FourierRadialField(_PlanarField):
    """``eta(|x - z|) g(phi) e_r`` with ``g = cos(j phi)`` or ``sin(j phi)``."""

    def __init__(self, mode: int, kind: str, bump: RadialBump, center):
        super().__init__(bump, center)
        if kind not in ("cos", "sin") or mode < 0:
            raise ValidationError("Fourier field needs mode >= 0 and kind in {'cos', 'sin'}")
        self.mode = int(mode)
        self.kind = kind

    def __repr__(self):
        return f"FourierRadialField(mode={self.mode}, kind={self.kind!r})"

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        rho, safe, e, t, phi = self._polar(x)
        eta, deta = self.bump(rho)
        j = self.mode
        if self.kind == "cos":
            g, dg = np.cos(j * phi), -j * np.sin(j * phi)
        else:
            g, dg = np.sin(j * phi), j * np.cos(j * phi)
        v = (eta * g)[..., None] * e
        D = (
            (deta * g)[..., None, None] * np.einsum("...i,...k->...ik", e, e)
            + (eta * dg / safe)[..., None, None] * np.einsum("...i,...k->...ik", e, t)
            + (eta * g / safe)[..., None, None] * np.einsum("...i,...k->...ik", t, t)
        )
        return self._embed(x, v, D)


class TranslationField(_PlanarField):
    """``eta(|x - z|) v`` for a fixed in-plane direction ``v``."""

    def __init__(self, direction, bump: RadialBump, center):
        super().__init__(bump, center)
        self.direction = np.asarray(direction, dtype=float)

    def __repr__(self):
        return f"TranslationField(direction={self.direction.tolist()})"

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        rho, safe, e, t, phi = self._polar(x)
        eta, deta = self.bump(rho)
        v = eta[..., None] * self.direction
        D = deta[..., None, None] * np.einsum("i,...k->...ik", self.direction, e)
        return self._embed(x, v, D)


# --- maps ----------------------------------------------------------------------


class DeformationMap:
    """``Phi(x) = x + sum_j theta_j psi_j(x)`` over a fixed list of basis fields."""

    def __init__(self, coeffs, basis: Sequence[_PlanarField], K: float = 10.0, container=None):
        coeffs = np.array(coeffs, dtype=float).ravel()
        if len(coeffs) != len(basis):
            raise ValidationError(f"{len(basis)} basis fields but {len(coeffs)} coefficients")
        if not np.all(np.isfinite(coeffs)):
            raise ValidationError("deformation coefficients must be finite")
        if K <= 0:
            raise ValidationError("norm bound K must be positive")
        coeffs.setflags(write=False)
        self.coeffs = coeffs
        self.basis = tuple(basis)
        self.K = float(K)
        self.container = container

    @classmethod
    def fourier(cls, design: BaselineDesign, coeffs=None, n_modes: int = 4, K: float = 10.0, bump=None):
        """Radial Fourier basis: modes ``1..n_modes``, each with a cos and a sin component."""
        bump = bump or design.default_bump()
        basis = [FourierRadialField(j, kind, bump, design.center) for j in range(1, n_modes + 1) for kind in ("cos", "sin")]
        coeffs = np.zeros(len(basis)) if coeffs is None else coeffs
        return cls(coeffs, basis, K=K, container=(design.center, design.ext_radius))

    def with_coeffs(self, coeffs) -> "DeformationMap":
        return DeformationMap(coeffs, self.basis, self.K, self.container)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        d = x.shape[-1]
        y = x.copy()
        J = np.broadcast_to(np.eye(d), x.shape + (d,)).copy()
        for theta, psi in zip(self.coeffs, self.basis):
            if theta == 0.0:
                continue
            v, D = psi.evaluate(x)
            y += theta * v
            J += theta * D
        return y, J

    def __call__(self, x):
        return self.evaluate(x)[0]

    def jacobian(self, x):
        return self.evaluate(x)[1]

    def inverse(self, y, tol: float = 1e-13, max_iter: int = 50):
        """Newton inversion of ``Phi`` starting from ``x = y``."""
        y = np.asarray(y, dtype=float)
        x = y.copy()
        for _ in range(max_iter):
            fx, J = self.evaluate(x)
            r = fx - y
            if np.max(np.abs(r), initial=0.0) <= tol:
                return x
            x = x - np.linalg.solve(J, r[..., None])[..., 0]
        raise AdmissibilityError("could not invert the deformation map (not a diffeomorphism?)")

    def coefficient_budget(self, **estimator_kw) -> float:
        """Certified bound ``|id| + sum_j |theta_j| |psi_j|`` on the map's Hoelder norm."""
        center, R = self._container()
        ident = grid_norm_estimate(lambda x: x, center, R, **estimator_kw)
        total = ident
        for theta, psi in zip(self.coeffs, self.basis):
            if theta != 0.0:
                total += abs(theta) * _basis_norm(psi, center, R, **estimator_kw)
        return total

    def _container(self):
        if self.container is None:
            raise ValidationError("deformation map has no container ball for norm estimates")
        return np.asarray(self.container[0], dtype=float), float(self.container[1])


_BASIS_NORMS: dict = {}


def _basis_norm(psi, center, R, **kw):
    key = (id(psi), tuple(center), R, tuple(sorted(kw.items())))
    if key not in _BASIS_NORMS:
        _BASIS_NORMS[key] = (psi, grid_norm_estimate(psi, center, R, **kw))
    return _BASIS_NORMS[key][1]


class AffineMap:
    """``x -> A x + b``; useful as an exact reference map."""

    def __init__(self, A, b=None, K: float = math.inf):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        d = self.A.shape[0]
        self.b = np.zeros(d) if b is None else np.asarray(b, dtype=float)
        self.K = K
        self.coeffs = np.zeros(0)
        self.basis = ()
        self.container = None

    @classmethod
    def identity(cls, d: int = 2):
        return cls(np.eye(d))

    @classmethod
    def scaling(cls, s: float, d: int = 2):
        return cls(s * np.eye(d))

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return x @ self.A.T + self.b, np.broadcast_to(self.A, x.shape + (x.shape[-1],)).copy()

    def __call__(self, x):
        return self.evaluate(x)[0]

    def jacobian(self, x):
        return self.evaluate(x)[1]

    def inverse(self, y):
        return np.linalg.solve(self.A, (np.asarray(y, dtype=float) - self.b).T).T


# --- meshing ------------------------------------------------------------------


def _ray_length(center, R0, phi):
    """Distance from ``center`` to the circle ``|x| = R0`` along direction ``phi``."""
    e = np.column_stack([np.cos(phi), np.sin(phi)])
    ze = e @ center
    return -ze + np.sqrt(ze**2 - center @ center + R0**2)


def _polar_mesh(design: BaselineDesign, n_ang: int, n_rad: int):
    z = design.center
    phi = 2 * np.pi * np.arange(n_ang) / n_ang
    smax = _ray_length(z, design.outer_radius, phi)
    frac = np.arange(n_rad + 1) / n_rad
    s = design.hole_radius + np.outer(frac, smax - design.hole_radius)
    e = np.column_stack([np.cos(phi), np.sin(phi)])
    nodes = (z + s[..., None] * e[None, :, :]).reshape(-1, 2)
    # exact radii on both circles
    nodes[:n_ang] = z + design.hole_radius * e
    outer = nodes[n_rad * n_ang :]
    nodes[n_rad * n_ang :] = outer * (design.outer_radius / np.linalg.norm(outer, axis=1))[:, None]

    i, j = np.meshgrid(np.arange(n_rad), np.arange(n_ang), indexing="ij")
    i, j = i.ravel(), j.ravel()
    jp = (j + 1) % n_ang
    a, b = i * n_ang + j, i * n_ang + jp
    c, d = (i + 1) * n_ang + jp, (i + 1) * n_ang + j
    cells = np.concatenate([np.column_stack([a, b, c]), np.column_stack([a, c, d])])
    inner = np.column_stack([np.arange(n_ang), (np.arange(n_ang) + 1) % n_ang])
    outer_f = n_rad * n_ang + inner
    facets = np.concatenate([inner, outer_f])
    tags = np.concatenate([np.full(n_ang, BoundaryTag.DIRICHLET), np.full(n_ang, BoundaryTag.ROBIN_NEUMANN)])
    return nodes, cells, facets, tags


def _orient(nodes, cells):
    X = nodes[cells]
    J = np.swapaxes(X[:, 1:, :] - X[:, :1, :], 1, 2)
    neg = np.linalg.det(J) < 0
    cells = cells.copy()
    cells[neg, 0], cells[neg, 1] = cells[neg, 1].copy(), cells[neg, 0].copy()
    return cells


def _extrude(nodes2, cells2, hole_nodes2, thickness, n_layers):
    n2 = len(nodes2)
    zs = np.linspace(0.0, thickness, n_layers + 1)
    nodes = np.concatenate([np.column_stack([nodes2, np.full(n2, zk)]) for zk in zs])
    tri = np.sort(cells2, axis=1)
    tets = []
    for layer in range(n_layers):
        a, b, c = (tri[:, k] + layer * n2 for k in range(3))
        a_, b_, c_ = a + n2, b + n2, c + n2
        tets += [np.column_stack(t) for t in ((a, b, c, c_), (a, b, b_, c_), (a, a_, b_, c_))]
    cells = np.concatenate(tets)
    # boundary faces: those owned by a single tet
    faces = np.sort(np.concatenate([cells[:, [1, 2, 3]], cells[:, [0, 2, 3]], cells[:, [0, 1, 3]], cells[:, [0, 1, 2]]]), axis=1)
    uniq, counts = np.unique(faces, axis=0, return_counts=True)
    bfaces = uniq[counts == 1]
    layer_of = np.arange(len(nodes)) // n2
    is_hole = np.isin(np.arange(len(nodes)) % n2, hole_nodes2)
    same_layer = np.all(layer_of[bfaces] == layer_of[bfaces][:, :1], axis=1)
    dirichlet = np.all(is_hole[bfaces], axis=1) & ~same_layer
    tags = np.where(dirichlet, BoundaryTag.DIRICHLET, BoundaryTag.ROBIN_NEUMANN)
    return nodes, cells, bfaces, tags


def build_baseline(
    design: BaselineDesign,
    resolution: float,
    dim: int = 2,
    thickness: float | None = None,
    n_layers: int | None = None,
    n_angular: int | None = None,
    n_radial: int | None = None,
) -> Mesh:
    """Structured polar mesh of the baseline annulus.

    The hole boundary is tagged DIRICHLET and the outer boundary
    ROBIN_NEUMANN. Cell diameters do not exceed ``resolution`` unless the
    angular/radial counts are forced. For ``dim=3`` the planar grid is
    extruded into a slab of the given ``thickness`` (top and bottom faces are
    ROBIN_NEUMANN).
    """
    if resolution <= 0:
        raise ValidationError("resolution must be positive")
    if dim not in (2, 3):
        raise ValidationError("dim must be 2 or 3")
    z = design.center
    span = design.outer_radius + float(np.linalg.norm(z)) - design.hole_radius
    h = resolution / math.sqrt(2)
    n_ang = n_angular or max(8, math.ceil(2 * math.pi * (design.outer_radius + np.linalg.norm(z)) / h))
    n_rad = n_radial or max(1, math.ceil(span / h))
    while True:
        nodes, cells, facets, tags = _polar_mesh(design, n_ang, n_rad)
        cells = _orient(nodes, cells)
        mesh = Mesh(nodes, cells, facets, tags)
        if n_angular or n_radial or mesh.cell_diameters.max() <= resolution:
            break
        n_ang = math.ceil(1.1 * n_ang)
        n_rad = math.ceil(1.1 * n_rad)
    meta = {"n_angular": n_ang, "n_radial": n_rad}
    if dim == 3:
        thickness = thickness if thickness is not None else 0.1 * design.outer_radius
        n_layers = n_layers or max(1, math.ceil(thickness / h))
        nodes, cells, facets, tags = _extrude(mesh.nodes, mesh.cells, np.arange(n_ang), thickness, n_layers)
        cells = _orient(nodes, cells)
        mesh = Mesh(nodes, cells, facets, tags)
        meta.update(thickness=thickness, n_layers=n_layers)
    mesh = Mesh(mesh.nodes, mesh.cells, mesh.facets, mesh.facet_tags, meta)
    return mesh.check()


@dataclass(frozen=True, eq=False)
class Shape:
    """A deformed design: baseline, deformation map, deformed and baseline meshes."""

    baseline: BaselineDesign
    map: object
    mesh: Mesh
    baseline_mesh: Mesh


_DET_RULE = 2


def apply_deformation(mapping, base: Mesh) -> Mesh:
    """Image mesh ``Phi(base)``; raises :class:`AdmissibilityError` on inverted cells."""
    pts, _, _ = base.cell_quadrature_points(_DET_RULE)
    det = np.linalg.det(mapping.jacobian(pts))
    if np.any(det <= 0):
        raise AdmissibilityError(f"deformation inverts the mesh (min det grad Phi = {det.min():.3g})")
    mesh = base.with_nodes(mapping(base.nodes))
    if np.any(mesh.cell_volumes <= 0):
        raise AdmissibilityError("deformation folds at least one cell")
    return mesh


def make_shape(design: BaselineDesign, mapping, baseline_mesh: Mesh) -> Shape:
    return Shape(design, mapping, apply_deformation(mapping, baseline_mesh), baseline_mesh)


VOLUME_RULE = 4


def _jacobian_dets(mapping, base: Mesh, rule: int = VOLUME_RULE):
    pts, w, _ = base.cell_quadrature_points(rule)
    return np.linalg.det(mapping.jacobian(pts)), w


def volume(shape_or_map, base: Mesh | None = None, rule: int = VOLUME_RULE) -> float:
    """Volume of ``Phi(base)`` as the quadrature of ``|det grad Phi|`` over the baseline mesh."""
    if isinstance(shape_or_map, Shape):
        mapping, base = shape_or_map.map, shape_or_map.baseline_mesh
    else:
        mapping = shape_or_map
    det, w = _jacobian_dets(mapping, base, rule)
    return float(np.sum(np.abs(det) * w))


# --- norm estimates -------------------------------------------------------------


def _multi_indices(order: int, d: int):
    if d == 1:
        return [(order,)]
    return [(i,) + rest for i in range(order, -1, -1) for rest in _multi_indices(order - i, d - 1)]


def grid_norm_estimate(
    func,
    center,
    radius: float,
    k: int = 4,
    alpha: float = 0.5,
    n_grid: int = 64,
    n_pairs: int = 2000,
    seed: int = 0,
    return_parts: bool = False,
):
    """Finite-difference estimate of the ``C^{k, alpha}`` norm of a planar map on ``B(center, radius)``.

    The norm is ``sum_{j<=k} max_{|beta|=j} sup |D^beta f| + [D^k f]_alpha``
    with component-wise maxima. Derivatives come from nested second-order
    central differences on a Cartesian grid; the Hoelder seminorm is the
    maximum over all neighbouring grid pairs and ``n_pairs`` random pairs.
    """
    center = np.asarray(center, dtype=float)
    h = 2 * radius / n_grid
    margin = (k + 2) * h
    ax = np.arange(-radius - margin, radius + margin + h / 2, h)
    X, Y = np.meshgrid(center[0] + ax, center[1] + ax, indexing="ij")
    pts = np.stack([X, Y], axis=-1)
    vals = np.asarray(func(pts), dtype=float)
    inside = np.hypot(X - center[0], Y - center[1]) <= radius
    derivs = {(0, 0): vals}
    sups = [float(np.max(np.abs(vals[inside])))]
    for order in range(1, k + 1):
        level = []
        for beta in _multi_indices(order, 2):
            if beta[0] > 0:
                parent, axis = (beta[0] - 1, beta[1]), 0
            else:
                parent, axis = (beta[0], beta[1] - 1), 1
            derivs[beta] = np.gradient(derivs[parent], h, axis=axis, edge_order=2)
            level.append(float(np.max(np.abs(derivs[beta][inside]))))
        sups.append(max(level))
    top = np.stack([derivs[b] for b in _multi_indices(k, 2)], axis=-2)
    top = top.reshape(top.shape[:2] + (-1,))
    ii, jj = np.nonzero(inside)
    P = np.column_stack([ii, jj])
    # neighbour pairs plus random pairs
    pairs = []
    for di, dj in ((1, 0), (0, 1), (1, 1)):
        ok = inside[np.clip(ii + di, 0, inside.shape[0] - 1), np.clip(jj + dj, 0, inside.shape[1] - 1)]
        ok &= (ii + di < inside.shape[0]) & (jj + dj < inside.shape[1])
        pairs.append((P[ok], P[ok] + [di, dj]))
    rng = np.random.default_rng(seed)
    a = rng.integers(0, len(P), n_pairs)
    b = rng.integers(0, len(P), n_pairs)
    keep = a != b
    pairs.append((P[a[keep]], P[b[keep]]))
    holder = 0.0
    for A, B in pairs:
        if len(A) == 0:
            continue
        diff = np.max(np.abs(top[A[:, 0], A[:, 1]] - top[B[:, 0], B[:, 1]]), axis=-1)
        dist = h * np.linalg.norm((A - B).astype(float), axis=1)
        holder = max(holder, float(np.max(diff / dist**alpha)))
    total = sum(sups) + holder
    if return_parts:
        return total, sups, holder
    return total


@dataclass(frozen=True)
class AdmissibilityReport:
    min_det: float
    volume: float
    baseline_volume: float
    volume_deviation: float
    coefficient_budget: float
    norm_estimate: float | None
    inverse_norm_estimate: float | None
    holder_estimate: float | None
    det_floor: float
    K: float
    vol_tol: float
    det_ok: bool
    norm_ok: bool
    volume_ok: bool
    messages: tuple = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return self.det_ok and self.norm_ok and self.volume_ok


def check_admissible(
    mapping,
    base: Mesh,
    det_floor: float = 0.1,
    K: float | None = None,
    vol_tol: float = 1e-3,
    k: int = 4,
    alpha: float = 0.5,
    estimate_norms: bool = True,
    n_grid: int = 64,
    seed: int = 0,
) -> AdmissibilityReport:
    """Check a deformation map against the det floor, the norm bound ``K`` and the volume constraint.

    Never raises for an inadmissible map; failures are flagged in the report.
    ``K`` defaults to the bound carried by the map.
    """
    K = getattr(mapping, "K", 10.0) if K is None else K
    det, w = _jacobian_dets(mapping, base)
    min_det = float(det.min())
    vol = float(np.sum(np.abs(det) * w))
    vol_b = float(np.sum(w))
    dev = abs(vol - vol_b) / vol_b
    messages = []
    est_kw = dict(k=k, alpha=alpha, n_grid=n_grid, seed=seed)
    container = getattr(mapping, "container", None)
    if isinstance(mapping, DeformationMap) and container is not None:
        budget = mapping.coefficient_budget(**est_kw)
    else:
        budget = math.nan
    norm = inv_norm = holder = None
    if estimate_norms and container is not None and min_det > 0:
        c, R = np.asarray(container[0], dtype=float), float(container[1])
        norm, _, holder = grid_norm_estimate(mapping, c, R, return_parts=True, **est_kw)
        try:
            inv_norm = grid_norm_estimate(mapping.inverse, c, R, **est_kw)
        except AdmissibilityError:
            inv_norm = math.inf
    det_ok = min_det >= det_floor
    if not det_ok:
        messages.append(f"min det grad Phi = {min_det:.4g} below floor {det_floor}")
    norm_ok = not (budget > K)
    if not norm_ok:
        messages.append(f"coefficient budget {budget:.4g} exceeds K = {K}")
    for name, value in (("norm estimate", norm), ("inverse norm estimate", inv_norm)):
        if value is not None and value > K:
            norm_ok = False
            messages.append(f"{name} {value:.4g} exceeds K = {K}")
    volume_ok = dev <= vol_tol
    if not volume_ok:
        messages.append(f"volume deviation {dev:.3g} exceeds tolerance {vol_tol}")
    return AdmissibilityReport(
        min_det=min_det,
        volume=vol,
        baseline_volume=vol_b,
        volume_deviation=dev,
        coefficient_budget=budget,
        norm_estimate=norm,
        inverse_norm_estimate=inv_norm,
        holder_estimate=holder,
        det_floor=det_floor,
        K=K,
        vol_tol=vol_tol,
        det_ok=det_ok,
        norm_ok=norm_ok,
        volume_ok=volume_ok,
        messages=tuple(messages),
    )


def holder_seminorm_estimate(field, k: int = 0, alpha: float = 1.0, n_pairs: int = 1000, seed: int = 0) -> float:
    """Sampled Hoelder seminorm of the order-``k`` derivatives of a nodal field.

    ``k = 0`` uses nodal values, ``k = 1`` recovered nodal gradients and
    ``k = 2`` recovered gradients of those. Half of the pairs are random mesh
    edges, the rest random node pairs; the result is deterministic in ``seed``.
    """
    if not isinstance(field, (ScalarField, VectorField)):
        raise ValidationError("holder_seminorm_estimate expects a ScalarField or VectorField")
    if k not in (0, 1, 2):
        raise ValidationError(f"derivative order {k} not recoverable from a P1 field (k <= 2)")
    if not 0 < alpha <= 1:
        raise ValidationError("Hoelder exponent must lie in (0, 1]")
    mesh = field.mesh
    data = np.asarray(field.values, dtype=float)
    for _ in range(k):
        data = recover_gradient(mesh, data)
    data = data.reshape(mesh.n_nodes, -1)
    rng = np.random.default_rng(seed)
    edges = mesh.edges
    n_edge = min(n_pairs // 2, len(edges))
    e = edges[rng.choice(len(edges), n_edge, replace=False)] if n_edge else np.zeros((0, 2), int)
    n_rand = n_pairs - n_edge
    a = rng.integers(0, mesh.n_nodes, n_rand)
    b = rng.integers(0, mesh.n_nodes, n_rand)
    P = np.concatenate([e, np.column_stack([a, b])])
    P = P[P[:, 0] != P[:, 1]]
    if len(P) == 0:
        return 0.0
    dist = np.linalg.norm(mesh.nodes[P[:, 0]] - mesh.nodes[P[:, 1]], axis=1)
    diff = np.max(np.abs(data[P[:, 0]] - data[P[:, 1]]), axis=1)
    return float(np.max(diff / dist**alpha))
