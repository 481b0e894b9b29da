"""Failure functionals, Weibull statistics and the crack initiation point process.

With the local Weibull intensity ``(m/N(x)) (t/N(x))^(m-1)`` on the surface,
the first failure time is Weibull distributed with shape ``m`` and scale
``N = J^(-1/m)`` where ``J = int_{boundary} N_sur(x)^(-m) dA``. Volume-driven
mechanisms are not modelled (``N_vol`` is identically infinite), so the
volume part of the functional is always zero.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ValidationError
from .fields import ScalarField, VectorField, recover_gradient
from .geometry import Shape
from .material import MaterialParams, inverse_life_power, nsur_pointwise
from .mesh import BoundaryTag, Mesh

__all__ = [
    "ReliabilityReport",
    "CrackEventSet",
    "DominanceVerdict",
    "report_from_life",
    "objective_J",
    "failure_cdf",
    "hazard_rate",
    "dominance_compare",
    "mean_life",
    "lanczos_gamma",
    "sample_crack_process",
    "sample_shape_cracks",
    "sample_first_failures",
    "ks_distance",
]


@dataclass(frozen=True, eq=False)
class ReliabilityReport:
    """Objective value, Weibull scale and the pointwise surface lives behind them.

    ``points``, ``weights``, ``life`` and ``facet_ids`` describe the boundary
    quadrature: ``J = sum(weights * life**-m)``.
    """

    J: float
    N_scale: float
    m: float
    points: np.ndarray
    weights: np.ndarray
    life: np.ndarray
    facet_ids: np.ndarray
    mesh: Mesh | None = None
    volume_term: float = 0.0
    include_dirichlet: bool = True

    @property
    def facet_contributions(self) -> np.ndarray:
        return np.sum(self.weights * inverse_life_power(self.life, self.m), axis=-1)

    def to_dict(self, times=None) -> dict:
        times = np.asarray(times if times is not None else [], dtype=float)
        pts = self.points.reshape(-1, self.points.shape[-1])
        life = np.ravel(self.life)
        facets = np.repeat(self.facet_ids, self.weights.shape[-1]) if self.weights.ndim == 2 else self.facet_ids
        return {
            "J": self.J,
            "J_volume": self.volume_term,
            "N_scale": _json_float(self.N_scale),
            "m": self.m,
            "include_dirichlet": self.include_dirichlet,
            "mean_life": _json_float(mean_life(self)) if math.isfinite(self.N_scale) else "inf",
            "cdf": [{"t": float(t), "F": float(failure_cdf(t, self))} for t in times],
            "surface_life": [
                {"facet": int(f), "point": [float(c) for c in x], "weight": float(w), "N_sur": _json_float(n)}
                for f, x, w, n in zip(facets, pts, np.ravel(self.weights), life)
            ],
        }

    def to_json(self, path, times=None) -> None:
        Path(path).write_text(json.dumps(self.to_dict(times), indent=1))


def _json_float(v):
    v = float(v)
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def report_from_life(points, weights, life, m: float, facet_ids=None, mesh=None, include_dirichlet=True) -> ReliabilityReport:
    """Build a report from surface lives at quadrature points (also a hook for injected lives)."""
    weights = np.asarray(weights, dtype=float)
    life = np.broadcast_to(np.asarray(life, dtype=float), weights.shape).copy()
    if m <= 0:
        raise ValidationError("Weibull shape m must be positive")
    if np.any(np.isnan(life)) or np.any(life <= 0):
        raise ValidationError("surface lives must lie in (0, inf]")
    J = float(np.sum(weights * inverse_life_power(life, m)))
    N = J ** (-1.0 / m) if J > 0 else math.inf
    facet_ids = np.arange(len(weights)) if facet_ids is None else np.asarray(facet_ids)
    return ReliabilityReport(J, N, float(m), np.asarray(points, dtype=float), weights, life, facet_ids, mesh,
                             include_dirichlet=include_dirichlet)


def objective_J(shape, u: VectorField, T: ScalarField, p: MaterialParams, include_dirichlet: bool = True) -> ReliabilityReport:
    """Surface failure functional ``int (1/N_sur)^m dA`` by order-2 Gauss quadrature per facet.

    ``N_sur`` is evaluated from recovered nodal displacement gradients and
    nodal temperatures interpolated to the quadrature points. Set
    ``include_dirichlet=False`` to integrate over the traction boundary only.
    """
    mesh = shape.mesh if isinstance(shape, Shape) else shape
    if u.mesh.n_nodes != mesh.n_nodes or T.mesh.n_nodes != mesh.n_nodes:
        raise ValidationError("displacement and temperature must be solved on the shape's mesh")
    if u.values.shape[1] != mesh.dim:
        raise ValidationError("displacement dimension does not match the mesh")
    tags = None if include_dirichlet else BoundaryTag.ROBIN_NEUMANN
    pts, w, bary, ids = mesh.facet_quadrature_points(tags)
    grad_nodal = recover_gradient(mesh, u.values)
    fn = mesh.facets[ids]
    grad_q = np.einsum("qa,faij->fqij", bary, grad_nodal[fn])
    T_q = np.einsum("qa,fa->fq", bary, T.values[fn])
    life = nsur_pointwise(grad_q, T_q, p)
    return report_from_life(pts, w, life, p.m_weib, ids, mesh, include_dirichlet)


_BELOW_ONE = np.nextafter(1.0, 0.0)


def failure_cdf(t, report: ReliabilityReport):
    """Weibull CDF ``1 - exp(-(t/N)^m)``, written as ``1 - exp(-t^m J)``.

    Values stay strictly below one: where the survival probability underflows
    the result is the largest double below 1.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValidationError("time must be >= 0")
    out = np.minimum(-np.expm1(-(t**report.m) * report.J), _BELOW_ONE)
    return float(out) if out.ndim == 0 else out


def hazard_rate(t, report: ReliabilityReport):
    """Weibull hazard ``(m/N)(t/N)^(m-1) = m t^(m-1) J``; zero for an infinite scale."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or (report.m < 1 and np.any(t == 0)):
        raise ValidationError("hazard needs t > 0 (t = 0 only when m >= 1)")
    out = report.m * t ** (report.m - 1) * report.J
    return float(out) if out.ndim == 0 else out


_LANCZOS_G = 7
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def lanczos_gamma(z: float) -> float:
    """Gamma function by the Lanczos approximation (g = 7, 9 terms)."""
    z = float(z)
    if z < 0.5:
        return math.pi / (math.sin(math.pi * z) * lanczos_gamma(1.0 - z))
    z -= 1.0
    x = _LANCZOS_COEF[0]
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        x += c / (z + i)
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2 * math.pi) * t ** (z + 0.5) * math.exp(-t) * x


def mean_life(report: ReliabilityReport) -> float:
    """Expected first failure time ``N Gamma(1 + 1/m)``."""
    if not math.isfinite(report.N_scale):
        raise ValidationError("mean life undefined for an infinite Weibull scale")
    return report.N_scale * lanczos_gamma(1.0 + 1.0 / report.m)


@dataclass(frozen=True)
class DominanceVerdict:
    """Reliability ordering of design 1 against design 2.

    Each verdict is ``"first"`` (design 1 strictly more reliable),
    ``"second"``, ``"equal"`` or ``"none"`` (no ordering).
    """

    fixed_time: tuple
    first_order: str
    hazard: str
    scale: str
    consistent: bool
    note: str = ""


def _pointwise_verdict(a, b):
    if a < b:
        return "first"
    if a > b:
        return "second"
    return "equal"


def _aggregate(verdicts):
    kinds = set(verdicts)
    if kinds <= {"equal"}:
        return "equal"
    if kinds <= {"first", "equal"}:
        return "first"
    if kinds <= {"second", "equal"}:
        return "second"
    return "none"


def dominance_compare(r1: ReliabilityReport, r2: ReliabilityReport, times) -> DominanceVerdict:
    """Compare two designs at fixed times, in first stochastic order and by instantaneous hazard."""
    if r1.m != r2.m:
        raise ValidationError("dominance comparison needs equal Weibull shapes")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise ValidationError("need a non-empty 1D time grid")
    F1, F2 = failure_cdf(times, r1), failure_cdf(times, r2)
    fixed = tuple(_pointwise_verdict(a, b) for a, b in zip(np.atleast_1d(F1), np.atleast_1d(F2)))
    positive = times[times > 0] if r1.m < 1 else times
    h1, h2 = np.atleast_1d(hazard_rate(positive, r1)), np.atleast_1d(hazard_rate(positive, r2))
    hazard = _aggregate([_pointwise_verdict(a, b) for a, b in zip(h1, h2)])
    first_order = _aggregate(fixed)
    scale = _pointwise_verdict(-r1.N_scale, -r2.N_scale) if r1.N_scale != r2.N_scale else "equal"
    note = "" if r1.m >= 1 else "m < 1: hazard ordering outside the m >= 1 setting of the equivalence result"
    return DominanceVerdict(fixed, first_order, hazard, scale, first_order == hazard == scale, note)


# --- point process -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CrackEventSet:
    """Crack initiations up to ``t_max``: times ``(k,)``, locations ``(k, d)``, facet ids."""

    times: np.ndarray
    locations: np.ndarray
    facets: np.ndarray
    t_max: float
    tau: float | None = field(default=None)

    @property
    def censored(self) -> bool:
        return self.tau is None

    def to_csv(self, path) -> None:
        d = self.locations.shape[1] if self.locations.ndim == 2 else 2
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["time", *("x", "y", "z")[:d], "facet"])
            for t, x, f in zip(self.times, self.locations, self.facets):
                w.writerow([repr(float(t)), *(repr(float(c)) for c in x), int(f)])


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def sample_crack_process(report: ReliabilityReport, t_max: float, seed=None) -> CrackEventSet:
    """Draw one realisation of the surface crack initiation Poisson process on ``[0, t_max]``.

    The event count is Poisson with mean ``t_max^m J``; each event picks a
    facet with probability proportional to its share of ``J``, a uniform
    point on that facet and a time with density ``m t^(m-1) / t_max^m``.
    Randomness comes from a PCG64 generator seeded with ``seed``.
    """
    if not t_max > 0:
        raise ValidationError("t_max must be positive")
    if report.mesh is None:
        raise ValidationError("report carries no mesh; cannot place events on the boundary")
    rng = _rng(seed)
    mesh = report.mesh
    d = mesh.dim
    if report.J == 0:
        return CrackEventSet(np.zeros(0), np.zeros((0, d)), np.zeros(0, dtype=np.int64), t_max, None)
    k = int(rng.poisson(t_max**report.m * report.J))
    contrib = report.facet_contributions
    prob = contrib / contrib.sum()
    idx = rng.choice(len(prob), size=k, p=prob)
    facets = np.asarray(report.facet_ids)[idx]
    X = mesh.nodes[mesh.facets[facets]]
    if d == 2:
        s = rng.random(k)
        loc = (1 - s)[:, None] * X[:, 0] + s[:, None] * X[:, 1]
    else:
        r1, r2 = rng.random(k), rng.random(k)
        sq = np.sqrt(r1)
        loc = (1 - sq)[:, None] * X[:, 0] + (sq * (1 - r2))[:, None] * X[:, 1] + (sq * r2)[:, None] * X[:, 2]
    times = t_max * rng.random(k) ** (1.0 / report.m)
    order = np.argsort(times, kind="stable")
    tau = float(times[order[0]]) if k else None
    return CrackEventSet(times[order], loc[order], facets[order], t_max, tau)


def sample_shape_cracks(shape, u: VectorField, T: ScalarField, p: MaterialParams, t_max: float, seed=None,
                        include_dirichlet: bool = True) -> CrackEventSet:
    """Crack process realisation straight from solved fields (builds the report first)."""
    return sample_crack_process(objective_J(shape, u, T, p, include_dirichlet), t_max, seed)


def sample_first_failures(report: ReliabilityReport, t_max: float, replications: int, seed=0):
    """First failure times of independent replications (``inf`` when censored) and event counts.

    Replication ``i`` uses the ``i``-th child of ``SeedSequence(seed)``.
    """
    children = np.random.SeedSequence(seed).spawn(replications)
    taus = np.full(replications, math.inf)
    counts = np.zeros(replications, dtype=np.int64)
    for i, child in enumerate(children):
        ev = sample_crack_process(report, t_max, np.random.Generator(np.random.PCG64(child)))
        counts[i] = len(ev.times)
        if ev.tau is not None:
            taus[i] = ev.tau
    return taus, counts


def ks_distance(taus, report: ReliabilityReport, t_max: float) -> float:
    """Kolmogorov-Smirnov distance on ``[0, t_max]`` between the empirical CDF of ``taus`` and the Weibull CDF.

    Censored replications (``tau = inf``) count as failures after ``t_max``.
    """
    taus = np.asarray(taus, dtype=float)
    n = len(taus)
    if n == 0:
        return 0.0
    obs = np.sort(taus[np.isfinite(taus)])
    F = np.atleast_1d(failure_cdf(obs, report))
    i = np.arange(1, len(obs) + 1)
    upper = np.max(i / n - F, initial=0.0)
    lower = np.max(F - (i - 1) / n, initial=0.0)
    tail = abs(len(obs) / n - failure_cdf(t_max, report))
    return float(max(upper, lower, tail))
