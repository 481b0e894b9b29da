"""Uniformity checks over families of admissible shapes.

For each shape and ambient temperature field the suite records the discrete
maximum principle slack, the bound ``max |T| <= max |T_e|`` with ``T_e``
sampled over the exterior container, displacement envelopes and sampled
Hoelder seminorms of the temperature and displacement gradients.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from .elasticity import solve_elasticity
from .exceptions import ValidationError
from .geometry import check_admissible, holder_seminorm_estimate, make_shape
from .optimize import DesignProblem
from .reliability import objective_J
from .thermal import RobinData, solve_heat, temperature_bounds_check

__all__ = ["DiagnosticRow", "random_admissible_thetas", "exterior_extremes", "run_suite", "write_rows"]


@dataclass(frozen=True)
class DiagnosticRow:
    shape: int
    ambient: int
    theta_norm: float
    min_det: float
    volume_deviation: float
    budget: float
    T_min: float
    T_max: float
    Te_min: float
    Te_max: float
    Te_ext_absmax: float
    mp_slack: float
    mp_pass: bool
    abs_bound_pass: bool
    max_u: float
    holder_T: float
    holder_u: float
    J: float

    @property
    def estimates_finite(self) -> bool:
        return math.isfinite(self.holder_T) and math.isfinite(self.holder_u)


def random_admissible_thetas(problem: DesignProblem, n_shapes: int, amplitude: float, seed: int = 0, max_attempts: int = 20):
    """Coefficient vectors for a shape suite: the baseline first, then uniform draws in ``[-a, a]``.

    Draws failing the determinant, budget or volume checks are redrawn up to
    ``max_attempts`` times each. Deterministic in ``seed``.
    """
    if n_shapes <= 0:
        return []
    n = problem.n_coeffs
    thetas = [np.zeros(n)]
    rng = np.random.default_rng(seed)
    while len(thetas) < n_shapes:
        for _ in range(max_attempts):
            th = amplitude * rng.uniform(-1.0, 1.0, n)
            rep = check_admissible(
                problem.deformation(th), problem.baseline_mesh, det_floor=problem.det_floor,
                vol_tol=problem.vol_tol, estimate_norms=False,
            )
            if rep.passed:
                thetas.append(th)
                break
        else:
            raise ValidationError(f"no admissible shape found in {max_attempts} draws; lower the amplitude")
    return thetas


def exterior_extremes(robin: RobinData, problem: DesignProblem, mesh, n_grid: int = 64):
    """Range of ``T_e`` over a grid on the exterior disk, the boundary nodes and boundary quadrature points."""
    _, Te_q, *_ = robin.boundary_values(mesh)
    values = [np.ravel(Te_q)]
    if not getattr(robin.T_e, "uses_normal", False):
        d = problem.design
        s = np.linspace(-d.ext_radius, d.ext_radius, n_grid)
        X, Y = np.meshgrid(s, s)
        pts = np.column_stack([X.ravel(), Y.ravel()])
        pts = pts[np.hypot(*pts.T) <= d.ext_radius] + d.center
        if mesh.dim == 3:
            pts = np.column_stack([pts, np.zeros(len(pts))])
        pts = np.concatenate([pts, mesh.nodes[np.unique(mesh.facets)]])
        values.append(np.ravel(np.broadcast_to(np.asarray(robin.T_e(pts, None), dtype=float), len(pts))))
    allv = np.concatenate(values)
    return float(allv.min()), float(allv.max()), float(np.max(np.abs(allv)))


def _evaluate(problem: DesignProblem, i: int, theta, ambients):
    mapping = problem.deformation(theta)
    adm = check_admissible(mapping, problem.baseline_mesh, det_floor=problem.det_floor, vol_tol=problem.vol_tol,
                           estimate_norms=False)
    shape = make_shape(problem.design, mapping, problem.baseline_mesh)
    rows = []
    for a, Te in enumerate(ambients):
        robin = problem.robin if Te is None else replace(problem.robin, T_e=Te)
        T = solve_heat(shape, robin, solver=problem.solver)
        bounds = temperature_bounds_check(T, robin)
        _, _, ext_abs = exterior_extremes(robin, problem, shape.mesh)
        u = solve_elasticity(shape, problem.loads, T, problem.material, solver=problem.solver)
        rep = objective_J(shape, u, T, problem.material, include_dirichlet=problem.include_dirichlet)
        rows.append(DiagnosticRow(
            shape=i,
            ambient=a,
            theta_norm=float(np.linalg.norm(theta)),
            min_det=adm.min_det,
            volume_deviation=adm.volume_deviation,
            budget=adm.coefficient_budget,
            T_min=bounds.T_min,
            T_max=bounds.T_max,
            Te_min=bounds.Te_min,
            Te_max=bounds.Te_max,
            Te_ext_absmax=ext_abs,
            mp_slack=bounds.slack_used,
            mp_pass=bounds.passed,
            abs_bound_pass=bool(np.max(np.abs(T.values)) <= ext_abs * (1 + 1e-12)),
            max_u=u.max_norm(),
            holder_T=holder_seminorm_estimate(T, k=1, alpha=0.5, seed=i),
            holder_u=holder_seminorm_estimate(u, k=1, alpha=0.5, seed=i),
            J=rep.J,
        ))
    return rows


def run_suite(problem: DesignProblem, thetas, ambients=(None,), threads: int = 1) -> list:
    """Diagnostic rows for every (shape, ambient field) pair, ordered by shape then field.

    ``ambients`` holds ``T_e`` expressions; ``None`` keeps the problem's own.
    Shapes are processed on ``threads`` worker threads; the output order does
    not depend on the thread count.
    """
    jobs = list(enumerate(thetas))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            chunks = list(pool.map(lambda job: _evaluate(problem, job[0], job[1], ambients), jobs))
    else:
        chunks = [_evaluate(problem, i, th, ambients) for i, th in jobs]
    return [row for chunk in chunks for row in chunk]


def write_rows(rows, path) -> None:
    names = list(DiagnosticRow.__dataclass_fields__)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for r in rows:
            d = asdict(r)
            w.writerow([repr(d[n]) if isinstance(d[n], float) else d[n] for n in names])
