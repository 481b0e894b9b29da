"""Shape optimisation of the surface failure functional over deformation coefficients.

The state pipeline for a coefficient vector is deform -> heat -> elasticity
-> failure functional. Nelder-Mead minimises the penalised objective

    J(theta) / J_ref + w_V (dV/V)^2 + w_det max(0, det_floor - min det)^2
                     + w_K max(0, budget - K)^2

where ``J_ref`` is the functional of the starting design. The trace keeps the
best feasible design (volume, det floor and norm budget all satisfied).
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import minimize
from sklearn.base import BaseEstimator

from .elasticity import LoadData, solve_elasticity
from .exceptions import LcfShapeError, ValidationError
from .geometry import BaselineDesign, DeformationMap, check_admissible, make_shape
from .material import MaterialParams
from .mesh import Mesh
from .reliability import ReliabilityReport, objective_J
from .thermal import RobinData, solve_heat

log = logging.getLogger(__name__)

__all__ = [
    "DesignProblem",
    "DesignEvaluation",
    "OptimizationConfig",
    "TraceEntry",
    "OptimizationTrace",
    "evaluate_design",
    "nelder_mead",
    "optimize_shape",
    "ShapeOptimizer",
]

INFEASIBLE_VALUE = 1e30


@dataclass(frozen=True, eq=False)
class DesignProblem:
    """Everything needed to evaluate a design besides its coefficients."""

    design: BaselineDesign
    baseline_mesh: Mesh
    template: DeformationMap
    material: MaterialParams
    robin: RobinData
    loads: LoadData
    include_dirichlet: bool = True
    det_floor: float = 0.1
    vol_tol: float = 1e-3
    solver: str = "cg"

    @property
    def n_coeffs(self) -> int:
        return len(self.template.basis)

    @property
    def K(self) -> float:
        return self.template.K

    def deformation(self, theta) -> DeformationMap:
        return self.template.with_coeffs(theta)


@dataclass(frozen=True, eq=False)
class DesignEvaluation:
    theta: np.ndarray
    J: float
    report: ReliabilityReport | None
    volume: float
    volume_deviation: float
    min_det: float
    budget: float
    feasible: bool
    error: str = ""
    shape: object = None
    temperature: object = None
    displacement: object = None

    @property
    def admissible(self) -> bool:
        return not self.error


def evaluate_design(theta, problem: DesignProblem, keep_state: bool = False) -> DesignEvaluation:
    """Full state pipeline for one coefficient vector.

    Inadmissible designs (folded cells, solver failure) come back with
    ``J = INFEASIBLE_VALUE`` and ``feasible = False`` instead of raising.
    """
    theta = np.array(theta, dtype=float)
    if theta.shape != (problem.n_coeffs,):
        raise ValidationError(f"expected {problem.n_coeffs} coefficients, got shape {theta.shape}")
    mapping = problem.deformation(theta)
    adm = check_admissible(
        mapping, problem.baseline_mesh, det_floor=problem.det_floor, vol_tol=problem.vol_tol, estimate_norms=False
    )
    common = dict(
        theta=theta,
        volume=adm.volume,
        volume_deviation=adm.volume_deviation,
        min_det=adm.min_det,
        budget=adm.coefficient_budget,
    )
    try:
        shape = make_shape(problem.design, mapping, problem.baseline_mesh)
        T = solve_heat(shape, problem.robin, solver=problem.solver)
        u = solve_elasticity(shape, problem.loads, T, problem.material, solver=problem.solver)
        report = objective_J(shape, u, T, problem.material, include_dirichlet=problem.include_dirichlet)
    except LcfShapeError as exc:
        return DesignEvaluation(J=INFEASIBLE_VALUE, report=None, feasible=False, error=str(exc), **common)
    state = dict(shape=shape, temperature=T, displacement=u) if keep_state else {}
    return DesignEvaluation(J=report.J, report=report, feasible=adm.passed, **common, **state)


@dataclass(frozen=True)
class OptimizationConfig:
    """Nelder-Mead settings, penalty weights and restart policy."""

    initial: tuple | None = None
    simplex_scale: float = 0.02
    max_evaluations: int = 200
    w_volume: float = 1e5
    w_det: float = 1e3
    w_budget: float = 1e-2
    tol: float = 1e-6
    xtol: float = 1e-4
    restarts: int = 3
    seed: int = 0

    def __post_init__(self):
        for name in ("simplex_scale", "w_volume", "w_det", "w_budget", "tol", "xtol"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"optimizer setting {name} must be positive")
        if self.max_evaluations < 0 or self.restarts < 0:
            raise ValidationError("max_evaluations and restarts must be >= 0")


@dataclass(frozen=True)
class TraceEntry:
    run: int
    evaluation: int
    theta: tuple
    J: float
    objective: float
    volume_penalty: float
    det_penalty: float
    budget_penalty: float
    volume: float
    volume_deviation: float
    min_det: float
    budget: float
    feasible: bool
    incumbent_J: float


@dataclass
class OptimizationTrace:
    entries: list = field(default_factory=list)
    best_theta: np.ndarray | None = None
    best_J: float = math.inf
    baseline_J: float = math.nan
    best: DesignEvaluation | None = None

    @property
    def improvement(self) -> float:
        """Relative reduction ``1 - J* / J_baseline``."""
        if not self.baseline_J > 0:
            return 0.0
        return 1.0 - self.best_J / self.baseline_J

    def to_rows(self):
        if not self.entries:
            return list(TraceEntry.__dataclass_fields__), []
        names = list(TraceEntry.__dataclass_fields__)
        rows = []
        for e in self.entries:
            d = asdict(e)
            d["theta"] = " ".join(repr(float(t)) for t in e.theta)
            rows.append([d[n] for n in names])
        return names, rows

    def to_csv(self, path) -> None:
        import csv

        names, rows = self.to_rows()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names)
            w.writerows([[repr(v) if isinstance(v, float) else v for v in r] for r in rows])

    def to_dict(self) -> dict:
        return {
            "baseline_J": self.baseline_J,
            "best_J": self.best_J,
            "best_theta": None if self.best_theta is None else [float(t) for t in self.best_theta],
            "improvement": self.improvement,
            "entries": [{**asdict(e), "theta": list(e.theta)} for e in self.entries],
        }

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))


def nelder_mead(fun: Callable, x0, scale: float, max_evaluations: int, xtol: float = 1e-4, ftol: float = 1e-6):
    """Nelder-Mead from an axis-aligned initial simplex of size ``scale``.

    Returns the best point and its value; ``max_evaluations`` counts calls
    to ``fun`` (the start point included).
    """
    x0 = np.asarray(x0, dtype=float)
    if max_evaluations <= 0:
        return x0, None
    simplex = np.vstack([x0, x0 + scale * np.eye(len(x0))])
    res = minimize(
        fun,
        x0,
        method="Nelder-Mead",
        options=dict(initial_simplex=simplex, maxfev=max_evaluations, xatol=xtol, fatol=ftol, adaptive=len(x0) > 4),
    )
    return res.x, float(res.fun)


class _Checkpoint:
    """Append-only log of evaluations keyed by the exact coefficient bits."""

    def __init__(self, path):
        self.path = Path(path) if path else None
        self.cache = {}
        if self.path and self.path.exists():
            for line in self.path.read_text().splitlines():
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    break
                self.cache[tuple(rec["key"])] = rec

    @staticmethod
    def key(theta):
        return tuple(float(t).hex() for t in theta)

    def get(self, theta):
        return self.cache.get(self.key(theta))

    def put(self, theta, rec):
        rec = {"key": list(self.key(theta)), **rec}
        self.cache[tuple(rec["key"])] = rec
        if self.path:
            with open(self.path, "a") as fh:
                fh.write(json.dumps(rec) + "\n")


def optimize_shape(
    cfg: OptimizationConfig,
    problem: DesignProblem,
    checkpoint=None,
    on_evaluation: Callable | None = None,
) -> OptimizationTrace:
    """Minimise the penalised failure functional with Nelder-Mead and random restarts.

    ``checkpoint`` names a file of completed evaluations; rerunning with the
    same file replays them, so an interrupted run resumes to the same final
    incumbent. ``on_evaluation(entry)`` is called after every evaluation.
    """
    theta0 = np.zeros(problem.n_coeffs) if cfg.initial is None else np.array(cfg.initial, dtype=float)
    if theta0.shape != (problem.n_coeffs,):
        raise ValidationError(f"initial coefficients need length {problem.n_coeffs}")
    start = evaluate_design(theta0, problem)
    if not start.feasible:
        raise ValidationError(f"infeasible initial design: {start.error or 'constraint violation'}")
    J_ref = start.J if start.J > 0 else 1.0
    trace = OptimizationTrace(baseline_J=start.J)
    store = _Checkpoint(checkpoint)
    run = 0

    def record(theta, ev_numbers):
        vp = cfg.w_volume * ev_numbers["volume_deviation"] ** 2
        dp = cfg.w_det * max(0.0, problem.det_floor - ev_numbers["min_det"]) ** 2
        budget = ev_numbers["budget"]
        bp = cfg.w_budget * max(0.0, budget - problem.K) ** 2 if math.isfinite(budget) else 0.0
        obj = ev_numbers["J"] / J_ref + vp + dp + bp
        if ev_numbers["feasible"] and ev_numbers["J"] < trace.best_J:
            trace.best_J = ev_numbers["J"]
            trace.best_theta = np.array(theta, dtype=float)
        entry = TraceEntry(
            run=run,
            evaluation=len(trace.entries),
            theta=tuple(float(t) for t in theta),
            J=ev_numbers["J"],
            objective=obj,
            volume_penalty=vp,
            det_penalty=dp,
            budget_penalty=bp,
            volume=ev_numbers["volume"],
            volume_deviation=ev_numbers["volume_deviation"],
            min_det=ev_numbers["min_det"],
            budget=budget,
            feasible=ev_numbers["feasible"],
            incumbent_J=trace.best_J,
        )
        trace.entries.append(entry)
        if on_evaluation is not None:
            on_evaluation(entry)
        return obj

    def objective(theta):
        cached = store.get(theta)
        if cached is None:
            ev = evaluate_design(theta, problem)
            cached = dict(
                J=ev.J,
                volume=ev.volume,
                volume_deviation=ev.volume_deviation,
                min_det=ev.min_det,
                budget=ev.budget,
                feasible=ev.feasible,
            )
            store.put(theta, cached)
        return record(theta, cached)

    if cfg.max_evaluations == 0:
        record(theta0, dict(J=start.J, volume=start.volume, volume_deviation=start.volume_deviation,
                            min_det=start.min_det, budget=start.budget, feasible=True))
    else:
        rng = np.random.default_rng(cfg.seed)
        starts = [theta0] + [theta0 + cfg.simplex_scale * rng.standard_normal(len(theta0)) for _ in range(cfg.restarts)]
        for run, x0 in enumerate(starts):
            nelder_mead(objective, x0, cfg.simplex_scale, cfg.max_evaluations, cfg.xtol, cfg.tol)
            log.info("run %d done: incumbent J = %.6g (%d evaluations)", run, trace.best_J, len(trace.entries))
    trace.best = evaluate_design(trace.best_theta, problem, keep_state=True)
    return trace


class ShapeOptimizer(BaseEstimator):
    """Estimator-style front end to :func:`optimize_shape`.

    ``fit(problem)`` runs the optimisation and sets ``theta_``, ``J_``,
    ``baseline_J_``, ``trace_`` and ``report_``.
    """

    def __init__(
        self,
        simplex_scale=0.02,
        max_evaluations=200,
        w_volume=1e5,
        w_det=1e3,
        w_budget=1e-2,
        tol=1e-6,
        xtol=1e-4,
        restarts=3,
        seed=0,
        initial=None,
        checkpoint=None,
    ):
        self.simplex_scale = simplex_scale
        self.max_evaluations = max_evaluations
        self.w_volume = w_volume
        self.w_det = w_det
        self.w_budget = w_budget
        self.tol = tol
        self.xtol = xtol
        self.restarts = restarts
        self.seed = seed
        self.initial = initial
        self.checkpoint = checkpoint

    def _config(self) -> OptimizationConfig:
        params = self.get_params()
        params.pop("checkpoint")
        if params["initial"] is not None:
            params["initial"] = tuple(float(t) for t in params["initial"])
        return OptimizationConfig(**params)

    def fit(self, problem: DesignProblem, y=None):
        if not isinstance(problem, DesignProblem):
            raise ValidationError("ShapeOptimizer.fit expects a DesignProblem")
        trace = optimize_shape(self._config(), problem, checkpoint=self.checkpoint)
        self.trace_ = trace
        self.theta_ = trace.best_theta
        self.J_ = trace.best_J
        self.baseline_J_ = trace.baseline_J
        self.report_ = trace.best.report
        self.n_coeffs_ = problem.n_coeffs
        return self

    def score(self, problem: DesignProblem, y=None) -> float:
        """Relative reduction of the failure functional achieved on ``problem``."""
        if not hasattr(self, "theta_"):
            from sklearn.exceptions import NotFittedError

            raise NotFittedError("ShapeOptimizer is not fitted yet")
        base = evaluate_design(np.zeros(problem.n_coeffs), problem).J
        best = evaluate_design(self.theta_, problem).J
        return 1.0 - best / base if base > 0 else 0.0
