"""Low-cycle-fatigue reliability of thermomechanically loaded components and shape optimisation."""

from .elasticity import LoadData, solve_elasticity, stress
from .exceptions import AdmissibilityError, LcfShapeError, NumericalError, ValidationError
from .geometry import (
    BaselineDesign,
    DeformationMap,
    build_baseline,
    check_admissible,
    make_shape,
    volume,
)
from .material import MaterialParams
from .optimize import DesignProblem, OptimizationConfig, ShapeOptimizer, evaluate_design, optimize_shape
from .reliability import (
    dominance_compare,
    failure_cdf,
    hazard_rate,
    mean_life,
    objective_J,
    sample_crack_process,
)
from .thermal import RobinData, solve_heat

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError",
    "BaselineDesign",
    "DeformationMap",
    "DesignProblem",
    "LcfShapeError",
    "LoadData",
    "MaterialParams",
    "NumericalError",
    "OptimizationConfig",
    "RobinData",
    "ShapeOptimizer",
    "ValidationError",
    "build_baseline",
    "check_admissible",
    "dominance_compare",
    "evaluate_design",
    "failure_cdf",
    "hazard_rate",
    "make_shape",
    "mean_life",
    "objective_J",
    "optimize_shape",
    "sample_crack_process",
    "solve_elasticity",
    "solve_heat",
    "stress",
    "volume",
]
