"""Exception types shared across the package."""


class LcfShapeError(Exception):
    """Base class for all package errors."""


class ValidationError(LcfShapeError, ValueError):
    """Invalid input: violated preconditions, malformed fields or configs."""


class NumericalError(LcfShapeError, ArithmeticError):
    """A solver or root-finder failed to reach its tolerance."""


class AdmissibilityError(ValidationError):
    """A deformation map folds or inverts cells of the mesh."""
