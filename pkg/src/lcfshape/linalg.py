"""Symmetric positive definite linear solves for the assembled FE systems."""

from __future__ import annotations

import logging

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import NumericalError, ValidationError

log = logging.getLogger(__name__)

DENSE_LIMIT = 2000
CG_RTOL = 1e-12
RESIDUAL_RTOL = 1e-10


def relative_residual(A, x, b) -> float:
    nb = np.linalg.norm(b)
    r = np.linalg.norm(A @ x - b)
    return float(r / nb) if nb > 0 else float(r)


def solve_spd(A, b, method: str = "cg", rtol: float = CG_RTOL) -> np.ndarray:
    """Solve ``A x = b`` for sparse SPD ``A``.

    ``method="cg"`` runs Jacobi-preconditioned conjugate gradients and falls
    back to a dense Cholesky solve for systems smaller than ``DENSE_LIMIT``
    unknowns if CG stalls. ``method="dense"`` is the direct reference path.
    The relative algebraic residual is checked against ``RESIDUAL_RTOL``.
    """
    b = np.asarray(b, dtype=float)
    n = len(b)
    if n == 0 or not np.any(b):
        return np.zeros(n)
    A = sp.csr_matrix(A)
    if method == "dense":
        x = _dense_solve(A, b)
    elif method == "cg":
        diag = A.diagonal()
        if np.any(diag <= 0):
            raise NumericalError("system matrix has non-positive diagonal (singular system)")
        M = sp.diags(1.0 / diag)
        x, info = spla.cg(A, b, rtol=rtol, atol=0.0, maxiter=20 * n + 100, M=M)
        if info != 0 or relative_residual(A, x, b) > RESIDUAL_RTOL:
            if n >= DENSE_LIMIT:
                raise NumericalError(f"conjugate gradients did not converge (info={info})")
            log.warning("CG stalled (info=%s); using dense fallback", info)
            x = _dense_solve(A, b)
    else:
        raise ValidationError(f"unknown solver method {method!r}")
    res = relative_residual(A, x, b)
    if not np.all(np.isfinite(x)) or res > RESIDUAL_RTOL:
        raise NumericalError(f"linear solve residual {res:.3g} exceeds {RESIDUAL_RTOL}")
    return x


def _dense_solve(A, b):
    dense = A.toarray()
    try:
        c = np.linalg.cholesky(dense)
    except np.linalg.LinAlgError:
        raise NumericalError("system matrix is not positive definite") from None
    y = np.linalg.solve(c, b)
    return np.linalg.solve(c.T, y)
