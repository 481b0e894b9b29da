"""Material constants and the pointwise low-cycle-fatigue life model.

The life chain maps a displacement gradient and a temperature to the number
of load cycles until surface crack initiation::

    stress -> von Mises -> amplitude -> Neuber -> Ramberg-Osgood
           -> Coffin-Manson-Basquin -> Arrhenius temperature scaling

Every function accepts scalars or numpy arrays and broadcasts. An infinite
life (no failure) is represented by ``math.inf``; use :func:`inverse_life_power`
to turn lives into integrand values, which maps infinite life to an exact 0.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .exceptions import NumericalError, ValidationError

__all__ = [
    "MaterialParams",
    "von_mises",
    "complete_plane_strain",
    "thermoelastic_stress",
    "neuber_convert",
    "ramberg_osgood",
    "cmb_strain",
    "cmb_invert",
    "arrhenius_life",
    "nsur_pointwise",
    "weibull_intensity",
    "inverse_life_power",
]

NO_FAILURE = math.inf

_MAX_ITER = 200


@dataclass(frozen=True)
class MaterialParams:
    """Elastic, thermal, cyclic hardening, strain-life and Weibull constants.

    Stress-like quantities (``lam``, ``mu``, ``E``, ``K_hard``, ``sigma_f``)
    must share one unit, recorded in ``units`` ("MPa" or "Pa"). Lengths are
    metres throughout.
    """

    lam: float
    mu: float
    E: float
    rho_cte: float
    k_cond: float
    K_hard: float
    n_hard: float
    sigma_f: float
    eps_f: float
    b_exp: float
    c_exp: float
    Q_act: float
    T0: float
    m_weib: float
    units: str = "MPa"
    rtol: float = 1e-6

    def __post_init__(self):
        for f in fields(self):
            if f.name == "units":
                continue
            value = getattr(self, f.name)
            if not math.isfinite(value):
                raise ValidationError(f"material parameter {f.name!r} must be finite, got {value}")
        positive = ("lam", "mu", "E", "K_hard", "sigma_f", "eps_f", "k_cond", "m_weib", "rtol")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValidationError(f"material parameter {name!r} must be > 0, got {getattr(self, name)}")
        if not 0 < self.n_hard < 1:
            raise ValidationError(f"hardening exponent n_hard must lie in (0, 1), got {self.n_hard}")
        if self.b_exp >= 0 or self.c_exp >= 0:
            raise ValidationError("fatigue exponents b_exp and c_exp must be negative")
        if self.rho_cte < 0:
            raise ValidationError(f"thermal expansion rho_cte must be >= 0, got {self.rho_cte}")
        if self.units not in ("MPa", "Pa"):
            raise ValidationError(f"units must be 'MPa' or 'Pa', got {self.units!r}")
        E_lame = self.mu * (3 * self.lam + 2 * self.mu) / (self.lam + self.mu)
        if abs(self.E - E_lame) > self.rtol * self.E:
            raise ValidationError(
                f"Young's modulus E={self.E} inconsistent with Lame constants "
                f"(mu(3 lam + 2 mu)/(lam + mu) = {E_lame}, rtol={self.rtol})"
            )

    @classmethod
    def from_engineering(cls, E: float, nu: float, **kwargs) -> "MaterialParams":
        """Build parameters from Young's modulus and Poisson's ratio."""
        if not -1 < nu < 0.5:
            raise ValidationError(f"Poisson's ratio must lie in (-1, 0.5), got {nu}")
        lam = E * nu / ((1 + nu) * (1 - 2 * nu))
        mu = E / (2 * (1 + nu))
        return cls(lam=lam, mu=mu, E=E, **kwargs)

    @property
    def thermal_modulus(self) -> float:
        """Coupling coefficient rho (3 lambda + 2 mu)."""
        return self.rho_cte * (3 * self.lam + 2 * self.mu)

    @property
    def plane_strain_ratio(self) -> float:
        return self.lam / (2 * (self.lam + self.mu))

    def to_dict(self) -> dict:
        return asdict(self)

    def converted(self, units: str) -> "MaterialParams":
        """Return a copy with stress-like constants expressed in ``units``."""
        if units == self.units:
            return self
        scale = 1e-6 if (self.units, units) == ("Pa", "MPa") else 1e6
        d = self.to_dict()
        for name in ("lam", "mu", "E", "K_hard", "sigma_f"):
            d[name] *= scale
        d["units"] = units
        return MaterialParams(**d)


def _as_nonneg(name, value):
    arr = np.asarray(value, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise ValidationError(f"{name} must be finite and >= 0")
    return arr


def _scalar_or_array(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def von_mises(sigma, sigma_zz=None):
    """Von Mises equivalent stress ``sqrt(3/2 s':s')``.

    ``sigma`` has shape ``(..., d, d)`` with d in {2, 3}. A 2x2 tensor is
    embedded as the upper-left block of a 3x3 tensor whose out-of-plane normal
    component is ``sigma_zz`` (default 0); the deviator always uses the
    three-dimensional trace.
    """
    sigma = np.asarray(sigma, dtype=float)
    d = sigma.shape[-1]
    if sigma.ndim < 2 or sigma.shape[-2] != d or d not in (2, 3):
        raise ValidationError(f"stress must have shape (..., d, d) with d in (2, 3), got {sigma.shape}")
    scale = np.max(np.abs(sigma), axis=(-2, -1), keepdims=True)
    asym = np.abs(sigma - np.swapaxes(sigma, -1, -2))
    if np.any(asym > 1e-12 * np.maximum(scale, np.finfo(float).tiny)):
        raise ValidationError("stress tensor is not symmetric")
    if d == 2:
        full = np.zeros(sigma.shape[:-2] + (3, 3))
        full[..., :2, :2] = sigma
        if sigma_zz is not None:
            full[..., 2, 2] = sigma_zz
        sigma = full
    mean = np.trace(sigma, axis1=-2, axis2=-1) / 3.0
    dev = sigma - mean[..., None, None] * np.eye(3)
    return _scalar_or_array(np.sqrt(1.5 * np.einsum("...ij,...ij->...", dev, dev)))


def thermoelastic_stress(grad_u, T, p: MaterialParams):
    """Stress ``lam div(u) I + mu (grad u + grad u^T) - rho(3 lam + 2 mu)(T - T0) I``."""
    grad_u = np.asarray(grad_u, dtype=float)
    d = grad_u.shape[-1]
    eye = np.eye(d)
    div = np.trace(grad_u, axis1=-2, axis2=-1)
    dT = np.asarray(T, dtype=float) - p.T0
    iso = p.lam * div - p.thermal_modulus * dT
    return iso[..., None, None] * eye + p.mu * (grad_u + np.swapaxes(grad_u, -1, -2))


def complete_plane_strain(sigma2, T, p: MaterialParams):
    """Out-of-plane normal stress of a plane-strain state.

    ``sigma_33 = lam / (2 (lam + mu)) (sigma_11 + sigma_22) - E rho (T - T0)``.
    """
    sigma2 = np.asarray(sigma2, dtype=float)
    dT = np.asarray(T, dtype=float) - p.T0
    return p.plane_strain_ratio * (sigma2[..., 0, 0] + sigma2[..., 1, 1]) - p.E * p.rho_cte * dT


def _neuber_lhs(s, p):
    return s * s / p.E + s * (s / p.K_hard) ** (1.0 / p.n_hard)


def neuber_convert(sigma_a, p: MaterialParams):
    """Elastic-plastic stress amplitude from an elastic one via Neuber's rule.

    Solves ``s^2/E + s (s/K)^(1/n') = sigma_a^2 / E`` for ``s`` in
    ``[0, sigma_a]`` with a bisection-safeguarded Newton iteration.
    """
    sa = _as_nonneg("elastic stress amplitude", sigma_a)
    shape = sa.shape
    sa = np.atleast_1d(sa).astype(float).copy()
    inv_n = 1.0 / p.n_hard
    target = sa * sa / p.E
    lo = np.zeros_like(sa)
    hi = sa.copy()
    tol = 1e-10 * np.maximum(1.0, sa)
    # purely elastic guess is the upper end of the bracket
    s = sa.copy()
    active = sa > 0
    for _ in range(_MAX_ITER):
        if not np.any(active):
            break
        sv = s[active]
        g = _neuber_lhs(sv, p) - target[active]
        pos = g > 0
        hi[active] = np.where(pos, sv, hi[active])
        lo[active] = np.where(pos, lo[active], sv)
        dg = 2 * sv / p.E + (1 + inv_n) * (sv / p.K_hard) ** inv_n
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = sv - g / dg
        l, h = lo[active], hi[active]
        inside = (newton > l) & (newton < h) & np.isfinite(newton)
        step = np.where(inside, newton, 0.5 * (l + h))
        done = (np.abs(step - sv) <= tol[active]) | (h - l <= tol[active])
        s[active] = step
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    else:
        raise NumericalError("Neuber iteration did not converge")
    s[sa == 0] = 0.0
    return _scalar_or_array(s.reshape(shape))


def ramberg_osgood(sigma_ep, p: MaterialParams):
    """Strain amplitude ``sigma/E + (sigma/K)^(1/n')``."""
    s = _as_nonneg("elastic-plastic stress amplitude", sigma_ep)
    return _scalar_or_array(s / p.E + (s / p.K_hard) ** (1.0 / p.n_hard))


def cmb_strain(N, p: MaterialParams):
    """Strain amplitude of the Coffin-Manson-Basquin curve at ``N`` cycles."""
    two_n = 2.0 * np.asarray(N, dtype=float)
    return _scalar_or_array(p.sigma_f / p.E * two_n ** p.b_exp + p.eps_f * two_n ** p.c_exp)


def cmb_invert(eps_a, p: MaterialParams, fatigue_floor: float | None = None):
    """Cycles to crack initiation for a given strain amplitude.

    Inverts ``eps_a = (sigma_f/E)(2N)^b + eps_f (2N)^c`` in the variable
    ``x = log(2N)``, where the right side is decreasing and convex, so Newton
    steps from the left stay inside the analytic bracket. Amplitudes below
    ``fatigue_floor`` (if given) return ``inf``.
    """
    eps = np.asarray(eps_a, dtype=float)
    if np.any(~np.isfinite(eps)) or np.any(eps <= 0):
        raise ValidationError("strain amplitude must be finite and > 0")
    shape = eps.shape
    eps = np.atleast_1d(eps).astype(float)
    A = p.sigma_f / p.E
    B = p.eps_f
    b, c = p.b_exp, p.c_exp
    log_eps = np.log(eps)
    # each term alone equal to eps -> g >= 0; each term at most eps/2 -> g <= 0
    x_a = (log_eps - math.log(A)) / b
    x_b = (log_eps - math.log(B)) / c
    lo = np.minimum(x_a, x_b)
    hi = np.maximum((log_eps - math.log(2) - math.log(A)) / b, (log_eps - math.log(2) - math.log(B)) / c)
    x = lo.copy()
    converged = np.zeros(x.shape, dtype=bool)
    for _ in range(_MAX_ITER):
        ta = A * np.exp(b * x)
        tb = B * np.exp(c * x)
        g = (ta + tb) / eps - 1.0
        dg = (b * ta + c * tb) / eps
        pos = g > 0
        lo = np.where(pos, x, lo)
        hi = np.where(pos, hi, x)
        newton = x - g / dg
        inside = (newton >= lo) & (newton <= hi)
        x_new = np.where(inside, newton, 0.5 * (lo + hi))
        # relative tolerance on N = exp(x)/2 is an absolute tolerance on x
        converged = np.abs(x_new - x) <= 1e-12 * np.maximum(1.0, np.abs(x))
        x = x_new
        if np.all(converged):
            break
    else:
        raise NumericalError("Coffin-Manson-Basquin inversion did not converge")
    N = 0.5 * np.exp(x)
    if fatigue_floor is not None:
        N = np.where(eps < fatigue_floor, NO_FAILURE, N)
    return _scalar_or_array(N.reshape(shape))


def arrhenius_life(N_mech, T, p: MaterialParams):
    """Temperature-scaled life ``exp(-Q (T - T0)) N_mech``."""
    N = np.asarray(N_mech, dtype=float)
    if np.any(np.isnan(N)) or np.any(N <= 0):
        raise ValidationError("mechanical life must be > 0")
    T = np.asarray(T, dtype=float)
    return _scalar_or_array(np.exp(-p.Q_act * (T - p.T0)) * N)


def nsur_pointwise(grad_u, T, p: MaterialParams):
    """Surface life N_sur from a displacement gradient and a temperature.

    ``grad_u`` has shape ``(..., d, d)`` and ``T`` broadcasts against the
    leading dimensions. For d = 2 the plane-strain out-of-plane stress enters
    the von Mises stress. Points with zero equivalent stress get ``inf``.
    """
    grad_u = np.asarray(grad_u, dtype=float)
    T = np.asarray(T, dtype=float)
    if not (np.all(np.isfinite(grad_u)) and np.all(np.isfinite(T))):
        raise ValidationError("displacement gradient and temperature must be finite")
    lead = np.broadcast_shapes(grad_u.shape[:-2], T.shape)
    grad_u = np.broadcast_to(grad_u, lead + grad_u.shape[-2:])
    T = np.broadcast_to(T, lead)
    sigma = thermoelastic_stress(grad_u, T, p)
    szz = complete_plane_strain(sigma, T, p) if grad_u.shape[-1] == 2 else None
    # symmetric by construction; skip the validation pass
    sv = np.atleast_1d(_von_mises_unchecked(sigma, szz))
    T1 = np.atleast_1d(T)
    life = np.full(sv.shape, NO_FAILURE)
    loaded = sv > 0
    if np.any(loaded):
        s_ep = neuber_convert(sv[loaded] / 2.0, p)
        eps = np.atleast_1d(ramberg_osgood(s_ep, p))
        life[loaded] = arrhenius_life(cmb_invert(eps, p), T1[loaded], p)
    return _scalar_or_array(life.reshape(lead))


def _von_mises_unchecked(sigma, sigma_zz):
    if sigma.shape[-1] == 2:
        full = np.zeros(sigma.shape[:-2] + (3, 3))
        full[..., :2, :2] = sigma
        full[..., 2, 2] = sigma_zz
        sigma = full
    mean = np.trace(sigma, axis1=-2, axis2=-1) / 3.0
    dev = sigma - mean[..., None, None] * np.eye(3)
    return np.sqrt(1.5 * np.einsum("...ij,...ij->...", dev, dev))


def inverse_life_power(N, m: float):
    """``(1/N)^m`` with the convention ``1/inf = 0`` applied exactly."""
    N = np.asarray(N, dtype=float)
    out = np.zeros(N.shape)
    finite = np.isfinite(N)
    out[finite] = N[finite] ** (-m)
    return _scalar_or_array(out)


def weibull_intensity(t, N, m: float):
    """Local Weibull crack initiation density ``(m/N) (t/N)^(m-1)``; zero for infinite N."""
    t = _as_nonneg("time", t)
    N = np.asarray(N, dtype=float)
    if np.any(np.isnan(N)) or np.any(N <= 0):
        raise ValidationError("Weibull scale must lie in (0, inf]")
    t, N = np.broadcast_arrays(t, N)
    out = np.zeros(t.shape)
    finite = np.isfinite(N)
    out[finite] = (m / N[finite]) * (t[finite] / N[finite]) ** (m - 1)
    return _scalar_or_array(out)
