"""Special-function kernels used by the closed-form distance and connectivity laws.

The smooth elementary kernels (``erf``, ``erfcx``, Dawson's integral, the
regularized incomplete gamma function) are thin, vectorized wrappers around
``scipy.special``.  The parabolic cylinder function is evaluated here from its
integral representation, in a scaled form that lets callers cancel the
``exp(z**2/4)`` growth analytically instead of numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

__all__ = [
    "SpecialFnConfig",
    "DEFAULT_CONFIG",
    "erf",
    "erfc",
    "erfcx",
    "dawson",
    "erfi_scaled",
    "reg_lower_gamma",
    "chi2_cdf",
    "chi2_pdf",
    "parabolic_cylinder_D",
    "log_parabolic_cylinder_D_scaled",
]


@dataclass(frozen=True)
class SpecialFnConfig:
    rel_tol: float = 1e-12
    max_quadrature_nodes: int = 400

    def __post_init__(self):
        if not 0.0 < self.rel_tol < 1e-3:
            raise ValueError(f"rel_tol must lie in (0, 1e-3), got {self.rel_tol!r}")
        if self.max_quadrature_nodes < 10:
            raise ValueError("max_quadrature_nodes must be at least 10")


DEFAULT_CONFIG = SpecialFnConfig()


def _check_finite(x, name):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def erf(x):
    """Error function, vectorized."""
    return _out(special.erf(_check_finite(x, "x")))


def erfc(x):
    return _out(special.erfc(_check_finite(x, "x")))


def erfcx(x):
    """Scaled complementary error function ``exp(x**2) * erfc(x)``."""
    return _out(special.erfcx(_check_finite(x, "x")))


def dawson(x):
    """Dawson's integral ``F(x) = exp(-x**2) * int_0^x exp(t**2) dt``."""
    return _out(special.dawsn(_check_finite(x, "x")))


def erfi_scaled(a, b):
    """Return ``exp(-a) * erfi(sqrt(b))`` without forming ``erfi`` itself.

    ``erfi(sqrt(b))`` grows like ``exp(b)``, so it is only usable when it is
    multiplied by a decaying exponential that dominates it.  The product is
    rewritten through Dawson's integral as
    ``2/sqrt(pi) * exp(b - a) * dawson(sqrt(b))``.

    Raises ``ValueError`` if ``a < b`` (beyond rounding slack) or either
    argument is negative.
    """
    a = _check_finite(a, "a")
    b = _check_finite(b, "b")
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("erfi_scaled needs a >= 0 and b >= 0")
    slack = 1e-12 * np.maximum(1.0, np.abs(a))
    if np.any(b - a > slack):
        raise ValueError("erfi_scaled needs a >= b (the fused exponent must be non-positive)")
    expo = np.minimum(b - a, 0.0)
    sb = np.sqrt(b)
    return _out(2.0 / math.sqrt(math.pi) * np.exp(expo) * special.dawsn(sb))


def reg_lower_gamma(s, x):
    """Regularized lower incomplete gamma function ``P(s, x)``."""
    s = _check_finite(s, "s")
    x = _check_finite(x, "x")
    if np.any(s <= 0):
        raise ValueError("reg_lower_gamma needs s > 0")
    if np.any(x < 0):
        raise ValueError("reg_lower_gamma needs x >= 0")
    return _out(special.gammainc(s, x))


def _check_dof(k):
    k_arr = np.asarray(k)
    if np.any(k_arr < 1):
        raise ValueError(f"degrees of freedom must be >= 1, got {k!r}")
    return np.asarray(k, dtype=float)


def chi2_cdf(k, x):
    """CDF of a chi-squared variable with ``k`` degrees of freedom."""
    k = _check_dof(k)
    return reg_lower_gamma(k / 2.0, np.asarray(x, dtype=float) / 2.0)


def chi2_pdf(k, x):
    k = _check_dof(k)
    x = _check_finite(x, "x")
    if np.any(x < 0):
        raise ValueError("chi2_pdf needs x >= 0")
    h = k / 2.0
    with np.errstate(divide="ignore"):
        logx = np.log(x)
    logp = (h - 1.0) * logx - x / 2.0 - h * math.log(2.0) - special.gammaln(h)
    out = np.where(x > 0, np.exp(logp), np.where(k == 2, 0.5, np.where(k < 2, np.inf, 0.0)))
    return _out(out)


def _log_moment_integral(a, z, cfg):
    """``log int_0^inf t**a exp(-t**2/2 - z*t) dt`` for ``a > -1``, ``z >= 0``."""
    opts = dict(epsabs=0.0, epsrel=cfg.rel_tol, limit=cfg.max_quadrature_nodes)
    if a <= 0.0:
        upper = -z + math.sqrt(z * z + 120.0)
        val, _ = integrate.quad(
            lambda t: math.exp(-0.5 * t * t - z * t), 0.0, upper, weight="alg", wvar=(a, 0.0), **opts
        )
        return math.log(val)

    # Work relative to the peak so large moment orders cannot overflow.
    peak = 2.0 * a / (z + math.sqrt(z * z + 4.0 * a))
    gpeak = a * math.log(peak) - 0.5 * peak * peak - z * peak

    def shifted(t):
        if t <= 0.0:
            return 0.0
        return math.exp(a * math.log(t) - 0.5 * t * t - z * t - gpeak)

    # g'' <= -1 beyond the peak, so 60 units of log-decay are reached within 11.
    upper = optimize.brentq(
        lambda t: a * math.log(t) - 0.5 * t * t - z * t - gpeak + 60.0, peak, peak + 11.0, xtol=1e-14
    )
    left, _ = integrate.quad(shifted, 0.0, peak, **opts)
    right, _ = integrate.quad(shifted, peak, upper, **opts)
    return gpeak + math.log(left + right)


def log_parabolic_cylinder_D_scaled(nu, z, config: SpecialFnConfig = DEFAULT_CONFIG):
    """``log(exp(z**2/4) * D_nu(z))`` for ``nu < 0`` and ``z >= 0``.

    Uses ``D_nu(z) = exp(-z**2/4)/Gamma(-nu) * int_0^inf t**(-nu-1) exp(-t**2/2 - z*t) dt``.
    The Gaussian prefactor is left out so callers that multiply by
    ``exp(z**2/4)`` never see overflow or underflow.
    """
    nu = float(nu)
    z = float(z)
    if not (math.isfinite(nu) and math.isfinite(z)):
        raise ValueError("nu and z must be finite")
    if nu >= 0:
        raise ValueError(f"only nu < 0 is supported, got nu={nu}")
    if z < 0:
        raise ValueError(f"z must be non-negative, got z={z}")
    return _log_moment_integral(-nu - 1.0, z, config) - math.lgamma(-nu)


def parabolic_cylinder_D(nu, z, config: SpecialFnConfig = DEFAULT_CONFIG):
    """Parabolic cylinder function ``D_nu(z)`` for ``nu < 0``, ``z > 0``."""
    if np.ndim(nu) or np.ndim(z):
        nus, zs = np.broadcast_arrays(np.asarray(nu, float), np.asarray(z, float))
        return np.array(
            [parabolic_cylinder_D(n, x, config) for n, x in zip(nus.ravel(), zs.ravel())]
        ).reshape(nus.shape)
    if float(z) <= 0:
        raise ValueError(f"z must be positive, got z={z}")
    z = float(z)
    return math.exp(log_parabolic_cylinder_D_scaled(nu, z, config) - 0.25 * z * z)
