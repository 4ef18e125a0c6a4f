"""Connectivity probability of a Rayleigh-faded link to a hovering vehicle.

The link is up when ``A R^-gamma |h|^2 > SNR0`` with ``|h|^2 ~ Exp(1)``.
Conditioning on the fade gives

    P_conn = int_0^inf F_R(B x^(1/gamma)) exp(-x) dx,   B = (A / SNR0)^(1/gamma),

which ``pconn_numeric`` evaluates by quadrature for any distance law.  The
remaining functions are closed forms or series for particular laws and path
loss exponents; each is checked against ``pconn_numeric`` in the test suite.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special as sps

from .models import Lambdas
from .special import log_parabolic_cylinder_D_scaled
from .steady_state import (
    ClosedFormOC,
    PartialSymmetry,
    QuadraticFormSeries,
    RadialDistribution,
    oc_normalization,
)

__all__ = [
    "ConnectivitySpec",
    "pconn_numeric",
    "pconn_oc_gamma2",
    "pconn_series_gamma2",
    "pconn_series_gamma4",
    "pconn_partial_gamma2",
    "pconn_partial_general",
    "pconn_monte_carlo",
    "sweep_csv",
]

# exp(-X_MAX) < 1e-16
X_MAX = 37.0


@dataclass(frozen=True)
class ConnectivitySpec:
    """Path-loss exponent ``gamma`` and threshold ratio ``snr_ratio = SNR0 / A``."""

    gamma: float
    snr_ratio: float

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma >= 2):
            raise ValueError(f"gamma must be >= 2, got {self.gamma!r}")
        if not (math.isfinite(self.snr_ratio) and self.snr_ratio > 0):
            raise ValueError(f"snr_ratio must be positive, got {self.snr_ratio!r}")

    @property
    def B(self) -> float:
        """Distance at which the mean SNR equals the threshold."""
        return self.snr_ratio ** (-1.0 / self.gamma)

    @classmethod
    def from_B(cls, gamma, B):
        return cls(gamma, float(B) ** (-gamma))


def _require_gamma(spec, gamma):
    if spec.gamma != gamma:
        raise ValueError(f"this closed form needs gamma = {gamma}, got {spec.gamma}")


def pconn_numeric(dist: RadialDistribution, spec: ConnectivitySpec, rel_tol: float = 1e-12) -> float:
    """Quadrature of ``int F_R(B x^(1/gamma)) e^-x dx`` over ``[0, 37]``.

    Substituting ``x = y^gamma`` makes the integrand smooth at the origin.
    """
    g = spec.gamma
    B = spec.B
    y_max = X_MAX ** (1.0 / g)

    def integrand(y):
        if y <= 0.0:
            return 0.0
        return float(dist.cdf(B * y)) * g * y ** (g - 1.0) * math.exp(-(y ** g))

    # the CDF rises where B*y is of the order of the distance scale
    points = sorted({p for p in (dist.scale / B, 3.0 * dist.scale / B, 1.0) if 0 < p < y_max})
    val, _ = integrate.quad(integrand, 0.0, y_max, points=points or None, epsabs=1e-14, epsrel=rel_tol, limit=400)
    return min(max(val, 0.0), 1.0)


def pconn_oc_gamma2(c, m, sigma, spec: ConnectivitySpec) -> float:
    """Closed form for on-off control with ``gamma = 2``.

    Splits the fade integral at ``x = (m/B)^2``: the dead-zone part is an
    incomplete gamma function and the tail part reduces to Gaussian moments
    ``int_mu^inf y^n exp(-y^2 - p y) dy``.  Those are taken from scaled
    parabolic cylinder functions, which keeps every term positive and avoids
    cancellation when ``B`` is large.
    """
    _require_gamma(spec, 2)
    if c <= 0 or m < 0 or sigma <= 0:
        raise ValueError("need c > 0, m >= 0, sigma > 0")
    B = spec.B
    k = oc_normalization(c, m, sigma)
    s2 = sigma * sigma
    kappa = 2.0 * c / s2
    mu = m / B
    p = kappa * B
    em = math.exp(-mu * mu)

    inner = k * B ** 3 / 3.0 * math.gamma(2.5) * sps.gammainc(2.5, mu * mu)

    # J_n = exp(mu^2 + p mu) int_mu^inf y^n exp(-y^2 - p y) dy, expanded around y = mu
    # so every term is positive; I_i = int_0^inf u^i exp(-u^2 - q u) du
    q = 2.0 * mu + p
    z = q / math.sqrt(2.0)
    moments = [
        math.exp(log_parabolic_cylinder_D_scaled(-(i + 1.0), z) + math.lgamma(i + 1.0)) * 2.0 ** (-(i + 1) / 2)
        for i in range(4)
    ]

    def j(n):
        return sum(math.comb(n, i) * mu ** (n - i) * moments[i] for i in range(n + 1))

    # Q(By) = B^2 y^2 / kappa + 2 B y / kappa^2 + 2 / kappa^3; the y dy measure adds one power
    tail = 2.0 * k * (B * B / kappa * j(3) + 2.0 * B / kappa ** 2 * j(2) + 2.0 / kappa ** 3 * j(1))
    val = inner + em * (1.0 - tail)
    return min(max(float(val), 0.0), 1.0)


def _pconn_oc_gamma2_as_printed(c, m, sigma, B):
    """The on-off / gamma=2 expression in its commonly quoted form.

    Kept only so tests can document how it departs from the quadrature value.
    """
    k = oc_normalization(c, m, sigma)
    s2 = sigma * sigma
    s4, s6 = s2 * s2, s2 ** 3
    e = math.exp(-((m / B) ** 2))
    first = k / 2 * (B * B - (m * m + B * B) * e) + e
    brace = (
        (1 + 2 * c * B / s2 * (m / B - c * B / s2))
        * math.exp(-2 * c * m / s2 - (m / B) ** 2)
        * (1 - math.erf(c * B / s2 + m / B))
        * math.sqrt(math.pi) / 2 * 4 * c ** 3 * B ** 3 / s6
        * math.exp(c * c * B * B / s4)
    )
    return first - k * s4 / (4 * c * c) * math.exp(2 * c * m / s2) * brace


def _series(lambdas, tol):
    lam = list(lambdas) if not isinstance(lambdas, Lambdas) else list(lambdas)
    return QuadraticFormSeries(lam, tol=tol)


def pconn_series_gamma2(lambdas, spec: ConnectivitySpec, tol: float = 1e-12) -> float:
    """``sum_j e_j (1 + 2 eta / B^2)^-(j + 3/2)`` for the chi-squared mixture weights ``e_j``."""
    _require_gamma(spec, 2)
    series = _series(lambdas, tol)
    j = np.arange(len(series.weights))
    base = 1.0 + 2.0 * series.eta / spec.B ** 2
    return min(max(float(series.weights @ np.exp(-(j + 1.5) * math.log(base))), 0.0), 1.0)


def pconn_series_gamma4(lambdas, spec: ConnectivitySpec, tol: float = 1e-12) -> float:
    """Parabolic-cylinder series for ``gamma = 4``.

    Term ``j`` is ``e_j z^(j+3/2) exp(z^2/4) D_{-j-3/2}(z)`` with
    ``z = B^2 / (2 sqrt(2) eta)``; it is assembled in log space from the
    scaled ``D`` so the Gaussian factors cancel exactly.
    """
    _require_gamma(spec, 4)
    series = _series(lambdas, tol)
    z = spec.B ** 2 / (2.0 * math.sqrt(2.0) * series.eta)
    total = 0.0
    for j, w in enumerate(series.weights):
        nu = j + 1.5
        logt = nu * math.log(z) + log_parabolic_cylinder_D_scaled(-nu, z)
        if not math.isfinite(logt):
            raise FloatingPointError(f"term {j} lost all precision (z={z:g})")
        total += w * math.exp(logt)
    return min(max(total, 0.0), 1.0)


def pconn_partial_gamma2(lambda_xy, lambda_z, spec: ConnectivitySpec) -> float:
    """Closed form for the partially symmetric law with ``gamma = 2``.

    Integrating the erf form against the exponential fade gives
    ``B^3 / ((B^2 + 2 lambda_xy) sqrt(B^2 + 2 lambda_z))``; the expression is
    analytic in both variances, so it also covers ``lambda_z > lambda_xy``.
    """
    _require_gamma(spec, 2)
    if lambda_xy <= 0 or lambda_z <= 0:
        raise ValueError("variances must be positive")
    b2 = spec.B ** 2
    return b2 * math.sqrt(b2) / ((b2 + 2.0 * lambda_xy) * math.sqrt(b2 + 2.0 * lambda_z))


def pconn_partial_general(lambda_xy, lambda_z, spec: ConnectivitySpec) -> float:
    return pconn_numeric(PartialSymmetry(lambda_xy, lambda_z), spec)


def pconn_monte_carlo(radii, spec: ConnectivitySpec, rng: np.random.Generator):
    """Fraction of ``(R, |h|^2)`` pairs with ``R^-gamma |h|^2 > snr_ratio``.

    Returns ``(estimate, binomial standard error)``.
    """
    radii = np.asarray(radii, dtype=float)
    fades = rng.exponential(1.0, size=radii.shape)
    # A R^-g |h|^2 > SNR0  <=>  |h|^2 > snr_ratio * R^g
    hits = fades > spec.snr_ratio * radii ** spec.gamma
    p = float(np.mean(hits))
    return p, math.sqrt(max(p * (1 - p), 1e-300) / radii.size)


def sweep_csv(rows) -> str:
    """CSV text with header ``snr_ratio,gamma,pconn_analytic,pconn_numeric,pconn_mc``.

    ``rows`` yields 5-tuples; ``None`` entries become empty fields.
    """
    buf = io.StringIO()
    buf.write("snr_ratio,gamma,pconn_analytic,pconn_numeric,pconn_mc\n")
    for row in rows:
        buf.write(",".join("" if v is None else repr(float(v)) for v in row) + "\n")
    return buf.getvalue()


def analytic_pconn(dist: RadialDistribution, spec: ConnectivitySpec):
    """Closed-form or series value when one applies to ``dist`` and ``gamma``, else ``None``."""
    if isinstance(dist, PartialSymmetry) and spec.gamma == 2:
        return pconn_partial_gamma2(dist.l1, dist.l3, spec)
    if isinstance(dist, QuadraticFormSeries) and spec.gamma in (2, 4):
        fn = pconn_series_gamma2 if spec.gamma == 2 else pconn_series_gamma4
        return fn(dist.lambdas, spec)
    if isinstance(dist, ClosedFormOC) and spec.gamma == 2:
        return pconn_oc_gamma2(dist.c, dist.m, dist.sigma, spec)
    lam = getattr(dist, "lam", None)
    if lam is not None and spec.gamma == 2:
        return (1.0 + 2.0 * lam / spec.B ** 2) ** -1.5
    if lam is not None and spec.gamma == 4:
        return pconn_series_gamma4([lam] * 3, spec)
    return None
