"""Steady-state distributions of the distance to target.

Every distribution exposes vectorized ``pdf(r)`` and ``cdf(r)``.  Available
representations:

* ``GeneralRadial``: ``K r^2 exp(-2 V(r) / sigma^2)`` for any radial control,
  normalized and integrated by adaptive quadrature.
* ``ClosedFormOU`` / ``ClosedFormOC``: the Maxwell law for proportional
  control and the piecewise law for on-off control.
* ``Chi2Scaled``: ``R^2 = lambda * chi2_3`` (equal per-axis variances).
* ``QuadraticFormSeries``: chi-squared mixture for ``sum lambda_i W_i^2``.
* ``PartialSymmetry``: erf / erfi closed forms for ``lambda_x = lambda_y``.
"""

from __future__ import annotations

import functools
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special as sps

from .models import (
    AsymmetricModel,
    Lambdas,
    OnOff,
    OU,
    SymmetricModel,
    lambdas_from_model,
)
from .special import chi2_cdf, chi2_pdf, erf, erfi_scaled

__all__ = [
    "NonNormalizableError",
    "SeriesConvergenceError",
    "RadialDistribution",
    "GeneralRadial",
    "ClosedFormOU",
    "ClosedFormOC",
    "Chi2Scaled",
    "QuadraticFormSeries",
    "PartialSymmetry",
    "SeriesDiagnostics",
    "radial_pdf_general",
    "radial_cdf_general",
    "cdf_ou",
    "cdf_oc",
    "oc_normalization",
    "quadratic_form_cdf",
    "partial_symmetry_cdf",
    "partial_symmetry_cdf_quadrature",
    "choose_eta",
    "distribution_for",
    "cdf_csv",
]

MAX_SERIES_TERMS = 10_000
BRANCH_DELTA = 1e-6


class NonNormalizableError(ValueError):
    """The control law does not confine the vehicle (no steady state)."""


class SeriesConvergenceError(RuntimeError):
    """The chi-squared mixture did not reach its tolerance within the term cap."""


def _arr(r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(np.isnan(r)):
        raise ValueError("distances must be non-negative")
    return r


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


class RadialDistribution:
    """Interface shared by all distance laws."""

    #: a length of the order of the typical distance
    scale: float = 1.0

    def pdf(self, r):
        raise NotImplementedError

    def cdf(self, r):
        raise NotImplementedError


# --------------------------------------------------------------------------
# general symmetric control


class GeneralRadial(RadialDistribution):
    """Steady-state distance law for an arbitrary radial control law.

    The normalization is found by integrating over ``[0, R*]`` where ``R*``
    doubles until the last interval adds less than ``1e-14`` of the total.
    """

    def __init__(self, model: SymmetricModel, rel_tol: float = 1e-13, max_doublings: int = 40):
        self.model = model
        self.rel_tol = rel_tol
        self.scale = float(model.control.length_scale(model.sigma))
        self._two_over_s2 = 2.0 / (model.sigma * model.sigma)
        self._breaks = np.array(sorted(model.control.breakpoints), dtype=float)
        total = self._integrate(0.0, 4.0 * self.scale)
        hi = 4.0 * self.scale
        for _ in range(max_doublings):
            part = self._integrate(hi, 2.0 * hi)
            total += part
            hi *= 2.0
            if part < 1e-14 * total:
                break
        else:
            raise NonNormalizableError(
                "tail of r^2 exp(-2V/sigma^2) does not decay: the control law has no steady state"
            )
        if not (np.isfinite(total) and total > 0):
            raise NonNormalizableError("normalization integral is not finite")
        self.r_cut = hi
        self.z = total
        self.k = 1.0 / total

    def _unnormalized(self, r):
        r = np.asarray(r, dtype=float)
        return r * r * np.exp(-self._two_over_s2 * np.asarray(self.model.control.potential(r), float))

    def _integrate(self, a, b):
        if b <= a:
            return 0.0
        inner = [p for p in self._breaks if a < p < b]
        edges = [a, *inner, b]
        total = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(
                lambda t: float(self._unnormalized(t)), lo, hi, epsabs=1e-300, epsrel=self.rel_tol, limit=200
            )
            total += val
        return total

    def pdf(self, r):
        r = _arr(r)
        return _out(self.k * self._unnormalized(r))

    def cdf(self, r):
        r = _arr(r)
        flat = r.ravel()
        order = np.argsort(flat)
        out = np.empty_like(flat)
        acc = 0.0
        prev = 0.0
        for idx in order:
            x = min(flat[idx], self.r_cut)
            acc += self._integrate(prev, x)
            prev = max(prev, x)
            out[idx] = acc
        out = np.clip(out * self.k, 0.0, 1.0)
        return _out(out.reshape(r.shape))


@functools.lru_cache(maxsize=64)
def _general(model: SymmetricModel) -> GeneralRadial:
    return GeneralRadial(model)


def radial_pdf_general(model: SymmetricModel, r):
    """``K r^2 exp(-2 V(r) / sigma^2)`` with ``K`` from quadrature."""
    return _general(model).pdf(r)


def radial_cdf_general(model: SymmetricModel, r):
    return _general(model).cdf(r)


# --------------------------------------------------------------------------
# closed forms for the symmetric model


def cdf_ou(alpha, sigma, r):
    """Maxwell CDF of the distance under proportional control ``v = alpha r``."""
    if alpha <= 0 or sigma <= 0:
        raise ValueError("alpha and sigma must be positive")
    r = _arr(r)
    u = alpha * r * r / (sigma * sigma)
    val = sps.erf(np.sqrt(u)) - np.sqrt(4.0 * u / math.pi) * np.exp(-u)
    return _out(np.clip(val, 0.0, 1.0))


def pdf_ou(alpha, sigma, r):
    r = _arr(r)
    return _out(4.0 * alpha ** 1.5 / (math.sqrt(math.pi) * sigma ** 3) * r * r * np.exp(-alpha * r * r / sigma ** 2))


def oc_normalization(c, m, sigma):
    s2 = sigma * sigma
    return 12.0 * c ** 3 / (3.0 * s2 * (s2 * s2 + 2.0 * m * c * s2 + 2.0 * m * m * c * c) + 4.0 * m ** 3 * c ** 3)


def cdf_oc(c, m, sigma, r):
    """CDF of the distance under on-off control.

    ``K r^3 / 3`` inside the dead zone; beyond it the exponential-tail
    integral, which carries a ``K sigma^2 / (4 c^3)`` prefactor.
    """
    if c <= 0 or m < 0 or sigma <= 0:
        raise ValueError("need c > 0, m >= 0, sigma > 0")
    r = _arr(r)
    k = oc_normalization(c, m, sigma)
    s2 = sigma * sigma
    inner = k * r ** 3 / 3.0
    rr = np.maximum(r, m)
    poly_m = s2 * s2 + 2.0 * m * c * s2 + 2.0 * m * m * c * c
    poly_r = s2 * s2 + 2.0 * rr * c * s2 + 2.0 * rr * rr * c * c
    outer = k * m ** 3 / 3.0 + k * s2 / (4.0 * c ** 3) * (poly_m - poly_r * np.exp(-2.0 * c * (rr - m) / s2))
    return _out(np.clip(np.where(r <= m, inner, outer), 0.0, 1.0))


class ClosedFormOU(RadialDistribution):
    def __init__(self, alpha, sigma):
        if alpha <= 0 or sigma <= 0:
            raise ValueError("alpha and sigma must be positive")
        self.alpha = float(alpha)
        self.sigma = float(sigma)
        self.lam = sigma * sigma / (2.0 * alpha)
        self.scale = math.sqrt(self.lam)

    def pdf(self, r):
        return pdf_ou(self.alpha, self.sigma, r)

    def cdf(self, r):
        return cdf_ou(self.alpha, self.sigma, r)


class ClosedFormOC(RadialDistribution):
    def __init__(self, c, m, sigma):
        if c <= 0 or m < 0 or sigma <= 0:
            raise ValueError("need c > 0, m >= 0, sigma > 0")
        self.c, self.m, self.sigma = float(c), float(m), float(sigma)
        self.k = oc_normalization(c, m, sigma)
        self.scale = self.m + sigma * sigma / (2.0 * c)

    def pdf(self, r):
        r = _arr(r)
        return _out(self.k * r * r * np.exp(-2.0 * self.c * np.maximum(0.0, r - self.m) / self.sigma ** 2))

    def cdf(self, r):
        return cdf_oc(self.c, self.m, self.sigma, r)


class Chi2Scaled(RadialDistribution):
    """``R^2 = lam * chi2_3``: three equal per-axis variances ``lam``."""

    def __init__(self, lam):
        if lam <= 0:
            raise ValueError("lam must be positive")
        self.lam = float(lam)
        self.scale = math.sqrt(self.lam)

    def pdf(self, r):
        r = _arr(r)
        return _out(np.asarray(chi2_pdf(3, r * r / self.lam)) * 2.0 * r / self.lam)

    def cdf(self, r):
        r = _arr(r)
        return chi2_cdf(3, r * r / self.lam)


# --------------------------------------------------------------------------
# quadratic form in Gaussians


@dataclass(frozen=True)
class SeriesDiagnostics:
    terms_used: int
    tail_bound: float
    eta_used: float
    eta_rule: str


def choose_eta(lambdas) -> tuple[float, str]:
    """Mixture scale: the harmonic-type choice ``3 / sum(1/lambda_i)`` when it
    keeps every ratio ``|1 - eta/lambda_i|`` at most 0.9, else ``min(lambda)``.
    """
    lam = np.asarray(list(lambdas), dtype=float)
    eta = 3.0 / np.sum(1.0 / lam)
    if eta <= 1.9 * lam.min():
        return float(eta), "harmonic"
    return float(lam.min()), "min-lambda"


def _mixture_weights(lam, eta, tol, max_terms):
    """Weights of ``sum lambda_i W_i^2 = sum_j e_j * eta * chi2_{3+2j}``.

    Returns the weights and a rigorous bound on ``sum_{j>J} |e_j|`` obtained
    from the majorant series built on ``|1 - eta/lambda_i|``.
    """
    q = 1.0 - eta / lam
    qa = np.abs(q)
    e0 = math.sqrt(eta ** 3 / float(np.prod(lam)))
    majorant_total = e0 / float(np.prod(np.sqrt(1.0 - qa)))
    cap = 64
    e = np.zeros(cap)
    et = np.zeros(cap)
    h = np.zeros(cap)
    ht = np.zeros(cap)
    e[0] = et[0] = e0
    acc_t = e0
    tail = majorant_total - acc_t
    s = 0
    while tail > tol:
        s += 1
        if s > max_terms:
            raise SeriesConvergenceError(
                f"chi-squared mixture needs more than {max_terms} terms (tail bound {tail:.3g})"
            )
        if s >= cap:
            cap *= 2
            e, et, h, ht = (np.concatenate([a, np.zeros(cap - a.size)]) for a in (e, et, h, ht))
        h[s] = np.sum(q ** s)
        ht[s] = np.sum(qa ** s)
        e[s] = np.dot(h[s:0:-1], e[:s]) / (2.0 * s)
        et[s] = np.dot(ht[s:0:-1], et[:s]) / (2.0 * s)
        acc_t += et[s]
        tail = max(majorant_total - acc_t, 0.0)
    return e[: s + 1].copy(), tail


class QuadraticFormSeries(RadialDistribution):
    """Distance law for ``R^2 = l1 W1^2 + l2 W2^2 + l3 W3^2`` as a chi-squared mixture."""

    def __init__(self, lambdas, tol: float = 1e-12, max_terms: int = MAX_SERIES_TERMS, eta: float | None = None):
        lam = np.asarray(list(lambdas), dtype=float)
        if lam.shape != (3,) or np.any(lam <= 0):
            raise ValueError("need three positive variances")
        if eta is None:
            eta, rule = choose_eta(lam)
        else:
            rule = "user"
            if not 0 < eta < 2 * lam.min():
                raise ValueError("eta must lie in (0, 2 min(lambda)) for the series to converge")
        self.lambdas = lam
        self.eta = float(eta)
        self.weights, tail = _mixture_weights(lam, self.eta, tol, max_terms)
        self.diagnostics = SeriesDiagnostics(len(self.weights), tail, self.eta, rule)
        self.scale = math.sqrt(lam.max())
        self._dof_half = np.arange(len(self.weights)) + 1.5

    def _chunks(self, flat, fn):
        out = np.empty_like(flat)
        step = max(1, 2_000_000 // len(self.weights))
        for i in range(0, flat.size, step):
            out[i : i + step] = fn(flat[i : i + step])
        return out

    def cdf(self, r):
        r = _arr(r)
        flat = r.ravel()

        def fn(x):
            p = sps.gammainc(self._dof_half[:, None], (x * x / (2.0 * self.eta))[None, :])
            return self.weights @ p

        return _out(np.clip(self._chunks(flat, fn), 0.0, 1.0).reshape(r.shape))

    def pdf(self, r):
        r = _arr(r)
        flat = r.ravel()

        def fn(x):
            y = (x * x / self.eta)[None, :]
            k = 2.0 * self._dof_half[:, None]
            with np.errstate(divide="ignore"):
                logp = (k / 2 - 1) * np.log(y) - y / 2 - (k / 2) * math.log(2) - sps.gammaln(k / 2)
            dens = np.where(y > 0, np.exp(logp), 0.0)
            return (self.weights @ dens) * 2.0 * x / self.eta

        return _out(np.maximum(self._chunks(flat, fn), 0.0).reshape(r.shape))


def quadratic_form_cdf(lambdas, r, tol: float = 1e-12):
    """``P(R <= r)`` for ``R^2 = sum lambda_i W_i^2``; returns ``(cdf, diagnostics)``."""
    dist = QuadraticFormSeries(lambdas, tol=tol)
    return dist.cdf(r), dist.diagnostics


# --------------------------------------------------------------------------
# partial symmetry: lambda_x = lambda_y != lambda_z


class PartialSymmetry(RadialDistribution):
    """Closed forms for ``R^2 = 2 lam_xy U + lam_z W^2`` with ``U ~ Exp(1)``.

    ``lam_xy > lam_z`` uses the erf form, ``lam_z > lam_xy`` the erfi form
    (evaluated through ``erfi_scaled``).  When the two agree to within
    ``delta`` (relative) the chi-squared law at the mean variance is used.
    """

    def __init__(self, lambda_xy, lambda_z, delta: float = BRANCH_DELTA):
        if lambda_xy <= 0 or lambda_z <= 0:
            raise ValueError("variances must be positive")
        self.l1 = float(lambda_xy)
        self.l3 = float(lambda_z)
        self.delta = delta
        if self.l1 > self.l3 * (1.0 + delta):
            self.branch = "erf"
        elif self.l3 > self.l1 * (1.0 + delta):
            self.branch = "erfi"
        else:
            self.branch = "symmetric"
        self._sym = Chi2Scaled((2.0 * self.l1 + self.l3) / 3.0)
        self.scale = math.sqrt(max(self.l1, self.l3))

    def _second_term(self, r):
        l1, l3 = self.l1, self.l3
        if self.branch == "erf":
            d = l1 - l3
            return math.sqrt(l1 / d) * np.exp(-r * r / (2 * l1)) * sps.erf(np.sqrt(r * r * d / (2 * l1 * l3)))
        d = l3 - l1
        a = r * r / (2 * l1)
        b = r * r * d / (2 * l1 * l3)
        return math.sqrt(l1 / d) * np.asarray(erfi_scaled(a, np.minimum(a, b)))

    def cdf(self, r):
        r = _arr(r)
        if self.branch == "symmetric":
            return self._sym.cdf(r)
        val = sps.erf(np.sqrt(r * r / (2 * self.l3))) - self._second_term(r)
        return _out(np.clip(val, 0.0, 1.0))

    def pdf(self, r):
        r = _arr(r)
        if self.branch == "symmetric":
            return self._sym.pdf(r)
        return _out(np.maximum(r / self.l1 * self._second_term(r), 0.0))


def partial_symmetry_cdf(lambda_xy, lambda_z, r):
    return PartialSymmetry(lambda_xy, lambda_z).cdf(r)


def partial_symmetry_cdf_quadrature(lambda_xy, lambda_z, r, rel_tol: float = 1e-13):
    """One-dimensional quadrature of the partial-symmetry CDF.

    Conditions on ``V = W_z^2`` (chi-squared, one degree of freedom) and
    substitutes ``v = u^2`` to remove the ``1/sqrt(v)`` endpoint singularity.
    """
    l1, l3 = float(lambda_xy), float(lambda_z)
    c = 2.0 / math.sqrt(2.0 * math.pi)

    def one(rv):
        if rv == 0:
            return 0.0
        f = lambda u: (1.0 - math.exp((l3 * u * u - rv * rv) / (2 * l1))) * c * math.exp(-0.5 * u * u)
        val, _ = integrate.quad(f, 0.0, rv / math.sqrt(l3), epsabs=1e-15, epsrel=rel_tol, limit=200)
        return val

    r = _arr(r)
    return _out(np.array([one(float(x)) for x in r.ravel()]).reshape(r.shape))


# --------------------------------------------------------------------------


def distribution_for(model, tol: float = 1e-12) -> RadialDistribution:
    """Pick the analytic representation of a model's steady-state distance."""
    if isinstance(model, SymmetricModel):
        if isinstance(model.control, OU):
            return ClosedFormOU(model.control.alpha, model.sigma)
        if isinstance(model.control, OnOff):
            return ClosedFormOC(model.control.c, model.control.m, model.sigma)
        return _general(model)
    if isinstance(model, AsymmetricModel):
        model = lambdas_from_model(model)
    if isinstance(model, Lambdas):
        lam = sorted(model)
        close = lambda a, b: abs(a - b) <= 1e-12 * max(a, b)
        if close(lam[0], lam[2]):
            return Chi2Scaled(sum(lam) / 3.0)
        if close(lam[0], lam[1]):
            return PartialSymmetry(0.5 * (lam[0] + lam[1]), lam[2])
        if close(lam[1], lam[2]):
            return PartialSymmetry(0.5 * (lam[1] + lam[2]), lam[0])
        return QuadraticFormSeries(lam, tol=tol)
    raise TypeError(f"no analytic distribution for {type(model).__name__}")


def cdf_csv(dist: RadialDistribution, grid) -> str:
    """``r,cdf`` CSV text for a distribution evaluated on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    vals = np.asarray(dist.cdf(grid), dtype=float)
    buf = io.StringIO()
    buf.write("r,cdf\n")
    for r, f in zip(grid.tolist(), vals.tolist()):
        buf.write(f"{r!r},{f!r}\n")
    return buf.getvalue()
