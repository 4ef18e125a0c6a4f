import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from uavmob.models import (
    AsymmetricModel,
    Custom,
    Lambdas,
    OnOff,
    OU,
    PiecewiseLinear,
    SymmetricModel,
)
from uavmob.special import chi2_cdf, erfi_scaled
from uavmob.steady_state import (
    Chi2Scaled,
    ClosedFormOC,
    ClosedFormOU,
    GeneralRadial,
    NonNormalizableError,
    PartialSymmetry,
    QuadraticFormSeries,
    SeriesConvergenceError,
    cdf_csv,
    cdf_oc,
    cdf_ou,
    choose_eta,
    distribution_for,
    oc_normalization,
    partial_symmetry_cdf,
    partial_symmetry_cdf_quadrature,
    quadratic_form_cdf,
    radial_cdf_general,
    radial_pdf_general,
)
from uavmob.stats import ks_distance

OU1 = SymmetricModel(OU(1.0), 1.0)
OC1 = SymmetricModel(OnOff(1.0, 1.0), 1.0)


# -- general radial law ------------------------------------------------------


def test_general_pdf_zero_at_origin():
    for model in (OU1, OC1, SymmetricModel(PiecewiseLinear(((0, 0), (1, 1))), 0.5)):
        assert radial_pdf_general(model, 0.0) == 0.0
        assert radial_cdf_general(model, 0.0) == 0.0


def test_general_matches_ou_closed_form():
    r = np.linspace(0, 5, 201)
    assert np.max(np.abs(radial_pdf_general(OU1, r) - ClosedFormOU(1, 1).pdf(r))) < 1e-10
    assert np.max(np.abs(radial_cdf_general(OU1, r) - cdf_ou(1, 1, r))) < 1e-10


def test_oc_normalization_constant():
    assert oc_normalization(1, 1, 1) == pytest.approx(12 / 19, rel=1e-15)
    assert GeneralRadial(OC1).k == pytest.approx(12 / 19, rel=1e-12)
    total, _ = integrate.quad(lambda t: radial_pdf_general(OC1, t), 0, 60, points=[1.0], limit=200)
    assert total == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("c,m,sigma", [(1, 1, 1), (0.5, 0.5, 1), (2.0, 0.3, 0.7), (1.0, 2.0, 1.8), (0.7, 0.0, 1.2)])
def test_general_matches_oc_closed_form(c, m, sigma):
    model = SymmetricModel(OnOff(c, m), sigma)
    r = np.linspace(0, 8, 161)
    assert np.max(np.abs(radial_cdf_general(model, r) - cdf_oc(c, m, sigma, r))) < 1e-10


def test_oc_values():
    assert cdf_oc(1, 1, 1, 1.0) == pytest.approx(4 / 19, rel=1e-14)
    assert cdf_oc(1, 1, 1, 0.0) == 0.0
    assert cdf_oc(1, 1, 1, 60.0) == pytest.approx(1.0, abs=1e-14)


def test_oc_continuous_at_threshold():
    for c, m, s in ((1, 1, 1), (2, 0.5, 0.3)):
        lo = cdf_oc(c, m, s, m * (1 - 1e-12))
        hi = cdf_oc(c, m, s, m * (1 + 1e-12))
        assert abs(lo - hi) < 1e-10


def test_oc_printed_sigma_power_breaks_normalization():
    """The tail prefactor must scale as sigma^2; a sigma^4 prefactor only
    normalizes at sigma = 1."""
    c, m, sigma = 1.0, 1.0, 1.5
    k = oc_normalization(c, m, sigma)
    s2 = sigma ** 2
    poly_m = s2 * s2 + 2 * m * c * s2 + 2 * m * m * c * c
    printed_limit = k * m ** 3 / 3 + k * s2 * s2 / (4 * c ** 3) * poly_m
    assert abs(printed_limit - 1.0) > 0.1
    assert cdf_oc(c, m, sigma, 200.0) == pytest.approx(1.0, abs=1e-13)


def test_ou_values():
    assert cdf_ou(1, 1, 0.0) == 0.0
    assert cdf_ou(1, 1, 1.0) == pytest.approx(math.erf(1) - 2 / math.sqrt(math.pi) * math.exp(-1), rel=1e-14)
    assert cdf_ou(1, 1, 1.0) == pytest.approx(0.42759, abs=1e-5)
    mean, _ = integrate.quad(lambda t: t * ClosedFormOU(1, 1).pdf(t), 0, 40)
    assert mean == pytest.approx(2 / math.sqrt(math.pi), rel=1e-10)


@given(st.floats(0.05, 20), st.floats(0.05, 20), st.floats(0, 30))
def test_ou_is_maxwell(alpha, sigma, r):
    assert cdf_ou(alpha, sigma, r) == pytest.approx(chi2_cdf(3, 2 * alpha * r * r / sigma ** 2), abs=1e-13)


def test_piecewise_general_normalizes():
    model = SymmetricModel(PiecewiseLinear(((0, 0), (0.5, 1.0), (2, 1.0), (3, 2.5))), 0.8)
    dist = GeneralRadial(model)
    assert dist.cdf(dist.r_cut) == pytest.approx(1.0, abs=1e-12)


def test_non_normalizable_rejected():
    model = SymmetricModel(Custom(lambda r: np.zeros_like(np.asarray(r, float)), 1.0), 1.0)
    with pytest.raises(NonNormalizableError):
        GeneralRadial(model)


# -- generic distribution invariants -----------------------------------------


DISTS = [
    ClosedFormOU(1.0, 1.0),
    ClosedFormOC(1.0, 1.0, 1.0),
    ClosedFormOC(0.5, 0.5, 1.0),
    GeneralRadial(SymmetricModel(PiecewiseLinear(((0, 0.2), (1, 1.0))), 1.0)),
    Chi2Scaled(0.7),
    QuadraticFormSeries([1.095, 0.75, 0.495]),
    QuadraticFormSeries([1.0, 0.1, 0.01]),
    PartialSymmetry(0.5, 0.125),
    PartialSymmetry(0.125, 0.5),
    PartialSymmetry(0.3, 0.3),
]


@pytest.mark.parametrize("dist", DISTS, ids=lambda d: type(d).__name__)
def test_distribution_invariants(dist):
    # ten standard deviations of one coordinate: sqrt(E[R^2] / 3)
    second, _ = integrate.quad(lambda t: t * t * float(dist.pdf(t)), 0, np.inf, limit=200)
    r_large = 10 * math.sqrt(second / 3)
    grid = np.linspace(0, r_large, 1000)
    cdf = np.asarray(dist.cdf(grid))
    assert dist.cdf(0.0) == 0.0
    assert np.all(np.diff(cdf) >= -1e-15)
    assert cdf[-1] > 1 - 1e-6
    assert np.all(np.asarray(dist.pdf(grid)) >= 0)


@pytest.mark.parametrize("dist", DISTS[:2] + DISTS[4:9], ids=lambda d: type(d).__name__)
def test_pdf_integrates_to_cdf(dist):
    r = 1.3 * dist.scale
    val, _ = integrate.quad(lambda t: float(dist.pdf(t)), 0, r, epsabs=1e-13, epsrel=1e-11, limit=200)
    assert val == pytest.approx(float(dist.cdf(r)), abs=1e-9)


# -- quadratic-form series ---------------------------------------------------


def test_series_symmetric_degeneracy():
    s = QuadraticFormSeries([0.8, 0.8, 0.8])
    assert s.eta == pytest.approx(0.8)
    assert s.weights[0] == pytest.approx(1.0, rel=1e-15)
    assert np.all(s.weights[1:] == 0.0)
    r = np.linspace(0, 5, 51)
    np.testing.assert_allclose(s.cdf(r), chi2_cdf(3, r * r / 0.8), atol=1e-15)


def test_series_weights_and_diagnostics():
    val, diag = quadratic_form_cdf([1.095, 0.75, 0.495], 0.0)
    assert val == 0.0
    assert diag.tail_bound <= 1e-12
    assert diag.eta_rule == "harmonic"
    s = QuadraticFormSeries([1.095, 0.75, 0.495])
    assert np.sum(s.weights) == pytest.approx(1.0, abs=1e-12)


def test_series_against_bruteforce_mc():
    lam = np.array([1.095, 0.75, 0.495])
    rng = np.random.default_rng(2024)
    w = rng.standard_normal((1_000_000, 3))
    r = np.sqrt(w ** 2 @ lam)
    val, _ = quadratic_form_cdf(lam, 1.5)
    assert val == pytest.approx(np.mean(r <= 1.5), abs=0.003)
    assert ks_distance(r, QuadraticFormSeries(lam).cdf) < 0.005


def test_eta_fallback_rule():
    eta, rule = choose_eta([1.0, 1.0, 0.01])
    assert rule == "min-lambda" and eta == 0.01
    eta, rule = choose_eta([1.0, 0.8, 0.6])
    assert rule == "harmonic" and eta < 1.9 * 0.6


@pytest.mark.parametrize("ratio", [2, 10, 50, 100])
def test_series_converges_up_to_100_to_1(ratio):
    s = QuadraticFormSeries([1.0, 0.5, 1.0 / ratio], tol=1e-12)
    assert s.diagnostics.tail_bound <= 1e-12
    assert s.diagnostics.terms_used <= 10_000


def test_series_gives_up_with_term_cap():
    with pytest.raises(SeriesConvergenceError):
        QuadraticFormSeries([1.0, 1.0, 1e-4], max_terms=50)


def test_series_rejects_bad_eta():
    with pytest.raises(ValueError):
        QuadraticFormSeries([1.0, 1.0, 0.5], eta=1.2)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 3.0), st.floats(0.05, 3.0))
def test_series_matches_partial_symmetry(a, b):
    r = np.linspace(0, 4 * math.sqrt(max(a, b)), 41)
    series = QuadraticFormSeries([a, a, b]).cdf(r)
    closed = partial_symmetry_cdf(a, b, r)
    assert np.max(np.abs(series - closed)) < 1e-7


# -- partial symmetry ----------------------------------------------------------


@pytest.mark.parametrize("l1,l3", [(0.5, 0.125), (0.125, 0.5), (0.545, 0.0046), (1.0, 3.0), (2.0, 1.9)])
def test_partial_matches_quadrature(l1, l3):
    r = np.linspace(0, 6 * math.sqrt(max(l1, l3)), 60)
    assert np.max(np.abs(partial_symmetry_cdf(l1, l3, r) - partial_symmetry_cdf_quadrature(l1, l3, r))) < 1e-8
    assert partial_symmetry_cdf(l1, l3, 1.0) == pytest.approx(float(partial_symmetry_cdf_quadrature(l1, l3, 1.0)), abs=1e-8)


def test_partial_symmetric_limit():
    r = np.linspace(0, 4, 41)
    np.testing.assert_allclose(partial_symmetry_cdf(0.6, 0.6, r), chi2_cdf(3, r * r / 0.6), atol=1e-15)


def test_partial_branch_continuity():
    """Jump between the symmetric-band form and the erf / erfi forms at the band edge."""
    r = np.linspace(0.01, 5, 200)
    lam = 0.7
    for l1, l3 in ((lam * (1 + 1e-6), lam), (lam, lam * (1 + 1e-6))):
        band = PartialSymmetry(l1, l3, delta=1e-5)
        exact = PartialSymmetry(l1, l3, delta=0.0)
        assert band.branch == "symmetric" and exact.branch in ("erf", "erfi")
        assert np.max(np.abs(band.cdf(r) - exact.cdf(r))) < 1e-9
    # default band, either side of the switch
    for f in (1 + 0.999e-6, 1 + 1.001e-6):
        a = PartialSymmetry(lam * f, lam)
        b = PartialSymmetry(lam * (1 + 1e-6), lam, delta=0.0)
        assert np.max(np.abs(a.cdf(r) - b.cdf(r))) < 1e-9


@given(st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0, 20))
def test_erfi_branch_exponent_non_positive(l1, l3, r):
    """In the erfi branch the fused exponent b - a equals -r^2 / (2 lambda_z)."""
    if l3 <= l1:
        l1, l3 = l3, l1
    if l3 == l1:
        return
    a = r * r / (2 * l1)
    b = r * r * (l3 - l1) / (2 * l1 * l3)
    assert b - a == pytest.approx(-r * r / (2 * l3), abs=1e-12 * max(1.0, a))
    assert b - a <= 1e-12 * max(1.0, a)
    assert math.isfinite(erfi_scaled(a, min(a, b)))


def test_partial_pdf_closed_form():
    d = PartialSymmetry(0.5, 0.125)
    h = 1e-6
    for r in (0.3, 1.0, 2.2):
        fd = (d.cdf(r + h) - d.cdf(r - h)) / (2 * h)
        assert d.pdf(r) == pytest.approx(fd, rel=1e-6)


# -- selection and export -----------------------------------------------------


def test_distribution_for_selects_representation():
    assert isinstance(distribution_for(OU1), ClosedFormOU)
    assert isinstance(distribution_for(OC1), ClosedFormOC)
    assert isinstance(distribution_for(SymmetricModel(PiecewiseLinear(((0, 0), (1, 1))), 1.0)), GeneralRadial)
    fig4 = AsymmetricModel.from_arrays(1.0, (1.3, 1.0, 0.7), 1.0, 1.0)
    assert isinstance(distribution_for(fig4), QuadraticFormSeries)
    fig5 = AsymmetricModel.from_arrays(1.0, (1.0, 1.0, 0.5), 10.0, 1.0)
    d = distribution_for(fig5)
    assert isinstance(d, PartialSymmetry) and d.l1 > d.l3
    low_pair = distribution_for(Lambdas(0.2, 0.2, 0.9))
    assert isinstance(low_pair, PartialSymmetry) and (low_pair.l1, low_pair.l3) == (0.2, 0.9)
    assert isinstance(distribution_for(Lambdas(0.4, 0.4, 0.4)), Chi2Scaled)


def test_cdf_csv_format():
    text = cdf_csv(ClosedFormOU(1, 1), [0.0, 0.5, 1.0])
    lines = text.split("\n")
    assert lines[0] == "r,cdf" and lines[-1] == "" and len(lines) == 5
    assert float(lines[3].split(",")[1]) == cdf_ou(1, 1, 1.0)
