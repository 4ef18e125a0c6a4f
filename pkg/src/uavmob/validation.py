"""Cross-validation matrix: every analytic result against an independent check.

Two groups of records are produced.  The reference group runs at fixed
parameters and always covers every closed form in the package; the model
group runs on the models of the supplied configuration.  Tolerances:

==========================================  ==========================
comparison                                  tolerance
==========================================  ==========================
radial closed form vs quadrature            1e-10 (max abs)
lambda formula vs Lyapunov solve            1e-12 (abs)
series vs partial-symmetry closed form      1e-7
partial symmetry vs quadrature              1e-8
series vs brute-force quadratic form        KS <= max(0.005, c(n))
connectivity series, gamma = 2              1e-6
connectivity series, gamma = 4              1e-5
connectivity partial symmetry, gamma = 2    1e-8
connectivity on-off, gamma = 2              1e-6
connectivity Monte Carlo                    |z| <= 3 standard errors
SDE ensemble vs analytic CDF                KS <= max(0.01, c(n))
==========================================  ==========================

``c(n)`` is the KS critical value at level 0.001.  A failed comparison is
recorded, not raised.
"""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .config import ExperimentConfig
from .connectivity import (
    ConnectivitySpec,
    pconn_numeric,
    pconn_oc_gamma2,
    pconn_partial_gamma2,
    pconn_series_gamma2,
    pconn_series_gamma4,
)
from .models import (
    AsymmetricModel,
    AxisParams,
    OnOff,
    OU,
    SymmetricModel,
    lambda_from_axis,
    lambdas_from_model,
    lyapunov_solve,
)
from .sde import aux_generator, sample_steady_state
from .stats import ks_critical, ks_distance, max_abs_diff
from .steady_state import (
    Chi2Scaled,
    ClosedFormOC,
    ClosedFormOU,
    GeneralRadial,
    PartialSymmetry,
    QuadraticFormSeries,
    distribution_for,
    partial_symmetry_cdf_quadrature,
)

__all__ = ["Record", "ValidationReport", "validate", "TOLERANCES"]

TOLERANCES = {
    "radial_closed_form": 1e-10,
    "lyapunov": 1e-12,
    "series_vs_partial": 1e-7,
    "partial_vs_quadrature": 1e-8,
    "series_mc_ks": 0.005,
    "pconn_series_gamma2": 1e-6,
    "pconn_series_gamma4": 1e-5,
    "pconn_partial_gamma2": 1e-8,
    "pconn_oc_gamma2": 1e-6,
    "pconn_mc_z": 3.0,
    "sde_ks": 0.01,
}

REFERENCE_MC = 200_000
PCONN_MC = 200_000


@dataclass(frozen=True)
class Record:
    name: str
    metric: str
    value: float
    tolerance: float
    n: int

    @property
    def passed(self):
        return bool(np.isfinite(self.value) and self.value <= self.tolerance)


@dataclass
class ValidationReport:
    records: list = field(default_factory=list)

    def add(self, name, metric, value, tolerance, n):
        self.records.append(Record(name, metric, float(value), float(tolerance), int(n)))

    @property
    def passed(self):
        return all(r.passed for r in self.records)

    @property
    def n_failed(self):
        return sum(not r.passed for r in self.records)

    def to_csv(self):
        buf = io.StringIO()
        buf.write("name,metric,value,tolerance,passed,n\n")
        for r in self.records:
            buf.write(f"{r.name},{r.metric},{r.value!r},{r.tolerance!r},{'pass' if r.passed else 'FAIL'},{r.n}\n")
        return buf.getvalue()

    def to_text(self):
        width = max((len(r.name) for r in self.records), default=10)
        lines = []
        for r in self.records:
            lines.append(
                f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.metric:<8} "
                f"{r.value:.3e} <= {r.tolerance:.1e}  (n={r.n})"
            )
        lines.append("")
        lines.append(f"{len(self.records) - self.n_failed}/{len(self.records)} passed")
        return "\n".join(lines) + "\n"

    def write(self, out_dir, prefix="report"):
        os.makedirs(out_dir, exist_ok=True)
        paths = []
        for ext, text in (("txt", self.to_text()), ("csv", self.to_csv())):
            path = os.path.join(out_dir, f"{prefix}.{ext}")
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            paths.append(path)
        return paths


# -- exact samplers used as Monte Carlo oracles -----------------------------


def _exact_radii(dist, n, rng):
    """Independent draws of ``R`` from its steady-state law, without the SDE."""
    if isinstance(dist, (ClosedFormOU, Chi2Scaled)):
        lam = np.full(3, dist.lam)
    elif isinstance(dist, QuadraticFormSeries):
        lam = dist.lambdas
    elif isinstance(dist, PartialSymmetry):
        lam = np.array([dist.l1, dist.l1, dist.l3])
    else:
        # inverse transform on a fine grid of the analytic CDF
        hi = dist.scale
        while dist.cdf(hi) < 1 - 1e-13:
            hi *= 2.0
        grid = np.linspace(0.0, hi, 20001)
        cdf = np.maximum.accumulate(np.asarray(dist.cdf(grid)))
        keep = np.concatenate([[True], np.diff(cdf) > 0])
        return np.interp(rng.random(n), cdf[keep], grid[keep])
    w = rng.standard_normal((n, 3))
    return np.sqrt(w ** 2 @ lam)


def _grid(cfg):
    return np.asarray(cfg.analysis.r_grid, dtype=float)


# -- reference group ---------------------------------------------------------


def _reference(report, seed, tol):
    r = np.linspace(0.0, 6.0, 121)
    for name, dist, model in (
        ("closed_form_ou", ClosedFormOU(1.0, 1.0), SymmetricModel(OU(1.0), 1.0)),
        ("closed_form_oc", ClosedFormOC(1.0, 1.0, 1.0), SymmetricModel(OnOff(1.0, 1.0), 1.0)),
    ):
        err = max_abs_diff(dist.cdf(r), GeneralRadial(model).cdf(r))
        report.add(f"ref/{name}_vs_quadrature", "max_abs", err, TOLERANCES["radial_closed_form"], r.size)

    grid_rng = aux_generator(seed, 7001)
    worst = 0.0
    for _ in range(100):
        ax = AxisParams(*np.exp(grid_rng.uniform(-2, 2, 4)))
        worst = max(worst, abs(lambda_from_axis(ax) - lyapunov_solve(ax)[0, 0]))
    report.add("ref/lambda_vs_lyapunov", "abs", worst, TOLERANCES["lyapunov"], 100)

    lam = lambdas_from_model(AsymmetricModel.from_arrays(1.0, (1.3, 1.0, 0.7), 1.0, 1.0))
    series = QuadraticFormSeries(lam, tol=tol)
    w = aux_generator(seed, 7002).standard_normal((REFERENCE_MC, 3))
    ks = ks_distance(np.sqrt(w ** 2 @ series.lambdas), series.cdf)
    report.add("ref/series_vs_bruteforce", "ks", ks, max(TOLERANCES["series_mc_ks"], ks_critical(REFERENCE_MC)), REFERENCE_MC)
    report.add("ref/series_tail_bound", "bound", series.diagnostics.tail_bound, tol, series.diagnostics.terms_used)

    rr = np.linspace(0.0, 5.0, 51)
    for l1, l3, branch in ((0.5, 0.125, "erf"), (0.3, 0.9, "erfi")):
        err = max_abs_diff(PartialSymmetry(l1, l3).cdf(rr), partial_symmetry_cdf_quadrature(l1, l3, rr))
        report.add(f"ref/partial_{branch}_vs_quadrature", "max_abs", err, TOLERANCES["partial_vs_quadrature"], rr.size)
        err = max_abs_diff(QuadraticFormSeries([l1, l1, l3], tol=tol).cdf(rr), PartialSymmetry(l1, l3).cdf(rr))
        report.add(f"ref/series_vs_partial_{branch}", "max_abs", err, TOLERANCES["series_vs_partial"], rr.size)

    bs = np.logspace(-1, 1, 9)
    checks = (
        ("pconn_series_gamma2", 2, lambda s: pconn_series_gamma2(lam, s, tol), series),
        ("pconn_series_gamma4", 4, lambda s: pconn_series_gamma4(lam, s, tol), series),
        ("pconn_partial_gamma2", 2, lambda s: pconn_partial_gamma2(0.5, 0.125, s), PartialSymmetry(0.5, 0.125)),
        ("pconn_oc_gamma2", 2, lambda s: pconn_oc_gamma2(1.0, 1.0, 1.0, s), ClosedFormOC(1.0, 1.0, 1.0)),
    )
    for name, gamma, fn, dist in checks:
        err = max(abs(fn(ConnectivitySpec.from_B(gamma, b)) - pconn_numeric(dist, ConnectivitySpec.from_B(gamma, b))) for b in bs)
        report.add(f"ref/{name}_vs_quadrature", "max_abs", err, TOLERANCES[name], bs.size)


# -- model group -------------------------------------------------------------


def _analytic_pconn_checks(dist, spec, tol):
    """``(form name, value)`` for each closed form applicable to ``dist`` at ``spec``."""
    out = []
    g = spec.gamma
    if isinstance(dist, QuadraticFormSeries):
        if g == 2:
            out.append(("pconn_series_gamma2", pconn_series_gamma2(dist.lambdas, spec, tol)))
        if g == 4:
            out.append(("pconn_series_gamma4", pconn_series_gamma4(dist.lambdas, spec, tol)))
    elif isinstance(dist, PartialSymmetry):
        if g == 2:
            out.append(("pconn_partial_gamma2", pconn_partial_gamma2(dist.l1, dist.l3, spec)))
    elif isinstance(dist, ClosedFormOC) and g == 2:
        out.append(("pconn_oc_gamma2", pconn_oc_gamma2(dist.c, dist.m, dist.sigma, spec)))
    elif isinstance(dist, (ClosedFormOU, Chi2Scaled)):
        if g == 2:
            out.append(("pconn_series_gamma2", pconn_series_gamma2([dist.lam] * 3, spec, tol)))
        if g == 4:
            out.append(("pconn_series_gamma4", pconn_series_gamma4([dist.lam] * 3, spec, tol)))
    return out


def _model_records(report, label, model, cfg, index):
    tol = cfg.analysis.tol
    seed = cfg.sim.seed
    dist = distribution_for(model, tol=tol)
    grid = _grid(cfg)

    if isinstance(model, SymmetricModel) and isinstance(dist, (ClosedFormOU, ClosedFormOC)):
        err = max_abs_diff(dist.cdf(grid), GeneralRadial(model).cdf(grid))
        report.add(f"{label}/closed_form_vs_quadrature", "max_abs", err, TOLERANCES["radial_closed_form"], grid.size)
    if isinstance(model, AsymmetricModel):
        err = max(abs(lambda_from_axis(a) - lyapunov_solve(a)[0, 0]) for a in model.axes)
        report.add(f"{label}/lambda_vs_lyapunov", "abs", err, TOLERANCES["lyapunov"], 3)
    if isinstance(dist, QuadraticFormSeries):
        report.add(f"{label}/series_tail_bound", "bound", dist.diagnostics.tail_bound, tol, dist.diagnostics.terms_used)
        w = aux_generator(seed, 100 + index).standard_normal((REFERENCE_MC, 3))
        ks = ks_distance(np.sqrt(w ** 2 @ dist.lambdas), dist.cdf)
        report.add(f"{label}/series_vs_bruteforce", "ks", ks, max(TOLERANCES["series_mc_ks"], ks_critical(REFERENCE_MC)), REFERENCE_MC)
    if isinstance(dist, PartialSymmetry) and dist.branch != "symmetric":
        err = max_abs_diff(dist.cdf(grid), partial_symmetry_cdf_quadrature(dist.l1, dist.l3, grid))
        report.add(f"{label}/partial_vs_quadrature", "max_abs", err, TOLERANCES["partial_vs_quadrature"], grid.size)
        series = QuadraticFormSeries([dist.l1, dist.l1, dist.l3], tol=tol)
        err = max_abs_diff(series.cdf(grid), dist.cdf(grid))
        report.add(f"{label}/series_vs_partial", "max_abs", err, TOLERANCES["series_vs_partial"], grid.size)

    # connectivity: closed forms against quadrature, quadrature against sampling
    radii = _exact_radii(dist, PCONN_MC, aux_generator(seed, 200 + index))
    fades = aux_generator(seed, 300 + index).exponential(1.0, PCONN_MC)
    for gamma in cfg.analysis.gammas:
        worst = {}
        zmax = 0.0
        for x in cfg.analysis.snr_ratios:
            spec = ConnectivitySpec(gamma, x)
            ref = pconn_numeric(dist, spec)
            for form, val in _analytic_pconn_checks(dist, spec, tol):
                worst[form] = max(worst.get(form, 0.0), abs(val - ref))
            p = float(np.mean(fades > x * radii ** gamma))
            se = math.sqrt(max(p * (1 - p), 1.0 / PCONN_MC) / PCONN_MC)
            zmax = max(zmax, abs(p - ref) / se)
        n = len(cfg.analysis.snr_ratios)
        for form, err in worst.items():
            report.add(f"{label}/{form}_vs_quadrature[gamma={gamma:g}]", "max_abs", err, TOLERANCES[form], n)
        report.add(f"{label}/pconn_mc[gamma={gamma:g}]", "max_z", zmax, TOLERANCES["pconn_mc_z"], PCONN_MC)

    # dynamics: simulated ensemble against the analytic law
    sim = replace(cfg.sim, stream=index)
    try:
        ens = sample_steady_state(model, sim)
        ks = ks_distance(ens.radial, dist.cdf)
    except FloatingPointError:
        ks = float("inf")
    ks_tol = cfg.analysis.ks_tol or max(TOLERANCES["sde_ks"], ks_critical(sim.n_samples))
    report.add(f"{label}/sde_vs_analytic", "ks", ks, ks_tol, sim.n_samples)


def validate(config: ExperimentConfig, reference: bool = True) -> ValidationReport:
    """Run the reference group (unless disabled) and the per-model group."""
    if config is None or not getattr(config, "models", None):
        raise ValueError("validate needs a configuration with at least one model")
    report = ValidationReport()
    if reference:
        _reference(report, config.sim.seed, config.analysis.tol)
    for index, entry in enumerate(config.models):
        _model_records(report, entry.label, entry.model, config, index)
    return report
