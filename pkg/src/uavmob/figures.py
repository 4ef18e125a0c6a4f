"""Reproduction runs for the four reference result figures (3 to 6).

Each figure is a set of curves; every curve is written as its own CSV with an
analytic column and an empirical column from a simulated ensemble.  Defaults
are the captioned parameters and can be overridden per key::

    run_figure(4, "out", overrides={"beta": (1.0, 10.0)})

Curve ``k`` of a figure simulates on random stream ``k`` so that adding or
removing curves does not change the others.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, replace

import numpy as np

from .connectivity import ConnectivitySpec, analytic_pconn, pconn_numeric
from .models import AsymmetricModel, OnOff, OU, SymmetricModel
from .sde import SimConfig, aux_generator, empirical_cdf, sample_steady_state
from .steady_state import distribution_for

__all__ = ["FIGURES", "FigureResult", "figure_defaults", "run_figure", "write_csv"]

FIGURES = (3, 4, 5, 6)

_DEFAULTS = {
    3: {
        "sigma": 1.0,
        "alpha": 1.0,
        "oc": ((1.0, 1.0), (0.5, 0.5)),
        "r_grid": (0.0, 5.0, 101),
    },
    4: {
        "alpha": 1.0,
        "s": 1.0,
        "sigma": (1.3, 1.0, 0.7),
        "beta": (1.0, 3.0, 10.0),
        "r_grid": (0.0, 5.0, 101),
    },
    5: {
        "alpha": 1.0,
        "s": 1.0,
        "sigma_xy": 1.0,
        "sigma_z": (0.5, 0.1),
        "beta": (1.0, 10.0),
        "r_grid": (0.0, 5.0, 101),
    },
    6: {
        "alpha": 1.0,
        "s": 1.0,
        "sigma": (1.0, 1.0, 0.01),
        "beta": 10.0,
        "gamma": (2.0, 3.0, 4.0),
        "snr_ratios": tuple(np.logspace(-3, 2, 26).tolist()),
    },
}


@dataclass
class FigureResult:
    figure: int
    curves: dict          # curve name -> CSV text
    paths: list           # files written (CSV, then any images)


def figure_defaults(fig: int) -> dict:
    if fig not in _DEFAULTS:
        raise ValueError(f"unknown figure {fig!r}; choose from {FIGURES}")
    return dict(_DEFAULTS[fig])


def _grid(spec):
    lo, hi, n = spec
    return np.linspace(float(lo), float(hi), int(n))


def _fmt(v):
    return f"{v:g}"


def _cdf_text(grid, analytic, empirical):
    buf = io.StringIO()
    buf.write("r,cdf_analytic,cdf_empirical\n")
    for row in zip(grid.tolist(), np.asarray(analytic, float).tolist(), np.asarray(empirical, float).tolist()):
        buf.write(",".join(map(repr, row)) + "\n")
    return buf.getvalue()


def _pconn_text(snr, analytic, empirical):
    buf = io.StringIO()
    buf.write("snr_ratio,pconn_analytic,pconn_empirical\n")
    for row in zip(snr, analytic, empirical):
        buf.write(",".join(map(repr, map(float, row))) + "\n")
    return buf.getvalue()


def _models(fig, p):
    if fig == 3:
        sigma = float(p["sigma"])
        out = [(f"ou_alpha{_fmt(p['alpha'])}", SymmetricModel(OU(float(p["alpha"])), sigma))]
        for c, m in p["oc"]:
            out.append((f"oc_c{_fmt(c)}_m{_fmt(m)}", SymmetricModel(OnOff(float(c), float(m)), sigma)))
        return out
    if fig == 4:
        return [
            (f"beta{_fmt(b)}", AsymmetricModel.from_arrays(p["alpha"], p["sigma"], b, p["s"]))
            for b in np.atleast_1d(p["beta"]).tolist()
        ]
    if fig == 5:
        out = []
        for sz in np.atleast_1d(p["sigma_z"]).tolist():
            for b in np.atleast_1d(p["beta"]).tolist():
                sig = (p["sigma_xy"], p["sigma_xy"], sz)
                out.append((f"sigmaz{_fmt(sz)}_beta{_fmt(b)}", AsymmetricModel.from_arrays(p["alpha"], sig, b, p["s"])))
        return out
    return [("pconn", AsymmetricModel.from_arrays(p["alpha"], p["sigma"], p["beta"], p["s"]))]


def run_figure(
    fig: int,
    out_dir=None,
    *,
    seed: int = 0,
    n_samples: int = 20_000,
    dt: float | None = 0.005,
    overrides: dict | None = None,
    plot: bool = False,
    prefix: str | None = None,
    sim: SimConfig | None = None,
) -> FigureResult:
    """Compute every curve of figure ``fig`` and write CSVs under ``out_dir``.

    With ``out_dir=None`` nothing is written and the CSV text is returned in
    ``FigureResult.curves``.  ``plot=True`` also renders a PNG per figure.
    """
    params = figure_defaults(fig)
    for key, val in (overrides or {}).items():
        if key not in params:
            raise ValueError(f"figure {fig} has no parameter {key!r}; known: {', '.join(params)}")
        params[key] = val
    base = sim if sim is not None else SimConfig(n_samples=n_samples, seed=seed, dt=dt)
    prefix = prefix or f"fig{fig}"
    curves = {}
    for k, (name, model) in enumerate(_models(fig, params)):
        cfg = replace(base, stream=k)
        ens = sample_steady_state(model, cfg)
        dist = distribution_for(model)
        if fig == 6:
            radii = ens.radial
            for gamma in np.atleast_1d(params["gamma"]).tolist():
                snr = [float(x) for x in params["snr_ratios"]]
                rng = aux_generator(cfg.seed, 1000 + int(round(gamma * 100)))
                fades = rng.exponential(1.0, size=radii.size)
                ana, emp = [], []
                for x in snr:
                    spec = ConnectivitySpec(gamma, x)
                    val = analytic_pconn(dist, spec)
                    ana.append(val if val is not None else pconn_numeric(dist, spec))
                    emp.append(float(np.mean(fades > x * radii ** gamma)))
                curves[f"gamma{_fmt(gamma)}"] = _pconn_text(snr, ana, emp)
        else:
            grid = _grid(params["r_grid"])
            curves[name] = _cdf_text(grid, dist.cdf(grid), empirical_cdf(ens, "r", grid))
    paths = []
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        for name, text in curves.items():
            path = os.path.join(out_dir, f"{prefix}_{name}.csv")
            write_csv(path, text)
            paths.append(path)
        if plot:
            from .plotting import plot_figure

            paths.append(plot_figure(fig, curves, os.path.join(out_dir, f"{prefix}.png")))
    return FigureResult(fig, curves, paths)


def write_csv(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
