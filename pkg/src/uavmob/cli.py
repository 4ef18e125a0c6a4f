"""Command-line entry point: ``uavmob <command> [options]``."""

from __future__ import annotations

import argparse
import ast
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .connectivity import ConnectivitySpec, analytic_pconn, pconn_monte_carlo, pconn_numeric, sweep_csv
from .figures import FIGURES, run_figure, write_csv
from .ingest import IngestError, ecdf_csv, ingest_trajectory
from .sde import aux_generator, empirical_cdf, sample_steady_state
from .steady_state import distribution_for

DEFAULT_CONFIG = """
[model]
type = symmetric
control = ou
alpha = 1
sigma = 1
"""


def _common(p):
    p.add_argument("--config", help="experiment configuration file")
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--tol", type=float, help="series / quadrature tolerance")
    p.add_argument("--samples", type=int, help="ensemble size")
    p.add_argument("--dt", type=float, help="Euler-Maruyama step")


def _build_parser():
    ap = argparse.ArgumentParser(prog="uavmob", description="Hover-position models for UAVs: simulation, steady-state laws, link connectivity.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample steady-state ensembles and write t,x,y,z,e1,e2,e3 rows")
    _common(p)

    p = sub.add_parser("cdf", help="analytic distance CDF, with the empirical CDF when --samples is given")
    _common(p)

    p = sub.add_parser("pconn", help="connectivity sweep over threshold ratios and path-loss exponents")
    _common(p)
    p.add_argument("--no-mc", action="store_true", help="skip the simulated column")

    p = sub.add_parser("figure", help="reproduce one of the result figures")
    p.add_argument("figure", type=int, choices=FIGURES)
    _common(p)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a figure parameter")
    p.add_argument("--plot", action="store_true", help="also render a PNG")

    p = sub.add_parser("validate", help="run the cross-validation matrix; exit status = failed records")
    _common(p)
    p.add_argument("--no-reference", action="store_true", help="skip the fixed reference checks")

    p = sub.add_parser("ingest", help="empirical CDFs of a measured x,y,z trajectory")
    p.add_argument("file")
    p.add_argument("--target", default="0,0,0", help="target position x,y,z")
    p.add_argument("--out", help="output directory")
    p.add_argument("--grid", default="-3,3,121", help="start,stop,count of the CDF grid")
    return ap


def _config(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = parse_config(DEFAULT_CONFIG)
    sim = cfg.sim
    for flag, key in (("seed", "seed"), ("samples", "n_samples"), ("dt", "dt")):
        val = getattr(args, flag, None)
        if val is not None:
            sim = replace(sim, **{key: val})
    analysis = cfg.analysis
    if getattr(args, "tol", None) is not None:
        if not 0 < args.tol < 1e-3:
            raise ConfigError("--tol must lie in (0, 1e-3)")
        analysis = replace(analysis, tol=args.tol)
    return replace(cfg, sim=sim, analysis=analysis)


def _out_dir(args, cfg):
    out = args.out or cfg.output.dir
    os.makedirs(out, exist_ok=True)
    return out


def _path(out, cfg, *parts):
    return os.path.join(out, "_".join((cfg.output.prefix,) + parts) + ".csv")


def cmd_simulate(args):
    cfg = _config(args)
    out = _out_dir(args, cfg)
    for k, entry in enumerate(cfg.models):
        ens = sample_steady_state(entry.model, replace(cfg.sim, stream=k))
        path = _path(out, cfg, entry.label, "samples")
        ens.to_csv(path)
        print(path)
    return 0


def cmd_cdf(args):
    cfg = _config(args)
    out = _out_dir(args, cfg)
    grid = np.asarray(cfg.analysis.r_grid)
    for k, entry in enumerate(cfg.models):
        dist = distribution_for(entry.model, tol=cfg.analysis.tol)
        cols = [grid, np.asarray(dist.cdf(grid), dtype=float)]
        header = "r,cdf_analytic"
        if args.samples:
            ens = sample_steady_state(entry.model, replace(cfg.sim, stream=k))
            cols.append(empirical_cdf(ens, "r", grid))
            header += ",cdf_empirical"
        text = header + "\n" + "".join(",".join(map(repr, row)) + "\n" for row in zip(*(c.tolist() for c in cols)))
        path = _path(out, cfg, entry.label, "cdf")
        write_csv(path, text)
        print(path)
    return 0


def cmd_pconn(args):
    cfg = _config(args)
    out = _out_dir(args, cfg)
    for k, entry in enumerate(cfg.models):
        dist = distribution_for(entry.model, tol=cfg.analysis.tol)
        radii = None
        if not args.no_mc:
            radii = sample_steady_state(entry.model, replace(cfg.sim, stream=k)).radial
        rows = []
        for gamma in cfg.analysis.gammas:
            rng = aux_generator(cfg.sim.seed, 1000 + k)
            for x in cfg.analysis.snr_ratios:
                spec = ConnectivitySpec(gamma, x)
                mc = None if radii is None else pconn_monte_carlo(radii, spec, rng)[0]
                rows.append((x, gamma, analytic_pconn(dist, spec), pconn_numeric(dist, spec), mc))
        path = _path(out, cfg, entry.label, "pconn")
        write_csv(path, sweep_csv(rows))
        print(path)
    return 0


def _parse_override(item):
    if "=" not in item:
        raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
    key, raw = item.split("=", 1)
    try:
        val = ast.literal_eval(raw.strip())
    except (ValueError, SyntaxError):
        raise ConfigError(f"--set {key}: cannot parse value {raw!r}") from None
    return key.strip(), val


def cmd_figure(args):
    overrides = dict(_parse_override(s) for s in args.set)
    kw = {}
    if args.samples is not None:
        kw["n_samples"] = args.samples
    if args.dt is not None:
        kw["dt"] = args.dt
    res = run_figure(
        args.figure,
        args.out or "out",
        seed=args.seed or 0,
        overrides=overrides,
        plot=args.plot,
        **kw,
    )
    for path in res.paths:
        print(path)
    return 0


def cmd_validate(args):
    cfg = _config(args)
    out = _out_dir(args, cfg)
    from .validation import validate

    report = validate(cfg, reference=not args.no_reference)
    report.write(out, prefix=f"{cfg.output.prefix}_report")
    sys.stdout.write(report.to_text())
    return min(report.n_failed, 255)


def cmd_ingest(args):
    try:
        target = [float(t) for t in args.target.split(",")]
        lo, hi, n = (float(t) for t in args.grid.split(","))
    except ValueError:
        raise ConfigError("--target needs x,y,z and --grid start,stop,count") from None
    traj = ingest_trajectory(args.file, target)
    grid = np.linspace(lo, hi, int(n))
    out = args.out or "out"
    os.makedirs(out, exist_ok=True)
    stem = os.path.splitext(os.path.basename(args.file))[0]
    path = os.path.join(out, f"{stem}_ecdf.csv")
    write_csv(path, ecdf_csv(traj, grid))
    pos = traj.positions
    print(f"rows: {pos.shape[0]}")
    print("variance x,y,z: " + ", ".join(f"{v:.6g}" for v in pos.var(axis=0)))
    print(f"mean distance: {traj.radial.mean():.6g}")
    print(f"corr(xy distance, z): {traj.xy_z_correlation():.4f}")
    print(path)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "cdf": cmd_cdf,
    "pconn": cmd_pconn,
    "figure": cmd_figure,
    "validate": cmd_validate,
    "ingest": cmd_ingest,
}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, IngestError, ValueError, OSError) as exc:
        print(f"uavmob: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
