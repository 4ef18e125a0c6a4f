"""Experiment configuration: a sectioned ``key = value`` text format.

Example::

    [model]
    type = asymmetric-ou        # symmetric | asymmetric-ou | partial-symmetry
    alpha = 1
    sigma = 1.3, 1, 0.7         # scalar or one value per axis (x, y, z)
    beta = 1; 3; 10             # ';' separates alternatives -> one model each
    s = 1

    [sim]
    n_samples = 100000
    seed = 0
    dt = 0.005

    [analysis]
    r_grid = 0, 5, 101          # start, stop, count
    snr_ratios = logspace(-3, 2, 26)
    gammas = 2, 3, 4

    [output]
    dir = out
    prefix = fig4

Symmetric models take ``control = ou | onoff | piecewise`` plus ``alpha``;
``c`` and ``m``; or ``knots = r0:v0, r1:v1, ...`` respectively, and a
scalar ``sigma``.  The full key list with defaults is in the README.
"""

from __future__ import annotations

import configparser
import itertools
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .models import AsymmetricModel, OnOff, OU, PiecewiseLinear, SymmetricModel, lambda_from_axis
from .sde import SimConfig

__all__ = [
    "ConfigError",
    "ModelEntry",
    "AnalysisConfig",
    "OutputConfig",
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "MODEL_TYPES",
]

MODEL_TYPES = ("symmetric", "asymmetric-ou", "partial-symmetry")
SECTIONS = ("model", "sim", "analysis", "output")

_MODEL_KEYS = {
    "symmetric": {"type", "control", "alpha", "c", "m", "knots", "sigma", "label"},
    "asymmetric-ou": {"type", "alpha", "sigma", "beta", "s", "label"},
    "partial-symmetry": {"type", "alpha", "sigma", "beta", "s", "label"},
}
_SIM_KEYS = {"n_samples", "seed", "dt", "burn_in", "sample_interval", "samples_per_path", "block_size"}
_ANALYSIS_KEYS = {"r_grid", "snr_ratios", "gammas", "tol", "ks_tol"}
_OUTPUT_KEYS = {"dir", "prefix"}


class ConfigError(ValueError):
    """Malformed or invalid configuration; the message names the line or field."""


@dataclass(frozen=True)
class ModelEntry:
    label: str
    model: object


@dataclass(frozen=True)
class AnalysisConfig:
    r_grid: tuple = tuple(np.linspace(0.0, 5.0, 101).tolist())
    snr_ratios: tuple = tuple(np.logspace(-3, 2, 26).tolist())
    gammas: tuple = (2.0, 3.0, 4.0)
    tol: float = 1e-12
    ks_tol: float | None = None


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"
    prefix: str = "run"


@dataclass(frozen=True)
class ExperimentConfig:
    model_type: str
    models: tuple
    sim: SimConfig = field(default_factory=SimConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    output: OutputConfig = field(default_factory=OutputConfig)


def _line_of(text, section, key):
    current = None
    for n, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        m = re.match(r"\[(.+)\]", stripped)
        if m:
            current = m.group(1).strip().lower()
            continue
        if current == section and re.match(rf"{re.escape(key)}\s*[=:]", stripped, re.IGNORECASE):
            return n
    return None


class _Reader:
    def __init__(self, text, parser):
        self.text = text
        self.parser = parser

    def where(self, section, key):
        line = _line_of(self.text, section, key)
        return f"[{section}] {key}" + (f" (line {line})" if line else "")

    def fail(self, section, key, msg):
        raise ConfigError(f"{self.where(section, key)}: {msg}")

    def get(self, section, key, default=None):
        if not self.parser.has_section(section) or not self.parser.has_option(section, key):
            return default
        return self.parser.get(section, key).strip()

    def number(self, section, key, default=None, kind=float):
        raw = self.get(section, key)
        if raw is None or raw == "":
            return default
        try:
            return kind(float(raw)) if kind is int else kind(raw)
        except ValueError:
            self.fail(section, key, f"expected a number, got {raw!r}")

    def floats(self, section, key, raw=None):
        raw = self.get(section, key) if raw is None else raw
        try:
            return [float(tok) for tok in raw.split(",") if tok.strip()]
        except ValueError:
            self.fail(section, key, f"expected comma-separated numbers, got {raw!r}")


def _per_axis(reader, key, raw):
    vals = reader.floats("model", key, raw)
    if len(vals) == 1:
        return vals * 3
    if len(vals) != 3:
        reader.fail("model", key, "give one value or three (x, y, z)")
    return vals


def _alternatives(reader, key, default=None):
    raw = reader.get("model", key)
    if raw is None:
        if default is None:
            reader.fail("model", key, "missing required parameter")
        return [default]
    return [alt.strip() for alt in raw.split(";") if alt.strip()]


def _fmt(v):
    return f"{v:g}"


def _build_symmetric(reader):
    control = (reader.get("model", "control") or "ou").lower()
    sig_alts = _alternatives(reader, "sigma", "1")
    entries = []
    if control == "ou":
        grids = {"alpha": _alternatives(reader, "alpha")}
    elif control == "onoff":
        grids = {"c": _alternatives(reader, "c"), "m": _alternatives(reader, "m")}
    elif control == "piecewise":
        grids = {"knots": [reader.get("model", "knots") or reader.fail("model", "knots", "missing required parameter")]}
    else:
        reader.fail("model", "control", f"unknown control {control!r}; use ou, onoff or piecewise")
    names = list(grids)
    for combo in itertools.product(*(grids[n] for n in names), sig_alts):
        params = dict(zip(names, combo[:-1]))
        sigma = reader.floats("model", "sigma", combo[-1])
        if len(sigma) != 1:
            reader.fail("model", "sigma", "symmetric models take a scalar sigma")
        sigma = sigma[0]
        try:
            if control == "ou":
                alpha = reader.floats("model", "alpha", params["alpha"])[0]
                law = OU(alpha)
                label = f"ou_alpha{_fmt(alpha)}"
            elif control == "onoff":
                c = reader.floats("model", "c", params["c"])[0]
                m = reader.floats("model", "m", params["m"])[0]
                law = OnOff(c, m)
                label = f"oc_c{_fmt(c)}_m{_fmt(m)}"
            else:
                knots = []
                for tok in params["knots"].split(","):
                    try:
                        r, v = tok.split(":")
                        knots.append((float(r), float(v)))
                    except ValueError:
                        reader.fail("model", "knots", f"bad knot {tok.strip()!r}; use r:v")
                law = PiecewiseLinear(tuple(knots))
                label = "piecewise"
            model = SymmetricModel(law, sigma)
        except ValueError as exc:
            key = _param_from_message(str(exc), ("alpha", "c", "m", "sigma", "knots"))
            reader.fail("model", key, str(exc))
        if len(sig_alts) > 1:
            label += f"_sigma{_fmt(sigma)}"
        entries.append(ModelEntry(label, model))
    return entries


def _param_from_message(msg, keys):
    for key in keys:
        if msg.startswith(key + " ") or f" {key} " in f" {msg} ":
            return key
    return keys[-1]


def _build_asymmetric(reader, partial):
    keys = ("alpha", "sigma", "beta", "s")
    alts = {k: _alternatives(reader, k, "0" if k == "s" else None) for k in keys}
    swept = [k for k in keys if len(alts[k]) > 1]
    entries = []
    for combo in itertools.product(*(alts[k] for k in keys)):
        vals = {k: _per_axis(reader, k, raw) for k, raw in zip(keys, combo)}
        try:
            model = AsymmetricModel.from_arrays(vals["alpha"], vals["sigma"], vals["beta"], vals["s"])
        except ValueError as exc:
            reader.fail("model", _param_from_message(str(exc), keys), str(exc))
        if partial:
            l1, l2 = (lambda_from_axis(a) for a in model.axes[:2])
            if abs(l1 - l2) > 1e-12 * max(l1, l2):
                reader.fail("model", "sigma", "partial-symmetry needs equal x and y variances")
        parts = []
        for k, raw in zip(keys, combo):
            if k in swept:
                v = vals[k]
                tag = _fmt(v[0]) if len(set(v)) == 1 else "-".join(map(_fmt, v))
                parts.append(f"{k}{tag}")
        label = "_".join(parts) or ("partial" if partial else "asym")
        entries.append(ModelEntry(label, model))
    return entries


_LOGSPACE = re.compile(r"logspace\(\s*([^,]+),\s*([^,]+),\s*([^)]+)\)")


def _analysis(reader):
    a = AnalysisConfig()
    kw = {}
    raw = reader.get("analysis", "r_grid")
    if raw:
        vals = reader.floats("analysis", "r_grid", raw)
        if len(vals) == 3 and float(vals[2]).is_integer() and vals[2] >= 2 and vals[1] > vals[0]:
            grid = np.linspace(vals[0], vals[1], int(vals[2]))
        else:
            grid = np.asarray(vals)
        if grid.size < 2 or np.any(np.diff(grid) <= 0) or grid[0] < 0:
            reader.fail("analysis", "r_grid", "need >= 2 strictly increasing non-negative points")
        kw["r_grid"] = tuple(grid.tolist())
    raw = reader.get("analysis", "snr_ratios")
    if raw:
        m = _LOGSPACE.fullmatch(raw.replace(" ", "")) or _LOGSPACE.fullmatch(raw)
        if m:
            try:
                lo, hi, n = float(m.group(1)), float(m.group(2)), int(m.group(3))
            except ValueError:
                reader.fail("analysis", "snr_ratios", f"bad logspace {raw!r}")
            vals = np.logspace(lo, hi, n)
        else:
            vals = np.asarray(reader.floats("analysis", "snr_ratios", raw))
        if vals.size < 1 or np.any(vals <= 0):
            reader.fail("analysis", "snr_ratios", "threshold ratios must be positive")
        kw["snr_ratios"] = tuple(vals.tolist())
    raw = reader.get("analysis", "gammas")
    if raw:
        vals = reader.floats("analysis", "gammas", raw)
        if not vals or any(g < 2 for g in vals):
            reader.fail("analysis", "gammas", "path-loss exponents must be >= 2")
        kw["gammas"] = tuple(vals)
    tol = reader.number("analysis", "tol")
    if tol is not None:
        if not 0 < tol < 1e-3:
            reader.fail("analysis", "tol", "must lie in (0, 1e-3)")
        kw["tol"] = tol
    ks = reader.number("analysis", "ks_tol")
    if ks is not None:
        if not 0 < ks < 1:
            reader.fail("analysis", "ks_tol", "must lie in (0, 1)")
        kw["ks_tol"] = ks
    return AnalysisConfig(**{**a.__dict__, **kw})


def _sim(reader):
    kw = {}
    for key, kind in (
        ("n_samples", int), ("seed", int), ("samples_per_path", int), ("block_size", int),
        ("dt", float), ("burn_in", float), ("sample_interval", float),
    ):
        val = reader.number("sim", key, kind=kind)
        if val is not None:
            kw[key] = val
    try:
        return SimConfig(**kw)
    except ValueError as exc:
        reader.fail("sim", _param_from_message(str(exc), tuple(kw) or ("n_samples",)), str(exc))


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a configuration document, filling defaults."""
    if not text or not text.strip():
        raise ConfigError("empty configuration")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";;"), interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"parse error: {exc}") from None
    reader = _Reader(text, parser)
    for section in parser.sections():
        if section.lower() not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]; expected one of {', '.join(SECTIONS)}")
    if not parser.has_section("model"):
        raise ConfigError("missing [model] section")
    mtype = (reader.get("model", "type") or "symmetric").lower()
    if mtype not in MODEL_TYPES:
        reader.fail("model", "type", f"unknown model type {mtype!r}; use one of {', '.join(MODEL_TYPES)}")
    allowed = {"model": _MODEL_KEYS[mtype], "sim": _SIM_KEYS, "analysis": _ANALYSIS_KEYS, "output": _OUTPUT_KEYS}
    for section in parser.sections():
        for key in parser.options(section):
            if key not in allowed[section]:
                reader.fail(section, key, "unknown key")
    if mtype == "symmetric":
        models = _build_symmetric(reader)
    else:
        models = _build_asymmetric(reader, partial=mtype == "partial-symmetry")
    label = reader.get("model", "label")
    if label and len(models) == 1:
        models = [ModelEntry(label, models[0].model)]
    output = OutputConfig(dir=reader.get("output", "dir", "out"), prefix=reader.get("output", "prefix", "run"))
    return ExperimentConfig(mtype, tuple(models), _sim(reader), _analysis(reader), output)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
