"""Euler-Maruyama simulation of the mobility SDEs and steady-state ensembles.

State vectors are laid out as ``(x, y, z, e1, e2, e3)``: true position
followed by the three positioning errors.  The single-step functions are pure
numpy and take their Gaussian draws explicitly; ensembles are produced by a
compiled kernel that consumes the same draws in the same order, so the two
paths agree bit for bit.

Random streams are attached to fixed-size blocks of trajectories: block ``b``
uses a Philox generator keyed by ``SeedSequence(seed, spawn_key=(stream, b))``.
Because the block size does not depend on the number of worker threads, an
ensemble is a pure function of ``(model, config)``.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence, Union

import numba as nb
import numpy as np

from .models import (
    AsymmetricModel,
    AxisParams,
    ControlLaw,
    Custom,
    GeneralAsymmetricModel,
    OnOff,
    OU,
    PiecewiseLinear,
    SymmetricModel,
)

__all__ = [
    "R_EPSILON",
    "State3D",
    "SimConfig",
    "Ensemble",
    "step_symmetric",
    "step_error_process",
    "step_asymmetric_general",
    "sample_steady_state",
    "simulate_to_horizon",
    "empirical_cdf",
    "block_generator",
    "aux_generator",
    "advance",
]

R_EPSILON = 1e-12
CSV_HEADER = ("t", "x", "y", "z", "e1", "e2", "e3")

Model = Union[SymmetricModel, AsymmetricModel, GeneralAsymmetricModel]


@dataclass(frozen=True)
class State3D:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    e1: float = 0.0
    e2: float = 0.0
    e3: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "z", "e1", "e2", "e3"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"state component {name} is not finite")

    def as_array(self):
        return np.array([self.x, self.y, self.z, self.e1, self.e2, self.e3])

    @classmethod
    def from_array(cls, arr):
        return cls(*map(float, np.asarray(arr, dtype=float)[:6]))

    @property
    def r(self):
        return math.sqrt(self.x ** 2 + self.y ** 2 + self.z ** 2)

    @property
    def r_hat(self):
        return math.sqrt((self.x + self.e1) ** 2 + (self.y + self.e2) ** 2 + (self.z + self.e3) ** 2)


def _as_state_array(state):
    if isinstance(state, State3D):
        return state.as_array(), True
    arr = np.array(state, dtype=float)
    if arr.shape[-1] == 3:
        arr = np.concatenate([arr, np.zeros_like(arr)], axis=-1)
    if arr.shape[-1] != 6:
        raise ValueError("state arrays must have 3 or 6 trailing components")
    return arr, False


def _radial_drift(control: ControlLaw, coords):
    """``-v(R) / R * coords`` with the drift switched off inside ``R_EPSILON``."""
    if isinstance(control, OU):
        return -control.alpha * coords
    r = np.sqrt(np.sum(coords * coords, axis=-1, keepdims=True))
    safe = np.where(r < R_EPSILON, 1.0, r)
    factor = np.where(r < R_EPSILON, 0.0, np.asarray(control.velocity(r), dtype=float) / safe)
    return -factor * coords


def step_symmetric(model: SymmetricModel, state, dt: float, noise):
    """One Euler-Maruyama step of the symmetric model.

    ``noise`` holds three standard normal draws per state (trailing axis).
    Accepts a ``State3D`` or an array with trailing size 3 or 6 and returns
    the same kind of object; error components are left untouched.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    arr, wrap = _as_state_array(state)
    noise = np.asarray(noise, dtype=float)
    pos = arr[..., :3]
    new = arr.copy()
    new[..., :3] = pos + _radial_drift(model.control, pos) * dt + model.sigma * math.sqrt(dt) * noise
    return State3D.from_array(new) if wrap else new


def step_error_process(axis: AxisParams, e, dt: float, noise):
    """Euler-Maruyama step of ``de = -beta e dt + s dB``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    e = np.asarray(e, dtype=float)
    out = e - axis.beta * e * dt + axis.s * math.sqrt(dt) * np.asarray(noise, dtype=float)
    return float(out) if out.ndim == 0 else out


def step_asymmetric_general(controls, sigmas, axes, state, dt: float, noise):
    """Joint step of position and positioning error (six draws per state).

    The control on axis ``i`` is ``-v_i(R_hat) * X_hat_i / R_hat`` where the
    hatted quantities use the errored coordinates.  For OU controls this is
    exactly ``-alpha_i * X_hat_i``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if isinstance(controls, ControlLaw):
        controls = (controls,) * 3
    arr, wrap = _as_state_array(state)
    noise = np.asarray(noise, dtype=float)
    pos = arr[..., :3]
    err = arr[..., 3:]
    hat = pos + err
    r_hat = np.sqrt(np.sum(hat * hat, axis=-1))
    sq = math.sqrt(dt)
    new = arr.copy()
    for i, (ctl, sg, ax) in enumerate(zip(controls, sigmas, axes)):
        if isinstance(ctl, OU):
            drift = -ctl.alpha * hat[..., i]
        else:
            safe = np.where(r_hat < R_EPSILON, 1.0, r_hat)
            v = np.asarray(ctl.velocity(r_hat), dtype=float)
            drift = np.where(r_hat < R_EPSILON, 0.0, -v / safe * hat[..., i])
        new[..., i] = pos[..., i] + drift * dt + sg * sq * noise[..., i]
        new[..., 3 + i] = err[..., i] - ax.beta * err[..., i] * dt + ax.s * sq * noise[..., 3 + i]
    return State3D.from_array(new) if wrap else new


# --------------------------------------------------------------------------
# compiled kernel

_KIND_OU, _KIND_ONOFF, _KIND_PWL = 0, 1, 2


@nb.njit(cache=True, inline="always")
def _velocity(kind, p0, p1, kr, kv, nk, r):
    if kind == _KIND_ONOFF:
        return p0 if r > p1 else 0.0
    if kind == _KIND_OU:
        return p0 * r
    if r >= kr[nk - 1]:
        return kv[nk - 1]
    j = 0
    while kr[j + 1] <= r:
        j += 1
    w = (r - kr[j]) / (kr[j + 1] - kr[j])
    return kv[j] + w * (kv[j + 1] - kv[j])


@nb.njit(cache=True, nogil=True)
def _advance(rng, state, kinds, p0, p1, kr, kv, nk, sigmas, betas, ss, dt, n_steps, with_errors):
    sq = math.sqrt(dt)
    n = state.shape[0]
    drift = np.empty(3)
    for p in range(n):
        x0, x1, x2 = state[p, 0], state[p, 1], state[p, 2]
        e0, e1, e2 = state[p, 3], state[p, 4], state[p, 5]
        for _ in range(n_steps):
            h0 = x0 + e0
            h1 = x1 + e1
            h2 = x2 + e2
            rh = math.sqrt(h0 * h0 + h1 * h1 + h2 * h2)
            for i in range(3):
                hi = h0 if i == 0 else (h1 if i == 1 else h2)
                if kinds[i] == _KIND_OU:
                    drift[i] = -p0[i] * hi
                elif rh < 1e-12:
                    drift[i] = 0.0
                else:
                    drift[i] = -_velocity(kinds[i], p0[i], p1[i], kr[i], kv[i], nk[i], rh) / rh * hi
            n0 = rng.standard_normal()
            n1 = rng.standard_normal()
            n2 = rng.standard_normal()
            nx0 = x0 + drift[0] * dt + sigmas[0] * sq * n0
            nx1 = x1 + drift[1] * dt + sigmas[1] * sq * n1
            nx2 = x2 + drift[2] * dt + sigmas[2] * sq * n2
            if with_errors:
                m0 = rng.standard_normal()
                m1 = rng.standard_normal()
                m2 = rng.standard_normal()
                e0 = e0 - betas[0] * e0 * dt + ss[0] * sq * m0
                e1 = e1 - betas[1] * e1 * dt + ss[1] * sq * m1
                e2 = e2 - betas[2] * e2 * dt + ss[2] * sq * m2
            x0, x1, x2 = nx0, nx1, nx2
        state[p, 0], state[p, 1], state[p, 2] = x0, x1, x2
        state[p, 3], state[p, 4], state[p, 5] = e0, e1, e2


@dataclass(frozen=True)
class _Plan:
    controls: tuple
    sigmas: tuple
    axes: tuple
    with_errors: bool
    compiled: bool


def _plan(model: Model) -> _Plan:
    if isinstance(model, SymmetricModel):
        controls = (model.control,) * 3
        sigmas = (model.sigma,) * 3
        axes = tuple(AxisParams(1.0, model.sigma, 1.0, 0.0) for _ in range(3))
    elif isinstance(model, AsymmetricModel):
        controls = tuple(OU(a.alpha) for a in model.axes)
        sigmas = tuple(a.sigma for a in model.axes)
        axes = model.axes
    elif isinstance(model, GeneralAsymmetricModel):
        controls, sigmas, axes = model.controls, model.sigmas, model.axes
    else:
        raise TypeError(f"unsupported model type {type(model).__name__}")
    with_errors = any(a.s > 0 for a in axes)
    compiled = not any(isinstance(c, Custom) for c in controls)
    return _Plan(controls, sigmas, axes, with_errors, compiled)


def _kernel_args(plan: _Plan):
    kmax = max([len(c.knots) for c in plan.controls if isinstance(c, PiecewiseLinear)] + [2])
    kinds = np.zeros(3, np.int64)
    p0 = np.zeros(3)
    p1 = np.zeros(3)
    kr = np.zeros((3, kmax))
    kv = np.zeros((3, kmax))
    nk = np.full(3, 2, np.int64)
    for i, c in enumerate(plan.controls):
        if isinstance(c, OU):
            kinds[i], p0[i] = _KIND_OU, c.alpha
        elif isinstance(c, OnOff):
            kinds[i], p0[i], p1[i] = _KIND_ONOFF, c.c, c.m
        elif isinstance(c, PiecewiseLinear):
            kinds[i] = _KIND_PWL
            nk[i] = len(c.knots)
            kr[i, : nk[i]] = [k[0] for k in c.knots]
            kv[i, : nk[i]] = [k[1] for k in c.knots]
        else:
            raise TypeError(f"control {type(c).__name__} has no compiled form")
    return (
        kinds, p0, p1, kr, kv, nk,
        np.array(plan.sigmas, float),
        np.array([a.beta for a in plan.axes], float),
        np.array([a.s for a in plan.axes], float),
    )


def _advance_numpy(plan, rng, state, dt, n_steps):
    d = 6 if plan.with_errors else 3
    for _ in range(n_steps):
        noise = rng.standard_normal((state.shape[0], d))
        if d == 3:
            noise = np.concatenate([noise, np.zeros_like(noise)], axis=1)
        state[:] = step_asymmetric_general(plan.controls, plan.sigmas, plan.axes, state, dt, noise)


def advance(model: Model, state: np.ndarray, dt: float, n_steps: int, rng: np.random.Generator):
    """Advance an ``(n, 6)`` state array in place by ``n_steps`` steps.

    Draws are consumed trajectory by trajectory: for each trajectory, for
    each step, three position draws followed (if any ``s > 0``) by three
    error draws.
    """
    plan = _plan(model)
    if plan.compiled:
        _advance(rng, state, *_kernel_args(plan), float(dt), int(n_steps), plan.with_errors)
    else:
        _advance_numpy(plan, rng, state, dt, n_steps)
    return state


@dataclass(frozen=True)
class SimConfig:
    """Ensemble-sampling settings.

    ``dt``, ``burn_in`` and ``sample_interval`` default (``None``) to
    model-derived values: ``dt`` from ``model.default_dt()``, ``burn_in`` to
    10 relaxation times and ``sample_interval`` to 2 relaxation times.  Each
    trajectory contributes ``samples_per_path`` samples; trajectories are
    grouped in blocks of ``block_size`` per random stream.
    """

    n_samples: int = 100_000
    seed: int = 0
    dt: float | None = None
    burn_in: float | None = None
    sample_interval: float | None = None
    samples_per_path: int = 20
    block_size: int = 2048
    stream: int = 0

    def __post_init__(self):
        if int(self.n_samples) < 1:
            raise ValueError("n_samples must be >= 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        for name in ("dt", "sample_interval"):
            val = getattr(self, name)
            if val is not None and not (math.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be positive")
        if self.burn_in is not None and not (math.isfinite(self.burn_in) and self.burn_in >= 0):
            raise ValueError("burn_in must be non-negative")
        if self.stream < 0:
            raise ValueError("stream must be non-negative")
        if self.samples_per_path < 1 or self.block_size < 1:
            raise ValueError("samples_per_path and block_size must be >= 1")

    def resolved(self, model: Model) -> "SimConfig":
        relax = model.relaxation_time()
        cfg = replace(
            self,
            dt=self.dt if self.dt is not None else model.default_dt(),
            burn_in=self.burn_in if self.burn_in is not None else 10.0 * relax,
            sample_interval=self.sample_interval if self.sample_interval is not None else 2.0 * relax,
        )
        if cfg.burn_in < 10.0 * relax * (1 - 1e-12):
            raise ValueError(
                f"burn_in={cfg.burn_in} is shorter than 10 relaxation times ({10 * relax:g})"
            )
        return cfg


@dataclass
class Ensemble:
    """Steady-state samples: ``samples`` is ``(n, 6)``, ``times`` the sample times."""

    samples: np.ndarray
    times: np.ndarray
    model: object = None
    config: SimConfig | None = None

    def __len__(self):
        return self.samples.shape[0]

    @property
    def positions(self):
        return self.samples[:, :3]

    @property
    def radial(self):
        return np.sqrt(np.sum(self.positions ** 2, axis=1))

    def quantity(self, name):
        if name in ("r", "radial"):
            return self.radial
        cols = {"x": 0, "y": 1, "z": 2, "e1": 3, "e2": 4, "e3": 5}
        if name not in cols:
            raise ValueError(f"unknown quantity {name!r}")
        return self.samples[:, cols[name]]

    def to_csv(self, path_or_buf=None):
        """Write ``t,x,y,z,e1,e2,e3`` rows with round-trip float formatting."""
        buf = io.StringIO()
        buf.write(",".join(CSV_HEADER) + "\n")
        rows = np.column_stack([self.times, self.samples]).tolist()
        buf.writelines(",".join(map(repr, row)) + "\n" for row in rows)
        text = buf.getvalue()
        if path_or_buf is None:
            return text
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        return None

    @classmethod
    def from_csv(cls, path):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(samples=data[:, 1:7], times=data[:, 0])


def block_generator(seed: int, block: int, stream: int = 0) -> np.random.Generator:
    """Independent counter-based stream for one block of trajectories."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(block)))
    return np.random.Generator(np.random.Philox(ss))


def aux_generator(seed: int, stream: int = 0) -> np.random.Generator:
    """Stream for auxiliary draws (fading, brute-force checks) tied to ``(seed, stream)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), 2 ** 32 - 1))
    return np.random.Generator(np.random.Philox(ss))


def _run_block(model, cfg, block, n_paths, per_path, burn_steps, interval_steps):
    rng = block_generator(cfg.seed, block, cfg.stream)
    state = np.zeros((n_paths, 6))
    advance(model, state, cfg.dt, burn_steps, rng)
    out = np.empty((per_path, n_paths, 6))
    for k in range(per_path):
        advance(model, state, cfg.dt, interval_steps, rng)
        if not np.all(np.isfinite(state)):
            raise FloatingPointError(
                f"non-finite state in block {block}; dt={cfg.dt} is too large for this model"
            )
        out[k] = state
    return out.reshape(-1, 6)


def sample_steady_state(model: Model, config: SimConfig = SimConfig(), workers: int = 1) -> Ensemble:
    """Draw ``config.n_samples`` steady-state samples of ``model``.

    Every trajectory starts at the target with zero positioning error, runs
    for ``burn_in`` and then records ``samples_per_path`` states spaced by
    ``sample_interval``.  The result does not depend on ``workers``.
    """
    cfg = config.resolved(model)
    burn_steps = int(round(cfg.burn_in / cfg.dt))
    interval_steps = max(1, int(round(cfg.sample_interval / cfg.dt)))
    per_path = cfg.samples_per_path
    total_paths = -(-cfg.n_samples // per_path)
    blocks = []
    start = 0
    while start < total_paths:
        blocks.append(min(cfg.block_size, total_paths - start))
        start += cfg.block_size

    def job(b):
        return _run_block(model, cfg, b, blocks[b], per_path, burn_steps, interval_steps)

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, range(len(blocks))))
    else:
        parts = [job(b) for b in range(len(blocks))]

    times_one = cfg.burn_in + cfg.sample_interval * np.arange(1, per_path + 1)
    times = np.concatenate([np.repeat(times_one, n) for n in blocks])
    samples = np.concatenate(parts)[: cfg.n_samples]
    return Ensemble(samples=samples, times=times[: cfg.n_samples], model=model, config=cfg)


def simulate_to_horizon(model: Model, x0, horizon: float, dt: float, n_paths: int, seed: int = 0):
    """Transient simulation: states of ``n_paths`` trajectories at ``horizon``.

    No steady-state assumption (no burn-in check), so this also serves models
    without a steady state.
    """
    n_steps = max(1, int(round(horizon / dt)))
    state = np.tile(_as_state_array(x0)[0], (n_paths, 1)).astype(float)
    advance(model, state, dt, n_steps, block_generator(seed, 0))
    return state


def empirical_cdf(data, quantity: str = "r", grid: Sequence[float] = ()):
    """Right-continuous empirical CDF of ``quantity`` evaluated at ``grid``.

    ``data`` is an ``Ensemble`` or a 1-D array of samples.
    """
    values = data.quantity(quantity) if isinstance(data, Ensemble) else np.asarray(data, dtype=float)
    if values.size == 0:
        raise ValueError("empirical_cdf needs a non-empty sample")
    srt = np.sort(values)
    return np.searchsorted(srt, np.asarray(grid, dtype=float), side="right") / srt.size
