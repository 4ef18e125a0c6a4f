"""Mobility model types: radial control laws, symmetric and per-axis models.

A control law is the speed ``v(r) >= 0`` with which the on-board controller
pushes the vehicle back toward its target when it is a distance ``r`` away.
Its potential ``V(r) = int_0^r v`` fixes the steady-state radial density of
the symmetric model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

__all__ = [
    "ControlLaw",
    "OU",
    "OnOff",
    "PiecewiseLinear",
    "Custom",
    "SymmetricModel",
    "AxisParams",
    "AsymmetricModel",
    "GeneralAsymmetricModel",
    "Lambdas",
    "potential",
    "lambda_from_axis",
    "lyapunov_solve",
    "lambdas_from_model",
]


def _positive(name, value):
    value = float(value)
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be positive and finite, got {value!r}")
    return value


def _nonnegative(name, value):
    value = float(value)
    if not (math.isfinite(value) and value >= 0):
        raise ValueError(f"{name} must be non-negative and finite, got {value!r}")
    return value


class ControlLaw:
    """Base class for radial control laws.

    Subclasses implement ``velocity`` and ``potential`` for arrays of radii,
    and report ``breakpoints`` where ``v`` is not smooth (used to split
    quadrature intervals) and ``length_scale``, a typical radius of the
    resulting steady state for a unit perturbation.
    """

    breakpoints: tuple = ()

    def velocity(self, r):
        raise NotImplementedError

    def potential(self, r):
        raise NotImplementedError

    def tail_velocity(self):
        """Velocity as ``r -> inf`` (``inf`` when unbounded)."""
        raise NotImplementedError

    def length_scale(self, sigma):
        raise NotImplementedError


@dataclass(frozen=True)
class OU(ControlLaw):
    """Proportional control ``v(r) = alpha * r``."""

    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", _positive("alpha", self.alpha))

    def velocity(self, r):
        return self.alpha * np.asarray(r, dtype=float)

    def potential(self, r):
        r = np.asarray(r, dtype=float)
        return 0.5 * self.alpha * r * r

    def tail_velocity(self):
        return math.inf

    def length_scale(self, sigma):
        return sigma / math.sqrt(2.0 * self.alpha)

    def relaxation_time(self, sigma):
        return 1.0 / self.alpha


@dataclass(frozen=True)
class OnOff(ControlLaw):
    """On-off control: speed ``c`` when ``r > m``, no control inside ``m``."""

    c: float
    m: float

    def __post_init__(self):
        object.__setattr__(self, "c", _positive("c", self.c))
        object.__setattr__(self, "m", _nonnegative("m", self.m))

    @property
    def breakpoints(self):
        return (self.m,) if self.m > 0 else ()

    def velocity(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r > self.m, self.c, 0.0)

    def potential(self, r):
        r = np.asarray(r, dtype=float)
        return self.c * np.maximum(0.0, r - self.m)

    def tail_velocity(self):
        return self.c

    def length_scale(self, sigma):
        return self.m + sigma * sigma / (2.0 * self.c)

    def relaxation_time(self, sigma):
        # Slowest of: crossing the dead zone at speed c, diffusing across it,
        # and the drift/diffusion balance time of the exponential tail.
        return max(self.m / self.c, (self.m / sigma) ** 2, (sigma / self.c) ** 2)


@dataclass(frozen=True)
class PiecewiseLinear(ControlLaw):
    """Linear interpolation through ``(r, v)`` knots, constant beyond the last knot."""

    knots: tuple

    def __post_init__(self):
        knots = tuple((float(r), float(v)) for r, v in self.knots)
        if len(knots) < 2:
            raise ValueError("PiecewiseLinear needs at least two knots")
        rs = np.array([k[0] for k in knots])
        vs = np.array([k[1] for k in knots])
        if rs[0] != 0.0:
            raise ValueError("the first knot must sit at r = 0")
        if np.any(np.diff(rs) <= 0):
            raise ValueError("knot radii must be strictly increasing")
        if np.any(vs < 0) or not np.all(np.isfinite(vs)):
            raise ValueError("knot velocities must be finite and non-negative")
        object.__setattr__(self, "knots", knots)
        seg = np.diff(rs) * (vs[:-1] + vs[1:]) / 2.0
        object.__setattr__(self, "_rs", rs)
        object.__setattr__(self, "_vs", vs)
        object.__setattr__(self, "_cum", np.concatenate([[0.0], np.cumsum(seg)]))

    @property
    def breakpoints(self):
        return tuple(self._rs[1:])

    def velocity(self, r):
        r = np.asarray(r, dtype=float)
        return np.interp(r, self._rs, self._vs)

    def potential(self, r):
        r = np.asarray(r, dtype=float)
        rs, vs, cum = self._rs, self._vs, self._cum
        idx = np.clip(np.searchsorted(rs, r, side="right") - 1, 0, len(rs) - 1)
        r0 = rs[idx]
        v0 = vs[idx]
        last = idx == len(rs) - 1
        nxt = np.minimum(idx + 1, len(rs) - 1)
        slope = np.where(last, 0.0, (vs[nxt] - v0) / np.where(last, 1.0, rs[nxt] - r0))
        d = r - r0
        return cum[idx] + v0 * d + 0.5 * slope * d * d

    def tail_velocity(self):
        return float(self._vs[-1])

    def length_scale(self, sigma):
        # First radius where the accumulated potential reaches sigma**2.
        target = sigma * sigma
        if self._cum[-1] >= target:
            return float(np.interp(target, self._cum, self._rs))
        vt = self.tail_velocity()
        if vt <= 0:
            return float(self._rs[-1])
        return float(self._rs[-1] + (target - self._cum[-1]) / vt)

    def relaxation_time(self, sigma):
        ell = self.length_scale(sigma)
        vmean = max(float(self.potential(ell)) / ell, 1e-300)
        return max(ell / vmean, (ell / sigma) ** 2)


@dataclass(frozen=True)
class Custom(ControlLaw):
    """User-supplied ``v(r)`` on ``[0, r_max]``, held constant beyond ``r_max``.

    ``v`` must accept numpy arrays.  The constant tail keeps the steady state
    integrable whenever ``v(r_max) > 0``.
    """

    v: Callable
    r_max: float
    rel_tol: float = 1e-12

    def __post_init__(self):
        object.__setattr__(self, "r_max", _positive("r_max", self.r_max))
        probe = np.linspace(0.0, self.r_max, 257)
        vals = np.asarray(self.v(probe), dtype=float)
        if vals.shape != probe.shape:
            raise ValueError("custom v(r) must be vectorized over numpy arrays")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ValueError("custom v(r) must be finite and non-negative on [0, r_max]")
        object.__setattr__(self, "_vmax", float(vals[-1]))

    def velocity(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= self.r_max, np.asarray(self.v(np.minimum(r, self.r_max)), float), self._vmax)

    def _potential_scalar(self, r):
        head = min(r, self.r_max)
        val, _ = integrate.quad(
            lambda t: float(self.v(np.asarray(t))), 0.0, head, epsabs=0.0, epsrel=self.rel_tol, limit=200
        )
        if r > self.r_max:
            val += self._vmax * (r - self.r_max)
        return val

    def potential(self, r):
        r = np.asarray(r, dtype=float)
        out = np.array([self._potential_scalar(float(x)) for x in r.ravel()]).reshape(r.shape)
        return float(out) if out.ndim == 0 else out

    def tail_velocity(self):
        return self._vmax

    def length_scale(self, sigma):
        target = sigma * sigma
        grid = np.linspace(0.0, self.r_max, 65)
        pots = self.potential(grid)
        if pots[-1] >= target:
            return float(np.interp(target, pots, grid))
        if self._vmax <= 0:
            return self.r_max
        return float(self.r_max + (target - pots[-1]) / self._vmax)

    def relaxation_time(self, sigma):
        ell = self.length_scale(sigma)
        vmean = max(float(self.potential(ell)) / ell, 1e-300)
        return max(ell / vmean, (ell / sigma) ** 2)


def potential(control: ControlLaw, r):
    """``V(r) = int_0^r v(tau) dtau`` for any control law; ``r >= 0``."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ValueError("potential needs r >= 0")
    out = control.potential(r_arr)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class SymmetricModel:
    """Same radial control on all three axes plus isotropic Brownian perturbation."""

    control: ControlLaw
    sigma: float

    def __post_init__(self):
        if not isinstance(self.control, ControlLaw):
            raise TypeError("control must be a ControlLaw")
        object.__setattr__(self, "sigma", _positive("sigma", self.sigma))

    def relaxation_time(self):
        return self.control.relaxation_time(self.sigma)

    def default_dt(self):
        dt = 1e-3 * self.relaxation_time()
        if isinstance(self.control, OnOff) and self.control.m > 0:
            dt = min(dt, 0.01 * self.control.m / self.control.c)
        return dt


@dataclass(frozen=True)
class AxisParams:
    """One axis of the imperfect-positioning OU model.

    ``alpha`` control gain, ``sigma`` perturbation, ``beta`` mean reversion of
    the positioning error and ``s`` its diffusion (``s = 0``: perfect
    positioning on this axis).
    """

    alpha: float
    sigma: float
    beta: float
    s: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", _positive("alpha", self.alpha))
        object.__setattr__(self, "sigma", _positive("sigma", self.sigma))
        object.__setattr__(self, "beta", _positive("beta", self.beta))
        object.__setattr__(self, "s", _nonnegative("s", self.s))


@dataclass(frozen=True)
class AsymmetricModel:
    """Per-axis OU control acting on errored coordinates."""

    axes: tuple

    def __post_init__(self):
        axes = tuple(self.axes)
        if len(axes) != 3 or not all(isinstance(a, AxisParams) for a in axes):
            raise ValueError("AsymmetricModel needs exactly three AxisParams")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def from_arrays(cls, alpha, sigma, beta, s):
        cols = [np.broadcast_to(np.asarray(v, dtype=float), (3,)) for v in (alpha, sigma, beta, s)]
        return cls(tuple(AxisParams(*map(float, vals)) for vals in zip(*cols)))

    def relaxation_time(self):
        return max(max(1.0 / a.alpha, 1.0 / a.beta) for a in self.axes)

    def default_dt(self):
        return 1e-3 * min(min(1.0 / a.alpha, 1.0 / a.beta) for a in self.axes)


@dataclass(frozen=True)
class GeneralAsymmetricModel:
    """Arbitrary per-axis radial control laws driven by errored coordinates.

    Only simulated: no closed-form steady state exists for this family.
    """

    controls: tuple
    sigmas: tuple
    axes: tuple = field(default=None)

    def __post_init__(self):
        controls = tuple(self.controls)
        sigmas = tuple(_positive("sigma", s) for s in self.sigmas)
        if len(controls) != 3 or len(sigmas) != 3:
            raise ValueError("need three controls and three sigmas")
        axes = self.axes
        if axes is None:
            axes = tuple(AxisParams(1.0, sg, 1.0, 0.0) for sg in sigmas)
        axes = tuple(axes)
        if len(axes) != 3:
            raise ValueError("need three AxisParams for the error processes")
        object.__setattr__(self, "controls", controls)
        object.__setattr__(self, "sigmas", sigmas)
        object.__setattr__(self, "axes", axes)

    def relaxation_time(self):
        ctl = max(c.relaxation_time(sg) for c, sg in zip(self.controls, self.sigmas))
        err = max(1.0 / a.beta for a in self.axes if a.s > 0) if any(a.s > 0 for a in self.axes) else 0.0
        return max(ctl, err)

    def default_dt(self):
        dts = [SymmetricModel(c, sg).default_dt() for c, sg in zip(self.controls, self.sigmas)]
        dts += [1e-3 / a.beta for a in self.axes if a.s > 0]
        return min(dts)


@dataclass(frozen=True)
class Lambdas:
    """Steady-state per-axis position variances."""

    lambda1: float
    lambda2: float
    lambda3: float

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3"):
            object.__setattr__(self, name, _positive(name, getattr(self, name)))

    def as_array(self):
        return np.array([self.lambda1, self.lambda2, self.lambda3])

    def __iter__(self):
        return iter((self.lambda1, self.lambda2, self.lambda3))


def lambda_from_axis(axis: AxisParams) -> float:
    """Steady-state variance of one coordinate under OU control with positioning error."""
    a, sg, b, s = axis.alpha, axis.sigma, axis.beta, axis.s
    return sg * sg / (2.0 * a) + (a / (a + b)) * s * s / (2.0 * b)


def lyapunov_solve(axis: AxisParams) -> np.ndarray:
    """Stationary covariance of ``(X, eps)`` from ``A S + S A^T = B B^T``.

    ``A = [[alpha, alpha], [0, beta]]`` and ``B = diag(sigma, s)``.  The three
    unknowns ``(S11, S12, S22)`` are solved as a linear system.
    """
    a, sg, b, s = axis.alpha, axis.sigma, axis.beta, axis.s
    # rows: (1,1), (1,2), (2,2) entries of A S + S A^T
    m = np.array([
        [2.0 * a, 2.0 * a, 0.0],
        [0.0, a + b, a],
        [0.0, 0.0, 2.0 * b],
    ])
    rhs = np.array([sg * sg, 0.0, s * s])
    if np.linalg.cond(m) > 1e14:
        raise ValueError("Lyapunov system is singular for these axis parameters")
    s11, s12, s22 = np.linalg.solve(m, rhs)
    return np.array([[s11, s12], [s12, s22]])


def lambdas_from_model(model: AsymmetricModel) -> Lambdas:
    return Lambdas(*(lambda_from_axis(a) for a in model.axes))


def as_control_sequence(controls: Sequence[ControlLaw] | ControlLaw):
    if isinstance(controls, ControlLaw):
        return (controls,) * 3
    return tuple(controls)
