"""Causal kernel families and their closed-form quantities.

Three families are supported: power-law ``a / (c + t)**gamma``, exponential
``alpha * beta * exp(-beta * t)``, and tabulated (piecewise linear between
sorted abscissae, zero outside the table).  All kernels are causal: they
evaluate to 0 for negative lags.  Tabulated values may be negative, which is
how inhibitory influences are expressed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class PowerLawKernel:
    """phi(t) = amplitude / (offset + t)**exponent for t >= 0.

    The integral over [0, inf) is finite iff exponent > 1, in which case it
    equals amplitude * offset**(1 - exponent) / (exponent - 1).
    """

    amplitude: float
    offset: float
    exponent: float

    def __post_init__(self):
        for name in ("amplitude", "offset", "exponent"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not self.offset > 0:
            raise ParameterError(f"power-law offset must be > 0, got {self.offset}")
        if not np.isfinite(self.amplitude) or not np.isfinite(self.exponent):
            raise ParameterError("power-law parameters must be finite")


@dataclass(frozen=True)
class ExponentialKernel:
    """phi(t) = branching * rate * exp(-rate * t) for t >= 0; integral = branching."""

    branching: float
    rate: float

    def __post_init__(self):
        for name in ("branching", "rate"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not self.rate > 0:
            raise ParameterError(f"exponential rate must be > 0, got {self.rate}")
        if not np.isfinite(self.branching):
            raise ParameterError("exponential branching must be finite")


@dataclass(frozen=True)
class TabulatedKernel:
    """Piecewise-linear kernel through (abscissae, values), zero outside.

    Abscissae must be strictly increasing with the first one >= 0.  Values may
    be negative (inhibitory kernels).
    """

    abscissae: tuple
    values: tuple

    def __post_init__(self):
        ab = np.asarray(self.abscissae, dtype=float)
        va = np.asarray(self.values, dtype=float)
        if ab.ndim != 1 or ab.size < 2:
            raise ParameterError("tabulated kernel needs at least two abscissae")
        if ab.size != va.size:
            raise ParameterError("abscissae and values must have equal length")
        if not np.all(np.diff(ab) > 0):
            raise ParameterError("abscissae must be strictly increasing")
        if ab[0] < 0:
            raise ParameterError("first abscissa must be >= 0")
        if not np.all(np.isfinite(va)):
            raise ParameterError("tabulated values must be finite")
        object.__setattr__(self, "abscissae", tuple(float(x) for x in ab))
        object.__setattr__(self, "values", tuple(float(v) for v in va))


KernelSpec = Union[PowerLawKernel, ExponentialKernel, TabulatedKernel]


def kernel_eval(spec: KernelSpec, t):
    """Evaluate a kernel at lag(s) ``t``.  Total function: 0 for t < 0."""
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    out = np.zeros_like(t)
    pos = t >= 0
    if isinstance(spec, PowerLawKernel):
        out[pos] = spec.amplitude / (spec.offset + t[pos]) ** spec.exponent
    elif isinstance(spec, ExponentialKernel):
        out[pos] = spec.branching * spec.rate * np.exp(-spec.rate * t[pos])
    elif isinstance(spec, TabulatedKernel):
        ab = np.asarray(spec.abscissae)
        va = np.asarray(spec.values)
        inside = pos & (t >= ab[0]) & (t <= ab[-1])
        out[inside] = np.interp(t[inside], ab, va)
    else:
        raise ParameterError(f"unknown kernel spec {type(spec).__name__}")
    return float(out[0]) if scalar else out


def kernel_l1_norm(spec: KernelSpec) -> float:
    """Signed integral of the kernel over [0, inf).

    Closed form for the power-law and exponential families, trapezoid over the
    table for tabulated kernels.  Raises for a power law with exponent <= 1,
    whose integral diverges.
    """
    if isinstance(spec, PowerLawKernel):
        if spec.exponent <= 1:
            raise ParameterError(
                f"power-law norm diverges for exponent {spec.exponent} <= 1"
            )
        g = spec.exponent
        return spec.amplitude * spec.offset ** (1 - g) / (g - 1)
    if isinstance(spec, ExponentialKernel):
        return spec.branching
    if isinstance(spec, TabulatedKernel):
        return float(np.trapezoid(np.asarray(spec.values), np.asarray(spec.abscissae)))
    raise ParameterError(f"unknown kernel spec {type(spec).__name__}")


def kernel_abs_norm(spec: KernelSpec) -> float:
    """Integral of |phi| over [0, inf); equals the L1 norm for nonnegative kernels."""
    if isinstance(spec, TabulatedKernel):
        va = np.asarray(spec.values)
        if np.any(va < 0):
            ab = np.asarray(spec.abscissae)
            xs, ys = _with_zero_crossings(ab, va)
            return float(np.trapezoid(np.abs(ys), xs))
        return kernel_l1_norm(spec)
    n = kernel_l1_norm(spec)
    return abs(n)


def _with_zero_crossings(ab, va):
    """Insert the exact zero crossings of a piecewise-linear table as nodes."""
    xs = [ab[0]]
    ys = [va[0]]
    for k in range(len(ab) - 1):
        x0, x1, y0, y1 = ab[k], ab[k + 1], va[k], va[k + 1]
        if y0 * y1 < 0:
            xc = x0 - y0 * (x1 - x0) / (y1 - y0)
            xs.append(xc)
            ys.append(0.0)
        xs.append(x1)
        ys.append(y1)
    return np.asarray(xs), np.asarray(ys)


def kernel_mass_beyond(spec: KernelSpec, lag: float) -> float:
    """Integral of |phi| over [lag, inf)."""
    if lag <= 0:
        return kernel_abs_norm(spec)
    if isinstance(spec, PowerLawKernel):
        if spec.exponent <= 1:
            raise ParameterError("tail mass diverges for exponent <= 1")
        g = spec.exponent
        return abs(spec.amplitude) * (spec.offset + lag) ** (1 - g) / (g - 1)
    if isinstance(spec, ExponentialKernel):
        return abs(spec.branching) * np.exp(-spec.rate * lag)
    if isinstance(spec, TabulatedKernel):
        ab, va = _with_zero_crossings(np.asarray(spec.abscissae), np.asarray(spec.values))
        if lag >= ab[-1]:
            return 0.0
        xs = np.concatenate([[max(lag, ab[0])], ab[ab > lag]])
        ys = np.interp(xs, ab, np.abs(va))
        return float(np.trapezoid(ys, xs))
    raise ParameterError(f"unknown kernel spec {type(spec).__name__}")


def kernel_support_horizon(spec: KernelSpec, rel_tol: float = 1e-4) -> float:
    """Lag beyond which the remaining |phi| mass is <= rel_tol of the total."""
    total = kernel_abs_norm(spec)
    if total == 0.0:
        return 0.0
    if isinstance(spec, PowerLawKernel):
        g = spec.exponent
        return spec.offset * (rel_tol ** (1 / (1 - g)) - 1)
    if isinstance(spec, ExponentialKernel):
        return np.log(1 / rel_tol) / spec.rate
    if isinstance(spec, TabulatedKernel):
        return float(spec.abscissae[-1])
    raise ParameterError(f"unknown kernel spec {type(spec).__name__}")


def kernel_upper_bound_after(spec: KernelSpec, lag):
    """Upper bound of max(phi, 0) on [lag, inf), vectorized over ``lag``.

    Used by the thinning simulator to build dominating intensities: the bound
    stays valid as the true lag only grows.
    """
    lag = np.maximum(np.asarray(lag, dtype=float), 0.0)
    if isinstance(spec, (PowerLawKernel, ExponentialKernel)):
        # monotone decreasing from t = 0
        return np.maximum(kernel_eval(spec, lag), 0.0)
    if isinstance(spec, TabulatedKernel):
        ab = np.asarray(spec.abscissae)
        va = np.maximum(np.asarray(spec.values), 0.0)
        # running maximum of the positive part from the right
        run = np.maximum.accumulate(va[::-1])[::-1]
        idx = np.searchsorted(ab, lag, side="left")
        out = np.zeros_like(lag)
        inside = idx < len(ab)
        out[inside] = run[idx[inside]]
        # a lag inside a segment may still see the local linear value
        seg = inside & (lag > ab[0])
        if np.any(seg):
            out[seg] = np.maximum(out[seg], np.interp(lag[seg], ab, np.maximum(va, 0.0)))
        before = lag < ab[0]
        if np.any(before):
            out[before] = run[0] if len(run) else 0.0
        return out
    raise ParameterError(f"unknown kernel spec {type(spec).__name__}")


def kernel_is_nonnegative(spec: KernelSpec) -> bool:
    if isinstance(spec, PowerLawKernel):
        return spec.amplitude >= 0
    if isinstance(spec, ExponentialKernel):
        return spec.branching >= 0
    if isinstance(spec, TabulatedKernel):
        return bool(np.all(np.asarray(spec.values) >= 0))
    raise ParameterError(f"unknown kernel spec {type(spec).__name__}")


def sample_offsets(spec: KernelSpec, rng: np.random.Generator, size: int):
    """Draw ``size`` offspring offsets from the density phi / ||phi||.

    Inverse-CDF sampling: analytic inverses for the power-law and exponential
    families, piecewise-quadratic inversion of the cumulative table for
    tabulated kernels.  Requires a pointwise nonnegative kernel.
    """
    if size == 0:
        return np.empty(0)
    if not kernel_is_nonnegative(spec):
        raise ParameterError("offspring sampling requires a nonnegative kernel")
    u = rng.random(size)
    if isinstance(spec, PowerLawKernel):
        if spec.exponent <= 1:
            raise ParameterError("offspring sampling requires exponent > 1")
        # F(t) = 1 - (c / (c + t))**(gamma - 1)
        return spec.offset * ((1 - u) ** (-1 / (spec.exponent - 1)) - 1)
    if isinstance(spec, ExponentialKernel):
        return -np.log1p(-u) / spec.rate
    if isinstance(spec, TabulatedKernel):
        return _sample_tabulated(spec, u)
    raise ParameterError(f"unknown kernel spec {type(spec).__name__}")


def _sample_tabulated(spec: TabulatedKernel, u):
    ab = np.asarray(spec.abscissae)
    va = np.asarray(spec.values, dtype=float)
    seg = 0.5 * (va[:-1] + va[1:]) * np.diff(ab)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if total <= 0:
        raise ParameterError("tabulated kernel has no positive mass to sample")
    target = u * total
    idx = np.clip(np.searchsorted(cum, target, side="right") - 1, 0, len(ab) - 2)
    x0 = ab[idx]
    y0 = va[idx]
    slope = (va[idx + 1] - y0) / (ab[idx + 1] - x0)
    rem = target - cum[idx]
    # solve y0*d + slope*d^2/2 = rem on the segment
    out = np.empty_like(target)
    lin = np.abs(slope) < 1e-300
    out[lin] = x0[lin] + rem[lin] / np.where(y0[lin] > 0, y0[lin], np.inf)
    q = ~lin
    disc = np.sqrt(np.maximum(y0[q] ** 2 + 2 * slope[q] * rem[q], 0.0))
    out[q] = x0[q] + (disc - y0[q]) / slope[q]
    return np.clip(out, ab[0], ab[-1])


def offset_cdf(spec: KernelSpec, t):
    """CDF of the normalized offspring-offset density at lag(s) ``t``."""
    total = kernel_l1_norm(spec)
    if total <= 0:
        raise ParameterError("offset CDF requires positive kernel mass")
    t = np.asarray(t, dtype=float)
    if isinstance(spec, PowerLawKernel):
        g = spec.exponent
        return np.where(t < 0, 0.0, 1 - (spec.offset / (spec.offset + np.maximum(t, 0))) ** (g - 1))
    if isinstance(spec, ExponentialKernel):
        return np.where(t < 0, 0.0, 1 - np.exp(-spec.rate * np.maximum(t, 0)))
    if isinstance(spec, TabulatedKernel):
        ab = np.asarray(spec.abscissae)
        va = np.asarray(spec.values)
        seg = 0.5 * (va[:-1] + va[1:]) * np.diff(ab)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        tc = np.clip(t, ab[0], ab[-1])
        idx = np.clip(np.searchsorted(ab, tc, side="right") - 1, 0, ab.size - 2)
        dx = tc - ab[idx]
        slope = (va[idx + 1] - va[idx]) / (ab[idx + 1] - ab[idx])
        # exact piecewise-quadratic cumulative of the linear density
        out = (cum[idx] + va[idx] * dx + 0.5 * slope * dx * dx) / total
        return np.where(t < ab[0], 0.0, np.where(t >= ab[-1], 1.0, out))
    raise ParameterError(f"unknown kernel spec {type(spec).__name__}")
