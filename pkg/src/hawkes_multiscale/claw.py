"""Empirical conditional laws on a multiscale lag grid.

The conditional law g_ij(t) is the non-singular part of
E[dN_i at lag t | event of j at 0] minus the mean rate of i.  It is estimated
by pair counting on a grid that is uniform up to ``h_min`` and log-uniform
beyond, interpolated piecewise-linearly between bin midpoints, extended to
negative lags through the exact symmetry g_ij(-t) Lambda_j = g_ji(t) Lambda_i,
and integrated in closed form per segment for the downstream solver.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._io import read_json, write_json
from .errors import CoverageError, DataFormatError, ParameterError
from .events import EventStream

try:
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pure-numpy fallback keeps the package dependency-light
    _HAVE_NUMBA = False

CLAW_SCHEMA = "hawkes-claw/1"


@dataclass(frozen=True)
class MultiscaleGrid:
    h_min: float
    h_max: float
    h_delta: float
    points: np.ndarray = field(repr=False, compare=False)

    @property
    def midpoints(self) -> np.ndarray:
        p = self.points
        return 0.5 * (p[:-1] + p[1:])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.points)

    @property
    def end(self) -> float:
        return float(self.points[-1])


def build_multiscale_grid(h_min: float, h_max: float, h_delta: float) -> MultiscaleGrid:
    """Lag grid [0, h_min] in round(1/h_delta) uniform steps, then multiplicative
    steps of ratio exp(h_delta) until the endpoint reaches h_max.

    The realized endpoint is h_min * exp(n * h_delta) with
    n = ceil(log(h_max / h_min) / h_delta): at least h_max and within a factor
    exp(h_delta) of it.
    """
    if not (0 < h_min <= h_max):
        raise ParameterError(f"need 0 < h_min <= h_max, got {h_min}, {h_max}")
    if not (0 < h_delta < 1):
        raise ParameterError(f"need 0 < h_delta < 1, got {h_delta}")
    n_u = max(1, round(1 / h_delta))
    uniform = np.linspace(0.0, h_min, n_u + 1)
    if h_max > h_min:
        n_l = math.ceil(math.log(h_max / h_min) / h_delta)
        logpart = h_min * np.exp(h_delta * np.arange(1, n_l + 1))
    else:
        logpart = np.empty(0)
    pts = np.concatenate([uniform, logpart])
    pts.flags.writeable = False
    return MultiscaleGrid(h_min=float(h_min), h_max=float(h_max), h_delta=float(h_delta), points=pts)


def estimate_lambda(stream: EventStream) -> np.ndarray:
    """Mean rates n_i / T."""
    return stream.counts / stream.horizon


@dataclass(frozen=True)
class ConditionalLawMatrix:
    grid: MultiscaleGrid
    lam: np.ndarray
    ghat: np.ndarray          # (D, D, bins) at bin midpoints
    counts: np.ndarray        # raw pair counts per bin (edge-corrected)
    cond_counts: np.ndarray   # conditioning events available per bin
    horizon: float
    labels: tuple
    resolution: float = 0.0   # finest inter-event gap seen in the data
    # interpolation tables: node 0 carries the first bin value (constant
    # extension below the first midpoint), nodes 1.. are the midpoints
    _xs: np.ndarray = field(init=False, repr=False, compare=False)
    _vals: np.ndarray = field(init=False, repr=False, compare=False)
    _i0: np.ndarray = field(init=False, repr=False, compare=False)
    _i1: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ghat = np.asarray(self.ghat, dtype=float)
        d = ghat.shape[0]
        if ghat.shape[:2] != (d, d) or ghat.shape[2] != self.grid.midpoints.size:
            raise ParameterError("ghat must be (D, D, n_bins)")
        xs = np.concatenate([[0.0], self.grid.midpoints])
        vals = np.concatenate([ghat[:, :, :1], ghat], axis=2)
        dx = np.diff(xs)
        y0 = vals[:, :, :-1]
        y1 = vals[:, :, 1:]
        seg0 = 0.5 * (y0 + y1) * dx
        slope = (y1 - y0) / dx
        intercept = y0 - slope * xs[:-1]
        seg1 = intercept * (xs[1:] ** 2 - xs[:-1] ** 2) / 2 + slope * (
            xs[1:] ** 3 - xs[:-1] ** 3
        ) / 3
        zeros = np.zeros((d, d, 1))
        i0 = np.concatenate([zeros, np.cumsum(seg0, axis=2)], axis=2)
        i1 = np.concatenate([zeros, np.cumsum(seg1, axis=2)], axis=2)
        for name, arr in (("lam", np.asarray(self.lam, dtype=float)),
                          ("ghat", ghat),
                          ("counts", np.asarray(self.counts)),
                          ("cond_counts", np.asarray(self.cond_counts))):
            a = arr.copy()
            a.flags.writeable = False
            object.__setattr__(self, name, a)
        for name, arr in (("_xs", xs), ("_vals", vals), ("_i0", i0), ("_i1", i1)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def dimension(self) -> int:
        return self.ghat.shape[0]


def estimate_claw(stream: EventStream, grid: MultiscaleGrid) -> ConditionalLawMatrix:
    """Pair-counting estimator of the conditional-law matrix.

    For each ordered pair (i, j) and each lag bin (t_l, t_{l+1}], counts
    ordered event pairs whose lag falls in the bin, sweeping the sorted
    sequences with searchsorted (no quadratic pair enumeration).  Zero lags
    are excluded, which removes the self-pair Dirac for i = j.  Edge
    correction: conditioning events within t_{l+1} of the horizon are
    excluded from that bin and the normalization adjusted, which removes the
    O(lag/T) boundary bias.  The estimate at the bin midpoint is the pair
    rate minus the mean rate of component i.
    """
    d = stream.dimension
    for k in range(d):
        if stream.times[k].size == 0:
            raise DataFormatError(f"component {stream.labels[k]!r} has no events")
    if grid.end > stream.horizon:
        raise CoverageError(
            f"grid endpoint {grid.end:g} exceeds the data horizon {stream.horizon:g}"
        )
    lam = estimate_lambda(stream)
    edges = grid.points
    nbins = edges.size - 1
    t_hor = stream.horizon
    counts = np.zeros((d, d, nbins), dtype=np.int64)
    cond = np.zeros((d, d, nbins), dtype=np.int64)
    count_pairs = _pair_bin_counts_fast if _HAVE_NUMBA else _pair_bin_counts_numpy
    for j in range(d):
        tj = np.ascontiguousarray(stream.times[j])
        for i in range(d):
            ti = np.ascontiguousarray(stream.times[i])
            counts[i, j], cond[i, j] = count_pairs(ti, tj, np.asarray(edges), t_hor)
    widths = grid.widths
    with np.errstate(divide="ignore", invalid="ignore"):
        rate = counts / (widths[None, None, :] * cond)
    rate = np.where(cond > 0, rate, 0.0)
    ghat = rate - lam[:, None, None]
    resolution = min(
        (float(np.diff(a).min()) for a in stream.times if a.size > 1), default=0.0
    )
    return ConditionalLawMatrix(
        grid=grid,
        lam=lam,
        ghat=ghat,
        counts=counts,
        cond_counts=cond,
        horizon=stream.horizon,
        labels=stream.labels,
        resolution=resolution,
    )


def _pair_bin_counts_numpy(ti, tj_full, edges, horizon):
    """Lag-bin pair counts for one ordered component pair, searchsorted sweep."""
    nbins = edges.size - 1
    counts = np.zeros(nbins, dtype=np.int64)
    cond = np.zeros(nbins, dtype=np.int64)
    for m in range(nbins):
        e0, e1 = edges[m], edges[m + 1]
        jmax = int(np.searchsorted(tj_full, horizon - e1, side="right"))
        if jmax == 0:
            continue
        tj = tj_full[:jmax]
        hi = np.searchsorted(ti, tj + e1, side="right")
        lo = np.searchsorted(ti, tj + e0, side="right")
        counts[m] = int((hi - lo).sum())
        cond[m] = jmax
    return counts, cond


if _HAVE_NUMBA:

    @_njit(cache=True)
    def _pair_bin_counts_fast(ti, tj, edges, horizon):  # pragma: no cover
        # same counting semantics as the numpy path: lags in (e0, e1],
        # conditioning events restricted to tj <= horizon - e1
        nbins = edges.size - 1
        counts = np.zeros(nbins, dtype=np.int64)
        cond = np.zeros(nbins, dtype=np.int64)
        ni = ti.size
        for m in range(nbins):
            e0 = edges[m]
            e1 = edges[m + 1]
            jmax = np.searchsorted(tj, horizon - e1, side="right")
            cond[m] = jmax
            lo = 0
            hi = 0
            tot = 0
            for k in range(jmax):
                b0 = tj[k] + e0
                b1 = tj[k] + e1
                while lo < ni and ti[lo] <= b0:
                    lo += 1
                if hi < lo:
                    hi = lo
                while hi < ni and ti[hi] <= b1:
                    hi += 1
                tot += hi - lo
            counts[m] = tot
        return counts, cond


def claw_stderr(claw: ConditionalLawMatrix) -> np.ndarray:
    """Poisson-type error bars: sqrt(max(count, 1)) / (width * conditioning)."""
    widths = claw.grid.widths[None, None, :]
    denom = np.where(claw.cond_counts > 0, widths * claw.cond_counts, np.inf)
    return np.sqrt(np.maximum(claw.counts, 1)) / denom


def reliable_mask(claw: ConditionalLawMatrix) -> np.ndarray:
    """True for bins whose midpoint lag is at or above the data resolution."""
    return claw.grid.midpoints >= claw.resolution


def claw_eval(claw: ConditionalLawMatrix, i: int, j: int, t):
    """Interpolated conditional law, signed lags.

    Piecewise linear between bin midpoints, constant below the first midpoint,
    zero beyond the last one; negative lags resolve through the symmetry
    g_ij(-t) = (Lambda_i / Lambda_j) g_ji(t).
    """
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    out = np.empty_like(t)
    pos = t >= 0
    if np.any(pos):
        out[pos] = _eval_pos(claw, i, j, t[pos])
    if np.any(~pos):
        ratio = claw.lam[i] / claw.lam[j]
        out[~pos] = ratio * _eval_pos(claw, j, i, -t[~pos])
    return float(out[0]) if scalar else out


def _eval_pos(claw, i, j, t):
    xs = claw._xs
    vals = claw._vals[i, j]
    res = np.interp(t, xs, vals, left=vals[0], right=0.0)
    return np.where(t > xs[-1], 0.0, res)


def claw_integrals(claw: ConditionalLawMatrix, i: int, j: int, x):
    """(I0, I1) = (int_0^x g_ij(u) du, int_0^x u g_ij(u) du), signed x.

    Closed-form integrals of the piecewise-linear interpolant.  For x < 0 the
    symmetry extension gives I0_ij(x) = -r I0_ji(-x) and I1_ij(x) = r I1_ji(-x)
    with r = Lambda_i / Lambda_j.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    i0 = np.empty_like(x)
    i1 = np.empty_like(x)
    pos = x >= 0
    if np.any(pos):
        a, b = _integrals_pos(claw, i, j, x[pos])
        i0[pos] = a
        i1[pos] = b
    if np.any(~pos):
        r = claw.lam[i] / claw.lam[j]
        a, b = _integrals_pos(claw, j, i, -x[~pos])
        i0[~pos] = -r * a
        i1[~pos] = r * b
    if scalar:
        return float(i0[0]), float(i1[0])
    return i0, i1


def _integrals_pos(claw, i, j, x):
    xs = claw._xs
    vals = claw._vals[i, j]
    i0n = claw._i0[i, j]
    i1n = claw._i1[i, j]
    xc = np.minimum(x, xs[-1])
    idx = np.clip(np.searchsorted(xs, xc, side="right") - 1, 0, xs.size - 2)
    x0 = xs[idx]
    y0 = vals[idx]
    slope = (vals[idx + 1] - y0) / (xs[idx + 1] - x0)
    dx = xc - x0
    i0 = i0n[idx] + y0 * dx + 0.5 * slope * dx * dx
    intercept = y0 - slope * x0
    i1 = i1n[idx] + intercept * (xc * xc - x0 * x0) / 2 + slope * (xc**3 - x0**3) / 3
    return i0, i1


# --- serialization -----------------------------------------------------------

def claw_to_dict(claw: ConditionalLawMatrix) -> dict:
    return {
        "schema": CLAW_SCHEMA,
        "h_min": claw.grid.h_min,
        "h_max": claw.grid.h_max,
        "h_delta": claw.grid.h_delta,
        "horizon": claw.horizon,
        "labels": list(claw.labels),
        "lambda": [float(v) for v in claw.lam],
        "resolution": claw.resolution,
        "ghat": claw.ghat.tolist(),
        "counts": claw.counts.tolist(),
        "cond_counts": claw.cond_counts.tolist(),
    }


def claw_from_dict(doc: dict) -> ConditionalLawMatrix:
    if doc.get("schema") != CLAW_SCHEMA:
        raise DataFormatError(f"unsupported claw schema {doc.get('schema')!r}")
    grid = build_multiscale_grid(doc["h_min"], doc["h_max"], doc["h_delta"])
    return ConditionalLawMatrix(
        grid=grid,
        lam=np.asarray(doc["lambda"], dtype=float),
        ghat=np.asarray(doc["ghat"], dtype=float),
        counts=np.asarray(doc["counts"], dtype=np.int64),
        cond_counts=np.asarray(doc["cond_counts"], dtype=np.int64),
        horizon=float(doc["horizon"]),
        labels=tuple(doc["labels"]),
        resolution=float(doc.get("resolution", 0.0)),
    )


def write_claw(claw: ConditionalLawMatrix, path) -> None:
    write_json(path, claw_to_dict(claw))


def read_claw(path) -> ConditionalLawMatrix:
    return claw_from_dict(read_json(path))


def claw_from_function(grid: MultiscaleGrid, lam, funcs, horizon: float, labels=None) -> ConditionalLawMatrix:
    """Build a ConditionalLawMatrix from exact conditional-law functions.

    ``funcs[i][j]`` is evaluated at the bin midpoints.  Used to feed the
    solver analytically known laws, isolating quadrature error from
    statistical error.
    """
    lam = np.asarray(lam, dtype=float)
    d = lam.size
    mids = grid.midpoints
    ghat = np.zeros((d, d, mids.size))
    for i in range(d):
        for j in range(d):
            ghat[i, j] = np.asarray(funcs[i][j](mids), dtype=float)
    labels = tuple(labels) if labels else tuple(f"c{i}" for i in range(d))
    return ConditionalLawMatrix(
        grid=grid,
        lam=lam,
        ghat=ghat,
        counts=np.zeros((d, d, mids.size), dtype=np.int64),
        cond_counts=np.zeros((d, d, mids.size), dtype=np.int64),
        horizon=float(horizon),
        labels=labels,
    )
