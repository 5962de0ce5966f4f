"""Multivariate Hawkes model: stability, first-order statistics, model files.

A model is an exogenous rate vector ``mu`` plus a D x D matrix of causal
kernels, entry (i, j) being the influence of past events of component j on
the intensity of component i.  ``mode`` is "linear" (intensities are affine
in the past jumps, kernels must be nonnegative) or "rectified" (intensities
are clamped at zero, kernels may be negative).
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NumericalError, ParameterError, StabilityError
from .kernels import (
    ExponentialKernel,
    KernelSpec,
    PowerLawKernel,
    TabulatedKernel,
    kernel_abs_norm,
    kernel_is_nonnegative,
    kernel_l1_norm,
)

LINEAR = "linear"
RECTIFIED = "rectified"


@dataclass(frozen=True)
class HawkesModel:
    mu: tuple
    kernels: tuple  # D rows of D entries, each a KernelSpec or None
    mode: str = LINEAR
    labels: tuple = ()

    def __post_init__(self):
        mu = tuple(float(m) for m in self.mu)
        d = len(mu)
        if d == 0:
            raise ParameterError("model needs at least one component")
        if any(m < 0 or not math.isfinite(m) for m in mu):
            raise ParameterError("exogenous intensities must be finite and >= 0")
        if self.mode not in (LINEAR, RECTIFIED):
            raise ParameterError(f"mode must be '{LINEAR}' or '{RECTIFIED}'")
        rows = tuple(tuple(row) for row in self.kernels)
        if len(rows) != d or any(len(r) != d for r in rows):
            raise ParameterError(f"kernel matrix must be {d}x{d}")
        labels = tuple(self.labels) if self.labels else tuple(f"c{i}" for i in range(d))
        if len(labels) != d or len(set(labels)) != d:
            raise ParameterError("labels must be unique, one per component")
        if self.mode == LINEAR:
            for i, row in enumerate(rows):
                for j, spec in enumerate(row):
                    if spec is not None and not kernel_is_nonnegative(spec):
                        raise ParameterError(
                            f"linear mode requires nonnegative kernels; ({i},{j}) is not"
                        )
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "kernels", rows)
        object.__setattr__(self, "labels", labels)

    @property
    def dimension(self) -> int:
        return len(self.mu)


def norm_matrix(model: HawkesModel, absolute: bool = False) -> np.ndarray:
    """D x D matrix of kernel integrals (signed, or of |phi| if ``absolute``)."""
    d = model.dimension
    out = np.zeros((d, d))
    for i in range(d):
        for j in range(d):
            spec = model.kernels[i][j]
            if spec is None:
                continue
            out[i, j] = kernel_abs_norm(spec) if absolute else kernel_l1_norm(spec)
    return out


def spectral_radius(matrix, tol: float = 1e-10, max_iter: int = 10000) -> float:
    """Largest-magnitude eigenvalue of a nonnegative matrix by power iteration.

    Deterministic all-ones start.  A two-step geometric mean handles the
    period-2 oscillation of cyclic (imprimitive) patterns.  Raises
    NumericalError if neither estimate stabilizes within ``max_iter``.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ParameterError("spectral radius needs a square matrix")
    if np.any(m < 0):
        raise ParameterError("power iteration expects a nonnegative matrix")
    v = np.ones(m.shape[0])
    hist = []   # last few ratio estimates
    gms = []    # two-step geometric means, immune to period-2 cycling
    for _ in range(max_iter):
        w = m @ v
        s = float(w.sum())
        if s == 0.0:
            return 0.0
        est = s / float(v.sum())
        hist.append(est)
        # one-step AND two-step stability: alternating iterates take a tiny
        # step every other iteration long before they converge, so a single
        # small difference is not a convergence signal
        if len(hist) >= 3:
            scale = tol * max(1.0, est)
            if abs(hist[-1] - hist[-2]) <= scale and abs(hist[-1] - hist[-3]) <= scale:
                return est
        if len(hist) >= 2:
            gms.append(math.sqrt(hist[-1] * hist[-2]))
            if len(gms) >= 3:
                gm = gms[-1]
                scale = tol * max(1.0, gm)
                if abs(gms[-1] - gms[-2]) <= scale and abs(gms[-1] - gms[-3]) <= scale:
                    return gm
        if len(hist) > 3:
            del hist[0]
        if len(gms) > 3:
            del gms[0]
        v = w / s
    raise NumericalError(f"power iteration did not converge in {max_iter} iterations")


def spectral_radius_check(model: HawkesModel):
    """Return (radius, stationary flag).

    Rectified models are checked conservatively on the matrix of |phi| norms;
    no sharper criterion is available for the clamped dynamics.
    """
    mat = norm_matrix(model, absolute=(model.mode == RECTIFIED))
    if model.mode == LINEAR:
        mat = np.abs(mat)
    radius = float(spectral_radius(mat))
    return radius, bool(radius < 1.0)


def expected_intensities(model: HawkesModel) -> np.ndarray:
    """Stationary mean intensities: solve (I - ||phi||) Lambda = mu."""
    radius, stationary = spectral_radius_check(model)
    if not stationary:
        raise StabilityError(f"model is not stationary (radius {radius:.6g} >= 1)")
    mat = np.eye(model.dimension) - norm_matrix(model)
    try:
        lam = np.linalg.solve(mat, np.asarray(model.mu))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"I - ||phi|| is singular: {exc}") from exc
    return lam


def exponential_claw(branching: float, rate: float):
    """Closed-form conditional law of the one-dimensional exponential model.

    For phi(t) = branching * rate * exp(-rate t) with 0 < branching < 1 the
    cascade-summed kernel is psi(t) = branching * rate * exp(-kappa t) with
    kappa = rate (1 - branching), and the conditional law for t > 0 is

        g(t) = psi(t) + integral_0^inf psi(t + u) psi(u) du
             = branching * rate * (2 - branching) / (2 (1 - branching))
               * exp(-kappa t).

    Returns the function g, valid for t > 0 (and evaluated symmetrically for
    negative lags, since g is even in one dimension).
    """
    a, b = float(branching), float(rate)
    if not (0 < a < 1):
        raise ParameterError(f"branching must be in (0, 1), got {a}")
    if not b > 0:
        raise ParameterError(f"rate must be > 0, got {b}")
    kappa = b * (1 - a)
    amp = a * b * (2 - a) / (2 * (1 - a))

    def g(t):
        t = np.asarray(t, dtype=float)
        return amp * np.exp(-kappa * np.abs(t))

    return g


def exponential_claw_total(branching: float) -> float:
    """integral_0^inf g for the exponential model: a (2 - a) / (2 (1 - a)^2)."""
    a = float(branching)
    if not (0 < a < 1):
        raise ParameterError(f"branching must be in (0, 1), got {a}")
    return a * (2 - a) / (2 * (1 - a) ** 2)


# --- model description files -------------------------------------------------

_KERNEL_TAGS = {
    PowerLawKernel: "powerlaw",
    ExponentialKernel: "exponential",
    TabulatedKernel: "tabulated",
}


def _fmt_floats(values) -> str:
    return ", ".join(repr(float(v)) for v in values)


def dumps_model(model: HawkesModel) -> str:
    """Canonical text form of a model; ``loads_model(dumps_model(m))`` round-trips."""
    d = model.dimension
    lines = [
        "# hawkes model v1",
        f"dimension = {d}",
        f"labels = {', '.join(model.labels)}",
        f"mode = {model.mode}",
        f"mu = {_fmt_floats(model.mu)}",
    ]
    for i in range(d):
        for j in range(d):
            spec = model.kernels[i][j]
            lines.append("")
            lines.append(f"[kernel {i + 1} {j + 1}]")
            if spec is None:
                lines.append("type = none")
            elif isinstance(spec, PowerLawKernel):
                lines.append("type = powerlaw")
                lines.append(f"amplitude = {spec.amplitude!r}")
                lines.append(f"offset = {spec.offset!r}")
                lines.append(f"exponent = {spec.exponent!r}")
            elif isinstance(spec, ExponentialKernel):
                lines.append("type = exponential")
                lines.append(f"branching = {spec.branching!r}")
                lines.append(f"rate = {spec.rate!r}")
            elif isinstance(spec, TabulatedKernel):
                lines.append("type = tabulated")
                lines.append(f"abscissae = {_fmt_floats(spec.abscissae)}")
                lines.append(f"values = {_fmt_floats(spec.values)}")
            else:
                raise ParameterError(f"unknown kernel spec {type(spec).__name__}")
    return "\n".join(lines) + "\n"


def loads_model(text: str) -> HawkesModel:
    header = {}
    blocks = {}
    current = header
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            parts = line[1:-1].split()
            if len(parts) != 3 or parts[0] != "kernel":
                raise ParameterError(f"line {ln}: bad section header {line!r}")
            try:
                key = (int(parts[1]), int(parts[2]))
            except ValueError as exc:
                raise ParameterError(f"line {ln}: bad kernel indices") from exc
            current = {}
            blocks[key] = current
            continue
        if "=" not in line:
            raise ParameterError(f"line {ln}: expected 'key = value', got {line!r}")
        k, _, v = line.partition("=")
        current[k.strip()] = v.strip()

    try:
        d = int(header["dimension"])
        mode = header.get("mode", LINEAR)
        labels = tuple(s.strip() for s in header["labels"].split(","))
        mu = tuple(float(s) for s in header["mu"].split(","))
    except KeyError as exc:
        raise ParameterError(f"model file missing field {exc}") from exc

    kernels = []
    for i in range(1, d + 1):
        row = []
        for j in range(1, d + 1):
            blk = blocks.get((i, j))
            row.append(_parse_kernel_block(blk, i, j))
        kernels.append(tuple(row))
    return HawkesModel(mu=mu, kernels=tuple(kernels), mode=mode, labels=labels)


def _parse_kernel_block(blk, i, j) -> Optional[KernelSpec]:
    if blk is None:
        return None
    tag = blk.get("type", "none")
    if tag == "none":
        return None
    try:
        if tag == "powerlaw":
            return PowerLawKernel(
                amplitude=float(blk["amplitude"]),
                offset=float(blk["offset"]),
                exponent=float(blk["exponent"]),
            )
        if tag == "exponential":
            return ExponentialKernel(branching=float(blk["branching"]), rate=float(blk["rate"]))
        if tag == "tabulated":
            return TabulatedKernel(
                abscissae=tuple(float(s) for s in blk["abscissae"].split(",")),
                values=tuple(float(s) for s in blk["values"].split(",")),
            )
    except KeyError as exc:
        raise ParameterError(f"kernel ({i},{j}) missing field {exc}") from exc
    raise ParameterError(f"kernel ({i},{j}) has unknown type {tag!r}")


def write_model(model: HawkesModel, path) -> None:
    from ._io import atomic_write_text

    atomic_write_text(path, dumps_model(model))


def read_model(path) -> HawkesModel:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_model(fh.read())


def model_hash(model: HawkesModel) -> str:
    return hashlib.sha256(dumps_model(model).encode("utf-8")).hexdigest()
