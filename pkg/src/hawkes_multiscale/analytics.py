"""Causality and endogeneity analytics over a kernel estimate.

Norm-level algebra only: the cascade-summed norms ||psi|| = ||phi|| (I -
||phi||)^{-1}, the exogeneity ratios mu / Lambda, the fraction of events of
type i descending from exogenous events of type j, the normalized cumulated
kernels, and ask/bid symmetry diagnostics.  "Norm" throughout means the
signed integral of the kernel, so inhibitory kernels carry negative entries.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._io import atomic_write_text, write_json
from .errors import ParameterError, StabilityError
from .model import spectral_radius
from .solver import KernelEstimate, cumulative_trapezoid

REPORT_SCHEMA = "hawkes-report/1"

# the eight level-one book components: mid-price up/down, then trades,
# limit insertions and cancellations at ask/bid that leave the mid unchanged
BOOK_LABELS = ("P_a", "P_b", "T_a", "T_b", "L_a", "L_b", "C_a", "C_b")
# ask <-> bid swap
BOOK_PAIRING = (1, 0, 3, 2, 5, 4, 7, 6)


def psi_norms(norm_matrix: np.ndarray) -> np.ndarray:
    """||psi|| = ||phi|| (I - ||phi||)^{-1}: direct plus indirect descendants."""
    n = np.asarray(norm_matrix, dtype=float)
    radius = spectral_radius(np.abs(n))
    if radius >= 1.0:
        raise StabilityError(f"norm matrix has spectral radius {radius:.6g} >= 1")
    eye = np.eye(n.shape[0])
    return np.linalg.solve((eye - n).T, n.T).T


def exogeneity_ratios(mu, lam) -> np.ndarray:
    """R_i = mu_i / Lambda_i, the share of events not triggered by past events."""
    mu = np.asarray(mu, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ParameterError("exogeneity ratios need strictly positive rates")
    return mu / lam


def dressed_fractions(psi, mu, lam) -> np.ndarray:
    """Fraction of type-i events whose exogenous ancestor is of type j:
    (mu_j / Lambda_i) ||psi_ij||."""
    psi = np.asarray(psi, dtype=float)
    mu = np.asarray(mu, dtype=float)
    lam = np.asarray(lam, dtype=float)
    return psi * mu[None, :] / lam[:, None]


def cumulated_kernels(estimate: KernelEstimate):
    """Normalized running integrals (Lambda_j / Lambda_i) int_0^t phi_ij.

    The unnormalized endpoint is exactly the norm-matrix entry (same trapezoid
    accumulation).  Returns (nodes, curves) with curves shaped (D, D, n).
    """
    cum = cumulative_trapezoid(estimate.phi, estimate.nodes)
    scale = estimate.lam[None, :, None] / estimate.lam[:, None, None]
    return estimate.nodes, cum * scale


@dataclass(frozen=True)
class SymmetryReport:
    pairing: tuple
    pairs: tuple                 # ((i, j), (si, sj)) per compared pair
    shape_deviation: np.ndarray  # relative L1 difference of the two estimates
    norm_deviation: np.ndarray   # relative difference of the two norms
    median_shape: float
    median_norm: float


def symmetry_report(estimate: KernelEstimate, pairing) -> SymmetryReport:
    """Compare kernel pairs related by a declared component involution.

    ``pairing[k]`` is the component swapped with k (e.g. ask <-> bid).  For
    each kernel pair ((i, j), (sigma i, sigma j)) with the two members
    distinct, reports the relative L1 difference of the estimates and of the
    norms; the summary statistic is the median over pairs.
    """
    d = estimate.dimension
    sigma = tuple(int(s) for s in pairing)
    if sorted(sigma) != list(range(d)):
        raise ParameterError("pairing must be a bijection on the components")
    if any(sigma[sigma[k]] != k for k in range(d)):
        raise ParameterError("pairing must be an involution")
    nodes = estimate.nodes
    seen = set()
    pairs = []
    shape_dev = []
    norm_dev = []
    for i in range(d):
        for j in range(d):
            a = (i, j)
            b = (sigma[i], sigma[j])
            if a == b or a in seen or b in seen:
                continue
            seen.add(a)
            seen.add(b)
            pa = estimate.phi[a]
            pb = estimate.phi[b]
            num = np.trapezoid(np.abs(pa - pb), nodes)
            den = max(
                np.trapezoid(np.abs(pa), nodes), np.trapezoid(np.abs(pb), nodes)
            )
            shape_dev.append(num / den if den > 0 else 0.0)
            na = estimate.norm_matrix[a]
            nb = estimate.norm_matrix[b]
            dn = max(abs(na), abs(nb))
            norm_dev.append(abs(na - nb) / dn if dn > 0 else 0.0)
            pairs.append((a, b))
    shape_dev = np.asarray(shape_dev)
    norm_dev = np.asarray(norm_dev)
    return SymmetryReport(
        pairing=sigma,
        pairs=tuple(pairs),
        shape_deviation=shape_dev,
        norm_deviation=norm_dev,
        median_shape=float(np.median(shape_dev)) if shape_dev.size else 0.0,
        median_norm=float(np.median(norm_dev)) if norm_dev.size else 0.0,
    )


@dataclass(frozen=True)
class CausalityReport:
    labels: tuple
    lam: np.ndarray
    mu: np.ndarray
    norm_matrix: np.ndarray
    psi_norm_matrix: np.ndarray
    dressed_fraction_matrix: np.ndarray
    exo_ratios: np.ndarray
    cumulated_nodes: np.ndarray
    cumulated: np.ndarray
    symmetry: SymmetryReport | None = None
    diagnostics: dict = field(default_factory=dict)


def build_report(estimate: KernelEstimate, pairing=None) -> CausalityReport:
    psi = psi_norms(estimate.norm_matrix)
    ratios = exogeneity_ratios(estimate.mu, estimate.lam)
    dressed = dressed_fractions(psi, estimate.mu, estimate.lam)
    nodes, cum = cumulated_kernels(estimate)
    sym = symmetry_report(estimate, pairing) if pairing is not None else None
    return CausalityReport(
        labels=estimate.labels,
        lam=estimate.lam,
        mu=estimate.mu,
        norm_matrix=estimate.norm_matrix,
        psi_norm_matrix=psi,
        dressed_fraction_matrix=dressed,
        exo_ratios=ratios,
        cumulated_nodes=nodes,
        cumulated=cum,
        symmetry=sym,
        diagnostics=dict(estimate.diagnostics),
    )


def report_to_dict(report: CausalityReport) -> dict:
    doc = {
        "schema": REPORT_SCHEMA,
        "labels": list(report.labels),
        "lambda": report.lam.tolist(),
        "mu": report.mu.tolist(),
        "exo_ratios": report.exo_ratios.tolist(),
        "norm_matrix": report.norm_matrix.tolist(),
        "psi_norm_matrix": report.psi_norm_matrix.tolist(),
        "dressed_fraction_matrix": report.dressed_fraction_matrix.tolist(),
        "diagnostics": report.diagnostics,
    }
    if report.symmetry is not None:
        doc["symmetry"] = {
            "pairing": list(report.symmetry.pairing),
            "pairs": [list(map(list, p)) for p in report.symmetry.pairs],
            "shape_deviation": report.symmetry.shape_deviation.tolist(),
            "norm_deviation": report.symmetry.norm_deviation.tolist(),
            "median_shape": report.symmetry.median_shape,
            "median_norm": report.symmetry.median_norm,
        }
    return doc


def _matrix_tsv(labels, matrix) -> str:
    lines = ["\t".join([""] + list(labels))]
    for i, lab in enumerate(labels):
        lines.append("\t".join([lab] + [repr(float(v)) for v in matrix[i]]))
    return "\n".join(lines) + "\n"


def format_tables(report: CausalityReport) -> str:
    """Human-readable summary: a mu/R table per component plus norm matrices."""
    labels = report.labels
    width = max(8, max(len(l) for l in labels) + 2)

    def row(name, values, fmt):
        cells = "".join(f"{fmt(v):>{width}}" for v in values)
        return f"{name:>12} {cells}"

    head = row("", labels, str)
    lines = [
        "Exogenous intensities and exogeneity ratios",
        head,
        row("mu (1/s)", report.mu, lambda v: f"{v:.3g}"),
        row("R", report.exo_ratios, lambda v: f"{100 * v:.2f}%"),
        row("Lambda", report.lam, lambda v: f"{v:.4g}"),
        "",
        "Kernel norm matrix ||phi|| (signed integrals, row = target)",
    ]
    for i, lab in enumerate(labels):
        lines.append(row(lab, report.norm_matrix[i], lambda v: f"{v:+.4f}"))
    lines.append("")
    lines.append("Dressed fractions ||psi-bar|| (share of row events from exogenous column events)")
    for i, lab in enumerate(labels):
        lines.append(row(lab, report.dressed_fraction_matrix[i], lambda v: f"{v:.4f}"))
    if report.symmetry is not None:
        lines.append("")
        lines.append(
            f"Symmetry: median shape deviation {report.symmetry.median_shape:.4f}, "
            f"median norm deviation {report.symmetry.median_norm:.4f} "
            f"over {len(report.symmetry.pairs)} kernel pairs"
        )
    return "\n".join(lines) + "\n"


def write_report(report: CausalityReport, outdir) -> dict:
    """Emit report.json, tables.txt and heat-map matrices; returns the paths."""
    import os

    os.makedirs(outdir, exist_ok=True)
    paths = {
        "report": os.path.join(outdir, "report.json"),
        "tables": os.path.join(outdir, "tables.txt"),
        "norm_matrix": os.path.join(outdir, "norm_matrix.tsv"),
        "psi_norm_matrix": os.path.join(outdir, "psi_norm_matrix.tsv"),
        "dressed_fractions": os.path.join(outdir, "dressed_fractions.tsv"),
    }
    write_json(paths["report"], report_to_dict(report))
    atomic_write_text(paths["tables"], format_tables(report))
    atomic_write_text(paths["norm_matrix"], _matrix_tsv(report.labels, report.norm_matrix))
    atomic_write_text(
        paths["psi_norm_matrix"], _matrix_tsv(report.labels, report.psi_norm_matrix)
    )
    atomic_write_text(
        paths["dressed_fractions"],
        _matrix_tsv(report.labels, report.dressed_fraction_matrix),
    )
    return paths
