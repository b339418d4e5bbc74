"""Two-level interpretability reports for trained models.

Level 1 decomposes one prediction into per-bottleneck product scores
(weight times contrast value): their sum is the prediction logit, so the
class call is readable off the signs. Level 2 describes each learned
contrast by its member features (positive powers form the numerator,
negative the denominator) and relates the per-sample weights back to the
contrast values through Pearson and canonical correlations.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import DeepCodaParams, forward

__all__ = [
    "DECISION_NEGATIVE",
    "DECISION_POSITIVE",
    "ContrastMembership",
    "Explanation",
    "ReportBundle",
    "contrast_membership",
    "decision_rule",
    "explain_sample",
    "render_report",
    "weight_contrast_correlation",
]

DECISION_POSITIVE = "unhealthy"
DECISION_NEGATIVE = "healthy"

_CCA_JITTER = 1e-8


def decision_rule(products) -> str:
    """Positive class iff the summed product scores exceed zero (logit > 0)."""
    return DECISION_POSITIVE if float(np.sum(products)) > 0.0 else DECISION_NEGATIVE


@dataclass(frozen=True)
class Explanation:
    """One sample's additive decomposition: prediction = expit(sum(products))."""

    sample_id: str
    z: np.ndarray
    w: np.ndarray
    products: np.ndarray
    prediction: float
    decision: str


@dataclass(frozen=True)
class ContrastMembership:
    """Features with |power| above threshold for one bottleneck, largest first."""

    bottleneck_index: int
    entries: tuple[tuple[str, float], ...]
    numerator: tuple[str, ...]
    denominator: tuple[str, ...]


def explain_sample(p: DeepCodaParams, x, sample_id: str = "sample") -> Explanation:
    """Decompose one prediction into per-bottleneck product scores."""
    if p.head != "self_explain":
        raise ValueError(
            "explanations require the self_explain head; "
            "the linear head has no per-sample weights"
        )
    trace = forward(p, x)
    products = trace.w * trace.z
    return Explanation(
        sample_id=str(sample_id),
        z=trace.z,
        w=trace.w,
        products=products,
        prediction=trace.yhat,
        decision=decision_rule(products),
    )


def contrast_membership(
    p: DeepCodaParams,
    bottleneck_index: int,
    feature_names: Sequence[str] | None = None,
    magnitude_threshold: float = 1e-3,
) -> ContrastMembership:
    """Signed power list for one bottleneck, sorted by |power| descending."""
    d, n_bottlenecks, _ = p.dims
    if not 0 <= bottleneck_index < n_bottlenecks:
        raise ValueError(f"bottleneck_index must lie in [0, {n_bottlenecks})")
    if feature_names is None:
        names = [f"feature_{j + 1}" for j in range(d)]
    else:
        names = [str(nm) for nm in feature_names]
        if len(names) != d:
            raise ValueError(f"expected {d} feature names, got {len(names)}")
    powers = p.beta[:, bottleneck_index]
    kept = np.flatnonzero(np.abs(powers) > magnitude_threshold)
    order = kept[np.argsort(-np.abs(powers[kept]), kind="stable")]
    entries = tuple((names[j], float(powers[j])) for j in order)
    return ContrastMembership(
        bottleneck_index=bottleneck_index,
        entries=entries,
        numerator=tuple(nm for nm, pw in entries if pw > 0),
        denominator=tuple(nm for nm, pw in entries if pw < 0),
    )


def _standardize_columns(arr: np.ndarray):
    centered = arr - arr.mean(axis=0)
    std = arr.std(axis=0)
    constant = std == 0
    safe = np.where(constant, 1.0, std)
    out = centered / safe
    out[:, constant] = 0.0
    return out, constant


def _inverse_sqrt(sym: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(sym)
    vals = np.maximum(vals, _CCA_JITTER)
    return (vecs / np.sqrt(vals)) @ vecs.T


def weight_contrast_correlation(W, Z):
    """Pearson matrix between weight and contrast columns, plus canonical correlations.

    Constant columns get correlation 0 by convention (a warning flags
    them). Canonical correlations are the singular values of the
    whitened cross-correlation block, computed on standardized columns
    with a 1e-8 ridge on the diagonals, clipped to [0, 1], descending.
    """
    wv = np.asarray(W, dtype=float)
    zv = np.asarray(Z, dtype=float)
    if wv.ndim != 2 or zv.ndim != 2 or wv.shape[0] != zv.shape[0]:
        raise ValueError("W and Z must be 2-D with matching row counts")
    n = wv.shape[0]
    if n <= max(wv.shape[1], zv.shape[1]):
        raise ValueError("need more samples than columns for correlation analysis")
    ws, w_const = _standardize_columns(wv)
    zs, z_const = _standardize_columns(zv)
    if w_const.any() or z_const.any():
        warnings.warn(
            "constant columns detected; their correlations are reported as 0",
            RuntimeWarning,
            stacklevel=2,
        )
    pearson = np.clip(ws.T @ zs / n, -1.0, 1.0)
    r_ww = ws.T @ ws / n + _CCA_JITTER * np.eye(wv.shape[1])
    r_zz = zs.T @ zs / n + _CCA_JITTER * np.eye(zv.shape[1])
    r_wz = ws.T @ zs / n
    whitened = _inverse_sqrt(r_ww) @ r_wz @ _inverse_sqrt(r_zz)
    singular = np.linalg.svd(whitened, compute_uv=False)
    canonical = np.clip(singular, 0.0, 1.0)
    return pearson, canonical[: min(wv.shape[1], zv.shape[1])]


@dataclass(frozen=True)
class ReportBundle:
    """Deterministic text summary plus the three CSV tables."""

    summary: str
    explanations_csv: str
    memberships_csv: str
    correlations_csv: str


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _csv_table(header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def render_report(
    explanations: Sequence[Explanation],
    memberships: Sequence[ContrastMembership],
    correlations=None,
) -> ReportBundle:
    """Serialize report tables deterministically (17 significant digits)."""
    if explanations:
        n_contrasts = len(explanations[0].z)
        header = (
            ["sample_id"]
            + [f"z_{b + 1}" for b in range(n_contrasts)]
            + [f"w_{b + 1}" for b in range(n_contrasts)]
            + [f"prod_{b + 1}" for b in range(n_contrasts)]
            + ["prob", "decision"]
        )
    else:
        header = ["sample_id", "prob", "decision"]
    exp_rows = []
    for e in explanations:
        exp_rows.append(
            [e.sample_id]
            + [_fmt(v) for v in e.z]
            + [_fmt(v) for v in e.w]
            + [_fmt(v) for v in e.products]
            + [_fmt(e.prediction), e.decision]
        )
    explanations_csv = _csv_table(header, exp_rows)

    mem_rows = []
    for m in memberships:
        for rank, (name, power) in enumerate(m.entries, start=1):
            side = "numerator" if power > 0 else "denominator"
            mem_rows.append([str(m.bottleneck_index + 1), str(rank), name, _fmt(power), side])
    memberships_csv = _csv_table(["bottleneck", "rank", "feature", "power", "side"], mem_rows)

    corr_rows = []
    if correlations is not None:
        pearson, canonical = correlations
        pearson = np.asarray(pearson, dtype=float)
        for i in range(pearson.shape[0]):
            for j in range(pearson.shape[1]):
                corr_rows.append(["pearson", str(i + 1), str(j + 1), _fmt(pearson[i, j])])
        for k, value in enumerate(np.asarray(canonical, dtype=float), start=1):
            corr_rows.append(["canonical", str(k), "", _fmt(value)])
    correlations_csv = _csv_table(["kind", "row", "col", "value"], corr_rows)

    n_pos = sum(1 for e in explanations if e.decision == DECISION_POSITIVE)
    lines = [
        f"samples: {len(explanations)}",
        f"decisions: {n_pos} {DECISION_POSITIVE}, "
        f"{len(explanations) - n_pos} {DECISION_NEGATIVE}",
    ]
    for m in memberships:
        if m.entries:
            top_name, top_power = m.entries[0]
            lines.append(
                f"contrast {m.bottleneck_index + 1}: {len(m.entries)} parts, "
                f"top |power| {top_name} ({top_power:.4g})"
            )
        else:
            lines.append(f"contrast {m.bottleneck_index + 1}: no parts above threshold")
    summary = "\n".join(lines) + "\n"
    return ReportBundle(summary, explanations_csv, memberships_csv, correlations_csv)
