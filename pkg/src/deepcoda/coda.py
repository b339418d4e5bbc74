"""Compositional data primitives.

Abundance vectors produced by an inexhaustive sampling process carry only
relative information: once a row is closed to proportions, the value of any
one part depends on every other part. The operations here are the building
blocks of a normalization-free analysis: closure, multiplicative zero
replacement, the centered log-ratio transform, log-contrast evaluation, and
sub-composition extraction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "KINDS",
    "CompositionMatrix",
    "closure",
    "replace_zeros",
    "clr",
    "log_contrast",
    "subcomposition",
]

KINDS = ("absolute", "relative")

_RELATIVE_SUM_TOL = 1e-9


@dataclass(frozen=True)
class CompositionMatrix:
    """An N x D abundance matrix with sample ids and feature names.

    Parameters
    ----------
    values : ndarray of shape (n_samples, n_features)
        Finite, nonnegative abundances (strictly positive after
        ``replace_zeros``).
    sample_ids : sequence of str
        One id per row.
    feature_names : sequence of str
        One name per column.
    kind : {"absolute", "relative"}
        Whether rows are raw measurements or proportions. Relative rows
        must sum to 1 within 1e-9.
    """

    values: np.ndarray
    sample_ids: tuple[str, ...]
    feature_names: tuple[str, ...]
    kind: str

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "sample_ids", tuple(str(s) for s in self.sample_ids))
        object.__setattr__(
            self, "feature_names", tuple(str(f) for f in self.feature_names)
        )
        if values.ndim != 2:
            raise ValueError("values must be a 2-D matrix")
        n, d = values.shape
        if len(self.sample_ids) != n:
            raise ValueError(f"expected {n} sample ids, got {len(self.sample_ids)}")
        if len(self.feature_names) != d:
            raise ValueError(
                f"expected {d} feature names, got {len(self.feature_names)}"
            )
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not np.all(np.isfinite(values)):
            raise ValueError("abundances must be finite")
        if np.any(values < 0):
            raise ValueError("abundances must be nonnegative")
        if self.kind == "relative":
            sums = values.sum(axis=1)
            if np.any(np.abs(sums - 1.0) > _RELATIVE_SUM_TOL):
                raise ValueError("relative rows must sum to 1")

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]


def closure(v):
    """Divide a nonnegative vector by its sum so the parts become proportions.

    Parameters
    ----------
    v : array_like
        A vector, or a matrix whose rows are treated as vectors. Entries
        must be finite and nonnegative with a positive sum per row.

    Returns
    -------
    ndarray
        Same shape as the input; every row sums to 1.
    """
    arr = np.asarray(v, dtype=float)
    if arr.ndim not in (1, 2):
        raise ValueError("closure expects a vector or a matrix of row vectors")
    if not np.all(np.isfinite(arr)):
        raise ValueError("closure requires finite input")
    if np.any(arr < 0):
        raise ValueError("closure requires nonnegative entries")
    sums = arr.sum(axis=-1, keepdims=True)
    if np.any(sums <= 0):
        raise ValueError("each row needs at least one positive entry")
    return arr / sums


def replace_zeros(
    m: CompositionMatrix, delta_fraction: float = 0.5
) -> CompositionMatrix:
    """Impute zeros multiplicatively, preserving row sums and nonzero ratios.

    Every zero in row i becomes ``delta_fraction * min(nonzero entries of
    row i)`` and the nonzero entries are rescaled by a common factor chosen
    so the row sum is unchanged. Because all nonzero parts of a row share
    one factor, every ratio among originally nonzero parts is preserved, so
    any log-ratio that was defined before imputation keeps its value.

    Parameters
    ----------
    m : CompositionMatrix
        Input matrix; each row needs at least one positive entry.
    delta_fraction : float in (0, 1)
        Size of the imputed value relative to the row's smallest nonzero
        entry.

    Returns
    -------
    CompositionMatrix
        Strictly positive matrix of the same kind. If ``m`` contains no
        zeros it is returned unchanged.
    """
    if not 0.0 < delta_fraction < 1.0:
        raise ValueError("delta_fraction must lie in (0, 1)")
    values = m.values
    zero_mask = values == 0
    if not zero_mask.any():
        return m
    out = values.copy()
    for i in np.flatnonzero(zero_mask.any(axis=1)):
        row = values[i]
        nonzero = row[row > 0]
        if nonzero.size == 0:
            raise ValueError(f"row {i} is entirely zero")
        delta = delta_fraction * nonzero.min()
        n_zero = int(zero_mask[i].sum())
        scale = 1.0 - n_zero * delta / row.sum()
        if scale <= 0:
            raise ValueError(
                f"row {i}: imputed mass exceeds the row total; "
                "use a smaller delta_fraction"
            )
        out[i] = np.where(zero_mask[i], delta, row * scale)
    return CompositionMatrix(out, m.sample_ids, m.feature_names, m.kind)


def clr(x):
    """Centered log-ratio transform: log of each part over its row's geometric mean.

    Parameters
    ----------
    x : array_like
        Strictly positive vector, or matrix of row vectors.

    Returns
    -------
    ndarray
        ``log(x) - mean(log(x))`` per row; every output row sums to 0.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim not in (1, 2):
        raise ValueError("clr expects a vector or a matrix of row vectors")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError("clr requires strictly positive entries")
    logs = np.log(arr)
    return logs - logs.mean(axis=-1, keepdims=True)


def log_contrast(x, beta, beta0: float = 0.0) -> float:
    """Evaluate ``beta0 + sum_d beta[d] * ln(x[d])`` for one composition.

    When the coefficients sum to zero the value is invariant to rescaling
    of ``x``: absolute measurements and their closed proportions give the
    same answer, and so does any sub-composition containing the support of
    ``beta``.
    """
    xv = np.asarray(x, dtype=float)
    bv = np.asarray(beta, dtype=float)
    if xv.ndim != 1 or bv.shape != xv.shape:
        raise ValueError("x and beta must be 1-D vectors of equal length")
    if not np.all(np.isfinite(xv)) or np.any(xv <= 0):
        raise ValueError("log_contrast requires strictly positive entries")
    if not np.all(np.isfinite(bv)) or not np.isfinite(beta0):
        raise ValueError("coefficients must be finite")
    return float(beta0 + bv @ np.log(xv))


def subcomposition(m: CompositionMatrix, keep) -> CompositionMatrix:
    """Restrict the matrix to a subset of parts.

    Relative rows are re-closed so they sum to 1 again; absolute rows are
    returned as-is.
    """
    idx = np.asarray(keep, dtype=int)
    if idx.ndim != 1 or idx.size == 0:
        raise ValueError("keep must be a nonempty 1-D index collection")
    if np.unique(idx).size != idx.size:
        raise ValueError("keep contains duplicate indices")
    if idx.min() < 0 or idx.max() >= m.n_features:
        raise ValueError("keep contains out-of-range indices")
    values = m.values[:, idx]
    if m.kind == "relative":
        values = closure(values)
    names = tuple(m.feature_names[j] for j in idx)
    return CompositionMatrix(values, m.sample_ids, names, m.kind)
