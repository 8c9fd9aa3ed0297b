"""Empirical distance covariance and distance correlation (V-statistic).

For two N-row matrices X and Y, let A and B be their Euclidean distance
matrices after double centering (subtract row and column means, add back
the grand mean). Then::

    dcov(X, Y) = sqrt(sum(A * B) / N**2)
    dcor(X, Y) = dcov(X, Y) / sqrt(dcov(X, X) * dcov(Y, Y))

Two kernels are provided. :func:`dcor` materialises both N x N matrices;
:func:`dcor_blocked` streams row blocks so only a ``block x N`` slab of
each matrix is resident at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, InputError, NumericalError, ShapeError
from .tensor import flatten_batch

NEG_TOL = 1e-12
CLAMP_TOL = 1e-9


@dataclass(frozen=True)
class DcorResult:
    dcor: float
    dcov_xy: float
    dcov_xx: float
    dcov_yy: float
    n: int

    def as_dict(self) -> dict:
        return {
            "dcor": self.dcor,
            "dcov_xy": self.dcov_xy,
            "dcov_xx": self.dcov_xx,
            "dcov_yy": self.dcov_yy,
            "n": self.n,
        }


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    elif X.ndim != 2:
        X = flatten_batch(X)
    if X.shape[0] < 2:
        raise ShapeError(f"need at least 2 rows, got {X.shape[0]}")
    if X.shape[1] < 1:
        raise ShapeError("need at least 1 column")
    if not np.all(np.isfinite(X)):
        raise InputError("input contains NaN or Inf")
    return X


def _check_pair(X, Y):
    X, Y = _as_matrix(X), _as_matrix(Y)
    if X.shape[0] != Y.shape[0]:
        raise ShapeError(f"row counts differ: {X.shape[0]} vs {Y.shape[0]}")
    return X, Y


def _center_columns(X: np.ndarray) -> np.ndarray:
    # distances are translation invariant; centering shrinks the norms that cancel below
    return X - X.mean(axis=0)


def _distance_block(Xb, X, sq_b, sq, rows=None) -> np.ndarray:
    d2 = sq_b[:, None] + sq[None, :] - 2.0 * (Xb @ X.T)
    np.maximum(d2, 0.0, out=d2)
    d = np.sqrt(d2, out=d2)
    if rows is not None:
        d[np.arange(len(rows)), rows] = 0.0
    return d


def pairwise_distances(X) -> np.ndarray:
    """N x N Euclidean distances between rows, symmetric with an exact zero diagonal."""
    X = _center_columns(_as_matrix(X))
    sq = np.einsum("ij,ij->i", X, X)
    D = _distance_block(X, X, sq, sq, rows=np.arange(X.shape[0]))
    # the Gram form is symmetric only up to rounding
    return 0.5 * (D + D.T)


def double_center(D) -> np.ndarray:
    """V-centering: ``a_ij - mean_i. - mean_.j + mean_..``."""
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {D.shape}")
    if not np.all(np.isfinite(D)):
        raise InputError("distance matrix contains NaN or Inf")
    row = D.mean(axis=1)
    col = D.mean(axis=0)
    return D - row[:, None] - col[None, :] + D.mean()


def _finish_dcov(total: float, n: int) -> float:
    val = total / (n * n)
    if val < 0.0:
        if val < -NEG_TOL:
            raise NumericalError(f"negative squared distance covariance {val:.3e}")
        val = 0.0
    return math.sqrt(val)


def _result(sxy, sxx, syy, n) -> DcorResult:
    dxy, dxx, dyy = (_finish_dcov(s, n) for s in (sxy, sxx, syy))
    if dxx == 0.0 or dyy == 0.0:
        raise DegenerateInput(
            "distance correlation is undefined for a constant representation"
        )
    r = dxy / math.sqrt(dxx * dyy)
    if r > 1.0:
        if r > 1.0 + CLAMP_TOL:
            raise NumericalError(f"distance correlation {r!r} exceeds 1")
        r = 1.0
    return DcorResult(dcor=r, dcov_xy=dxy, dcov_xx=dxx, dcov_yy=dyy, n=n)


def dcov(X, Y) -> float:
    X, Y = _check_pair(X, Y)
    A = double_center(pairwise_distances(X))
    B = double_center(pairwise_distances(Y))
    return _finish_dcov(float(np.sum(A * B)), X.shape[0])


def dcor(X, Y) -> DcorResult:
    """Distance correlation of two sample matrices (rows are samples).

    Stacked ``(N, C, H, W)`` inputs are flattened channel-major first.
    Raises :class:`DegenerateInput` if either side is constant across rows.
    """
    X, Y = _check_pair(X, Y)
    A = double_center(pairwise_distances(X))
    B = double_center(pairwise_distances(Y))
    return _result(
        float(np.sum(A * B)), float(np.sum(A * A)), float(np.sum(B * B)), X.shape[0]
    )


def _row_means(X, sq, block):
    n = X.shape[0]
    means = np.empty(n)
    for start in range(0, n, block):
        stop = min(start + block, n)
        rows = np.arange(start, stop)
        D = _distance_block(X[start:stop], X, sq[start:stop], sq, rows)
        means[start:stop] = D.mean(axis=1)
    return means


def dcor_blocked(X, Y, block: int = 256) -> DcorResult:
    """Streaming :func:`dcor`; peak memory is two ``block x N`` slabs.

    Row means come from a first pass; the centred products are then
    accumulated block by block in index order, so the result is
    reproducible for a given block size.
    """
    if block < 1:
        raise ShapeError(f"block must be >= 1, got {block}")
    X, Y = _check_pair(X, Y)
    n = X.shape[0]
    block = min(block, n)
    X, Y = _center_columns(X), _center_columns(Y)
    sqx = np.einsum("ij,ij->i", X, X)
    sqy = np.einsum("ij,ij->i", Y, Y)
    # distance matrices are symmetric, so column means equal row means
    mx = _row_means(X, sqx, block)
    my = _row_means(Y, sqy, block)
    gx, gy = mx.mean(), my.mean()
    sxy = sxx = syy = 0.0
    for start in range(0, n, block):
        stop = min(start + block, n)
        rows = np.arange(start, stop)
        A = _distance_block(X[start:stop], X, sqx[start:stop], sqx, rows)
        A -= mx[start:stop, None]
        A -= mx[None, :]
        A += gx
        B = _distance_block(Y[start:stop], Y, sqy[start:stop], sqy, rows)
        B -= my[start:stop, None]
        B -= my[None, :]
        B += gy
        sxy += float(np.sum(A * B))
        sxx += float(np.sum(A * A))
        syy += float(np.sum(B * B))
    return _result(sxy, sxx, syy, n)
