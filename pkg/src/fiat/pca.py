"""PCA by power iteration with deflation, in float and in exact fixed point."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import ShapeMismatch
from .fieldmath import SCALE_BITS, TOTAL_BITS, RangeOverflow

ONE = 1 << SCALE_BITS
MAX_ITERS = 20


class DegenerateInput(ValueError):
    pass


class ZeroMatrix(ValueError):
    pass


@dataclass(frozen=True)
class PCAModel:
    mean: np.ndarray
    covariance: np.ndarray
    eigenvalues: np.ndarray
    components: np.ndarray  # k x m, one eigenvector per row
    degenerate: tuple = field(default=())  # indexes of pairs taken from a zero matrix

    @property
    def k(self) -> int:
        return self.components.shape[0]


def covariance(X_ns):
    X = np.asarray(X_ns, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DegenerateInput("covariance needs at least two rows")
    mean = X.mean(axis=0)
    Xc = X - mean
    C = Xc.T @ Xc / (X.shape[0] - 1)
    return mean, (C + C.T) / 2


def _orthogonalize(v, basis):
    for b in basis:
        v = v - (b @ v) * b
    return v


def _start_vector(C, basis, m):
    # the largest column of the deflated matrix leans toward its dominant
    # eigenvector far more reliably than a fixed direction does
    col = C[:, int(np.argmax(np.linalg.norm(C, axis=0)))]
    candidates = [col, np.ones(m) / np.sqrt(m)] + [np.eye(m)[i] for i in range(m)]
    for c in candidates:
        v = _orthogonalize(c, basis)
        nv = np.linalg.norm(v)
        if nv < 1e-9:
            continue
        v = v / nv
        if np.linalg.norm(C @ v) >= 1e-12:
            return v, False
    # nothing survives: the deflated matrix is zero on the complement
    for c in candidates:
        v = _orthogonalize(c, basis)
        nv = np.linalg.norm(v)
        if nv >= 1e-9:
            return v / nv, True
    raise DegenerateInput("no start vector orthogonal to the previous components")


def _fix_sign(v):
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def power_iteration(C, k: int, max_iters: int = MAX_ITERS, strict: bool = False):
    """Extract k eigenpairs of a symmetric matrix, max_iters steps each.

    After each extraction the matrix is deflated (C <- C - l v v^T) and later
    iterates are projected off the earlier components, so the returned rows
    stay orthonormal even when an eigenpair has not fully converged.
    Returns (eigenvalues, components, degenerate_indexes).  With strict=True a
    zero (deflated) matrix raises ZeroMatrix instead of being flagged.
    """
    C = np.array(C, dtype=float)
    m = C.shape[0]
    if C.shape != (m, m) or not np.allclose(C, C.T, atol=1e-9 * max(1.0, np.abs(C).max(initial=0))):
        raise ShapeMismatch("power iteration needs a symmetric square matrix")
    if not 1 <= k <= m:
        raise ValueError("k must satisfy 1 <= k <= m")
    work = C.copy()
    vals, vecs, flagged = [], [], []
    for idx in range(k):
        v, zero = _start_vector(work, vecs, m)
        if zero:
            if strict:
                raise ZeroMatrix("eigenvector undefined for a zero matrix")
            vals.append(0.0)
            vecs.append(_fix_sign(v))
            flagged.append(idx)
            continue
        for _ in range(max_iters):
            w = _orthogonalize(work @ v, vecs)
            nw = np.linalg.norm(w)
            if nw < 1e-300:
                break
            v = w / nw
        v = _fix_sign(v)
        lam = float(v @ work @ v)
        vals.append(lam)
        vecs.append(v)
        work = work - lam * np.outer(v, v)
    return np.array(vals), np.array(vecs), tuple(flagged)


def fit(X_ns, k: int, max_iters: int = MAX_ITERS) -> PCAModel:
    mean, C = covariance(X_ns)
    vals, vecs, flagged = power_iteration(C, k, max_iters)
    return PCAModel(mean, C, vals, vecs, flagged)


def project(X_ns, model: PCAModel) -> np.ndarray:
    X = np.asarray(X_ns, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.components.shape[1]:
        raise ShapeMismatch("column count does not match the model")
    return (X - model.mean) @ model.components.T


# ---- exact fixed-point path (the circuit's witness values) ---------------


@dataclass(frozen=True)
class FixedPCA:
    """All PCA quantities the circuit sees, as signed raw integers."""

    mean: list  # m, floor(sum / N)
    mean_rem: list
    scatter: list  # m x m, X_c^T X_c at scale 2^40
    cov: list  # m x m, floor(S / ((N-1) 2^20))
    cov_rem: list
    eigenvalues: list  # k
    components: list  # k x m
    Y: list  # N x k
    Y_rem: list  # N x k
    degenerate: tuple = ()


def fixed_mean(X_raw):
    N = len(X_raw)
    sums = [int(s) for s in np.asarray(X_raw, dtype=object).sum(axis=0)]
    return [s // N for s in sums], [s % N for s in sums]


def fit_fixed(X_raw, k: int, max_iters: int = MAX_ITERS) -> FixedPCA:
    X = np.asarray(X_raw, dtype=np.int64)
    N, m = X.shape
    if N < 2:
        raise DegenerateInput("covariance needs at least two rows")
    mean, mean_rem = fixed_mean(X)
    Xc = X.astype(object) - np.array(mean, dtype=object)
    S = (Xc.T @ Xc).tolist()
    div = (N - 1) * ONE
    cov = [[S[i][j] // div for j in range(m)] for i in range(m)]
    cov_rem = [[S[i][j] % div for j in range(m)] for i in range(m)]
    Cf = np.array(cov, dtype=float) / ONE
    vals, vecs, flagged = power_iteration(Cf, k, max_iters)
    lam = [int(np.floor(v * ONE + 0.5)) for v in vals]
    V = [[int(np.floor(x * ONE + 0.5)) for x in row] for row in vecs]
    acc = Xc @ np.array(V, dtype=object).T  # N x k at scale 2^40
    Y = [[a >> SCALE_BITS for a in row] for row in acc.tolist()]
    Y_rem = [[a & (ONE - 1) for a in row] for row in acc.tolist()]
    bound = 1 << (TOTAL_BITS - 1)
    if any(abs(y) >= bound for row in Y for y in row):
        raise RangeOverflow("projected values exceed the fixed-point range")
    return FixedPCA(mean, mean_rem, S, cov, cov_rem, lam, V, Y, Y_rem, flagged)


def project_fixed(X_raw, mean, components):
    """floor(V (x - mean) / 2^20) for each row."""
    Xc = np.asarray(X_raw, dtype=np.int64).astype(object) - np.array(mean, dtype=object)
    acc = Xc @ np.array(components, dtype=object).T
    return [[a >> SCALE_BITS for a in row] for row in acc.tolist()]
