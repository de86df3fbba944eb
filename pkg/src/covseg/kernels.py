"""Estimation and matrix primitives.

Gaussian maximum-likelihood estimates over column windows, a Cholesky-based
log-determinant, a cyclic Jacobi eigensolver for symmetric matrices, the
Gaussian differential entropy and the Marchenko-Pastur eigenvalue density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import AsymmetricMatrixError, EmptyWindowError, RangeError, SingularCovarianceError

LOG_2PI_E = math.log(2.0 * math.pi * math.e)

Window = Tuple[int, int]


@dataclass(frozen=True)
class ReturnMatrix:
    """M series (rows) by T observations (columns) of log-returns.

    ``timestamps`` are the observation tags, one per column; ISO date strings
    or integers, strictly increasing.
    """

    values: np.ndarray
    labels: Tuple[str, ...] = ()
    timestamps: Tuple[Union[str, int], ...] = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim == 1:
            values = values[None, :]
        if values.ndim != 2:
            raise ValueError("values must be a 2-d array (series x observations)")
        m, t = values.shape
        if m < 1 or t < 2:
            raise ValueError(f"need M >= 1 and T >= 2, got M={m}, T={t}")
        if not np.all(np.isfinite(values)):
            raise ValueError("values contain NaN or infinite entries")
        values.setflags(write=False)
        labels = tuple(self.labels) if len(self.labels) else tuple(f"s{i}" for i in range(m))
        timestamps = tuple(self.timestamps) if len(self.timestamps) else tuple(range(t))
        if len(labels) != m:
            raise ValueError(f"{len(labels)} labels for {m} series")
        if len(timestamps) != t:
            raise ValueError(f"{len(timestamps)} timestamps for {t} observations")
        if any(b <= a for a, b in zip(timestamps, timestamps[1:])):
            raise ValueError("timestamps must be strictly increasing")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "timestamps", timestamps)

    @property
    def M(self) -> int:
        return self.values.shape[0]

    @property
    def T(self) -> int:
        return self.values.shape[1]

    def take_rows(self, order: Sequence[int]) -> "ReturnMatrix":
        order = list(order)
        return ReturnMatrix(self.values[order], tuple(self.labels[i] for i in order), self.timestamps)


@dataclass(frozen=True)
class GaussianEstimate:
    mean: np.ndarray
    covariance: np.ndarray
    count: int

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class EigenSpectrum:
    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray] = field(default=None, repr=False)


def as_values(data) -> np.ndarray:
    if isinstance(data, ReturnMatrix):
        return data.values
    values = np.asarray(data, dtype=float)
    if values.ndim == 1:
        values = values[None, :]
    return values


def check_window(window: Optional[Window], total: int) -> Window:
    if window is None:
        return 0, total
    start, end = int(window[0]), int(window[1])
    if start < 0 or end > total or start > end:
        raise RangeError(f"range out of bounds: [{start}, {end}) not within [0, {total})")
    return start, end


def symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def regularize(cov: np.ndarray, epsilon: float) -> np.ndarray:
    """Add ``epsilon * trace(C) / M`` to the diagonal; identity for epsilon == 0."""
    if epsilon == 0:
        return cov
    m = cov.shape[-1]
    ridge = epsilon * np.trace(cov, axis1=-2, axis2=-1) / m
    return cov + np.asarray(ridge)[..., None, None] * np.eye(m)


def estimate_gaussian(data, window: Optional[Window] = None) -> GaussianEstimate:
    """Maximum-likelihood mean and covariance (1/n denominator) over ``window``.

    The covariance is centred on the window's own mean.
    """
    values = as_values(data)
    start, end = check_window(window, values.shape[1])
    n = end - start
    if n <= 0:
        raise EmptyWindowError()
    block = values[:, start:end]
    mean = block.mean(axis=1)
    centred = block - mean[:, None]
    cov = symmetrize(centred @ centred.T / n)
    return GaussianEstimate(mean=mean, covariance=cov, count=n)


def cholesky_lower(cov: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor; raises SingularCovarianceError at the first pivot <= 0."""
    a = np.asarray(cov, dtype=float)
    m = a.shape[0]
    low = np.zeros_like(a)
    for j in range(m):
        row = low[j, :j]
        pivot = a[j, j] - row @ row
        if not pivot > 0.0:
            raise SingularCovarianceError(pivot=j)
        d = math.sqrt(pivot)
        low[j, j] = d
        if j + 1 < m:
            low[j + 1:, j] = (a[j + 1:, j] - low[j + 1:, :j] @ row) / d
    return low


def log_det_psd(cov: np.ndarray) -> float:
    """log|C| computed as twice the sum of log-diagonal of the Cholesky factor."""
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    low = cholesky_lower(cov)
    return 2.0 * float(np.sum(np.log(np.diag(low))))


def _check_symmetric(a: np.ndarray, tol: float = 1e-10) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise AsymmetricMatrixError(f"asymmetric matrix: expected square, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
    if np.max(np.abs(a - a.T), initial=0.0) > tol * scale:
        raise AsymmetricMatrixError()


def eigen_symmetric(cov: np.ndarray, vectors: bool = False, max_sweeps: int = 100) -> EigenSpectrum:
    """Full spectrum of a real symmetric matrix by cyclic Jacobi rotations.

    Eigenvalues are returned in descending order; with ``vectors=True`` the
    columns of ``eigenvectors`` are the matching orthonormal eigenvectors.
    """
    a = np.array(cov, dtype=float, copy=True)
    a = np.atleast_2d(a)
    _check_symmetric(a)
    a = symmetrize(a)
    m = a.shape[0]
    v = np.eye(m)
    total = float(np.sum(a * a))
    for _ in range(max_sweeps):
        off = total - float(np.sum(np.diag(a) ** 2))
        if off <= (1e-30 * total) or total == 0.0:
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                h = a[q, q] - a[p, p]
                if abs(apq) < 1e-18 * abs(h):
                    t = apq / h  # theta^2 would overflow
                else:
                    theta = h / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                a[:, p] = c * col_p - s * a[:, q]
                a[:, q] = s * col_p + c * a[:, q]
                row_p = a[p, :].copy()
                a[p, :] = c * row_p - s * a[q, :]
                a[q, :] = s * row_p + c * a[q, :]
                a[p, q] = a[q, p] = 0.0
                vec_p = v[:, p].copy()
                v[:, p] = c * vec_p - s * v[:, q]
                v[:, q] = s * vec_p + c * v[:, q]
    eigenvalues = np.diag(a).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    return EigenSpectrum(eigenvalues=eigenvalues, eigenvectors=v[:, order] if vectors else None)


def gaussian_entropy(est: Union[GaussianEstimate, np.ndarray]) -> float:
    """Differential entropy 0.5 * log((2 pi e)^M |C|) of a Gaussian."""
    cov = est.covariance if isinstance(est, GaussianEstimate) else np.atleast_2d(est)
    m = cov.shape[0]
    return 0.5 * m * LOG_2PI_E + 0.5 * log_det_psd(cov)


def marchenko_pastur_edges(M: int, T: int, sigma2: float = 1.0) -> Tuple[float, float]:
    q = math.sqrt(M / T)
    return sigma2 * (1.0 - q) ** 2, sigma2 * (1.0 + q) ** 2


def marchenko_pastur_density(lam, M: int, T: int, sigma2: float = 1.0):
    """Marchenko-Pastur density for an M x T sample, zero outside its support.

    Accepts a scalar or array of eigenvalues. For M > T the continuous part
    integrates to T/M (the remaining mass sits at zero and is not returned).
    """
    if M < 1 or T < 1 or not sigma2 > 0:
        raise ValueError("need M >= 1, T >= 1 and sigma2 > 0")
    lo, hi = marchenko_pastur_edges(M, T, sigma2)
    lam_arr = np.asarray(lam, dtype=float)
    inside = (lam_arr >= lo) & (lam_arr <= hi) & (lam_arr > 0)
    safe = np.where(inside, lam_arr, 1.0)
    radicand = np.clip((safe - lo) * (hi - safe), 0.0, None)
    dens = np.where(inside, (T / M) * np.sqrt(radicand) / (2.0 * math.pi * sigma2 * safe), 0.0)
    if np.ndim(lam) == 0:
        return float(dens)
    return dens
