"""Recursive two-Gaussian segmentation of a multivariate series.

For a window of n columns and a split offset t, the split gain is

    delta(t) = n/2 log|C| - t/2 log|C_left| - (n - t)/2 log|C_right|

with maximum-likelihood covariances of the whole window and of its two
parts. Divided by n it is the Jensen-Shannon divergence between the two
fitted Gaussians with weights t/n and (n - t)/n. The window is split at the
maximising offset while the gain reaches ``delta0``, and each part is
handled the same way.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import SegmentTooShortError, SingularCovarianceError
from .kernels import (
    GaussianEstimate,
    Window,
    as_values,
    check_window,
    cholesky_lower,
    eigen_symmetric,
    estimate_gaussian,
    gaussian_entropy,
    log_det_psd,
    regularize,
    symmetrize,
)

log = logging.getLogger(__name__)

BELOW_THRESHOLD = "below_threshold"
TOO_SHORT = "too_short"
MAX_DEPTH = "max_depth"


@dataclass(frozen=True)
class SplitConfig:
    """Segmentation parameters.

    ``delta0=None`` means the default threshold of 10 * M, resolved against
    the data by :meth:`resolve`. Split offsets are restricted to
    ``[k*M + 1, n - k*M - 1]`` with ``k = min_margin_factor``.
    """

    delta0: Optional[float] = None
    min_margin_factor: int = 3
    max_depth: int = 30
    jitter_epsilon: float = 0.0
    refine: bool = False
    max_refine_sweeps: int = 10

    def __post_init__(self):
        if self.delta0 is not None and not self.delta0 > 0:
            raise ValueError("delta0 must be > 0")
        if self.min_margin_factor < 1:
            raise ValueError("min_margin_factor must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.jitter_epsilon < 0:
            raise ValueError("jitter_epsilon must be >= 0")

    def resolve(self, M: int) -> "SplitConfig":
        if self.delta0 is not None:
            return self
        return SplitConfig(
            delta0=10.0 * M,
            min_margin_factor=self.min_margin_factor,
            max_depth=self.max_depth,
            jitter_epsilon=self.jitter_epsilon,
            refine=self.refine,
            max_refine_sweeps=self.max_refine_sweeps,
        )

    def margin(self, M: int) -> int:
        return self.min_margin_factor * M + 1

    def admissible(self, n: int, M: int) -> Tuple[int, int]:
        """Inclusive bounds (t_min, t_max) of admissible split offsets."""
        k = self.margin(M)
        return k, n - k

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DeltaSpectrum:
    segment_range: Window
    offsets: np.ndarray
    values: np.ndarray
    best_offset: int
    best_value: float

    @property
    def length(self) -> int:
        return self.segment_range[1] - self.segment_range[0]

    @property
    def best_column(self) -> int:
        return self.segment_range[0] + self.best_offset


@dataclass
class Segment:
    range: Window
    stats: GaussianEstimate
    entropy: float
    eigenvalues: np.ndarray
    depth: int

    @property
    def length(self) -> int:
        return self.range[1] - self.range[0]


@dataclass
class SplitNode:
    """One node of the recursion tree.

    Internal nodes have ``split`` set and two children; leaves carry the
    terminating ``reason`` and, where a spectrum was computed, the rejected
    ``delta_star``.
    """

    range: Window
    depth: int
    delta_star: Optional[float] = None
    split: Optional[int] = None
    reason: Optional[str] = None
    left: Optional["SplitNode"] = None
    right: Optional["SplitNode"] = None

    @property
    def accepted(self) -> bool:
        return self.split is not None

    def to_dict(self) -> dict:
        out = {
            "range": [int(self.range[0]), int(self.range[1])],
            "depth": self.depth,
            "delta_star": None if self.delta_star is None else float(self.delta_star),
            "accepted": self.accepted,
        }
        if self.accepted:
            out["split"] = int(self.split)
            out["left"] = self.left.to_dict()
            out["right"] = self.right.to_dict()
        else:
            out["reason"] = self.reason
        return out

    def walk(self):
        yield self
        if self.accepted:
            yield from self.left.walk()
            yield from self.right.walk()


@dataclass
class SegmentationResult:
    segments: List[Segment]
    tree: SplitNode
    config: SplitConfig
    refined_boundaries: Optional[List[int]] = field(default=None)

    @property
    def boundaries(self) -> List[int]:
        """Start columns of every segment but the first."""
        return [s.range[0] for s in self.segments[1:]]


def _window_logdets(cov: np.ndarray, offsets: np.ndarray, window: Window) -> np.ndarray:
    try:
        low = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        low = None
    if low is not None:
        diag = np.diagonal(low, axis1=-2, axis2=-1)
        if np.all(diag > 0) and np.all(np.isfinite(diag)):
            return 2.0 * np.sum(np.log(diag), axis=-1)
    # locate the first failing offset and its pivot
    for i, c in enumerate(cov):
        try:
            cholesky_lower(c)
        except SingularCovarianceError as exc:
            raise exc.with_context(offset=int(offsets[i]), window=window) from None
    raise SingularCovarianceError(window=window)


def delta_spectrum(data, window: Optional[Window] = None, config: SplitConfig = SplitConfig()) -> DeltaSpectrum:
    """Split gain at every admissible offset of ``window``.

    Window estimates come from running sums of r and r r^T, so one spectrum
    costs a single pass over the data plus one batched Cholesky per side.
    """
    values = as_values(data)
    m, total = values.shape
    start, end = check_window(window, total)
    n = end - start
    t_min, t_max = config.admissible(n, m)
    if t_max < t_min or n <= 2 * config.margin(m):
        raise SegmentTooShortError(
            f"segment too short: range [{start}, {end}) has {n} columns, needs more than {2 * config.margin(m)}"
        )
    block = values[:, start:end].T
    centred = block - block.mean(axis=0)
    s1 = np.cumsum(centred, axis=0)
    s2 = np.cumsum(centred[:, :, None] * centred[:, None, :], axis=0)

    offsets = np.arange(t_min, t_max + 1)
    t = offsets.astype(float)[:, None, None]
    u = (n - offsets).astype(float)[:, None, None]

    left_sum, left_sq = s1[offsets - 1], s2[offsets - 1]
    right_sum, right_sq = s1[-1] - left_sum, s2[-1] - left_sq
    left_mean = left_sum[:, :, None] / t
    right_mean = right_sum[:, :, None] / u
    cov_left = symmetrize(left_sq / t - left_mean * np.swapaxes(left_mean, 1, 2))
    cov_right = symmetrize(right_sq / u - right_mean * np.swapaxes(right_mean, 1, 2))
    cov_full = symmetrize(s2[-1] / n - np.outer(s1[-1], s1[-1]) / n**2)

    eps = config.jitter_epsilon
    cov_left = regularize(cov_left, eps)
    cov_right = regularize(cov_right, eps)
    cov_full = regularize(cov_full, eps)

    try:
        ld_full = log_det_psd(cov_full)
    except SingularCovarianceError as exc:
        raise exc.with_context(window=(start, end)) from None
    ld_left = _window_logdets(cov_left, offsets, (start, end))
    ld_right = _window_logdets(cov_right, offsets, (start, end))

    gains = 0.5 * (n * ld_full - offsets * ld_left - (n - offsets) * ld_right)
    best = int(np.argmax(gains))  # first occurrence on ties
    return DeltaSpectrum(
        segment_range=(start, end),
        offsets=offsets,
        values=gains,
        best_offset=int(offsets[best]),
        best_value=float(gains[best]),
    )


def _plugin_loglik(block: np.ndarray) -> float:
    """Sum of per-observation Gaussian log-densities at the window MLE.

    ``block`` is observations x series. Uses LU-based solves and slogdet so it
    shares no numerical path with the running-sums spectrum.
    """
    n, m = block.shape
    dev = block - block.mean(axis=0)
    cov = dev.T @ dev / n
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0 or not np.isfinite(logdet):
        raise SingularCovarianceError()
    try:
        solved = np.linalg.solve(cov, dev.T)
    except np.linalg.LinAlgError:
        raise SingularCovarianceError() from None
    quad = np.einsum("si,is->s", dev, solved)
    logp = -0.5 * m * math.log(2.0 * math.pi) - 0.5 * logdet - 0.5 * quad
    return float(np.sum(logp))


def brute_force_delta(data, window: Optional[Window], t: int) -> float:
    """log L2(t) - log L1 by summing pointwise Gaussian log-densities.

    Reference implementation for testing :func:`delta_spectrum`.
    """
    values = as_values(data)
    start, end = check_window(window, values.shape[1])
    n = end - start
    if not 0 < t < n:
        raise SegmentTooShortError(f"segment too short: offset {t} not inside (0, {n})")
    block = values[:, start:end].T
    try:
        whole = _plugin_loglik(block)
        left = _plugin_loglik(block[:t])
        right = _plugin_loglik(block[t:])
    except SingularCovarianceError as exc:
        raise exc.with_context(offset=t, window=(start, end)) from None
    return left + right - whole


def normalized_js(spectrum: DeltaSpectrum, range_length: Optional[int] = None) -> np.ndarray:
    """Split gains divided by the window length: the weighted JS divergence."""
    n = spectrum.length if range_length is None else range_length
    return np.asarray(spectrum.values, dtype=float) / n


def _terminal_segment(values: np.ndarray, window: Window, depth: int) -> Segment:
    est = estimate_gaussian(values, window)
    try:
        entropy = gaussian_entropy(est)
    except SingularCovarianceError as exc:
        raise exc.with_context(window=window) from None
    spectrum = eigen_symmetric(est.covariance)
    return Segment(range=window, stats=est, entropy=entropy, eigenvalues=spectrum.eigenvalues, depth=depth)


def _thread_count() -> int:
    raw = os.environ.get("COVSEG_THREADS", "1").strip() or "1"
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"COVSEG_THREADS must be an integer, got {raw!r}") from None
    if n <= 0:
        n = os.cpu_count() or 1
    return n


def _evaluate(values: np.ndarray, node: SplitNode, config: SplitConfig) -> Optional[DeltaSpectrum]:
    try:
        return delta_spectrum(values, node.range, config)
    except SegmentTooShortError:
        return None


def segment_recursive(data, config: SplitConfig = SplitConfig()) -> SegmentationResult:
    """Recursive bisection with the ``delta0`` termination rule.

    Ranges at the same depth are evaluated together (optionally on
    ``COVSEG_THREADS`` threads); the assembled result does not depend on
    completion order.
    """
    values = as_values(data)
    m, total = values.shape
    config = config.resolve(m)
    root = SplitNode(range=(0, total), depth=0)
    frontier = [root]
    threads = _thread_count()
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        while frontier:
            if pool is None:
                spectra = [_evaluate(values, node, config) for node in frontier]
            else:
                spectra = list(pool.map(lambda nd: _evaluate(values, nd, config), frontier))
            next_frontier = []
            for node, spec in zip(frontier, spectra):
                if spec is None:
                    node.reason = TOO_SHORT
                    continue
                node.delta_star = spec.best_value
                if spec.best_value < config.delta0:
                    node.reason = BELOW_THRESHOLD
                    continue
                if node.depth >= config.max_depth:
                    node.reason = MAX_DEPTH
                    log.warning(
                        "max_depth %d reached at range [%d, %d) with delta*=%.6g >= delta0",
                        config.max_depth, node.range[0], node.range[1], spec.best_value,
                    )
                    continue
                cut = spec.best_column
                node.split = cut
                node.left = SplitNode(range=(node.range[0], cut), depth=node.depth + 1)
                node.right = SplitNode(range=(cut, node.range[1]), depth=node.depth + 1)
                next_frontier.extend([node.left, node.right])
            frontier = next_frontier
    finally:
        if pool is not None:
            pool.shutdown()

    leaves = [nd for nd in root.walk() if not nd.accepted]
    leaves.sort(key=lambda nd: nd.range[0])
    refined = None
    if config.refine and len(leaves) > 1:
        refined = refine_boundaries(values, [nd.range[0] for nd in leaves[1:]], config)
        edges = [0] + refined + [total]
        depth_at = {nd.range[0]: nd.depth for nd in leaves}
        segments = [
            _terminal_segment(values, (a, b), depth_at.get(a, 0)) for a, b in zip(edges, edges[1:])
        ]
    else:
        segments = [_terminal_segment(values, nd.range, nd.depth) for nd in leaves]
    return SegmentationResult(segments=segments, tree=root, config=config, refined_boundaries=refined)


def refine_boundaries(values, boundaries: List[int], config: SplitConfig) -> List[int]:
    """Re-optimise each interior boundary between its fixed neighbours.

    Sweeps left to right until no boundary moves or ``max_refine_sweeps`` is
    reached. Pairs too short for an admissible window keep their boundary.
    """
    values = as_values(values)
    total = values.shape[1]
    bounds = list(boundaries)
    for _ in range(config.max_refine_sweeps):
        moved = False
        for i in range(len(bounds)):
            lo = bounds[i - 1] if i > 0 else 0
            hi = bounds[i + 1] if i + 1 < len(bounds) else total
            try:
                spec = delta_spectrum(values, (lo, hi), config)
            except SegmentTooShortError:
                continue
            if spec.best_column != bounds[i]:
                bounds[i] = spec.best_column
                moved = True
        if not moved:
            break
    return bounds


def recompute_entropy(data, window: Window) -> float:
    return gaussian_entropy(estimate_gaussian(data, window))

