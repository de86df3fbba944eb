"""Recursive Gaussian-likelihood segmentation of multivariate time series."""

__version__ = "0.1.0"

from .errors import CovsegError, SegmentTooShortError, SingularCovarianceError
from .kernels import (
    EigenSpectrum,
    GaussianEstimate,
    ReturnMatrix,
    eigen_symmetric,
    estimate_gaussian,
    gaussian_entropy,
    log_det_psd,
    marchenko_pastur_density,
)
from .segmentation import (
    DeltaSpectrum,
    SegmentationResult,
    SplitConfig,
    brute_force_delta,
    delta_spectrum,
    normalized_js,
    segment_recursive,
)

__all__ = [
    "CovsegError",
    "SegmentTooShortError",
    "SingularCovarianceError",
    "EigenSpectrum",
    "GaussianEstimate",
    "ReturnMatrix",
    "eigen_symmetric",
    "estimate_gaussian",
    "gaussian_entropy",
    "log_det_psd",
    "marchenko_pastur_density",
    "DeltaSpectrum",
    "SegmentationResult",
    "SplitConfig",
    "brute_force_delta",
    "delta_spectrum",
    "normalized_js",
    "segment_recursive",
]
