"""Exception types raised by covseg.

Every error carries a short machine-readable ``code`` so the CLI can print a
single parseable line on failure.
"""


class CovsegError(ValueError):
    code = "error"


class EmptyWindowError(CovsegError):
    code = "empty_window"

    def __init__(self, message="empty window"):
        super().__init__(message)


class SingularCovarianceError(CovsegError):
    code = "singular_covariance"

    def __init__(self, pivot=None, offset=None, window=None, message=None):
        self.pivot = pivot
        self.offset = offset
        self.window = window
        if message is None:
            parts = ["singular covariance"]
            if offset is not None:
                parts.append(f"at t={offset}")
            if window is not None:
                parts.append(f"in range [{window[0]}, {window[1]})")
            if pivot is not None:
                parts.append(f"(Cholesky pivot {pivot})")
            message = " ".join(parts)
        super().__init__(message)

    def with_context(self, offset=None, window=None):
        return SingularCovarianceError(
            pivot=self.pivot,
            offset=self.offset if offset is None else offset,
            window=self.window if window is None else window,
        )


class AsymmetricMatrixError(CovsegError):
    code = "asymmetric_matrix"

    def __init__(self, message="asymmetric matrix"):
        super().__init__(message)


class SegmentTooShortError(CovsegError):
    code = "segment_too_short"

    def __init__(self, message="segment too short"):
        super().__init__(message)


class RangeError(CovsegError):
    code = "range_out_of_bounds"

    def __init__(self, message="range out of bounds"):
        super().__init__(message)


class InputFormatError(CovsegError):
    """Malformed input file; ``line`` and ``column`` locate the problem."""

    code = "input_format"

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if column is not None:
            loc.append(f"column {column!r}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)


class NonPositiveRateError(InputFormatError):
    code = "non_positive_rate"


class AlignmentGapError(InputFormatError):
    code = "alignment_gap"


class ScenarioError(InputFormatError):
    code = "scenario_parse"
