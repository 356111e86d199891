"""Exception hierarchy shared by every module of the toolkit."""


class BoundaryIndexError(Exception):
    """Base class for all errors raised by :mod:`boundary_index`."""


class EllipticityViolation(BoundaryIndexError):
    """The leading coefficient of a boundary symbol is singular, or the
    symbol has real roots, at some node."""

    def __init__(self, msg, node=None):
        super().__init__(msg)
        self.node = node


class SpectralGapViolation(BoundaryIndexError):
    """An eigenvalue of a companion matrix sits (numerically) on the
    imaginary axis, so the stable/unstable splitting is undefined."""


class ResidueFailure(BoundaryIndexError):
    """Contour evaluation of a residue sum did not converge."""


class NotIdempotent(BoundaryIndexError):
    """Input to an idempotent-only routine is not an idempotent."""


class CollarUnavailable(BoundaryIndexError):
    """No collar expansion (and hence no boundary matrix) is shipped for
    this operator."""


class QuadratureError(BoundaryIndexError):
    """A quadrature rule is not exact for the requested degree, or two
    refinements disagree."""


class KernelResolutionFailure(BoundaryIndexError):
    """The numerical null space of an operator could not be resolved."""


class IndexUnstable(BoundaryIndexError):
    """A Fredholm index estimate did not stabilise across the truncation
    schedule. The partial estimate is attached as ``estimate``."""

    def __init__(self, msg, estimate=None):
        super().__init__(msg)
        self.estimate = estimate


class UnderSampled(BoundaryIndexError):
    """Consecutive boundary samples of a loop are too far apart in
    argument for reliable branch tracking."""


class NotInvertibleOnBoundary(BoundaryIndexError):
    """A symbol is (numerically) singular somewhere on the boundary."""


class CalibrationRequired(BoundaryIndexError):
    """Orientation signs are needed but no calibration store was given."""


class CalibrationFailure(BoundaryIndexError):
    """Calibration could not be performed or a stored calibration does not
    reproduce its reference problem."""


class SpecParseError(BoundaryIndexError):
    """Malformed operator or symbol file."""

    def __init__(self, msg, line=None, path=None):
        super().__init__(msg)
        self.msg = msg
        self.line = line
        self.path = path

    def __str__(self):
        where = ""
        if self.path is not None:
            where += f"{self.path}:"
        if self.line is not None:
            where += f"{self.line}:"
        return f"{where} {self.msg}".strip()
