"""Exception hierarchy shared by all modules."""


class PGGibbsError(Exception):
    """Base class for library errors."""


class NumericalError(PGGibbsError, ArithmeticError):
    """A numerical routine failed to converge or produced an invalid value."""


class LPIterationLimit(NumericalError):
    """The simplex solver hit its iteration cap (distinct from infeasibility)."""


class ImproperPosteriorError(PGGibbsError):
    """The flat-prior posterior is improper for this dataset."""


class CertificateError(PGGibbsError):
    """A drift certificate could not be constructed."""


class InsufficientDataError(PGGibbsError, ValueError):
    """Too few draws for the requested output analysis."""
