"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front end can map
failures onto its documented exit statuses without a lookup table.
"""


class MultitrendError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 3


class ParseError(MultitrendError):
    exit_code = 2


class ConfigError(MultitrendError):
    exit_code = 4


class NumericError(MultitrendError):
    exit_code = 3


class DegenerateWindow(NumericError):
    """A (u, h) pair whose kernel window holds too few design points."""


class EmptyTable(NumericError):
    """Every grid point of a weight table was degenerate."""


class InvalidBandwidth(ConfigError):
    pass


class LengthMismatch(NumericError):
    pass


class NonPositiveSigma(NumericError):
    pass


class InsufficientData(NumericError):
    pass


class SingularSystem(NumericError):
    pass


class ExplosiveFit(NumericError):
    """Coefficients sum to one, so the long-run variance is undefined."""


class SingularDesign(NumericError):
    pass


class NonStationarySpec(ConfigError):
    pass
