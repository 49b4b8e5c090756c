"""Exception hierarchy.

Each family carries the CLI exit code it maps to, so the command line
front end never has to enumerate concrete exception types.
"""


class GenprobError(Exception):
    exit_code = 1


class InputError(GenprobError, ValueError):
    """Malformed, mis-shaped or unnormalized input."""

    exit_code = 2


class ParseError(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class NotSquare(InputError):
    pass


class NotNormalized(InputError):
    pass


class InvalidDistribution(InputError):
    pass


class InconsistentContext(InputError):
    pass


class EmptySample(InputError):
    pass


class SequenceSpaceTooLarge(InputError):
    pass


class OrderMismatch(InputError):
    pass


class DegenerateError(GenprobError, ArithmeticError):
    """A numerically degenerate problem: singular, ill-conditioned, zero mass."""

    exit_code = 3


class Singular(DegenerateError):
    pass


class IllConditioned(DegenerateError):
    pass


class ZeroMarginal(DegenerateError):
    pass


class ProductDistribution(DegenerateError):
    pass


class RuleSpecError(GenprobError, ValueError):
    exit_code = 4


class EvenLength(RuleSpecError):
    pass


class DomainError(RuleSpecError):
    pass
