"""Exception hierarchy.

Everything raised on purpose by the library derives from ``ModelError`` so the
CLI can map it to exit status 2.
"""


class ModelError(ValueError):
    """Base class for numerical or model errors."""


class NotDecomposable(ModelError):
    pass


class InvalidBand(ModelError):
    pass


class NotInQG(ModelError):
    """A clique block failed its Cholesky factorization."""


class NotPositiveDefinite(ModelError):
    pass


class TreeMismatch(ModelError):
    pass


class IndexOutOfRange(ModelError, IndexError):
    pass


class DomainError(ModelError):
    pass


class MomentUndefined(ModelError):
    pass


class SampleDeficient(ModelError):
    pass


class NoAdmissiblePoint(ModelError):
    pass


class DimensionTooLarge(ModelError):
    pass


class EmptyData(ModelError):
    pass


class ParseError(ModelError):
    pass


class MissingValue(ParseError):
    pass


class SingularBlock(ModelError):
    pass
