class BitgasError(Exception):
    pass


class InvalidParameterError(BitgasError, ValueError):
    """Argument outside the accepted range (bad length, shift, count, probability)."""


class DomainError(BitgasError, ValueError):
    """A formula evaluated outside its mathematical domain (e.g. mean/M > 1/2 in the C-model)."""
