"""Exception hierarchy shared by every layer of the package."""


class MulSanError(Exception):
    """Base class for all library errors."""


class FormatError(MulSanError):
    """A serialized object (key, signature, message, block, proof) is malformed."""


# field
class ZeroInverse(MulSanError, ZeroDivisionError):
    pass


class NoUniqueSolution(MulSanError):
    pass


class DimensionMismatch(MulSanError, ValueError):
    pass


class EntropyFailure(MulSanError):
    pass


class SamplingExhausted(MulSanError):
    pass


# mqsig
class InversionExhausted(MulSanError):
    pass


# sss
class CountMismatch(MulSanError, ValueError):
    pass


class NotAdmissible(MulSanError):
    pass


class InvalidFixedSignature(MulSanError):
    """The signer's signature on the fixed part does not verify (the scheme's bottom output)."""


class PreconditionViolated(MulSanError):
    pass


# auditlog
class SchemaViolation(MulSanError, ValueError):
    pass


class UnknownField(MulSanError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


# ledger
class DanglingSanitizeEvent(MulSanError):
    pass


class NothingPending(MulSanError):
    pass


class UnknownRecord(MulSanError, KeyError):
    def __str__(self):
        return Exception.__str__(self)
