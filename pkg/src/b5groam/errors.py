"""Exception hierarchy shared across the settlement stack."""


class B5GError(Exception):
    """Base class for every error raised by this package."""


# field / hash
class InverseOfZero(B5GError, ZeroDivisionError):
    pass


class WidthMismatch(B5GError, ValueError):
    pass


# commitments and circuit
class RangeViolation(B5GError, ValueError):
    pass


class ParameterMismatch(B5GError, ValueError):
    pass


class HashMismatch(B5GError):
    """Prover-side data does not open the committed hash."""


class TotalMismatch(B5GError):
    """Declared total disagrees with the rate schedule applied to the usage."""


# proof system
class NoContributions(B5GError, ValueError):
    pass


class ParamsTooSmall(B5GError, ValueError):
    pass


class UnsatisfiedConstraints(B5GError):
    def __init__(self, message: str, failing: list[int] | None = None):
        super().__init__(message)
        self.failing = failing or []


class ArityMismatch(B5GError, ValueError):
    pass


class DeserializationError(B5GError, ValueError):
    pass


# ledger
class LedgerError(B5GError):
    pass


class UnknownAccount(LedgerError):
    pass


class UnknownAgreement(LedgerError):
    pass


class InsufficientBalance(LedgerError):
    pass


class WrongPhase(LedgerError):
    pass


class AlreadyCommitted(LedgerError):
    pass


class ProofInvalid(LedgerError):
    pass


class InsufficientEscrow(LedgerError):
    pass


class VkMismatch(LedgerError):
    pass


class NotACommitment(LedgerError, TypeError):
    """A raw value was offered where a TEE-produced commitment is required."""


# rollup
class RollupError(B5GError):
    pass


class MalformedTx(RollupError):
    pass


class EmptyQueue(RollupError):
    pass


class RootMismatch(RollupError):
    pass


class InnerProofInvalid(RollupError):
    def __init__(self, index: int, message: str = ""):
        super().__init__(message or f"inner settlement proof at index {index} failed")
        self.index = index


class AttestationInvalid(RollupError):
    pass


class NotCommitted(RollupError):
    pass


class BatchAlreadyCommitted(RollupError, AlreadyCommitted):
    pass


# harness
class ScenarioInvalid(B5GError, ValueError):
    pass


class UnexpectedVerdict(B5GError):
    pass


class UnknownBackend(B5GError, ValueError):
    pass
