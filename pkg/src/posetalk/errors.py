"""Exception types shared across the package."""


class ContractError(ValueError):
    """An argument violates a documented precondition or invariant."""


class CapacityError(RuntimeError):
    """A spliced sequence would exceed the model's maximum length."""


class TokenError(ValueError):
    """A token id is outside the vocabulary."""


class NumericError(RuntimeError):
    """Non-finite values appeared during a forward pass."""

    def __init__(self, message: str, layer: int | None = None):
        super().__init__(message)
        self.layer = layer


class CheckpointCorruptError(RuntimeError):
    """Checkpoint bytes fail digest or format validation."""


class DatasetFormatError(ValueError):
    """A dataset file line does not parse."""

    def __init__(self, message: str, line_number: int | None = None):
        super().__init__(message)
        self.line_number = line_number


class PayloadResolutionError(FileNotFoundError):
    """A record references a payload that cannot be resolved."""


class JudgeUnavailableError(RuntimeError):
    """The external judge cannot be reached or is misconfigured."""
