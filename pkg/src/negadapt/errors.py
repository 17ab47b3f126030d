"""Exception types shared across the toolkit."""


class NegadaptError(Exception):
    """Base class for all toolkit errors."""


# vector arithmetic

class DimensionMismatch(NegadaptError):
    """Operands have different dimensionality."""


class NonFiniteInput(NegadaptError):
    """A value is NaN or infinite."""


class ZeroVector(NegadaptError):
    """Zero embeddings signal upstream failure and are rejected outright."""


class InvariantViolation(NegadaptError):
    """An internal numeric invariant failed; indicates a bug, not bad data."""


# adapter / learning

class EmptyTrainingSet(NegadaptError):
    """No usable training triplets."""


class MissingEmbedding(NegadaptError):
    """A text could not be resolved to an embedding vector."""

    def __init__(self, text):
        self.text = text
        super().__init__(f"no embedding for text: {text!r}")


# dataset loading

class NoValidRows(NegadaptError):
    """A dataset file contained no parseable rows."""


class ScoreOutOfRange(NegadaptError):
    """A similarity score falls outside [0, 1] beyond tolerance after rescaling."""


class CannotNegate(NegadaptError):
    """No negation rule applies to the sentence."""


class MalformedGroup(NegadaptError):
    """A choice-item group does not have the expected line count."""


class TrainSizeTooLarge(NegadaptError):
    """Requested train size does not leave a non-empty test partition."""


# embedding store / provider

class ProviderError(NegadaptError):
    """The embeddings provider returned a non-retryable failure."""

    def __init__(self, message, status=None, body=None):
        self.status = status
        self.body = body
        super().__init__(message)


class InconsistentDimensions(NegadaptError):
    """Vectors in one response or store disagree on dimensionality."""


class RetriesExhausted(NegadaptError):
    """Transient provider failures persisted through every retry attempt."""


class CacheCorruption(NegadaptError):
    """A cache entry failed to read back cleanly."""

    def __init__(self, message, key=None):
        self.key = key
        super().__init__(message)


class FormatError(NegadaptError):
    """A store file violates its binary or JSONL layout."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)


class VersionUnsupported(NegadaptError):
    """A store file declares a format version this reader does not speak."""


# statistics

class DegenerateInput(NegadaptError):
    """Input carries no usable signal (constant series, all-zero differences)."""


class LengthMismatch(NegadaptError):
    """Paired sequences have different lengths."""


class InvalidPValue(NegadaptError):
    """A p-value lies outside (0, 1]."""


class DegenerateRescaleWarning(UserWarning):
    """Mean contribution has no positive maximum; rescaling was skipped."""
