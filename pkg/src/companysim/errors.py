"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1 (usage),
DataValidationError -> 2, ComputationError / ProviderError -> 3.
"""


class CompanySimError(Exception):
    """Base class for all library errors."""


class ConfigError(CompanySimError):
    """Bad run configuration: unknown keys, invalid values, missing files."""


class DataValidationError(CompanySimError):
    """Input data violates a documented format or invariant."""


class CorpusFormatError(DataValidationError):
    """Malformed corpus record; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class HierarchyError(DataValidationError):
    """GICS labels inconsistent with the loaded hierarchy table."""


class SectionNotFoundError(DataValidationError):
    """Requested filing section heading was not found."""


class SectionTooShortError(DataValidationError):
    """Extracted filing section is empty or below the minimum length."""


class CacheFormatError(DataValidationError):
    """Embedding cache file is corrupt or does not match expectations."""


class ComputationError(CompanySimError):
    """A numeric procedure cannot produce a valid result."""


class ZeroVectorError(ComputationError):
    """Cosine similarity requested against an all-zero vector."""


class InsufficientOverlapError(ComputationError):
    """Two return series share fewer common dates than required."""


class ZeroVarianceError(ComputationError):
    """A return series is constant over the evaluation window."""


class RankDeficiencyError(ComputationError):
    """Design or data matrix has lower numerical rank than required."""


class ProviderError(CompanySimError):
    """An embedding provider failed to produce vectors."""


class RemoteTransportError(ProviderError):
    """Remote embedding endpoint unreachable or timed out."""


class RemoteStatusError(ProviderError):
    """Remote embedding endpoint answered with a non-success status."""

    def __init__(self, message: str, status: int):
        super().__init__(message)
        self.status = status


class RemoteProtocolError(ProviderError):
    """Remote endpoint answered 200 but the body violates the protocol.

    ``reason`` is one of "malformed_body", "count_mismatch",
    "dimension_mismatch".
    """

    def __init__(self, message: str, reason: str):
        super().__init__(message)
        self.reason = reason
