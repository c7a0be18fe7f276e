"""Exception hierarchy shared by all harness modules."""


class ClimashiftError(Exception):
    """Base class for every error raised by this package."""


class ContractError(ClimashiftError, ValueError):
    """An operation was called in violation of its contract
    (shape mismatch, empty input, out-of-range argument, untrained model)."""


class ConfigError(ClimashiftError, ValueError):
    """An experiment or generation config is invalid.

    Messages are prefixed with the JSON field path of the offending value.
    """


class DataIntegrityError(ClimashiftError):
    """Base for on-disk dataset problems detected while reading."""


class MissingFileError(DataIntegrityError):
    """A file listed in the manifest does not exist."""


class ChecksumError(DataIntegrityError):
    """A file's bytes do not match the manifest (corruption or truncation)."""


class VersionError(DataIntegrityError):
    """The manifest declares an unsupported format version."""


class SingularDesignError(ClimashiftError):
    """Least-squares design matrix is rank deficient with no ridge term."""


class DivergenceError(ClimashiftError):
    """Training produced a non-finite loss or parameter value."""

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch


class IncompleteRecordsError(ClimashiftError):
    """The evaluation records are missing a cell needed for the results table."""
