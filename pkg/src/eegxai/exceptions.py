"""Exception types shared across the package."""


class EegXaiError(Exception):
    """Base class for errors raised by this package."""


class TrainingDivergedError(EegXaiError):
    """Training produced a non-finite loss."""


class StratificationError(EegXaiError):
    """A class has no samples available for a stratified split."""


class DatasetFormatError(EegXaiError):
    """A dataset file does not conform to the CSV schema."""


class ProtocolError(EegXaiError):
    """The perturbation protocol cannot run on the given inputs."""
