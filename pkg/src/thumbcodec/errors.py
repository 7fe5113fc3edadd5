"""Exception types shared across the toolkit."""


class DatasetNotFoundError(FileNotFoundError):
    """A required dataset file is missing."""


class CorruptDatasetError(ValueError):
    """A dataset file is truncated or malformed; carries the byte offset."""

    def __init__(self, message, offset=None):
        super().__init__(message)
        self.offset = offset


class SolverDivergedError(RuntimeError):
    """The sparse-code solver's objective blew up; reduce the step size."""


class TrainingDivergedError(RuntimeError):
    """A training update produced non-finite values."""

    def __init__(self, message, epoch=None, batch=None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch


class CorruptFileError(ValueError):
    """A codec file has a bad magic number, version, or structure."""


class IncompatibleDictionaryError(ValueError):
    """Dictionary geometry does not match the compressed image header."""
