"""Exceptions raised by the trainer package."""


class TrainerError(Exception):
    """Base class for all trainer errors"""


class ConfigError(TrainerError):
    """Invalid experiment or engine configuration"""


class DatasetError(TrainerError):
    """Dataset is unusable for the requested operation"""


class DatasetParseError(DatasetError):
    """A dataset file could not be parsed"""

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)


class ModelInputError(TrainerError):
    """Feature vector or weight matrix has the wrong shape"""


class NumericError(TrainerError):
    """A non-finite value reached the optimizer"""

    def __init__(self, message, step=None):
        self.step = step
        if step is not None:
            message = f"{message} at step {step}"
        super().__init__(message)


class DivergenceError(TrainerError):
    """Training diverged (loss blew up or weights became non-finite)"""


class WorkerFailure(TrainerError):
    """A concurrent worker raised while computing a gradient"""
