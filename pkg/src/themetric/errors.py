"""Exception hierarchy.

Each concrete error carries the process exit code the command-line interface
maps it to.
"""


class ThemetricError(Exception):
    exit_code = 1


class ConfigError(ThemetricError):
    exit_code = 2


class DataError(ThemetricError):
    exit_code = 3


class TrainingError(ThemetricError):
    """Training failed to produce a usable model."""

    exit_code = 4


class DivergenceError(TrainingError):
    def __init__(self, kind: str, epoch: int):
        super().__init__(f"{kind} diverged at epoch {epoch}: non-finite parameters")
        self.kind = kind
        self.epoch = epoch


class SingularSystemError(TrainingError):
    pass


class ReportIOError(ThemetricError):
    exit_code = 5
