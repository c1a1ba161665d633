"""Failure classes shared across the pipeline.

Every error carries a stable machine-readable ``code`` (used in CLI error
output) and a distinct process exit status.
"""


class PipelineError(Exception):
    code = "PipelineError"
    exit_status = 1


class BadImage(PipelineError):
    code = "BadImage"
    exit_status = 2


class EmptyMask(PipelineError):
    code = "EmptyMask"
    exit_status = 3


class RowMismatch(PipelineError):
    code = "RowMismatch"
    exit_status = 4


class FeatureMismatch(PipelineError):
    code = "FeatureMismatch"
    exit_status = 5


class SingularSystem(PipelineError):
    code = "SingularSystem"
    exit_status = 6

    def __init__(self, message, condition_estimate=None):
        super().__init__(message)
        self.condition_estimate = condition_estimate


class InsufficientData(PipelineError):
    code = "InsufficientData"
    exit_status = 7


class ManifestParse(PipelineError):
    code = "ManifestParse"
    exit_status = 8


class SpecOutOfBounds(PipelineError):
    code = "SpecOutOfBounds"
    exit_status = 9


class EmptyBody(PipelineError):
    code = "EmptyBody"
    exit_status = 10
