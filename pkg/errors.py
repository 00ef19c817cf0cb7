"""
Domain errors for the ECG classification pipeline.

Every error carries a stable `code` that the CLI prints on stderr, so callers
can react to failures without parsing messages.
"""


class PipelineError(Exception):
    code = "PipelineError"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


# dataset
class MissingRoot(PipelineError):
    code = "MissingRoot"


class NoLabeledImages(PipelineError):
    code = "NoLabeledImages"


class UnreadableImage(PipelineError):
    code = "UnreadableImage"


class AlreadySplit(PipelineError):
    code = "AlreadySplit"


class RatioInvalid(PipelineError):
    code = "RatioInvalid"


class KTooLarge(PipelineError):
    code = "KTooLarge"


class NotSplit(PipelineError):
    code = "NotSplit"


# preprocessing / augmentation
class RectOutOfBounds(PipelineError):
    code = "RectOutOfBounds"


class BadTarget(PipelineError):
    code = "BadTarget"


class SpecInvalid(PipelineError):
    code = "SpecInvalid"


# models
class WeightsUnavailable(PipelineError):
    code = "WeightsUnavailable"


class UnknownBackbone(PipelineError):
    code = "UnknownBackbone"


class PolicyInvalid(PipelineError):
    code = "PolicyInvalid"


class ShapeMismatch(PipelineError):
    code = "ShapeMismatch"


# search / training / evaluation
class EmptyGrid(PipelineError):
    code = "EmptyGrid"


class EmptyResults(PipelineError):
    code = "EmptyResults"


class EmptyTrainSplit(PipelineError):
    code = "EmptyTrainSplit"


class EmptyValSplit(PipelineError):
    code = "EmptyValSplit"


class EmptyTestSplit(PipelineError):
    code = "EmptyTestSplit"


class EmptyReports(PipelineError):
    code = "EmptyReports"


class DataLeakage(PipelineError):
    code = "DataLeakage"


class ConfigInvalid(PipelineError):
    code = "ConfigInvalid"
