"""Exception types shared across the toolkit."""

from __future__ import annotations


class TbbError(Exception):
    """Base class for all toolkit errors."""


# --- annotation parsing / timeline ---

class MalformedRow(TbbError):
    def __init__(self, line_no: int, detail: str = ""):
        self.line_no = line_no
        super().__init__(f"malformed row at line {line_no}" + (f": {detail}" if detail else ""))


class EmptyInput(TbbError):
    pass


class InvalidLength(TbbError):
    pass


class ClassAbsent(TbbError):
    def __init__(self, class_id):
        self.class_id = class_id
        super().__init__(f"no event of class {class_id!r}")


# --- audio / stimulus ---

class UnsupportedFormat(TbbError):
    pass


class IoFailure(TbbError):
    pass


class OutOfRange(TbbError):
    pass


class ClipTooShort(TbbError):
    pass


class InvalidBucket(TbbError):
    pass


class RateMismatch(TbbError):
    pass


# --- predictors ---

class EmptyClassName(TbbError):
    pass


class PredictorError(TbbError):
    """Base for remote-predictor failures; recorded, never fatal to a run."""


class Timeout(PredictorError):
    pass


class HttpStatus(PredictorError):
    def __init__(self, code: int):
        self.code = code
        super().__init__(f"HTTP status {code}")


class PayloadTooLarge(PredictorError):
    pass


class NoOnsetDetected(TbbError):
    pass


# --- metrics / harness ---

class EmptySampleSet(TbbError):
    pass


class UnknownStimulusId(TbbError):
    def __init__(self, stimulus_id: str):
        self.stimulus_id = stimulus_id
        super().__init__(f"prediction references unknown stimulus {stimulus_id!r}")


class EmptySummaries(TbbError):
    pass


class ConfigError(TbbError):
    pass
