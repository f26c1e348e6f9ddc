"""Exception hierarchy.

Every error carries a stable ``code`` (the class name) so the CLI can emit a
machine-readable record, and an optional ``case_id`` for context.
"""

from __future__ import annotations


class CrowdAggError(Exception):
    def __init__(self, message: str = "", *, case_id: str | None = None):
        super().__init__(message)
        self.message = message
        self.case_id = case_id

    @property
    def code(self) -> str:
        return type(self).__name__

    def to_record(self) -> dict:
        rec = {"error": self.code, "message": self.message}
        if self.case_id is not None:
            rec["case_id"] = self.case_id
        return rec


# case validation
class InvalidCase(CrowdAggError):
    pass


class EmptyResponses(InvalidCase):
    pass


class TooFewAnswers(InvalidCase):
    pass


class DuplicateAnswers(InvalidCase):
    pass


class VoteOutsideAnswerSet(InvalidCase):
    pass


class CorrectAnswerOutsideAnswerSet(InvalidCase):
    pass


class PredictedSupportLengthMismatch(InvalidCase):
    pass


class PredictedSupportAllZero(InvalidCase):
    pass


class PredictedSupportOutOfRange(InvalidCase):
    pass


class ConfidenceOutOfRange(InvalidCase):
    pass


# aggregation / features / pipelines
class EmptyInputMethods(CrowdAggError):
    pass


class CaseTooSmall(CrowdAggError):
    pass


class MissingGroundTruth(CrowdAggError):
    pass


# learners
class EmptyTrainingSet(CrowdAggError):
    pass


class WidthMismatch(CrowdAggError):
    pass


class ConvergenceError(CrowdAggError):
    pass


class ModelFormatError(CrowdAggError):
    pass


# evaluation
class CorpusTooSmall(CrowdAggError):
    pass


class InvalidExclusion(CrowdAggError):
    pass


class LengthMismatch(CrowdAggError):
    pass


class ZeroSample(CrowdAggError):
    pass


# synth
class RegimeUnsatisfiable(CrowdAggError):
    pass


# io / cli
class ParseError(CrowdAggError):
    def __init__(self, message: str = "", *, line: int | None = None, case_id: str | None = None):
        super().__init__(message, case_id=case_id)
        self.line = line

    def to_record(self) -> dict:
        rec = super().to_record()
        if self.line is not None:
            rec["line"] = self.line
        return rec


class SchemaVersionUnsupported(CrowdAggError):
    pass


class ConfigError(CrowdAggError):
    pass


class UsageError(CrowdAggError):
    pass


class WriteError(CrowdAggError):
    pass
