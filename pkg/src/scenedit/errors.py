"""Exception taxonomy shared across the pipeline.

Every error carries a stable ``error_id`` used by the CLI for structured
stderr lines and exit-code mapping.
"""

from __future__ import annotations


class SceneditError(Exception):
    error_id = "error"


class MalformedMask(SceneditError):
    """RLE counts that cannot decode to the stated raster size."""

    error_id = "malformed-mask"


class ShapeError(SceneditError):
    """Operands with mismatched image/raster dimensions."""

    error_id = "shape-mismatch"


class EmptyRegion(SceneditError):
    """An operation that needs foreground pixels got none."""

    error_id = "empty-region"


class ParseError(SceneditError):
    """Scene JSON that violates the schema; names the offending field."""

    error_id = "parse-error"

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class ConfigError(SceneditError):
    error_id = "config-error"


class BackendError(SceneditError):
    """Transport or server failure, after retries; names the backend."""

    error_id = "backend-error"

    def __init__(self, message: str, backend: str = "unknown"):
        super().__init__(f"[{backend}] {message}")
        self.backend = backend


class ProtocolViolation(SceneditError):
    """A backend reply with out-of-contract geometry or values."""

    error_id = "protocol-violation"


class EditLeakage(SceneditError):
    """Inpainting that modified pixels outside the requested mask."""

    error_id = "edit-leakage"


class MalformedLLMOutput(SceneditError):
    """Chat reply that failed schema validation even after the repair retry."""

    error_id = "malformed-llm-output"


class DslError(SceneditError):
    """Invalid spatial-program statement; carries the statement index."""

    error_id = "dsl-error"

    def __init__(self, message: str, statement_index: int | None = None):
        if statement_index is not None:
            message = f"statement {statement_index}: {message}"
        super().__init__(message)
        self.statement_index = statement_index


class ResolutionError(SceneditError):
    """LLM resolution referencing objects that do not exist in the scene."""

    error_id = "resolution-error"


class PreconditionError(SceneditError):
    error_id = "precondition-error"


class IterationLimit(SceneditError):
    """Refinement cap exceeded; carries the decision trace gathered so far."""

    error_id = "iteration-limit"

    def __init__(self, message: str, trace: list | None = None):
        super().__init__(message)
        self.trace = trace or []


class MetricUnavailable(SceneditError):
    """A delegated metric with no configured backend."""

    error_id = "metric-unavailable"


class DatasetError(SceneditError):
    """Benchmark sample that cannot be loaded; names the sample id."""

    error_id = "dataset-error"

    def __init__(self, message: str, sample_id: str | None = None):
        super().__init__(message if sample_id is None else f"sample {sample_id}: {message}")
        self.sample_id = sample_id


class StepFailed(SceneditError):
    """A plan step that failed during execution; keeps completed intermediates."""

    error_id = "step-failed"

    def __init__(self, step_index: int, cause: Exception, intermediates: list | None = None):
        super().__init__(f"step {step_index} failed: {cause}")
        self.step_index = step_index
        self.cause = cause
        self.intermediates = intermediates or []
