"""Types produced and consumed by the reasoning chain."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from ..errors import ShapeError
from ..masks import BinaryMask


@dataclass(frozen=True)
class TaskPlan:
    """Ordered decomposition of the user query into editing subtasks."""

    subtasks: tuple[str, ...]
    source_query: str

    def __post_init__(self):
        if not self.subtasks:
            raise ShapeError("a task plan needs at least one subtask")

    @property
    def n(self) -> int:
        return len(self.subtasks)


class NeedKind(enum.Enum):
    NONE = "none"
    SEMANTIC = "semantic"
    SPATIAL = "spatial"


@dataclass(frozen=True)
class InfoNeed:
    """What the scene description is missing for the current subtask."""

    kind: NeedKind
    detail: str = ""

    def __post_init__(self):
        if (self.kind is NeedKind.NONE) == bool(self.detail):
            raise ShapeError("detail must be nonempty exactly when information is needed")


class OpKind(enum.Enum):
    ADD = "add"
    REMOVE = "remove"
    REPLACE = "replace"


@dataclass(frozen=True)
class EditStep:
    """One resolved edit: the region mask and the explicit instruction.

    For remove/replace the mask is the union of the target objects' masks.
    Add steps carry a proposed placement region instead, with no target ids.
    """

    target_ids: tuple[int, ...]
    mask: BinaryMask
    explicit_instruction: str
    op_kind: OpKind

    def __post_init__(self):
        if not self.explicit_instruction:
            raise ShapeError("explicit instruction must be nonempty")
        if self.op_kind is OpKind.ADD:
            if self.target_ids:
                raise ShapeError("add steps carry no target ids")
        elif not self.target_ids:
            raise ShapeError(f"{self.op_kind.value} step needs at least one target id")
        if self.mask.is_empty():
            raise ShapeError("edit step mask has no foreground")


@dataclass
class EditPlan:
    """The resolved steps plus the append-only decision trace."""

    steps: list[EditStep] = field(default_factory=list)
    trace: list[dict] = field(default_factory=list)


def trace_lines(trace: list[dict]) -> str:
    """Render a trace as canonical JSON lines (one record per line)."""
    from .. import canonical

    return "".join(canonical.dumps(record) + "\n" for record in trace)
