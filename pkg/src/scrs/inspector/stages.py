"""Stage identifiers and parsing of structured stage responses."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from scrs.errors import StructureViolation
from scrs.prompting import first_valid_block, validator


class Stage(str, enum.Enum):
    C1 = "C1"
    C2 = "C2"
    C3 = "C3"
    T1 = "T1"
    T2 = "T2"
    T3 = "T3"

    @property
    def track(self) -> str:
        return self.value[0]

    @property
    def order(self) -> int:
        return int(self.value[1])


class Verdict(str, enum.Enum):
    YES = "Yes"
    NO = "No"
    UNKNOWN = "Unknown"

    @property
    def positive(self) -> bool:
        # Unknown gates like No
        return self is Verdict.YES


@dataclass(frozen=True)
class StageOutput:
    stage: Stage
    verdict: Verdict
    structured: dict = field(hash=False)
    raw_text: str = ""

    def to_dict(self) -> dict:
        return {"stage": self.stage.value, "verdict": self.verdict.value, "structured": self.structured}


def parse_stage_response(raw_text: str, stage: Stage | str) -> StageOutput:
    """First embedded JSON block that satisfies the stage schema."""
    stage = Stage(stage)
    block, errors = first_valid_block(raw_text, validator("luv", stage.value))
    if block is None:
        raise StructureViolation(f"{stage.value}: {errors[-1]}")
    return StageOutput(stage, Verdict(block["verdict"]), block, raw_text)
