"""Test decisions shared by the ERG and SBM pipelines."""
from __future__ import annotations

from enum import Enum


class Decision(str, Enum):
    WELL_SPECIFIED = "WellSpecified"
    MISSPECIFIED = "Misspecified"
    DEGENERATE = "Degenerate"

    @property
    def exit_code(self) -> int:
        return {"WellSpecified": 0, "Misspecified": 1, "Degenerate": 2}[self.value]


def decide(statistic: float, critical: float) -> Decision:
    """Do not reject when the statistic is at or below the chi-square critical value."""
    return Decision.WELL_SPECIFIED if statistic <= critical else Decision.MISSPECIFIED
