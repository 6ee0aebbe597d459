"""Adjoint-memory strategies for the reverse sweep."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import ContractViolation


class StrategyKind(str, Enum):
    STORE_ALL = "store-all"
    CHECKPOINT = "checkpoint"
    REVERT = "revert"
    REVERT_CHECKPOINT = "revert-checkpoint"

    @property
    def uses_checkpoints(self) -> bool:
        return self in (StrategyKind.CHECKPOINT, StrategyKind.REVERT_CHECKPOINT)

    @property
    def uses_reversibility(self) -> bool:
        return self in (StrategyKind.REVERT, StrategyKind.REVERT_CHECKPOINT)


@dataclass(frozen=True)
class Strategy:
    """A strategy kind plus, for the checkpointed kinds, the period."""

    kind: StrategyKind
    period: int | None = None

    def __post_init__(self) -> None:
        if self.kind.uses_checkpoints:
            if self.period is None or int(self.period) < 1:
                raise ContractViolation(f"{self.kind.value} needs a period >= 1")
            object.__setattr__(self, "period", int(self.period))
        elif self.period is not None:
            raise ContractViolation(f"{self.kind.value} does not take a period")

    def validate_for(self, n_steps: int) -> None:
        if self.kind.uses_checkpoints and self.period > n_steps:
            raise ContractViolation(
                f"period {self.period} exceeds the {n_steps}-step trajectory"
            )

    @classmethod
    def store_all(cls) -> "Strategy":
        return cls(StrategyKind.STORE_ALL)

    @classmethod
    def checkpoint(cls, period: int) -> "Strategy":
        return cls(StrategyKind.CHECKPOINT, period)

    @classmethod
    def revert(cls) -> "Strategy":
        return cls(StrategyKind.REVERT)

    @classmethod
    def revert_checkpoint(cls, period: int) -> "Strategy":
        return cls(StrategyKind.REVERT_CHECKPOINT, period)
