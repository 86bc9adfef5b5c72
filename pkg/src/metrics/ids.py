"""Metric identifiers, score directions and reward kinds"""

from enum import Enum


class Direction(Enum):
    HIGHER = "higher"
    LOWER = "lower"


class RewardKind(Enum):
    BINARY = "binary"
    CONTINUOUS = "continuous"


class MetricId(Enum):
    POS = "POS"
    NEG = "NEG"
    INS = "INS"
    DEL = "DEL"
    ADP = "ADP"
    PIC = "PIC"
    SIC = "SIC"
    AIC = "AIC"

    @property
    def direction(self) -> Direction:
        if self in (MetricId.POS, MetricId.DEL, MetricId.ADP):
            return Direction.LOWER
        return Direction.HIGHER

    @property
    def kind(self) -> RewardKind:
        # PIC's per-instance score is an increase indicator
        if self == MetricId.PIC:
            return RewardKind.BINARY
        return RewardKind.CONTINUOUS

    @property
    def percent(self) -> bool:
        """Whether the metric is natively reported in percent."""
        return self in (MetricId.ADP, MetricId.PIC)
