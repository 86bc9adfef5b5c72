"""Explanation map containers, map averaging and metric-driven selection"""

from dataclasses import dataclass, field, replace
from typing import Optional
import numpy as np
from attribution.baselines import BaselineDraw
from metrics.ids import Direction
from util.tensor import minmax_normalize


@dataclass
class ExplanationMap:
    """2D attribution map with its provenance."""

    map: np.ndarray
    layer: int
    draw: Optional[BaselineDraw] = None
    score: Optional[float] = None
    raw: Optional[np.ndarray] = None

    def __post_init__(self):
        self.map = np.asarray(self.map, dtype=float)
        if self.map.ndim != 2:
            raise ValueError(f"Explanation maps are 2D, got {self.map.shape}.")
        if not np.all(np.isfinite(self.map)):
            raise ValueError("Explanation map contains non-finite values.")

    @property
    def kind(self):
        return None if self.draw is None else self.draw.kind


@dataclass
class MapPool:
    """Candidate maps gathered over the layer set."""

    maps: list = field(default_factory=list)
    layers: list = field(default_factory=list)

    def __len__(self):
        return len(self.maps)


def average_maps(maps: list[ExplanationMap]) -> ExplanationMap:
    """
    This function averages explanation maps elementwise and min-max
    normalizes the result. Provenance is taken from the first map.
    """

    if not maps:
        raise ValueError("Cannot average an empty list of maps.")

    shapes = {m.map.shape for m in maps}
    if len(shapes) > 1:
        raise ValueError(f"Maps have different shapes: {shapes}.")

    mean_map = np.mean([m.map for m in maps], axis=0)

    return replace(maps[0], map=minmax_normalize(mean_map), score=None,
                   raw=None)


def adjusted_score(score: float, direction: Direction) -> float:
    """Score in higher-is-better orientation."""

    return float(score) if direction == Direction.HIGHER else -float(score)


def select_best(pool: MapPool, scores: list[tuple[float, Direction]]) \
        -> ExplanationMap:
    """
    This function returns the pool map that performs best on the
    metric. Ties go to the lowest pool index.
    """

    if len(pool) == 0:
        raise ValueError("Cannot select from an empty map pool.")
    if len(scores) != len(pool):
        raise ValueError(f"Got {len(scores)} scores for {len(pool)} maps.")

    directions = {direction for _, direction in scores}
    if len(directions) != 1:
        raise ValueError("All scores should share the same direction.")

    adjusted = [adjusted_score(score, direction)
                for score, direction in scores]
    best = int(np.argmax(adjusted))

    return replace(pool.maps[best], score=float(scores[best][0]))
