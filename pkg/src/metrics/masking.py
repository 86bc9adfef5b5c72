"""Shared masking / revealing engine of the faithfulness metrics"""

from dataclasses import dataclass
from typing import Optional, Union
import numpy as np
from util.tensor import Curve

ORDERS = ("descending", "ascending")


@dataclass
class MetricScore:
    """Metric value with its optional curve and per-instance details."""

    value: float
    curve: Optional[Curve] = None
    per_instance: Optional[list] = None
    skipped: int = 0


def map_array(explanation) -> np.ndarray:
    """Plain 2D array of an explanation map (or of an array)."""

    return np.asarray(getattr(explanation, "map", explanation), dtype=float)


def ranked_pixels(map_2d: np.ndarray, order: str = "descending") \
        -> np.ndarray:
    """
    This function ranks the flat pixel indices of a map. Ties keep
    row-major order.
    """

    if order not in ORDERS:
        raise ValueError(f"Unknown order '{order}'. Expected one of {ORDERS}.")

    flat = np.asarray(map_2d, dtype=float).ravel()
    keys = -flat if order == "descending" else flat

    return np.argsort(keys, kind="stable")


def pixel_count(fraction: float, total: int) -> int:
    """Number of pixels covered by a fraction, floored."""

    # Small tolerance so that e.g. 0.3 * 10 covers 3 pixels
    return int(np.floor(fraction * total + 1e-9))


def apply_mask(x: np.ndarray, explanation, fraction: float,
               order: str = "descending",
               fill: Union[float, np.ndarray] = 0.0) -> np.ndarray:
    """
    This function replaces the top `fraction` of pixels (ranked by the
    explanation map in the given order) with `fill` across all channels.
    `fill` is either a scalar or a tensor of the input's shape.
    """

    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"Fraction should be in [0, 1], got {fraction}.")

    x = np.asarray(x, dtype=float)
    map_2d = map_array(explanation)
    if map_2d.shape != x.shape[-2:]:
        raise ValueError(f"Map shape {map_2d.shape} doesn't match input "
                         f"spatial shape {x.shape[-2:]}.")

    count = pixel_count(fraction, map_2d.size)
    selected = np.zeros(map_2d.size, dtype=bool)
    selected[ranked_pixels(map_2d, order)[:count]] = True
    selected = selected.reshape(map_2d.shape)

    fill = np.broadcast_to(np.asarray(fill, dtype=float), x.shape)

    return np.where(selected, fill, x)
