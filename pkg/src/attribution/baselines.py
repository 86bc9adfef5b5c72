"""Baseline samplers over intermediate representations

Five baseline types are supported. All statistics (extrema, noise scale)
are taken per channel, where a channel is the leading axis of the
representation (feature maps for CNNs, heads for attention tensors).
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence
import numpy as np
from util.tensor import gaussian_blur, softmax_rows


class BaselineType(Enum):
    NORMAL = "Normal"
    UNIFORM = "Uniform"
    BLUR = "Blur"
    CONSTANT = "Constant"
    TRAIN_DATA = "TrainData"


# Enumeration order, also used for tie-breaking
BASELINE_TYPES = list(BaselineType)


@dataclass
class BaselineDraw:
    """A sampled baseline tensor tagged with its type and parameters."""

    kind: Optional[BaselineType]
    tensor: np.ndarray
    params: dict = field(default_factory=dict)


def _channel_extrema(x_l: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    axes = tuple(range(1, x_l.ndim))
    return x_l.min(axis=axes), x_l.max(axis=axes)


def _per_channel(values: np.ndarray, ndim: int) -> np.ndarray:
    return values.reshape((-1,) + (1,) * (ndim - 1))


def sample_baseline(kind: BaselineType, x_l: np.ndarray,
                    rng: np.random.Generator,
                    pool: Optional[Sequence[np.ndarray]] = None,
                    sigma: Optional[float] = None,
                    index: Optional[int] = None,
                    normal_sigma_range: tuple = (0.1, 0.5),
                    blur_sigma_range: tuple = (0.0, 50.0)) -> BaselineDraw:
    """
    This function draws a baseline of a given type for the
    representation x_l. `sigma` forces the noise/blur scale of the Normal
    and Blur types instead of sampling it from its range, `index` forces
    the TrainData pool member.
    """

    x_l = np.asarray(x_l, dtype=float)
    kind = BaselineType(kind)

    # Check input
    if x_l.ndim != 3:
        raise ValueError("Baselines are drawn for 3D representations "
                         f"(channels x h x w), got shape {x_l.shape}.")
    if not np.all(np.isfinite(x_l)):
        raise ValueError("Cannot draw a baseline for a non-finite "
                         "representation.")

    low, high = _channel_extrema(x_l)

    if kind == BaselineType.NORMAL:
        if sigma is None:
            sigma = float(rng.uniform(*normal_sigma_range))
        value_range = high - low
        std = np.divide(sigma, value_range, out=np.zeros_like(value_range),
                        where=value_range > 0)
        noise = rng.standard_normal(x_l.shape)
        tensor = x_l + _per_channel(std, x_l.ndim) * noise
        params = {"sigma": sigma, "std": std.tolist()}

    elif kind == BaselineType.UNIFORM:
        tensor = rng.uniform(_per_channel(low, x_l.ndim),
                             _per_channel(high, x_l.ndim), x_l.shape)
        # Degenerate channels: uniform(a, a) is exactly a
        tensor = np.clip(tensor, _per_channel(low, x_l.ndim),
                         _per_channel(high, x_l.ndim))
        params = {}

    elif kind == BaselineType.BLUR:
        if sigma is None:
            sigma = float(rng.uniform(*blur_sigma_range))
        tensor = gaussian_blur(x_l, sigma)
        params = {"sigma": sigma}

    elif kind == BaselineType.CONSTANT:
        values = rng.uniform(low, high)
        tensor = np.broadcast_to(_per_channel(values, x_l.ndim),
                                 x_l.shape).copy()
        params = {"values": values.tolist()}

    else:
        if not pool:
            raise ValueError("The TrainData baseline needs a non-empty pool "
                             "of training representations.")
        if index is None:
            index = int(rng.integers(len(pool)))
        elif not 0 <= index < len(pool):
            raise ValueError(f"Pool index {index} outside [0, {len(pool)}).")
        tensor = np.array(pool[index], dtype=float)
        if tensor.shape != x_l.shape:
            raise ValueError(f"Pool member shape {tensor.shape} doesn't "
                             f"match representation shape {x_l.shape}.")
        params = {"index": index}

    return BaselineDraw(kind, tensor, params)


def softmax_normalize_baseline(draw: BaselineDraw) -> BaselineDraw:
    """
    This function turns an attention-shaped baseline into a
    row-stochastic one, applying a row softmax to every head.
    """

    tensor = np.asarray(draw.tensor, dtype=float)
    if tensor.ndim != 3 or tensor.shape[1] != tensor.shape[2]:
        raise ValueError("Expected an attention-shaped baseline "
                         f"(heads x tokens x tokens), got {tensor.shape}.")

    params = dict(draw.params)
    params["softmax"] = True

    return BaselineDraw(draw.kind, softmax_rows(tensor), params)


def fixed_baseline(x_l: np.ndarray, value: float = 0.0) -> BaselineDraw:
    """Untyped constant baseline (black for value 0)."""

    tensor = np.full(np.shape(x_l), float(value))
    return BaselineDraw(None, tensor, {"value": float(value)})
