"""Utility module for dense-tensor and image-processing primitives

All functions work on float64 numpy arrays and are pure, i.e. they
never modify their inputs.
"""

import math
from dataclasses import dataclass
import numpy as np
from scipy import ndimage
from scipy.integrate import trapezoid
from scipy.special import softmax


@dataclass
class Curve:
    """Sampled curve, used as the carrier for every AUC-based metric."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=float)
        self.ys = np.asarray(self.ys, dtype=float)

        if self.xs.ndim != 1 or self.xs.shape != self.ys.shape:
            raise ValueError("Curve abscissae and ordinates should be 1D "
                             f"and of equal length. Got {self.xs.shape} "
                             f"and {self.ys.shape}.")
        if len(self.xs) < 2:
            raise ValueError("A curve needs at least 2 points.")
        if np.any(np.diff(self.xs) < 0.0):
            raise ValueError("Curve abscissae should be non-decreasing.")


def cubic_kernel(t: np.ndarray, a: float = -0.5) -> np.ndarray:
    """
    This function evaluates the cubic convolution kernel.
    With a = -0.5 this is the Catmull-Rom kernel.
    """

    t = np.abs(np.asarray(t, dtype=float))
    near = (a + 2.0) * t ** 3 - (a + 3.0) * t ** 2 + 1.0
    far = a * t ** 3 - 5.0 * a * t ** 2 + 8.0 * a * t - 4.0 * a

    return np.where(t <= 1.0, near, np.where(t < 2.0, far, 0.0))


def _resize_matrix(in_size: int, out_size: int) -> np.ndarray:
    """
    This function builds the (out_size x in_size) bicubic
    interpolation matrix for a single axis. Sample positions use the
    half-pixel convention and out-of-range taps are clamped to the edge.
    """

    weights = np.zeros((out_size, in_size))

    # Source coordinate of every output sample
    source = (np.arange(out_size) + 0.5) * (in_size / out_size) - 0.5
    base = np.floor(source).astype(int)

    for offset in range(-1, 3):
        taps = base + offset
        tap_weights = cubic_kernel(source - taps)
        # Edge clamping
        taps = np.clip(taps, 0, in_size - 1)
        np.add.at(weights, (np.arange(out_size), taps), tap_weights)

    return weights


def bicubic_resize(map_2d: np.ndarray, out_h: int, out_w: int) \
        -> np.ndarray:
    """
    This function resizes a 2D map with Catmull-Rom bicubic
    interpolation. The resize is separable, so it is carried out
    as a product of two per-axis interpolation matrices.
    """

    map_2d = np.asarray(map_2d, dtype=float)

    # Check input
    if map_2d.ndim != 2:
        raise ValueError(f"Expected a 2D map, got shape {map_2d.shape}.")
    if min(map_2d.shape) < 2:
        raise ValueError("Bicubic resizing needs at least 2 samples per "
                         f"axis. Got shape {map_2d.shape}.")
    if out_h < 1 or out_w < 1:
        raise ValueError(f"Invalid output size ({out_h}, {out_w}).")

    if map_2d.shape == (out_h, out_w):
        return map_2d.copy()

    rows = _resize_matrix(map_2d.shape[0], out_h)
    cols = _resize_matrix(map_2d.shape[1], out_w)

    return rows @ map_2d @ cols.T


def gaussian_weights(sigma: float) -> np.ndarray:
    """
    This function returns the normalized, truncated Gaussian
    kernel with radius ceil(3 * sigma).
    """

    radius = int(math.ceil(3.0 * sigma))
    offsets = np.arange(-radius, radius + 1, dtype=float)
    weights = np.exp(-offsets ** 2 / (2.0 * sigma ** 2))

    return weights / weights.sum()


def gaussian_blur(tensor: np.ndarray, sigma: float) -> np.ndarray:
    """
    This function applies a separable Gaussian blur with edge clamping
    over the two trailing axes. 3D inputs are thus blurred per channel.
    """

    tensor = np.asarray(tensor, dtype=float)

    if sigma < 0:
        raise ValueError(f"Blur sigma should be non-negative, got {sigma}.")
    if tensor.ndim not in (2, 3):
        raise ValueError(f"Expected a 2D or 3D tensor, got {tensor.ndim}D.")

    if sigma == 0:
        return tensor.copy()

    weights = gaussian_weights(sigma)

    # 'nearest' extends the edge values, i.e. edge clamping
    blurred = ndimage.correlate1d(tensor, weights, axis=-1, mode="nearest")
    blurred = ndimage.correlate1d(blurred, weights, axis=-2, mode="nearest")

    return blurred


def softmax_rows(matrix: np.ndarray) -> np.ndarray:
    """
    This function normalizes every row (last axis) of a tensor with
    a max-stabilized softmax.
    """

    return softmax(np.asarray(matrix, dtype=float), axis=-1)


def trapezoid_auc(curve: Curve) -> float:
    """
    This function computes the trapezoid-rule area under a curve,
    normalized by the abscissa span, so that a constant curve
    returns its own value.
    """

    span = curve.xs[-1] - curve.xs[0]
    if span <= 0.0:
        raise ValueError("Cannot compute the AUC of a curve with zero span.")

    return float(trapezoid(curve.ys, curve.xs) / span)


def channel_stats(tensor: np.ndarray) \
        -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    This function computes the channel-mean map and the per-channel
    minimum and maximum of a channel-first 3D tensor.
    """

    tensor = np.asarray(tensor, dtype=float)
    if tensor.ndim != 3:
        raise ValueError(f"Expected a 3D tensor, got {tensor.ndim}D.")

    mean_map = tensor.mean(axis=0)
    min_per_channel = tensor.min(axis=(1, 2))
    max_per_channel = tensor.max(axis=(1, 2))

    return mean_map, min_per_channel, max_per_channel


def minmax_normalize(map_2d: np.ndarray) -> np.ndarray:
    """
    This function affinely rescales a map to [0, 1].
    Constant maps become all-zeros.
    """

    map_2d = np.asarray(map_2d, dtype=float)
    low, high = map_2d.min(), map_2d.max()

    if high - low <= 0.0:
        return np.zeros_like(map_2d)

    return (map_2d - low) / (high - low)
