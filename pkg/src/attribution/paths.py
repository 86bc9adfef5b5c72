"""Path-integration explanation maps

- Interpolation between a baseline and a representation
- Integrated Gradients on the input
- Layer-wise path integration for convolutional representations
- Layer-wise path integration on attention tensors, composed with
  Gradient Rollout
"""

from typing import Union
import numpy as np
from attribution.baselines import BaselineDraw
from attribution.rollout import gradient_rollout
from attribution.selection import ExplanationMap
from models.base import DifferentiableModel, grad_wrt_layer
from models.attention import grid_side
from util.tensor import bicubic_resize, minmax_normalize

PSI_MODES = ("product", "gradient")


def interpolate(b: np.ndarray, x: np.ndarray, k: int, n: int) -> np.ndarray:
    """
    This function returns the k-th of n points on the straight path
    from the baseline b to x, i.e. (1 - k/n) b + (k/n) x.
    """

    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)

    if b.shape != x.shape:
        raise ValueError(f"Baseline shape {b.shape} doesn't match "
                         f"representation shape {x.shape}.")
    if not 1 <= k <= n:
        raise ValueError(f"Step index {k} outside [1, {n}].")

    if k == n:
        return x.copy()

    a = k / n
    return (1.0 - a) * b + a * x


def _as_draw(baseline: Union[BaselineDraw, np.ndarray]) -> BaselineDraw:
    if isinstance(baseline, BaselineDraw):
        return baseline
    return BaselineDraw(None, np.asarray(baseline, dtype=float), {})


def to_input_map(model: DifferentiableModel, map_2d: np.ndarray) \
        -> np.ndarray:
    """
    This function resizes a 2D map to the spatial input dimensions
    and min-max normalizes it.
    """

    _, height, width = model.input_shape
    if map_2d.shape != (height, width):
        map_2d = bicubic_resize(map_2d, height, width)

    return minmax_normalize(map_2d)


def integrated_gradients(model: DifferentiableModel, x: np.ndarray,
                         baseline: Union[BaselineDraw, np.ndarray], y: int,
                         n: int) -> ExplanationMap:
    """
    This function computes the Riemann approximation of Integrated
    Gradients on the input. The un-normalized attribution tensor is kept
    in `raw` for completeness checks.
    """

    if n < 1:
        raise ValueError(f"Step count should be at least 1, got {n}.")

    draw = _as_draw(baseline)
    x = np.asarray(x, dtype=float)
    b = draw.tensor

    grad_sum = np.zeros_like(x)
    for k in range(1, n + 1):
        grad_sum += grad_wrt_layer(model, 0, interpolate(b, x, k, n), y)

    raw = (x - b) / n * grad_sum

    map_2d = raw.mean(axis=0) if raw.ndim == 3 else raw
    return ExplanationMap(to_input_map(model, map_2d), 0, draw, raw=raw)


def bee_map_cnn(model: DifferentiableModel, layer: int, x: np.ndarray,
                draw: Union[BaselineDraw, np.ndarray], y: int, n: int,
                psi: str = "product") -> ExplanationMap:
    """
    This function integrates along the path from the baseline to the
    layer-l representation of x. With psi = 'product' the integrand is
    gradient o representation, with psi = 'gradient' it is the plain
    gradient. The result is averaged over channels, resized to the input
    dimensions and normalized.
    """

    if psi not in PSI_MODES:
        raise ValueError(f"Unknown psi '{psi}'. Expected one of {PSI_MODES}.")
    if n < 1:
        raise ValueError(f"Step count should be at least 1, got {n}.")

    draw = _as_draw(draw)
    model.check_layer(layer)

    x_l = model.forward(x).representations[layer]
    if x_l.ndim != 3:
        raise ValueError(f"Layer {layer} of model '{model.name}' has no "
                         f"spatial structure (shape {x_l.shape}).")

    b = draw.tensor
    accumulated = np.zeros_like(x_l)
    for k in range(1, n + 1):
        v = interpolate(b, x_l, k, n)
        grad = grad_wrt_layer(model, layer, v, y)
        accumulated += grad * v if psi == "product" else grad

    raw = (x_l - b) / n * accumulated

    return ExplanationMap(to_input_map(model, raw.mean(axis=0)), layer, draw,
                          raw=raw)


def bee_map_vit(model: DifferentiableModel, layer: int, x: np.ndarray,
                draw: Union[BaselineDraw, np.ndarray], y: int, n: int) \
        -> ExplanationMap:
    """
    This function integrates on the attention tensor of block `layer`.
    The gradients along the path are taken with the block attention
    overridden by the interpolated tensor. The accumulated tensor replaces
    A o G of that block in the Gradient Rollout of the unmodified input;
    the class-token row (without its first element) is reshaped to the
    patch grid, resized to the input dimensions and normalized.
    """

    if layer not in model.attention_layers:
        raise ValueError(f"Layer {layer} of model '{model.name}' carries no "
                         "attention tensor.")
    if n < 1:
        raise ValueError(f"Step count should be at least 1, got {n}.")

    draw = _as_draw(draw)

    trace = model.attention_trace(x, y)
    position = trace.layers.index(layer)
    attention = trace.attentions[position]

    b = draw.tensor
    if b.shape != attention.shape:
        raise ValueError(f"Baseline shape {b.shape} doesn't match attention "
                         f"shape {attention.shape}.")

    # Integrate along the attention path
    accumulated = np.zeros_like(attention)
    for k in range(1, n + 1):
        v = interpolate(b, attention, k, n)
        result = model.forward(x, overrides={layer: v})
        _, attention_grads = model.backward_pass(result, y, stop=layer - 1)
        accumulated += attention_grads[layer] * v

    raw = (attention - b) / n * accumulated

    # Rollout composition with the integrated block
    row = gradient_rollout(trace, replaced={position: raw})
    side = grid_side(len(row))
    grid = row[1:].reshape(side, side)

    return ExplanationMap(to_input_map(model, grid), layer, draw, raw=raw)
