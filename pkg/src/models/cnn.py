"""Tiny convolutional reference model"""

import numpy as np
from models.base import DifferentiableModel
from models.layers import ConvTanh, AvgPool2, MeanPoolLinear
from models.templates import class_templates, prototype_head


def conv_params(rng: np.random.Generator, out_channels: int,
                in_channels: int, kernel: int = 3, gain: float = 1.5) \
        -> dict:
    """Randomly initialized convolution parameters."""

    fan_in = in_channels * kernel * kernel
    return {
        "weight": rng.normal(0.0, gain / np.sqrt(fan_in),
                             (out_channels, in_channels, kernel, kernel)),
        "bias": rng.normal(0.0, 0.1, out_channels),
    }


def build_tiny_cnn(seed: int = 0, input_shape: tuple = (3, 16, 16),
                   class_count: int = 4, channels: tuple = (4, 6),
                   zero_init: bool = False) -> DifferentiableModel:
    """
    This function builds the seeded tiny CNN:
    conv(3x3)+tanh -> 2x2 average pool -> conv(3x3)+tanh -> global
    average pool -> linear head. The head is the nearest-prototype read-out
    of the class templates in the last feature space.
    """

    if class_count < 4:
        raise ValueError("The tiny CNN needs at least 4 classes.")

    rng = np.random.default_rng(seed)

    first = conv_params(rng, channels[0], input_shape[0])
    second = conv_params(rng, channels[1], channels[0])
    if zero_init:
        for params in (first, second):
            for value in params.values():
                value[...] = 0.0

    stages = [ConvTanh(first), AvgPool2(), ConvTanh(second)]

    # Nearest-prototype head from the template features
    features = []
    for template in class_templates(input_shape, class_count):
        r = template
        for stage in stages:
            r, _ = stage.forward(r)
        features.append(r.mean(axis=(1, 2)))
    weight, bias = prototype_head(np.array(features))

    head = MeanPoolLinear({"weight": weight, "bias": bias})

    return DifferentiableModel("tiny_cnn", stages, head, input_shape,
                               class_count, seed)
