"""Context network

A parameter-reduced clone of the tiny CNN feature extractor with a fresh
linear head of output dimension K. Its parameters (theta) are trained by
the bandit updates, so exact parameter gradients are exposed.
"""

import copy
from typing import Optional
import numpy as np
from models.layers import ConvTanh, AvgPool2, MeanPoolLinear
from models.cnn import conv_params


class ContextNetwork:
    """Context embedding c_theta(x) with trainable parameters theta."""

    def __init__(self, stages: list, head: MeanPoolLinear,
                 input_shape: tuple):
        self.stages = stages
        self.head = head
        self.input_shape = tuple(input_shape)

    @property
    def output_dim(self) -> int:
        return self.head.params["weight"].shape[0]

    @property
    def parameters(self) -> dict:
        """Named view on theta (arrays are shared, not copied)."""

        theta = {}
        for index, stage in enumerate(self.stages, start=1):
            for name, value in stage.params.items():
                theta[f"stage{index}.{name}"] = value
        for name, value in self.head.params.items():
            theta[f"head.{name}"] = value

        return theta

    def set_parameters(self, theta: dict):
        """
        This function overwrites theta in place from a dict with the
        names given by `parameters`.
        """

        current = self.parameters
        if set(theta) != set(current):
            raise ValueError("Context parameter names don't match. "
                             f"Expected {sorted(current)}.")
        for name, value in theta.items():
            value = np.asarray(value, dtype=float)
            if value.shape != current[name].shape:
                raise ValueError(f"Parameter '{name}' has shape "
                                 f"{value.shape}, expected "
                                 f"{current[name].shape}.")
            current[name][...] = value

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list]:
        x = np.asarray(x, dtype=float)
        if x.shape != self.input_shape:
            raise ValueError(f"Context input shape {x.shape} doesn't match "
                             f"{self.input_shape}.")

        caches = []
        r = x
        for stage in self.stages:
            r, cache = stage.forward(r)
            caches.append(cache)
        c, cache = self.head.forward(r)
        caches.append(cache)

        return c, caches

    def embed(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def gradient(self, caches: list, grad_c: np.ndarray) -> dict:
        """
        This function returns d(grad_c . c_theta(x)) / d theta for the
        forward pass stored in `caches`.
        """

        grads = {}
        grad, extras = self.head.backward(np.asarray(grad_c, dtype=float),
                                          caches[-1])
        for name, value in extras.items():
            grads[f"head.{name}"] = value

        for index in range(len(self.stages), 0, -1):
            grad, extras = self.stages[index - 1].backward(
                grad, caches[index - 1])
            for name, value in extras.items():
                grads[f"stage{index}.{name}"] = value

        return grads

    def step(self, grads: dict, step_size: float):
        """Gradient-descent step on theta, in place."""

        theta = self.parameters
        for name, grad in grads.items():
            theta[name] -= step_size * grad

    def copy(self) -> "ContextNetwork":
        return copy.deepcopy(self)


def build_context_network(seed: int = 0, input_shape: tuple = (3, 16, 16),
                          output_dim: int = 16, channels: tuple = (2, 4),
                          zero_init: bool = False,
                          rng: Optional[np.random.Generator] = None) \
        -> ContextNetwork:
    """
    This function builds a seeded context network for inputs of
    `input_shape` producing K = `output_dim` dimensional contexts.
    """

    rng = np.random.default_rng(seed) if rng is None else rng

    first = conv_params(rng, channels[0], input_shape[0])
    second = conv_params(rng, channels[1], channels[0])
    head = {
        "weight": rng.normal(0.0, 0.5, (output_dim, channels[1])),
        "bias": rng.normal(0.0, 0.3, output_dim),
    }

    network = ContextNetwork(
        [ConvTanh(first), AvgPool2(), ConvTanh(second)],
        MeanPoolLinear(head), input_shape)

    if zero_init:
        for value in network.parameters.values():
            value[...] = 0.0

    return network


def context_embed(network: ContextNetwork, x: np.ndarray) -> np.ndarray:
    """Deterministic K-vector context of an input."""

    return network.embed(x)
