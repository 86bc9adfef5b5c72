"""Differentiable model contract

A model is a chain of stages (layers 1..L) followed by a classification
head. Representation 0 is the input itself, representation l is the
output of stage l. Every model supports sub-network evaluation from any
representation and exact reverse-mode gradients of a class score w.r.t.
any representation.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional
import numpy as np
from scipy.special import softmax
from models.layers import Layer


@dataclass
class ForwardPass:
    """Result of a forward pass, including the backprop caches."""

    representations: list
    logits: np.ndarray
    caches: list
    start: int = 0


@dataclass
class AttentionTrace:
    """Per-block attention tensors and class-score gradients."""

    attentions: list
    gradients: list
    layers: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.attentions) != len(self.gradients):
            raise ValueError("Every attention tensor needs a gradient.")
        for attention, gradient in zip(self.attentions, self.gradients):
            if np.shape(attention) != np.shape(gradient):
                raise ValueError("Attention/gradient shape mismatch: "
                                 f"{np.shape(attention)} vs "
                                 f"{np.shape(gradient)}.")


class DifferentiableModel:
    """
    Chain of differentiable stages with a classification head.
    Models are immutable after construction.
    """

    def __init__(self, name: str, stages: list[Layer], head: Layer,
                 input_shape: tuple, class_count: int, seed: int = 0):
        self.name = name
        self.stages = stages
        self.head = head
        self.input_shape = tuple(input_shape)
        self.class_count = class_count
        self.seed = seed

        # Extract representation shapes
        shapes = [self.input_shape]
        for stage in stages:
            shapes.append(stage.output_shape(shapes[-1]))
        self.layer_shapes = shapes

    @property
    def layer_count(self) -> int:
        return len(self.stages)

    @property
    def attention_layers(self) -> list[int]:
        """Stage indices (1-based) that carry an attention tensor."""
        return [i + 1 for i, stage in enumerate(self.stages)
                if hasattr(stage, "heads")]

    def check_layer(self, layer: int):
        if not 0 <= layer <= self.layer_count:
            raise ValueError(f"Layer index {layer} outside [0, "
                             f"{self.layer_count}] for model '{self.name}'.")

    def check_class(self, y: int):
        if not 0 <= int(y) < self.class_count:
            raise ValueError(f"Class index {y} outside [0, "
                             f"{self.class_count}) for model '{self.name}'.")

    def forward_pass(self, r: np.ndarray, start: int = 0,
                     overrides: Optional[dict] = None) -> ForwardPass:
        """
        This function runs the network from representation `start`
        onwards, keeping all caches needed for backpropagation.
        `overrides` maps stage indices to attention tensors.
        """

        self.check_layer(start)
        r = np.asarray(r, dtype=float)
        if r.shape != self.layer_shapes[start]:
            raise ValueError(f"Representation shape {r.shape} doesn't match "
                             f"layer {start} shape "
                             f"{self.layer_shapes[start]}.")

        overrides = overrides or {}
        representations = [r]
        caches = []
        for index in range(start + 1, self.layer_count + 1):
            out, cache = self.stages[index - 1].forward(
                representations[-1], overrides.get(index))
            representations.append(out)
            caches.append(cache)

        logits, head_cache = self.head.forward(representations[-1])
        caches.append(head_cache)

        return ForwardPass(representations, logits, caches, start)

    def forward(self, x: np.ndarray, overrides: Optional[dict] = None) \
            -> ForwardPass:
        return self.forward_pass(x, 0, overrides)

    def backward_pass(self, result: ForwardPass, y: int,
                      stop: Optional[int] = None) -> tuple[list, dict]:
        """
        This function backpropagates the class-y logit through a stored
        forward pass. It returns the gradients w.r.t. every
        representation from `stop` (default: the start layer) up to L,
        and the attention gradients per stage index.
        """

        self.check_class(y)
        stop = result.start if stop is None else stop

        grad_logits = np.zeros(self.class_count)
        grad_logits[int(y)] = 1.0

        grad, _ = self.head.backward(grad_logits, result.caches[-1])
        gradients = [grad]
        attention_grads = {}

        for index in range(self.layer_count, stop, -1):
            cache = result.caches[index - result.start - 1]
            grad, extras = self.stages[index - 1].backward(grad, cache)
            if "attention" in extras:
                attention_grads[index] = extras["attention"]
            gradients.insert(0, grad)

        return gradients, attention_grads

    def probabilities(self, x: np.ndarray) -> np.ndarray:
        return softmax(self.forward(x).logits)

    def predicted_class(self, x: np.ndarray) -> int:
        return int(np.argmax(self.forward(x).logits))

    def attention_trace(self, x: np.ndarray, y: int,
                        overrides: Optional[dict] = None) -> AttentionTrace:
        """
        This function extracts the attention tensors of every block
        together with the gradient of the class-y logit w.r.t. them.
        """

        result = self.forward(x, overrides)
        _, attention_grads = self.backward_pass(result, y)

        layers = self.attention_layers
        attentions = [result.caches[index - 1]["attention"]
                      for index in layers]
        gradients = [attention_grads[index] for index in layers]

        return AttentionTrace(attentions, gradients, layers)


def forward_from(model: DifferentiableModel, layer: int,
                 r: np.ndarray) -> np.ndarray:
    """
    This function evaluates the sub-network f^l on a layer-l
    representation and returns the logits.
    """

    return model.forward_pass(r, layer).logits


def grad_wrt_layer(model: DifferentiableModel, layer: int, r: np.ndarray,
                   y: int) -> np.ndarray:
    """
    This function returns the exact gradient of f^l_y at the layer-l
    representation r.
    """

    model.check_class(y)
    result = model.forward_pass(r, layer)
    gradients, _ = model.backward_pass(result, y)

    return gradients[0]


def finite_diff_grad(fn: Callable[[np.ndarray], float], r: np.ndarray,
                     eps: float = 1e-5) -> np.ndarray:
    """
    This function estimates the gradient of a scalar function with
    central differences, element by element.
    """

    if eps <= 0:
        raise ValueError(f"eps should be positive, got {eps}.")

    r = np.array(r, dtype=float)
    grad = np.zeros_like(r)

    for index in np.ndindex(r.shape):
        original = r[index]
        r[index] = original + eps
        upper = fn(r)
        r[index] = original - eps
        lower = fn(r)
        r[index] = original
        grad[index] = (upper - lower) / (2.0 * eps)

    return grad


def model_finite_diff_grad(model: DifferentiableModel, layer: int,
                           r: np.ndarray, y: int, eps: float = 1e-5) \
        -> np.ndarray:
    """
    This function is the finite-difference counterpart of
    `grad_wrt_layer`, used as a test oracle.
    """

    return finite_diff_grad(
        lambda v: float(forward_from(model, layer, v)[int(y)]), r, eps)
