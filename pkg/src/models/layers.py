"""Differentiable building blocks for the reference models

Every layer maps one representation to the next. `forward` returns the
output together with a cache, `backward` takes the gradient w.r.t. the
output plus that cache and returns the gradient w.r.t. the input and a
dict of extra gradients (parameters and, for attention blocks, the
attention tensor).
"""

from abc import ABC, abstractmethod
from typing import Optional
import numpy as np
from util.tensor import softmax_rows


class Layer(ABC):
    """Abstract differentiable stage."""

    def __init__(self, params: dict):
        self.params = params

    @abstractmethod
    def forward(self, r: np.ndarray, override: Optional[np.ndarray] = None) \
            -> tuple[np.ndarray, dict]:
        ...

    @abstractmethod
    def backward(self, grad: np.ndarray, cache: dict) \
            -> tuple[np.ndarray, dict]:
        ...

    def output_shape(self, in_shape: tuple) -> tuple:
        out, _ = self.forward(np.zeros(in_shape))
        return out.shape


def conv2d_same(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) \
        -> np.ndarray:
    """
    This function performs a stride-1, zero-padded ('same') 2D
    correlation of a channel-first tensor with an (out, in, k, k) kernel.
    """

    k = weight.shape[-1]
    pad = k // 2
    _, height, width = x.shape
    x_pad = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))

    out = np.zeros((weight.shape[0], height, width))
    for u in range(k):
        for v in range(k):
            out += np.einsum("oc,cij->oij", weight[:, :, u, v],
                             x_pad[:, u:u + height, v:v + width])

    return out + bias[:, None, None]


def conv2d_same_backward(grad: np.ndarray, x: np.ndarray,
                         weight: np.ndarray) -> tuple[np.ndarray, dict]:
    """
    This function backpropagates through `conv2d_same`.
    It returns the input gradient and the kernel/bias gradients.
    """

    k = weight.shape[-1]
    pad = k // 2
    _, height, width = x.shape
    x_pad = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))

    grad_pad = np.zeros_like(x_pad)
    grad_weight = np.zeros_like(weight)
    for u in range(k):
        for v in range(k):
            grad_pad[:, u:u + height, v:v + width] += np.einsum(
                "oc,oij->cij", weight[:, :, u, v], grad)
            grad_weight[:, :, u, v] = np.einsum(
                "oij,cij->oc", grad, x_pad[:, u:u + height, v:v + width])

    grad_in = grad_pad[:, pad:pad + height, pad:pad + width]

    return grad_in, {"weight": grad_weight, "bias": grad.sum(axis=(1, 2))}


class ConvTanh(Layer):
    """'Same' convolution followed by a tanh activation."""

    def forward(self, r, override=None):
        out = np.tanh(conv2d_same(r, self.params["weight"],
                                  self.params["bias"]))
        return out, {"input": r, "output": out}

    def backward(self, grad, cache):
        grad_pre = grad * (1.0 - cache["output"] ** 2)
        return conv2d_same_backward(grad_pre, cache["input"],
                                    self.params["weight"])


class AvgPool2(Layer):
    """2x2 average pooling with stride 2."""

    def __init__(self):
        super().__init__({})

    def forward(self, r, override=None):
        channels, height, width = r.shape
        if height % 2 or width % 2:
            raise ValueError("Average pooling needs even spatial extents. "
                             f"Got {r.shape}.")
        out = r.reshape(channels, height // 2, 2, width // 2, 2)
        return out.mean(axis=(2, 4)), {}

    def backward(self, grad, cache):
        grad_in = np.repeat(np.repeat(grad, 2, axis=1), 2, axis=2) / 4.0
        return grad_in, {}


class MeanPoolLinear(Layer):
    """Global average pooling followed by a linear read-out."""

    def forward(self, r, override=None):
        pooled = r.mean(axis=(1, 2))
        out = self.params["weight"] @ pooled + self.params["bias"]
        return out, {"input_shape": r.shape, "pooled": pooled}

    def backward(self, grad, cache):
        _, height, width = cache["input_shape"]
        grad_pooled = self.params["weight"].T @ grad
        grad_in = np.broadcast_to(
            (grad_pooled / (height * width))[:, None, None],
            cache["input_shape"]).copy()
        return grad_in, {"weight": np.outer(grad, cache["pooled"]),
                         "bias": grad.copy()}


class Linear(Layer):
    """Linear map over a flattened representation."""

    def forward(self, r, override=None):
        out = self.params["weight"] @ r.ravel() + self.params["bias"]
        return out, {"input": r}

    def backward(self, grad, cache):
        r = cache["input"]
        grad_in = (self.params["weight"].T @ grad).reshape(r.shape)
        return grad_in, {"weight": np.outer(grad, r.ravel()),
                         "bias": grad.copy()}


def patchify(x: np.ndarray, patch: int) -> np.ndarray:
    """
    This function cuts a channel-first image into flattened,
    row-major ordered square patches.
    """

    channels, height, width = x.shape
    rows, cols = height // patch, width // patch
    patches = x.reshape(channels, rows, patch, cols, patch)
    patches = patches.transpose(1, 3, 0, 2, 4)

    return patches.reshape(rows * cols, channels * patch * patch)


def unpatchify(patches: np.ndarray, shape: tuple, patch: int) -> np.ndarray:
    """Inverse of `patchify`."""

    channels, height, width = shape
    rows, cols = height // patch, width // patch
    x = patches.reshape(rows, cols, channels, patch, patch)

    return x.transpose(2, 0, 3, 1, 4).reshape(shape)


class PatchEmbedding(Layer):
    """Patch embedding with a prepended class token and positions."""

    def __init__(self, params: dict, patch: int):
        super().__init__(params)
        self.patch = patch

    def forward(self, r, override=None):
        patches = patchify(r, self.patch)
        tokens = np.vstack([self.params["cls"][None, :],
                            patches @ self.params["embed"]])
        return tokens + self.params["pos"], {"input_shape": r.shape}

    def backward(self, grad, cache):
        grad_patches = grad[1:] @ self.params["embed"].T
        grad_in = unpatchify(grad_patches, cache["input_shape"], self.patch)
        return grad_in, {}


class AttentionBlock(Layer):
    """
    Residual multi-head self-attention block followed by a residual
    tanh MLP. An attention override replaces the softmax output of every
    head with a given (heads x tokens x tokens) tensor, which is then
    treated as a constant w.r.t. the block input.
    """

    def __init__(self, params: dict, heads: int):
        super().__init__(params)
        self.heads = heads

    def forward(self, r, override=None):
        p = self.params
        dim = r.shape[1] // self.heads
        scale = 1.0 / np.sqrt(dim)

        q = np.einsum("td,hde->hte", r, p["wq"])
        k = np.einsum("td,hde->hte", r, p["wk"])
        v = np.einsum("td,hde->hte", r, p["wv"])

        if override is None:
            attention = softmax_rows(np.einsum("hte,hse->hts", q, k) * scale)
        else:
            attention = np.asarray(override, dtype=float)
            if attention.shape != (self.heads, r.shape[0], r.shape[0]):
                raise ValueError("Attention override has shape "
                                 f"{attention.shape}, expected "
                                 f"{(self.heads, r.shape[0], r.shape[0])}.")

        heads_out = np.einsum("hts,hse->hte", attention, v)
        mixed = np.concatenate(list(heads_out), axis=1)
        z = r + mixed @ p["wo"]
        hidden = np.tanh(z @ p["w1"])
        out = z + hidden @ p["w2"]

        cache = {"input": r, "q": q, "k": k, "v": v, "scale": scale,
                 "attention": attention, "hidden": hidden,
                 "overridden": override is not None}
        return out, cache

    def backward(self, grad, cache):
        p = self.params
        attention = cache["attention"]

        # MLP branch
        grad_z = grad + ((grad @ p["w2"].T)
                         * (1.0 - cache["hidden"] ** 2)) @ p["w1"].T

        # Attention branch
        grad_mixed = grad_z @ p["wo"].T
        grad_heads = np.stack(np.split(grad_mixed, self.heads, axis=1))
        grad_attention = np.einsum("hte,hse->hts", grad_heads, cache["v"])
        grad_v = np.einsum("hts,hte->hse", attention, grad_heads)

        grad_in = grad_z + np.einsum("hse,hde->sd", grad_v, p["wv"])

        if not cache["overridden"]:
            inner = (grad_attention * attention).sum(axis=-1, keepdims=True)
            grad_scores = attention * (grad_attention - inner) * cache["scale"]
            grad_q = np.einsum("hts,hse->hte", grad_scores, cache["k"])
            grad_k = np.einsum("hts,hte->hse", grad_scores, cache["q"])
            grad_in = grad_in + np.einsum("hte,hde->td", grad_q, p["wq"])
            grad_in = grad_in + np.einsum("hse,hde->sd", grad_k, p["wk"])

        return grad_in, {"attention": grad_attention}


class ClassTokenHead(Layer):
    """Linear classification head reading the class token."""

    def forward(self, r, override=None):
        out = self.params["weight"] @ r[0] + self.params["bias"]
        return out, {"input_shape": r.shape}

    def backward(self, grad, cache):
        grad_in = np.zeros(cache["input_shape"])
        grad_in[0] = self.params["weight"].T @ grad
        return grad_in, {}
