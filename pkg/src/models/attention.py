"""Tiny attention (ViT-like) reference model"""

import math
import numpy as np
from models.base import DifferentiableModel
from models.layers import PatchEmbedding, AttentionBlock, ClassTokenHead
from models.templates import class_templates, prototype_head


def block_params(rng: np.random.Generator, dim: int, heads: int,
                 hidden: int) -> dict:
    """Randomly initialized attention block parameters."""

    head_dim = dim // heads
    scale = 1.0 / np.sqrt(dim)
    return {
        "wq": rng.normal(0.0, scale, (heads, dim, head_dim)),
        "wk": rng.normal(0.0, scale, (heads, dim, head_dim)),
        "wv": rng.normal(0.0, scale, (heads, dim, head_dim)),
        "wo": rng.normal(0.0, 0.5 * scale, (dim, dim)),
        "w1": rng.normal(0.0, scale, (dim, hidden)),
        "w2": rng.normal(0.0, 0.5 / np.sqrt(hidden), (hidden, dim)),
    }


def build_tiny_attention(seed: int = 0, input_shape: tuple = (3, 12, 12),
                         class_count: int = 4, patch: int = 4,
                         dim: int = 8, heads: int = 2, blocks: int = 2,
                         hidden: int = 16) -> DifferentiableModel:
    """
    This function builds the seeded tiny attention model. The input is
    cut into a patch grid, a class token is prepended at position 0
    and the tokens go through `blocks` attention blocks. The head reads
    the class token with a nearest-prototype read-out.
    """

    channels, height, width = input_shape
    if height % patch or width % patch:
        raise ValueError(f"Input {input_shape} is not divisible into "
                         f"{patch}x{patch} patches.")
    if dim % heads:
        raise ValueError("Embedding dim should be divisible by heads.")

    rng = np.random.default_rng(seed)

    tokens = (height // patch) * (width // patch) + 1
    patch_dim = channels * patch * patch

    embedding = PatchEmbedding({
        "embed": rng.normal(0.0, 1.0 / np.sqrt(patch_dim), (patch_dim, dim)),
        "cls": rng.normal(0.0, 0.1, dim),
        "pos": rng.normal(0.0, 0.1, (tokens, dim)),
    }, patch)

    stages = [embedding] + [
        AttentionBlock(block_params(rng, dim, heads, hidden), heads)
        for _ in range(blocks)
    ]

    # Nearest-prototype head on the class token
    features = []
    for template in class_templates(input_shape, class_count):
        r = template
        for stage in stages:
            r, _ = stage.forward(r)
        features.append(r[0])
    weight, bias = prototype_head(np.array(features))

    head = ClassTokenHead({"weight": weight, "bias": bias})

    return DifferentiableModel("tiny_attention", stages, head, input_shape,
                               class_count, seed)


def grid_side(tokens: int) -> int:
    """
    This function derives the patch-grid side from the token count
    (class token included).
    """

    side = math.isqrt(tokens - 1)
    if side * side != tokens - 1:
        raise ValueError(f"{tokens - 1} patch tokens don't form a "
                         "square grid.")

    return side
