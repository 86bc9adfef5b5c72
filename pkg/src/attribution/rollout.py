"""Gradient Rollout over attention blocks"""

from typing import Optional
import numpy as np
from models.base import AttentionTrace


def rollout_factor(attention: np.ndarray, gradient: np.ndarray) \
        -> np.ndarray:
    """
    This function computes the identity-augmented, head-averaged,
    gradient-weighted attention factor I + mean_h(A o G).
    """

    weighted = np.mean(np.asarray(attention) * np.asarray(gradient), axis=0)
    return np.eye(weighted.shape[-1]) + weighted


def compose_rollout(factors: list[np.ndarray]) -> np.ndarray:
    """
    This function multiplies the rollout factors in block order and
    returns the class-token row.
    """

    if not factors:
        raise ValueError("Gradient rollout needs at least one block.")

    tokens = {factor.shape for factor in factors}
    if len(tokens) != 1:
        raise ValueError(f"Token-count mismatch across blocks: {tokens}.")

    product = factors[0]
    for factor in factors[1:]:
        product = product @ factor

    return product[0]


def gradient_rollout(trace: AttentionTrace,
                     replaced: Optional[dict] = None) -> np.ndarray:
    """
    This function performs Gradient Rollout on an attention trace.
    `replaced` maps block positions (0-based, in trace order) to
    precomputed head-stacked products that take the place of A o G.
    """

    replaced = replaced or {}
    factors = []
    for position, (attention, gradient) in enumerate(
            zip(trace.attentions, trace.gradients)):
        if position in replaced:
            weighted = np.mean(replaced[position], axis=0)
            factors.append(np.eye(weighted.shape[-1]) + weighted)
        else:
            factors.append(rollout_factor(attention, gradient))

    return compose_rollout(factors)
