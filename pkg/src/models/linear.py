"""Linear oracle model"""

import numpy as np
from models.base import DifferentiableModel
from models.layers import Linear


def build_linear_model(weights: np.ndarray, class_count: int = 2) \
        -> DifferentiableModel:
    """
    This function builds a model without hidden stages whose class-0
    logit is w . x and whose other logits are zero. It serves as the
    analytic oracle for attribution and metric tests.
    """

    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 3:
        raise ValueError("Linear model weights should be channel-first 3D.")
    if class_count < 2:
        raise ValueError("The linear model needs at least 2 classes.")

    head_weight = np.zeros((class_count, weights.size))
    head_weight[0] = weights.ravel()

    head = Linear({"weight": head_weight, "bias": np.zeros(class_count)})

    return DifferentiableModel("linear", [], head, weights.shape,
                               class_count)
