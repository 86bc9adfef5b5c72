"""Curve-based metrics

- POS / NEG: positive / negative perturbation tests (10%..90% removed)
- DEL / INS: deletion / insertion games (0%..100% in steps of 10%)
- SIC / AIC: softmax / accuracy information curves on a blurred image
"""

from typing import Optional, Union
import numpy as np
from metrics.masking import MetricScore, apply_mask
from util.tensor import Curve, gaussian_blur, trapezoid_auc

PERTURBATION_FRACTIONS = np.round(np.arange(1, 10) / 10.0, 10)
GAME_FRACTIONS = np.round(np.arange(0, 11) / 10.0, 10)


def reference_class(model, x: np.ndarray, y: int, class_ref: str) -> int:
    if class_ref == "target":
        return int(y)
    elif class_ref == "predicted":
        return model.predicted_class(x)
    else:
        raise ValueError(f"Unknown class reference '{class_ref}'. "
                         "Expected 'target' or 'predicted'.")


def _auc_score(fractions: np.ndarray, values: list) -> MetricScore:
    curve = Curve(fractions, values)
    return MetricScore(trapezoid_auc(curve), curve=curve)


def perturbation_auc(model, x: np.ndarray, explanation, y: int,
                     polarity: str = "POS", class_ref: str = "target",
                     fill: Union[float, np.ndarray] = 0.0) -> MetricScore:
    """
    This function removes 10%, 20%, ..., 90% of the pixels, most
    relevant first (POS) or least relevant first (NEG), and returns the
    AUC of the reference-class probability.
    """

    if polarity not in ("POS", "NEG"):
        raise ValueError(f"Unknown polarity '{polarity}'.")

    order = "descending" if polarity == "POS" else "ascending"
    target = reference_class(model, x, y, class_ref)

    values = [model.probabilities(
        apply_mask(x, explanation, fraction, order, fill))[target]
        for fraction in PERTURBATION_FRACTIONS]

    return _auc_score(PERTURBATION_FRACTIONS, values)


def perturbation_auc_batch(model, inputs: list, maps: list, classes: list,
                           polarity: str = "POS", class_ref: str = "target",
                           fill: Union[float, np.ndarray] = 0.0) \
        -> MetricScore:
    """
    This function is the batch variant of `perturbation_auc`, using
    the accuracy w.r.t. the reference classes as ordinate.
    """

    if polarity not in ("POS", "NEG"):
        raise ValueError(f"Unknown polarity '{polarity}'.")

    order = "descending" if polarity == "POS" else "ascending"
    targets = [reference_class(model, x, y, class_ref)
               for x, y in zip(inputs, classes)]

    values = []
    for fraction in PERTURBATION_FRACTIONS:
        hits = [model.predicted_class(apply_mask(x, m, fraction, order, fill))
                == target
                for x, m, target in zip(inputs, maps, targets)]
        values.append(float(np.mean(hits)))

    return _auc_score(PERTURBATION_FRACTIONS, values)


def insertion_deletion_auc(model, x: np.ndarray, explanation, y: int,
                           mode: str = "DEL",
                           fill: Union[float, np.ndarray] = 0.0) \
        -> MetricScore:
    """
    This function plays the deletion game (progressively zeroing the
    most relevant pixels) or the insertion game (progressively restoring
    them into an all-fill image) and returns the AUC of the class
    probability.
    """

    x = np.asarray(x, dtype=float)

    if mode == "DEL":
        states = [apply_mask(x, explanation, fraction, "descending", fill)
                  for fraction in GAME_FRACTIONS]
    elif mode == "INS":
        empty = np.broadcast_to(np.asarray(fill, dtype=float), x.shape)
        states = [apply_mask(empty, explanation, fraction, "descending", x)
                  for fraction in GAME_FRACTIONS]
    else:
        raise ValueError(f"Unknown mode '{mode}'. Expected 'INS' or 'DEL'.")

    values = [model.probabilities(state)[int(y)] for state in states]

    return _auc_score(GAME_FRACTIONS, values)


def information_curves(model, x: np.ndarray, explanation, y: int,
                       mode: str = "SIC", blur_sigma: float = 2.0,
                       blurred: Optional[np.ndarray] = None) -> MetricScore:
    """
    This function starts from a blurred image and progressively
    reveals the most relevant pixels. AIC uses the correctness indicator
    as ordinate, SIC the class probability normalized by its value on the
    fully revealed image.
    """

    if blur_sigma <= 0:
        raise ValueError(f"blur_sigma should be positive, got {blur_sigma}.")
    if mode not in ("SIC", "AIC"):
        raise ValueError(f"Unknown mode '{mode}'. Expected 'SIC' or 'AIC'.")

    x = np.asarray(x, dtype=float)
    base = gaussian_blur(x, blur_sigma) if blurred is None else blurred

    values = []
    for fraction in GAME_FRACTIONS:
        revealed = apply_mask(base, explanation, fraction, "descending", x)
        if mode == "AIC":
            values.append(float(model.predicted_class(revealed) == int(y)))
        else:
            values.append(model.probabilities(revealed)[int(y)])

    if mode == "SIC":
        final = values[-1]
        if final > 0.0:
            values = np.clip(np.array(values) / final, 0.0, 1.0)
        else:
            values = np.zeros(len(values))

    return _auc_score(GAME_FRACTIONS, values)
