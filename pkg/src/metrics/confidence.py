"""Confidence-based metrics: Average Drop (ADP) and Percent Increase (PIC)

Both compare the softmax confidence of the class on the input (Y) with
the confidence on the input multiplied by the explanation map (O).
"""

import warnings
import numpy as np
from metrics.masking import MetricScore, map_array


def _confidences(model, inputs: list, maps: list, classes: list) \
        -> tuple[np.ndarray, np.ndarray]:
    if not len(inputs) == len(maps) == len(classes):
        raise ValueError("Inputs, maps and classes should be aligned. Got "
                         f"{len(inputs)}, {len(maps)} and {len(classes)}.")

    original, masked = [], []
    for x, explanation, y in zip(inputs, maps, classes):
        x = np.asarray(x, dtype=float)
        original.append(model.probabilities(x)[int(y)])
        # Map broadcast over channels
        masked.append(model.probabilities(x * map_array(explanation))[int(y)])

    return np.array(original), np.array(masked)


def average_drop(model, inputs: list, maps: list, classes: list) \
        -> MetricScore:
    """
    This function computes 100 * mean(max(0, Y - O) / Y).
    Instances with Y = 0 are skipped and counted. When every instance
    is skipped the value is NaN.
    """

    original, masked = _confidences(model, inputs, maps, classes)

    valid = original > 0.0
    skipped = int(np.sum(~valid))
    if skipped:
        warnings.warn(f"Average drop skipped {skipped} instance(s) with "
                      "zero confidence.")

    drops = np.maximum(0.0, original[valid] - masked[valid]) / original[valid]
    if drops.size:
        value = 100.0 * float(np.mean(drops))
    else:
        warnings.warn("Average drop is undefined: every instance was "
                      "skipped.")
        value = float("nan")

    return MetricScore(value, per_instance=drops.tolist(), skipped=skipped)


def pct_increase(model, inputs: list, maps: list, classes: list) \
        -> MetricScore:
    """
    This function computes the percentage of instances whose
    confidence strictly increases on the masked input.
    """

    original, masked = _confidences(model, inputs, maps, classes)
    increased = original < masked

    return MetricScore(100.0 * float(np.mean(increased)),
                       per_instance=increased.tolist())
