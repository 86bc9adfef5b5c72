"""Class templates shared by the reference models and the synthetic data

Every class is a coloured Gaussian blob at a class-specific position.
"""

from typing import Optional
import numpy as np

# Blob colours (one RGB signature per class)
PALETTE = np.array([
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [1.0, 1.0, 0.0],
    [0.0, 1.0, 1.0],
    [1.0, 0.0, 1.0],
    [1.0, 1.0, 1.0],
    [0.5, 0.5, 0.5],
])


def class_center(input_shape: tuple, label: int, class_count: int) \
        -> np.ndarray:
    """
    This function returns the blob centre of a class. Centres are
    spread on a circle around the image centre.
    """

    _, height, width = input_shape
    angle = 2.0 * np.pi * label / class_count
    radius = min(height, width) / 4.0

    return np.array([(height - 1) / 2.0 + radius * np.sin(angle),
                     (width - 1) / 2.0 + radius * np.cos(angle)])


def render_blob(input_shape: tuple, label: int, class_count: int,
                shift: Optional[np.ndarray] = None) -> np.ndarray:
    """
    This function renders the noise-free template of a class,
    optionally with its centre shifted by `shift` pixels.
    """

    channels, height, width = input_shape
    if class_count > len(PALETTE):
        raise ValueError(f"At most {len(PALETTE)} classes are supported.")

    center = class_center(input_shape, label, class_count)
    if shift is not None:
        center = center + shift
    sigma = min(height, width) / 6.0

    rows, cols = np.meshgrid(np.arange(height), np.arange(width),
                             indexing="ij")
    blob = np.exp(-((rows - center[0]) ** 2 + (cols - center[1]) ** 2)
                  / (2.0 * sigma ** 2))

    colour = np.resize(PALETTE[label], channels)

    return colour[:, None, None] * blob[None, :, :]


def class_templates(input_shape: tuple, class_count: int) -> np.ndarray:
    """Stack of all noise-free class templates."""

    return np.stack([render_blob(input_shape, label, class_count)
                     for label in range(class_count)])


def prototype_head(features: np.ndarray, gain: float = 4.0) \
        -> tuple[np.ndarray, np.ndarray]:
    """
    This function constructs a nearest-prototype linear read-out from
    the (classes x features) matrix of template features. The logit of
    class c is gain / s^2 * (mu_c . phi - |mu_c|^2 / 2), with s^2 the mean
    squared distance of the prototypes to their mean.
    """

    spread = np.mean(np.sum((features - features.mean(axis=0)) ** 2, axis=1))

    # Degenerate (e.g. zero-initialized) feature extractors
    if spread <= 1e-30:
        return np.zeros_like(features), np.zeros(features.shape[0])

    weight = gain * features / spread
    bias = -0.5 * gain * np.sum(features ** 2, axis=1) / spread

    return weight, bias
