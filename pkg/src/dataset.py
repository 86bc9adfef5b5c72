"""BEE - Dataset module

This module provides the seeded synthetic image data of the pipeline:
- `synth_dataset`: class-conditioned blob images (noisy, jittered copies
  of the class templates the reference models are built on).
- `load_grid_csv`: raw-grid CSV loader for a single image.
"""

# Path setup
import os
import sys

root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
src = os.path.join(root, "src")
if root not in sys.path: sys.path.append(root)
if src not in sys.path: sys.path.append(src)

# File-specific imports
from dataclasses import dataclass                               # noqa: E402
import numpy as np                                              # noqa: E402
from models.templates import render_blob                        # noqa: E402

SPLITS = ("train", "test")


@dataclass
class Dataset:
    """Labelled images of one split, generated from `seed`."""

    items: list
    split: str
    seed: int

    def __len__(self):
        return len(self.items)

    def __getitem__(self, index: int) -> tuple[np.ndarray, int]:
        return self.items[index]

    @property
    def inputs(self) -> list:
        return [x for x, _ in self.items]

    @property
    def labels(self) -> list:
        return [y for _, y in self.items]


def synth_dataset(seed: int, count: int, split: str = "train",
                  input_shape: tuple = (3, 16, 16), class_count: int = 4,
                  noise: float = 0.05, jitter: float = 1.0) -> Dataset:
    """
    This function generates `count` images, each the template of a
    uniformly drawn class with its centre jittered by up to `jitter`
    pixels, plus Gaussian noise of standard deviation `noise`.
    The train and test splits use separate streams of the same seed.
    """

    if count < 1:
        raise ValueError(f"Dataset size should be at least 1, got {count}.")
    if split not in SPLITS:
        raise ValueError(f"Unknown split '{split}'. Expected one of {SPLITS}.")

    rng = np.random.default_rng([int(seed), SPLITS.index(split)])

    items = []
    for _ in range(count):
        label = int(rng.integers(class_count))
        shift = rng.uniform(-jitter, jitter, 2)
        x = render_blob(input_shape, label, class_count, shift)
        x = x + rng.normal(0.0, noise, input_shape)
        items.append((x, label))

    return Dataset(items, split, int(seed))


def load_grid_csv(path: str, label: int, channels: int = 3) -> Dataset:
    """
    This function loads a single channel-first image from a CSV grid:
    one row per image row, the channels stacked vertically.
    """

    grid = np.loadtxt(path, delimiter=",", ndmin=2)

    if grid.shape[0] % channels != 0:
        raise ValueError(f"Grid of {grid.shape[0]} rows can't be split into "
                         f"{channels} channels.")
    if not np.all(np.isfinite(grid)):
        raise ValueError(f"Grid file '{path}' contains non-finite values.")

    height = grid.shape[0] // channels
    x = grid.reshape(channels, height, grid.shape[1])

    return Dataset([(x, int(label))], "test", -1)
