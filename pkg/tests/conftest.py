"""Shared pytest setup: path configuration and seeded fixtures"""

# Path setup
import os
import sys

root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
src = os.path.join(root, "src")
if root not in sys.path: sys.path.append(root)
if src not in sys.path: sys.path.append(src)

# File-specific imports
import copy                                                     # noqa: E402
import numpy as np                                              # noqa: E402
import pytest                                                   # noqa: E402
from models import build_tiny_cnn, build_tiny_attention         # noqa: E402
from initialization import DEFAULT_SETTINGS                     # noqa: E402


@pytest.fixture
def cnn():
    return build_tiny_cnn(0)


@pytest.fixture
def vit():
    return build_tiny_attention(0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def x_cnn(cnn):
    return np.random.default_rng(7).normal(0.0, 0.5, cnn.input_shape)


@pytest.fixture
def x_vit(vit):
    return np.random.default_rng(7).normal(0.0, 0.5, vit.input_shape)


@pytest.fixture
def settings(tmp_path):
    """Small, fast run settings writing into a temporary directory."""

    fast = copy.deepcopy(DEFAULT_SETTINGS)
    fast.update({
        "T": 2,
        "n": 2,
        "epochs": 1,
        "trainSize": 4,
        "testSize": 2,
        "trainDataPool": 2,
        "trainDataAverage": 2,
        "contextDim": 4,
        "metrics": ["NEG", "PIC"],
        "metric": "NEG",
        "methods": ["IG", "ACT-IG", "pBEE", "nBEE"],
        "strategies": ["pBEE", "nBEE", "Blur"],
        "iterations": 2,
        "ablationT": [1, 2],
        "ablationN": [1],
        "outputDir": str(tmp_path / "output"),
    })
    return fast
