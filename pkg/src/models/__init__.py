"""Reference models, context network and gradient utilities"""

from models.base import (DifferentiableModel, AttentionTrace,     # noqa: F401
                         forward_from, grad_wrt_layer,
                         finite_diff_grad, model_finite_diff_grad)
from models.cnn import build_tiny_cnn                             # noqa: F401
from models.attention import build_tiny_attention, grid_side      # noqa: F401
from models.linear import build_linear_model                      # noqa: F401
from models.context import (ContextNetwork, build_context_network,  # noqa
                            context_embed)


def build_model(name: str, seed: int = 0) -> DifferentiableModel:
    """
    This function builds a reference model by its configuration name.
    """

    if name == "tiny_cnn":
        return build_tiny_cnn(seed)
    elif name == "tiny_attention":
        return build_tiny_attention(seed)
    else:
        raise ValueError(f"Unknown model '{name}'. "
                         "Expected 'tiny_cnn' or 'tiny_attention'.")
