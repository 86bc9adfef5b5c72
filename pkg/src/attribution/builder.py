"""Map construction from baseline types

The `MapBuilder` binds a model to the map settings (step count, layer
set, baseline ranges) and turns a baseline type into an explanation map,
which is what every bandit round needs after selecting a type.
"""

from typing import Optional
import numpy as np
from attribution.baselines import (BaselineType, BaselineDraw,
                                   sample_baseline,
                                   softmax_normalize_baseline)
from attribution.paths import bee_map_cnn, bee_map_vit
from attribution.selection import ExplanationMap, average_maps
from models.base import DifferentiableModel


def resolve_layers(model: DifferentiableModel, layers: list) -> list[int]:
    """
    This function turns a configured layer set into absolute layer
    indices. Negative indices count from the last layer (-1 is L).
    """

    if not layers:
        raise ValueError("The layer set should not be empty.")

    resolved = []
    for layer in layers:
        absolute = model.layer_count + 1 + layer if layer < 0 else layer
        if not 0 <= absolute <= model.layer_count:
            raise ValueError(f"Layer {layer} outside the range of model "
                             f"'{model.name}' (L = {model.layer_count}).")
        if absolute not in resolved:
            resolved.append(absolute)

    return resolved


def check_layer_set(model: DifferentiableModel, layers: list) -> list[int]:
    """
    This function resolves a layer set and checks that every layer can
    be explained: it should carry an attention tensor or a spatial
    (channels x h x w) representation. Patch-embedding layers of the
    attention model carry neither.
    """

    resolved = resolve_layers(model, layers)
    for layer in resolved:
        spatial = len(model.layer_shapes[layer]) == 3
        if layer not in model.attention_layers and not spatial:
            raise ValueError(f"Layer {layer} of model '{model.name}' "
                             "has neither spatial structure nor an "
                             "attention tensor.")

    return resolved


def layer_representation(model: DifferentiableModel, x: np.ndarray,
                         layer: int) -> np.ndarray:
    """
    This function returns the tensor baselines are drawn for: the
    attention tensor for attention blocks, the representation otherwise.
    """

    result = model.forward(x)
    if layer in model.attention_layers:
        return result.caches[layer - 1]["attention"]

    return result.representations[layer]


def build_pools(model: DifferentiableModel, inputs: list, layers: list,
                size: int) -> dict:
    """
    This function gathers the TrainData pools: the layer
    representations of the first `size` training inputs.
    """

    return {layer: [layer_representation(model, x, layer)
                    for x in inputs[:size]]
            for layer in layers}


class MapBuilder:
    """Turns baseline types into explanation maps for one model."""

    def __init__(self, model: DifferentiableModel, settings: dict,
                 pools: Optional[dict] = None):
        self.model = model
        self.n = int(settings["n"])
        self.layers = check_layer_set(model, settings["layers"])
        self.psi = settings.get("psi", "product")
        self.normal_sigma_range = tuple(settings["normalSigmaRange"])
        self.blur_sigma_range = tuple(settings["blurSigmaRange"])
        self.train_data_average = int(settings["trainDataAverage"])
        self.pools = pools or {}

    def draw(self, kind: BaselineType, x: np.ndarray, layer: int,
             rng: np.random.Generator,
             index: Optional[int] = None) -> BaselineDraw:
        """
        This function draws a typed baseline for layer `layer` of x.
        Attention baselines are softmax-normalized, except TrainData
        ones, which are real (row-stochastic) attention tensors.
        """

        x_l = layer_representation(self.model, x, layer)
        draw = sample_baseline(kind, x_l, rng, self.pools.get(layer),
                               index=index,
                               normal_sigma_range=self.normal_sigma_range,
                               blur_sigma_range=self.blur_sigma_range)

        if (layer in self.model.attention_layers
                and draw.kind != BaselineType.TRAIN_DATA):
            draw = softmax_normalize_baseline(draw)

        return draw

    def build_from_draw(self, x: np.ndarray, y: int, draw: BaselineDraw,
                        layer: int) -> ExplanationMap:
        if layer in self.model.attention_layers:
            return bee_map_vit(self.model, layer, x, draw, y, self.n)

        return bee_map_cnn(self.model, layer, x, draw, y, self.n, self.psi)

    def build(self, x: np.ndarray, y: int, kind: BaselineType,
              rng: np.random.Generator,
              layer: Optional[int] = None) -> ExplanationMap:
        """
        This function draws a baseline of type `kind` and builds the
        corresponding map. TrainData maps are averaged over several
        pool draws.
        """

        layer = self.layers[-1] if layer is None else layer
        kind = BaselineType(kind)

        if kind != BaselineType.TRAIN_DATA:
            return self.build_from_draw(x, y, self.draw(kind, x, layer, rng),
                                        layer)

        pool = self.pools.get(layer)
        if not pool:
            raise ValueError(f"No TrainData pool for layer {layer}.")

        # Distinct pool members per average
        count = max(1, min(self.train_data_average, len(pool)))
        indices = rng.choice(len(pool), count, replace=False)
        maps = []
        for index in indices:
            draw = self.draw(kind, x, layer, rng, int(index))
            maps.append(self.build_from_draw(x, y, draw, layer))

        averaged = average_maps(maps)
        averaged.draw = BaselineDraw(
            kind, maps[0].draw.tensor,
            {"indices": [m.draw.params["index"] for m in maps]})

        return averaged
