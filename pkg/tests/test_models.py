"""Tests for the reference models, the linear oracle and the context network"""

import numpy as np
import pytest
from models import (build_tiny_cnn, build_tiny_attention, build_linear_model,
                    build_context_network, build_model, grad_wrt_layer,
                    model_finite_diff_grad, finite_diff_grad, grid_side,
                    forward_from)
from dataset import synth_dataset


class TestGradients:

    @pytest.mark.parametrize("layer", [0, 1, 2, 3])
    def test_cnn_matches_finite_differences(self, cnn, x_cnn, layer):
        r = cnn.forward(x_cnn).representations[layer]
        analytic = grad_wrt_layer(cnn, layer, r, 2)
        numeric = model_finite_diff_grad(cnn, layer, r, 2, 1e-5)
        np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-8)

    @pytest.mark.parametrize("layer", [0, 1, 2, 3])
    def test_attention_matches_finite_differences(self, vit, x_vit, layer):
        r = vit.forward(x_vit).representations[layer]
        analytic = grad_wrt_layer(vit, layer, r, 1)
        numeric = model_finite_diff_grad(vit, layer, r, 1, 1e-5)
        np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-8)

    @pytest.mark.parametrize("name", ["tiny_cnn", "tiny_attention"])
    def test_seeded_points(self, name):
        """Sampled coordinates of every layer at 20 seeded points."""

        model = build_model(name, 0)
        for seed in range(20):
            rng = np.random.default_rng(seed)
            x = rng.normal(0.0, 0.5, model.input_shape)
            y = int(rng.integers(model.class_count))
            for layer in range(model.layer_count + 1):
                r = model.forward(x).representations[layer]
                analytic = grad_wrt_layer(model, layer, r, y)
                for flat in rng.choice(r.size, 8, replace=False):
                    index = np.unravel_index(flat, r.shape)
                    upper, lower = r.copy(), r.copy()
                    upper[index] += 1e-5
                    lower[index] -= 1e-5
                    numeric = (forward_from(model, layer, upper)[y]
                               - forward_from(model, layer, lower)[y]) / 2e-5
                    assert analytic[index] == pytest.approx(
                        numeric, rel=1e-5, abs=1e-8)

    def test_attention_gradient_matches_finite_differences(self, vit, x_vit):
        block = vit.attention_layers[0]
        trace = vit.attention_trace(x_vit, 0)
        attention = trace.attentions[0]

        numeric = finite_diff_grad(
            lambda a: float(vit.forward(x_vit, {block: a}).logits[0]),
            attention, 1e-5)
        np.testing.assert_allclose(trace.gradients[0], numeric,
                                   rtol=1e-5, atol=1e-8)

    def test_linear_model_gradient_is_weight(self, rng):
        weights = rng.normal(size=(1, 2, 2))
        model = build_linear_model(weights)
        x = rng.normal(size=(1, 2, 2))
        np.testing.assert_allclose(grad_wrt_layer(model, 0, x, 0), weights)
        np.testing.assert_array_equal(grad_wrt_layer(model, 0, x, 1), 0.0)


class TestModelContract:

    def test_layer_shapes(self, cnn, vit):
        assert cnn.layer_shapes == [(3, 16, 16), (4, 16, 16), (4, 8, 8),
                                    (6, 8, 8)]
        assert vit.attention_layers == [2, 3]
        assert grid_side(10) == 3

    def test_probabilities(self, cnn, x_cnn):
        probabilities = cnn.probabilities(x_cnn)
        assert probabilities.sum() == pytest.approx(1.0)
        assert cnn.predicted_class(x_cnn) == int(np.argmax(probabilities))

    def test_invalid_class_and_shape(self, cnn, x_cnn):
        with pytest.raises(ValueError):
            cnn.check_class(4)
        with pytest.raises(ValueError):
            cnn.forward(x_cnn[:2])
        with pytest.raises(ValueError):
            grid_side(11)

    def test_zero_init_is_uniform(self, x_cnn):
        model = build_tiny_cnn(0, zero_init=True)
        np.testing.assert_allclose(model.probabilities(x_cnn), 0.25)

    def test_deterministic_construction(self, x_cnn):
        first = build_model("tiny_cnn", 3).forward(x_cnn).logits
        second = build_model("tiny_cnn", 3).forward(x_cnn).logits
        np.testing.assert_array_equal(first, second)
        with pytest.raises(ValueError):
            build_model("resnet")

    def test_attention_override_changes_output(self, vit, x_vit):
        block = vit.attention_layers[-1]
        attention = vit.forward(x_vit).caches[block - 1]["attention"]
        uniform = np.full_like(attention, 1.0 / attention.shape[-1])

        same = vit.forward(x_vit, {block: attention}).logits
        changed = vit.forward(x_vit, {block: uniform}).logits

        np.testing.assert_allclose(same, vit.forward(x_vit).logits)
        assert not np.allclose(changed, same)

    def test_tiny_cnn_accuracy_above_chance(self, cnn):
        data = synth_dataset(0, 200, "test")
        hits = [cnn.predicted_class(x) == y for x, y in data.items]
        assert np.mean(hits) >= 0.6


class TestContextNetwork:

    def test_output_dimension(self, x_cnn):
        network = build_context_network(0, (3, 16, 16), 5)
        assert network.output_dim == 5
        assert network.embed(x_cnn).shape == (5,)

    @pytest.mark.parametrize("name", ["stage1.bias", "stage3.weight",
                                      "head.weight"])
    def test_parameter_gradient(self, x_cnn, name):
        network = build_context_network(1, (3, 16, 16), 3)
        grad_c = np.array([0.5, -1.0, 2.0])
        _, caches = network.forward(x_cnn)
        analytic = network.gradient(caches, grad_c)[name]

        parameter = network.parameters[name]
        original = parameter.copy()

        def objective(value):
            parameter[...] = value
            result = float(grad_c @ network.embed(x_cnn))
            parameter[...] = original
            return result

        numeric = finite_diff_grad(objective, original, 1e-5)
        np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-8)

    def test_copy_is_independent(self, x_cnn):
        network = build_context_network(0, (3, 16, 16), 4)
        clone = network.copy()
        clone.parameters["head.bias"][...] += 1.0
        assert not np.allclose(clone.embed(x_cnn), network.embed(x_cnn))

    def test_set_parameters_validates_names(self):
        network = build_context_network(0, (3, 16, 16), 4)
        with pytest.raises(ValueError):
            network.set_parameters({"head.bias": np.zeros(4)})
