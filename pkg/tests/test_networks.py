import numpy as np
import pytest

from thermopot.utils.diffcore import Input, Bindings, ShapeError, evaluate
from thermopot.utils.networks import realize_nonneg, glorot_init, LayerSpec, IntegrableNetwork, Inn, Ficinn, Picinn
from thermopot.tools.selftest_functions import check_convexity, _randomize


def test_realized_weights_are_positive_and_continuous():
	raw = np.array([-50.0, -1.0, -1e-12, 0.0, 0.5])
	realized = realize_nonneg(raw)
	assert np.all(realized > 0)
	np.testing.assert_allclose(realized[2], realized[3], rtol=1e-10)
	assert realized[4] == pytest.approx(0.5 + np.exp(-5.0))


def test_layer_widths_must_be_positive():
	with pytest.raises(ShapeError):
		LayerSpec(1, [4, 0])
	with pytest.raises(ShapeError):
		Inn(0, [4])


def test_glorot_init_bounds_and_zero_biases():
	network = Inn(2, [30, 30])
	values = glorot_init(network, seed=4)
	for key, node in network.params.items():
		assert values[key].shape == node.shape
		if key.startswith("b"):
			assert np.all(values[key] == 0)
		else:
			fan_out, fan_in = node.shape
			assert np.max(np.abs(values[key])) <= np.sqrt(6.0 / (fan_in + fan_out))


def test_glorot_init_is_seeded():
	network = Ficinn(1, [5, 5])
	first, second = glorot_init(network, 3), glorot_init(network, 3)
	for key in first:
		np.testing.assert_array_equal(first[key], second[key])


@pytest.mark.parametrize("network, n_params", [
	(Inn(1, [4, 4]), 8 + 20 + 5),
	(Ficinn(1, [4]), 8 + 4 + 1 + 1),
])
def test_parameter_counts(network, n_params):
	assert network.n_parameters == n_params


def test_inn_output_shape(rng):
	network = Inn(2, [6, 6]).initialize(seed=0)
	z = [Input("a"), Input("b")]
	out = network.forward(z)
	assert out.shape == (1,)
	values = evaluate(out, network.bind(Bindings().bind(z[0], rng.normal(size=7)).bind(z[1], rng.normal(size=7))))
	assert values.shape == (7, 1)


def test_wrong_input_width_raises():
	with pytest.raises(ShapeError):
		Inn(2, [3]).forward([Input("a")])
	with pytest.raises(ShapeError):
		Picinn(1, 1, [3]).forward([Input("z")], [Input("w"), Input("v")])


def test_picinn_has_no_y_term_on_first_layer():
	network = Picinn(1, 1, [4, 4])
	assert "Wy0" not in network.params
	assert network.params["Wy1"].shape == (4, 4)
	assert network.params["Wy2"].shape == (1, 4)


def test_one_dimensional_convexity_of_ficinn(rng):
	network = Ficinn(1, [8, 8])
	_randomize(network, rng, scale=1.5)
	w = Input("w")
	grid = np.linspace(-4, 4, 401)
	values = evaluate(network.forward([w]), network.bind(Bindings().bind(w, grid))).ravel()
	assert np.min(np.diff(values, 2)) >= -1e-10


def test_convexity_checks():
	for result in check_convexity(n_draws=100, n_param_draws=10, seed=2):
		assert result.passed, result


@pytest.mark.parametrize("network", [Inn(1, [3, 3]), Ficinn(1, [3]), Picinn(1, 1, [3, 2])])
def test_checkpoint_dict_restores_outputs(network, rng):
	_randomize(network, rng)
	restored = IntegrableNetwork.from_dict(network.to_dict())
	assert restored.kind == network.kind

	inputs = [Input("a")] if network.kind != "picinn" else [[Input("a")], [Input("b")]]
	def output(net):
		out = net.forward(*inputs) if net.kind == "picinn" else net.forward(inputs)
		bindings = net.bind(Bindings())
		for node in (inputs[0] + inputs[1] if net.kind == "picinn" else inputs):
			bindings.bind(node, np.linspace(-1, 1, 5))
		return(evaluate(out, bindings))

	np.testing.assert_array_equal(output(network), output(restored))


def test_unknown_network_kind():
	with pytest.raises(ValueError):
		IntegrableNetwork.from_dict({"kind": "cnn"})
