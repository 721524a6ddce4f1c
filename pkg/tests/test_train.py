import numpy as np
import pytest

from thermopot.utils.diffcore import Input, Bindings, NumericError, evaluate
from thermopot.utils.config import TrainConfig
from thermopot.utils.potentials import build_potential_pair
from thermopot.utils.residuals import build_loss_assembly
from thermopot.tools.selftest_functions import phase_micro_problem
from thermopot.tools.simulate_functions import QuadraticSpec, simulate_phase
from thermopot.tools.preprocess_functions import build_dataset
from thermopot.tools.train_functions import (AdamState, adam_step, dimensional_weights, initial_weights, check_loss_gradient,
												train, relative_l2_error_values, relative_l2_error, save_checkpoint,
												load_checkpoint)


def _assembly(dataset, hidden=(4,), seed=0):
	pair = build_potential_pair(dataset.experiment, dataset.normalizations, dataset.scales,
								{"f": list(hidden), "psi": list(hidden)}, seed)
	return(build_loss_assembly(pair, dataset.experiment, dataset.dX, density=dataset.meta.get("density")))

#------------------------------------------------- Adam -------------------------------------------------#

def test_first_adam_step_moves_by_learning_rate():
	params = {"w": np.array([1.0, -2.0, 0.5])}
	grads = {"w": np.array([3.0, -0.01, 0.0])}
	new, state = adam_step(params, grads, AdamState.zeros(params), lr=0.1)
	np.testing.assert_allclose(new["w"], [0.9, -1.9, 0.5], atol=1e-6)
	assert state.t == 1


def test_adam_minimizes_quadratic():
	params = {"w": np.array([2.0, -3.0])}
	state = AdamState.zeros(params)
	for _ in range(2000):
		params, state = adam_step(params, {"w": 2.0 * params["w"]}, state, lr=0.01)
	np.testing.assert_allclose(params["w"], 0.0, atol=1e-2)


def test_adam_missing_and_mismatched_gradients():
	params = {"a": np.ones(2), "b": np.ones(3)}
	new, _ = adam_step(params, {"a": np.ones(2)}, AdamState.zeros(params), lr=0.1)
	np.testing.assert_array_equal(new["b"], params["b"])
	with pytest.raises(ValueError):
		adam_step(params, {"a": np.ones(3)}, AdamState.zeros(params), lr=0.1)

#--------------------------------------------- Loss weights ---------------------------------------------#

def test_dimensional_weights():
	stats = {"traction_std": 2.0, "length": 9.0}
	np.testing.assert_allclose(dimensional_weights("phase", stats), [81.0 / 4.0, 0.25])
	np.testing.assert_array_equal(dimensional_weights("visco", {}), [1.0, 1.0, 1.0])


def test_constant_weights_from_config(rng):
	la, samples = phase_micro_problem(rng)
	cfg = TrainConfig(epochs=0, learning_rate=1e-3, weights_mode="constant", constant_weights=[1.0, 5.0])
	alpha, traces = initial_weights(la, cfg, samples)
	np.testing.assert_array_equal(alpha, [1.0, 5.0])
	assert traces is None

	cfg = TrainConfig(epochs=0, learning_rate=1e-3, weights_mode="constant", constant_weights=[1.0])
	with pytest.raises(ValueError):
		initial_weights(la, cfg, samples)


def test_adaptive_weights_from_config(rng):
	la, samples = phase_micro_problem(rng)
	alpha, traces = initial_weights(la, TrainConfig(epochs=0, learning_rate=1e-3), samples)
	assert len(traces) == 2
	assert np.sum(1.0 / alpha) == pytest.approx(1.0)


def test_loss_gradient_matches_finite_differences(rng):
	la, samples = phase_micro_problem(rng)
	assert check_loss_gradient(la, samples, n_entries=30) < 1e-5

#----------------------------------------------- Training -----------------------------------------------#

def test_training_history_and_best_parameters(diffusion_dataset):
	la = _assembly(diffusion_dataset)
	cfg = TrainConfig(epochs=30, learning_rate=5e-3, eval_every=10)
	pair, history, info = train(la, cfg, diffusion_dataset.train, diffusion_dataset.test)

	assert history["epoch"].tolist() == [0, 10, 20, 30]
	assert {"loss", "loss_pde", "alpha_pde", "test_loss", "elapsed"} <= set(history.columns)
	assert history["loss"].iloc[-1] < history["loss"].iloc[0]

	assert info["best_test_loss"] == pytest.approx(history["test_loss"].min())
	assert info["best_epoch"] in history["epoch"].tolist()
	assert info["alpha"] == [1.0]
	#the pair is left at the parameters with the lowest test loss
	assert la.loss_values(diffusion_dataset.test)[0] == pytest.approx(info["best_test_loss"], rel=1e-12)


def test_zero_epochs_only_evaluates(phase_dataset):
	la = _assembly(phase_dataset)
	before = {node: value.copy() for node, value in la.pair.get_values().items()}
	cfg = TrainConfig(epochs=0, learning_rate=1e-3, weights_mode="constant", gradient_check=False)
	pair, history, info = train(la, cfg, phase_dataset.train, phase_dataset.test, stats=phase_dataset.stats)

	assert len(history) == 1
	np.testing.assert_allclose(info["alpha"], dimensional_weights("phase", phase_dataset.stats))
	for node, value in pair.get_values().items():
		np.testing.assert_array_equal(value, before[node])


def test_periodic_weights_are_refreshed(phase_dataset):
	la = _assembly(phase_dataset)
	cfg = TrainConfig(epochs=4, learning_rate=1e-3, weights_mode="periodic", ntk_every=2, eval_every=1, max_ntk_samples=20)
	_, history, info = train(la, cfg, phase_dataset.train, phase_dataset.test)
	assert len(history) == 5
	assert np.sum(1.0 / np.array(info["alpha"])) == pytest.approx(1.0)
	assert history["alpha_pde"].iloc[0] != history["alpha_pde"].iloc[-1]


def test_diverging_training_raises(tmp_path, diffusion_dataset):
	la = _assembly(diffusion_dataset)
	initial = la.pair.get_values()
	cfg = TrainConfig(epochs=5, learning_rate=1e200, gradient_check=False)
	with pytest.raises(NumericError) as error:
		train(la, cfg, diffusion_dataset.train, diffusion_dataset.test, checkpoint_path=str(tmp_path / "ckpt.json"))

	assert "epoch" in str(error.value)
	assert (tmp_path / "ckpt_last_finite.json").exists()
	assert not (tmp_path / "ckpt.json").exists()
	pair, checkpoint = load_checkpoint(str(tmp_path / "ckpt_last_finite.json"))
	assert checkpoint["epoch"] == 0
	for node, value in pair.get_values().items():
		assert np.all(np.isfinite(value))
	for node, value in la.pair.get_values().items():
		np.testing.assert_array_equal(value, initial[node])


def test_failed_gradient_check_raises(monkeypatch, diffusion_dataset):
	monkeypatch.setattr("thermopot.tools.train_functions.check_loss_gradient", lambda *args, **kwargs: 1.0)
	la = _assembly(diffusion_dataset)
	cfg = TrainConfig(epochs=1, learning_rate=1e-3, gradient_check=True)
	with pytest.raises(NumericError, match="finite differences"):
		train(la, cfg, diffusion_dataset.train, diffusion_dataset.test)


def test_quadratic_free_energy_is_recovered():
	stiffness = 1.0e4
	tf = simulate_phase(QuadraticSpec(stiffness), n_x=20, dt=1e-5, total_time=0.05, trace_stride=10, field_stride=100)
	dataset = build_dataset(tf, "phase", "phase-space", 0.8, seed=2, target_count=200, coarse_stride=100)
	pair = build_potential_pair("phase", dataset.normalizations, dataset.scales, {"f": [8], "psi": [4]}, 0)
	la = build_loss_assembly(pair, "phase", dataset.dX)
	cfg = TrainConfig(epochs=3000, learning_rate=1e-2, weights_mode="constant", eval_every=500, gradient_check=False)
	pair, _, _ = train(la, cfg, dataset.train, dataset.test, stats=dataset.stats)

	strain = dataset.train["bc"].frame["strain_bc"].to_numpy()
	lo, hi = strain.min(), strain.max()
	h = 0.5 * (hi - lo)
	e = Input("e")
	f = evaluate(pair.free_energy_density([e]), pair.bind(Bindings().bind(e, np.array([lo, lo + h, hi])))).ravel()
	assert (f[2] - 2.0 * f[1] + f[0]) / h**2 == pytest.approx(stiffness, rel=0.02)


def test_checkpoint_restores_pair(tmp_path, diffusion_dataset):
	la = _assembly(diffusion_dataset, seed=3)
	path = save_checkpoint(str(tmp_path / "run" / "ckpt.json"), la.pair, la, epoch=7, meta={"config_hash": "abc"})
	pair, checkpoint = load_checkpoint(path)
	assert checkpoint["epoch"] == 7 and checkpoint["term_names"] == ["pde"]
	assert checkpoint["meta"]["config_hash"] == "abc"

	c, j = Input("c"), Input("j")
	def psi(p):
		bindings = p.bind(Bindings().bind(c, np.linspace(0.1, 0.9, 5)).bind(j, np.linspace(-1, 1, 5)))
		return(evaluate(p.dissipation([c], [j]), bindings))
	np.testing.assert_allclose(psi(pair), psi(la.pair), rtol=1e-14)

#------------------------------------------------ Errors ------------------------------------------------#

def test_relative_error_values():
	x = np.linspace(0, 1, 101)
	A = np.sin(np.pi * x)
	assert relative_l2_error_values(A, A, [x]) == 0.0
	assert relative_l2_error_values(A, np.zeros_like(A), [x]) == pytest.approx(100.0)
	assert relative_l2_error_values(A, 1.1 * A, [x]) == pytest.approx(1.0)


def test_relative_error_of_callables():
	assert relative_l2_error(lambda x: x, lambda x: 0.9 * x, (0.0, 2.0)) == pytest.approx(1.0)
	assert relative_l2_error(lambda X, Y: X * Y, lambda X, Y: X * Y, ((0, 1), (-1, 1)), quadrature_n=51) == 0.0

	#masked points count in neither integral
	error = relative_l2_error(lambda x: 1.0 + 0.0 * x, lambda x: np.where(x > 0.5, 5.0, 1.0), (0.0, 1.0),
								quadrature_n=1001, mask=lambda x: x <= 0.5)
	assert error == 0.0


def test_relative_error_needs_non_vanishing_reference():
	with pytest.raises(NumericError):
		relative_l2_error_values(np.zeros(5), np.ones(5), [np.arange(5.0)])
