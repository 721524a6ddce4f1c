import numpy as np
import pytest

from thermopot.utils.config import ConfigError, default_config, ExperimentConfig
from thermopot.utils.potentials import build_potential_pair
from thermopot.tools.simulate_functions import (PhaseReference, ViscoMaterial, ViscoReference, DiffusionReference,
												chirp_displacement, simulate_visco_1d)
from thermopot.tools.preprocess_functions import build_dataset
from thermopot.tools.evaluate_functions import (ERROR_QUANTITIES, PairEvaluator, reference_from_config, data_ranges,
												coverage_mask, evaluate_pair, error_table)
from thermopot.tools.evaluate import evaluate_from_config

SMALL = {"quadrature_n": 201, "grid_n": 11, "coverage_radius": 0.05, "extrapolation_margin": 0.0}


def test_reference_pair_has_no_error_phase(phase_dataset, well):
	reference = PhaseReference(well, 8.0)
	errors, surfaces = evaluate_pair(reference.analytic_pair(), phase_dataset, reference, SMALL)
	assert set(errors) == set(ERROR_QUANTITIES["phase"])
	for quantity, error in errors.items():
		assert error < 1e-10, quantity
	assert len(surfaces) == 4 * 11
	assert surfaces["y"].isna().all()


def test_reference_pair_has_no_error_visco():
	material = ViscoMaterial()
	tf = simulate_visco_1d(material, n_x=10, dt=1e-4, output_dt=1e-3, total_time=0.03, bc_displacement=chirp_displacement())
	dataset = build_dataset(tf, "visco", "random", 0.8, seed=0)
	reference = ViscoReference(material)

	errors, surfaces = evaluate_pair(reference.analytic_pair(), dataset, reference, SMALL)
	assert set(errors) == set(ERROR_QUANTITIES["visco"])
	for quantity, error in errors.items():
		assert error < 1e-10, quantity
	assert len(surfaces[surfaces["quantity"] == "f"]) == 11 * 11


def test_reference_pair_has_no_error_diffusion(diffusion_dataset):
	reference = DiffusionReference("linear")
	errors, surfaces = evaluate_pair(reference.analytic_pair(), diffusion_dataset, reference, SMALL)
	assert errors["psihat_covered"] < 1e-10
	assert errors["psihat_rectangle"] < 1e-10
	assert "covered" in surfaces.columns and surfaces["covered"].any()


def test_diffusion_surfaces_hold_both_potentials(diffusion_dataset):
	reference = DiffusionReference("linear")
	_, surfaces = evaluate_pair(reference.analytic_pair(), diffusion_dataset, reference, SMALL)
	assert set(surfaces["quantity"]) == {"psihat", "f", "f_prime", "psi", "psi_prime"}
	for quantity in ("f", "f_prime", "psi", "psi_prime"):
		rows = surfaces[surfaces["quantity"] == quantity]
		np.testing.assert_allclose(rows["predicted"], rows["analytic"], rtol=1e-10, atol=1e-12, err_msg=quantity)
	assert surfaces.loc[surfaces["quantity"] == "f", "y"].isna().all()
	assert len(surfaces[surfaces["quantity"] == "psi"]) == len(surfaces[surfaces["quantity"] == "psihat"])


def test_untrained_pair_has_finite_errors(phase_dataset, well):
	hidden = {"f": [4], "psi": [4]}
	pair = build_potential_pair("phase", phase_dataset.normalizations, phase_dataset.scales, hidden, seed=0)
	errors, _ = evaluate_pair(pair, phase_dataset, PhaseReference(well, 8.0), SMALL)
	assert all(np.isfinite(error) and error > 0 for error in errors.values())


def test_pair_and_dataset_must_match(diffusion_dataset, well):
	with pytest.raises(ConfigError):
		evaluate_pair(PhaseReference(well, 8.0).analytic_pair(), diffusion_dataset, DiffusionReference("linear"), SMALL)

	config = ExperimentConfig.from_dict(default_config("diffusion-linear"))
	with pytest.raises(ConfigError):
		evaluate_from_config(config, PhaseReference(well, 8.0).analytic_pair(), diffusion_dataset)


def test_reference_from_config():
	config = default_config("phase")
	reference = reference_from_config("phase", config["simulation"])
	assert reference.viscosity == 8.0
	assert reference.well.minima() == pytest.approx([0.0, 0.01], abs=1e-12)
	assert isinstance(reference_from_config("visco", default_config("visco")["simulation"]), ViscoReference)
	assert reference_from_config("diffusion-nonlinear", default_config("diffusion-nonlinear")["simulation"]).model == "nonlinear"


def test_data_ranges(phase_dataset):
	ranges = data_ranges(phase_dataset)
	train = phase_dataset.train
	assert ranges["w"] == (train["pde"].column("velocity").min(), train["pde"].column("velocity").max())
	assert ranges["z0"][1] >= train["bc"].column("strain_bc").max()


def test_coverage_mask():
	x = np.linspace(0, 1, 3)
	X, Y = np.meshgrid(x, x, indexing="ij")
	covered = coverage_mask(np.array([[0.0, 0.0], [1.0, 1.0]]), X, Y, 0.1, ((0.0, 1.0), (0.0, 1.0)))
	expected = np.zeros((3, 3), dtype=bool)
	expected[0, 0] = expected[2, 2] = True
	np.testing.assert_array_equal(covered, expected)


def test_coverage_is_measured_in_scaled_units():
	X, Y = np.meshgrid([0.0, 1.0], [0.0, 100.0], indexing="ij")
	covered = coverage_mask(np.array([[0.0, 0.0]]), X, Y, 0.5, ((0.0, 1.0), (0.0, 100.0)))
	assert covered[0, 0] and not covered[1, 0] and not covered[0, 1]


def test_evaluator_broadcasts_and_chunks(diffusion_dataset):
	pair = DiffusionReference("linear").analytic_pair()
	evaluator = PairEvaluator(pair, "diffusion-linear", chunk_size=7)
	C, J = np.meshgrid(np.linspace(0.2, 0.8, 5), np.linspace(-1, 1, 4), indexing="ij")
	np.testing.assert_allclose(evaluator("psi", [C], J), J**2 / (2 * C))
	np.testing.assert_allclose(evaluator("f_zz", [C]), 1.0 / C)


def test_error_table():
	errors = {"psihat_covered": 1.5, "psihat_rectangle": 4.0}
	table = error_table(errors, "diffusion-nonlinear", checkpoint="ckpt.json")
	assert table.loc[0, "err_psihat_covered"] == 1.5
	assert table.loc[0, "checkpoint"] == "ckpt.json"
	assert table.loc[0, "experiment"] == "diffusion-nonlinear"
