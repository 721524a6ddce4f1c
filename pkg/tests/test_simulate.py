import numpy as np
import pytest

from thermopot.utils.diffcore import Input, Bindings, NumericError, evaluate, derivative
from thermopot.utils.config import ConfigError, StabilityError
from thermopot.tools.simulate_functions import (TrajectoryField, DoubleWellSpec, QuadraticSpec, ViscoMaterial,
												DiffusionReference, reference_diffusion_potentials, reference_diffusion_psihat, reference_visco_potentials,
												chirp_displacement, diffusion_flux, diffusion_step, simulate_phase, simulate_visco_1d, simulate_diffusion,
												simulate_diffusion_linear, simulate_diffusion_nonlinear)
from thermopot.tools.selftest_functions import (check_diffusion_conservation, check_stationarity, check_visco_identities,
												check_lyapunov)


#----------------------------------------- Phase transformation -----------------------------------------#

def test_double_well_minima(well):
	np.testing.assert_allclose(well.minima(), [0.0, 0.01], atol=1e-12)
	assert well.value(0.0) == 0.0
	assert well.derivative(0.005) == pytest.approx(0.0, abs=1e-9)


def test_double_well_derivative_and_curvature(well):
	eps = np.linspace(-0.02, 0.04, 7)
	h = 1e-7
	np.testing.assert_allclose(well.derivative(eps), (well.value(eps + h) - well.value(eps - h)) / (2 * h), rtol=1e-5, atol=1e-3)
	np.testing.assert_allclose(well.curvature(eps), (well.derivative(eps + h) - well.derivative(eps - h)) / (2 * h), rtol=1e-5)


def test_double_well_on_graph_nodes(well):
	e = Input("e")
	points = np.array([-0.01, 0.003, 0.02])
	np.testing.assert_allclose(evaluate(derivative(well.value(e), e), Bindings().bind(e, points)).ravel(), well.derivative(points), rtol=1e-10)


def test_strong_tilt_leaves_a_single_well():
	with pytest.raises(ConfigError):
		DoubleWellSpec(tilt=1e3)


def test_phase_time_step_above_stability_limit(well):
	with pytest.raises(StabilityError):
		simulate_phase(well, n_x=20, dt=1e-6, total_time=1e-5)


def test_phase_trajectory_layout(phase_trajectory):
	tf = phase_trajectory
	assert tf.grid["n_x"] == 20 and tf.grid["dX"] == pytest.approx(0.45)
	assert tf.fields["strain"].shape == (200, 20)
	assert tf.fields["velocity"].shape == (200, 19)
	assert tf.fields["displacement"].shape == (200, 21)
	assert len(tf.traces["traction"]) == 2000
	np.testing.assert_array_equal(tf.steps, np.arange(200) * 100)
	np.testing.assert_array_equal(tf.fields["displacement"][:, 0], 0.0)


def test_phase_boundary_traction_is_stress_of_last_element(phase_trajectory, well):
	tf = phase_trajectory
	np.testing.assert_allclose(tf.traces["traction"], well.derivative(tf.traces["strain_bc"]))
	np.testing.assert_allclose(tf.traces["strain_bc"][::10], tf.fields["strain"][:, -1])


def test_phase_velocity_is_stress_gradient(phase_trajectory, well):
	tf = phase_trajectory
	stress = well.derivative(tf.fields["strain"])
	np.testing.assert_allclose(tf.fields["velocity"], np.diff(stress, axis=1) / (8.0 * tf.grid["dX"]))


def test_phase_strain_range_is_enforced():
	narrow = DoubleWellSpec(strain_range=(-0.001, 0.011))
	with pytest.raises(NumericError):
		simulate_phase(narrow, n_x=20, dt=5e-7, total_time=0.03, trace_stride=10, field_stride=100)


def test_unpulled_quadratic_bar_stays_at_rest():
	""" An unpulled single-well bar stays unstrained """
	tf = simulate_phase(QuadraticSpec(1.0e4), n_x=10, pull_velocity=0.0, dt=1e-6, total_time=1e-4, trace_stride=1, field_stride=10)
	np.testing.assert_array_equal(tf.fields["strain"], 0.0)

#-------------------------------------------- Viscoelasticity -------------------------------------------#

def test_reduced_material_constants():
	material = ViscoMaterial()
	assert material.bulk_modulus == pytest.approx(7.5e5 / (3 * 0.02))
	assert material.shear_modulus == pytest.approx(7.5e5 / 2.98)
	theta = 1 + (material.shear_modulus + 7.5e4) / (3 * material.bulk_modulus)
	assert material.modulus_1d == pytest.approx(3 * material.shear_modulus / theta)
	assert material.viscosities_1d[0] == pytest.approx(3 * 7.5e4 * 0.01)


def test_material_needs_matching_prony_series():
	with pytest.raises(ConfigError):
		ViscoMaterial(viscous_moduli=(1.0, 2.0), relaxation_times=(0.1,))


def test_chirp_starts_at_rest():
	u = chirp_displacement()
	assert u(0.0) == 0.0
	assert 0.0 <= u(0.37) <= 0.02


def test_visco_cfl_limit():
	material = ViscoMaterial()
	dt = 1.5 * (1.0 / 20) / material.wave_speed
	with pytest.raises(StabilityError):
		simulate_visco_1d(material, n_x=20, dt=dt, output_dt=dt, total_time=0.1)


def test_visco_output_step_must_be_multiple_of_dt():
	with pytest.raises(ConfigError):
		simulate_visco_1d(ViscoMaterial(), n_x=20, dt=1e-4, output_dt=2.5e-4, total_time=0.01)


def test_visco_trajectory_records_consistent_rates():
	material = ViscoMaterial()
	tf = simulate_visco_1d(material, n_x=20, dt=1e-4, output_dt=1e-3, total_time=0.05, bc_displacement=chirp_displacement())
	assert tf.fields["strain"].shape == (51, 20)
	assert tf.fields["viscous_strain_rate"].shape == (50, 20)

	#stored rates are the forward differences of the stored viscous strains
	np.testing.assert_allclose(tf.fields["viscous_strain_rate"], np.diff(tf.fields["viscous_strain"], axis=0) / 1e-3)

	#and they follow the evolution law of the internal variable
	reference = reference_visco_potentials(material)
	rate = reference.viscous_strain_rates(tf.fields["strain"][:-1], [tf.fields["viscous_strain"][:-1]])[0]
	np.testing.assert_allclose(tf.fields["viscous_strain_rate"], rate, rtol=1e-9, atol=1e-12)

	np.testing.assert_allclose(tf.traces["traction"], tf.fields["stress"][:, -1])
	assert np.max(np.abs(tf.fields["strain"])) > 0


def test_visco_free_energy_derivatives():
	for result in check_visco_identities(n_states=200, seed=1):
		assert result.passed, result

#----------------------------------------------- Diffusion ----------------------------------------------#

def test_linear_flux_sign():
	dX = 0.1
	c = np.array([1.0, 2.0, 1.0, 0.5])
	#flux at face i+1/2 runs from high to low concentration
	np.testing.assert_allclose(diffusion_flux(c, dX, "linear"), [-10.0, 10.0, 5.0, -5.0])


def test_nonlinear_flux_is_half_the_linear_flux_at_low_density():
	c = np.full(8, 1e-4) * (1 + 0.1 * np.sin(np.linspace(0, 2 * np.pi, 8, endpoint=False)))
	#m -> c/2 as c -> 0
	np.testing.assert_allclose(2.0 * diffusion_flux(c, 0.1, "nonlinear"), diffusion_flux(c, 0.1, "linear"), rtol=2e-3)


def test_unknown_diffusion_model():
	with pytest.raises(ConfigError):
		simulate_diffusion("anomalous")
	with pytest.raises(ValueError):
		diffusion_flux(np.ones(3), 0.1, "anomalous")


@pytest.mark.parametrize("model, dt", [("linear", 1e-4), ("nonlinear", 1e-4)])
def test_ftcs_stability_limit(model, dt):
	with pytest.raises(StabilityError):
		simulate_diffusion(model, n_x=99, dt=dt)


def test_diffusion_step_conserves_mass(rng):
	c = rng.uniform(0.1, 1.0, 50)
	c_next, _ = diffusion_step(c, 1e-5, 0.02, "nonlinear")
	assert c_next.sum() == pytest.approx(c.sum(), rel=1e-13)


def test_diffusion_snapshots(diffusion_trajectory):
	tf = diffusion_trajectory
	assert tf.grid["periodic"]
	np.testing.assert_array_equal(tf.steps, np.arange(0, 51, 5))
	assert tf.fields["concentration"].shape == (11, 20)
	np.testing.assert_allclose(tf.fields["flux"], [diffusion_flux(c, 0.05, "linear") for c in tf.fields["concentration"]])


def test_diffusion_reference_identities():
	c = np.linspace(0.05, 1.1, 23)
	for model in ("linear", "nonlinear"):
		reference = DiffusionReference(model)
		h = 1e-5
		mu = reference.chemical_potential(c)
		np.testing.assert_allclose(mu, (reference.free_energy(c + h) - reference.free_energy(c - h)) / (2 * h), rtol=1e-6, atol=1e-8)
		np.testing.assert_allclose(reference.curvature(c),
									(reference.chemical_potential(c + h) - reference.chemical_potential(c - h)) / (2 * h), rtol=1e-6)
		j = np.linspace(-1, 1, 23)
		np.testing.assert_allclose(reference.psihat(c, j), reference.dissipation(c, j) / reference.curvature(c), rtol=1e-10)

	with pytest.raises(ValueError):
		DiffusionReference("nonlinear").analytic_pair()

	c, j = np.array([0.2, 0.7]), np.array([0.5, -1.0])
	np.testing.assert_allclose(reference_diffusion_psihat("linear")(c, j), 0.5 * j**2)
	np.testing.assert_allclose(reference_diffusion_potentials("nonlinear", beta=2.0).dissipation(c, j),
								0.5 * DiffusionReference("nonlinear").dissipation(c, j))


def test_named_diffusion_simulators(diffusion_trajectory):
	linear = simulate_diffusion_linear(n_x=20, dt=1e-3, total_time=0.05, n_snapshots=11)
	np.testing.assert_array_equal(linear.fields["concentration"], diffusion_trajectory.fields["concentration"])

	nonlinear = simulate_diffusion_nonlinear(n_x=20, dt=5e-5, total_time=5e-4, n_snapshots=3)
	generic = simulate_diffusion("nonlinear", n_x=20, dt=5e-5, total_time=5e-4, n_snapshots=3)
	np.testing.assert_array_equal(nonlinear.fields["flux"], generic.fields["flux"])
	assert nonlinear.experiment == "diffusion-nonlinear"


def test_conservation_checks():
	for result in check_diffusion_conservation(n_x=30, n_steps=10):
		assert result.passed, result


def test_rest_states_are_stationary():
	for result in check_stationarity():
		assert result.passed, result


def test_free_energy_decreases_along_linear_diffusion():
	for result in check_lyapunov(n_steps=50):
		assert result.passed, result

#------------------------------------------------ Output ------------------------------------------------#

def test_trajectory_files(tmp_path, phase_trajectory):
	written = phase_trajectory.save(str(tmp_path), "phase", config_hash="abc")
	assert any(path.endswith("_simulation_manifest.json") for path in written)

	tf = TrajectoryField.load(str(tmp_path / "phase_simulation_manifest.json"))
	assert tf.meta["config_hash"] == "abc"
	np.testing.assert_array_equal(tf.stations["strain"], np.arange(1, 21))
	np.testing.assert_allclose(tf.fields["strain"], phase_trajectory.fields["strain"])
	np.testing.assert_allclose(tf.traces["traction"], phase_trajectory.traces["traction"])
	np.testing.assert_array_equal(tf.trace_steps, phase_trajectory.trace_steps)


def test_non_finite_fields_are_rejected():
	with pytest.raises(NumericError):
		TrajectoryField("diffusion-linear", {}, np.arange(2.0), np.arange(2), {"concentration": np.array([[1.0, np.nan]])},
						{"concentration": np.arange(2)}, {})
