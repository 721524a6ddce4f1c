#!/usr/bin/env python

"""
Classes and functions for comparing learned potentials with their closed-form references:
relative L2 error tables and plot-ready potential surfaces

@license: MIT
"""

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree

from thermopot.utils.diffcore import Input, Bindings, derivative, evaluate
from thermopot.utils.config import ConfigError
from thermopot.tools.preprocess_functions import normalization_data
from thermopot.tools.train_functions import relative_l2_error_values
from thermopot.tools.simulate_functions import (DoubleWellSpec, PhaseReference, ViscoMaterial, ViscoReference,
												DiffusionReference)

N_STATE = {"phase": 1, "visco": 2, "diffusion-linear": 1, "diffusion-nonlinear": 1}

ERROR_QUANTITIES = {"phase": ("f", "f_prime", "psi", "psi_prime"),
					"visco": ("f", "stress", "viscous_stress", "psi", "psi_prime"),
					"diffusion-linear": ("psihat_covered", "psihat_rectangle"),
					"diffusion-nonlinear": ("psihat_covered", "psihat_rectangle")}

#--------------------------------------------------------------------------------------------------#

class PairEvaluator:
	""" Numeric values of a potential pair and its input derivatives on arrays """

	def __init__(self, pair, experiment, chunk_size=50000):

		self.pair = pair
		self.chunk_size = chunk_size
		self.z = [Input("evaluate.z{0}".format(k)) for k in range(N_STATE[experiment])]
		self.w = [Input("evaluate.w")]
		diffusion = experiment.startswith("diffusion")

		f = pair.free_energy_density(self.z)
		psi = pair.dissipation(self.z if diffusion else [], self.w)
		self.nodes = {"f": f, "psi": psi, "psi_w": derivative(psi, self.w[0])}
		for k, z_k in enumerate(self.z):
			self.nodes["f_z{0}".format(k)] = derivative(f, z_k)
		if diffusion:
			self.nodes["f_zz"] = derivative(self.nodes["f_z0"], self.z[0])

	def __call__(self, name, z=(), w=None):

		arrays = [np.asarray(a, dtype=float) for a in z] + ([] if w is None else [np.asarray(w, dtype=float)])
		arrays = np.broadcast_arrays(*arrays)
		shape = arrays[0].shape
		flat = [a.ravel() for a in arrays]
		leaves = self.z[:len(z)] + ([] if w is None else self.w)

		out = np.empty(flat[0].size)
		for start in range(0, len(out), self.chunk_size):
			stop = start + self.chunk_size
			bindings = self.pair.bind(Bindings())
			for leaf, values in zip(leaves, flat):
				bindings.bind(leaf, values[start:stop])
			out[start:stop] = np.ravel(evaluate(self.nodes[name], bindings))
		return(out.reshape(shape))


def reference_from_config(experiment, simulation):
	""" Closed-form reference of an experiment from its simulation config section """

	if experiment == "phase":
		well = DoubleWellSpec(simulation["height"], simulation["well_left"], simulation["well_right"], simulation["tilt"],
								(simulation["strain_min"], simulation["strain_max"]))
		return(PhaseReference(well, simulation["viscosity"]))

	elif experiment == "visco":
		return(ViscoReference(ViscoMaterial(simulation["youngs_modulus"], simulation["poisson_ratio"], simulation["density"],
											simulation["viscous_moduli"], simulation["relaxation_times"])))

	elif experiment in ("diffusion-linear", "diffusion-nonlinear"):
		return(DiffusionReference(experiment.split("-")[1], beta=simulation["beta"]))

	raise ConfigError("unknown experiment '{0}'".format(experiment), "experiment")


def data_ranges(dataset):
	""" (min, max) per potential input over the training data: keys 'z0', ('z1'), 'w' """

	data = normalization_data(dataset.experiment, dataset.train)
	f_inputs = np.asarray(data["f"], dtype=float)
	if f_inputs.ndim == 1:
		f_inputs = f_inputs[:, None]

	ranges = {"z{0}".format(k): (float(f_inputs[:, k].min()), float(f_inputs[:, k].max())) for k in range(f_inputs.shape[1])}
	ranges["w"] = (float(np.min(data["psi_w"])), float(np.max(data["psi_w"])))
	return(ranges)


def coverage_mask(points, X, Y, radius, ranges):
	""" Grid points within 'radius' of a data point, distances measured after scaling both ranges to [0, 1] """

	scale = np.array([ranges[0][1] - ranges[0][0], ranges[1][1] - ranges[1][0]])
	offset = np.array([ranges[0][0], ranges[1][0]])
	tree = cKDTree((np.asarray(points) - offset) / scale)
	grid = (np.column_stack([X.ravel(), Y.ravel()]) - offset) / scale
	distance, _ = tree.query(grid, k=1)
	return((distance <= radius).reshape(X.shape))

#--------------------------------------------------------------------------------------------------#
#------------------------------------------ Error tables ------------------------------------------#
#--------------------------------------------------------------------------------------------------#

def _surface_rows(quantity, x, y, predicted, analytic):
	return(pd.DataFrame({"quantity": quantity,
						"x": np.ravel(x),
						"y": np.nan if y is None else np.ravel(y),
						"predicted": np.ravel(predicted),
						"analytic": np.ravel(analytic)}))


def evaluate_phase(evaluator, reference, ranges, quadrature_n=1001, grid_n=101):

	errors, surfaces = {}, []
	for n_points, collect in ((quadrature_n, False), (grid_n, True)):
		eps = np.linspace(*ranges["z0"], n_points)
		v = np.linspace(*ranges["w"], n_points)
		table = {"f": (eps, evaluator("f", [eps]), reference.free_energy(eps)),
				"f_prime": (eps, evaluator("f_z0", [eps]), reference.stress(eps)),
				"psi": (v, evaluator("psi", w=v), reference.dissipation(v)),
				"psi_prime": (v, evaluator("psi_w", w=v), reference.dissipation_prime(v))}

		for quantity, (x, predicted, analytic) in table.items():
			if collect:
				surfaces.append(_surface_rows(quantity, x, None, predicted, analytic))
			else:
				errors[quantity] = relative_l2_error_values(analytic, predicted, [x])
	return(errors, pd.concat(surfaces, ignore_index=True))


def evaluate_visco(evaluator, reference, ranges, quadrature_n=1001, grid_n=101):
	""" f, stress and viscous stress over the (strain, viscous strain) rectangle; psi, psi' over the rate range """

	errors, surfaces = {}, []
	for n_points, collect in ((quadrature_n, False), (grid_n, True)):
		eps = np.linspace(*ranges["z0"], n_points)
		epsv = np.linspace(*ranges["z1"], n_points)
		rate = np.linspace(*ranges["w"], n_points)
		E, EV = np.meshgrid(eps, epsv, indexing="ij")

		table_2d = {"f": (evaluator("f", [E, EV]), reference.free_energy(E, [EV])),
					"stress": (evaluator("f_z0", [E, EV]), reference.stress(E, [EV])),
					"viscous_stress": (evaluator("f_z1", [E, EV]), reference.viscous_stresses(E, [EV])[0])}
		table_1d = {"psi": (evaluator("psi", w=rate), reference.dissipation([rate])),
					"psi_prime": (evaluator("psi_w", w=rate), reference.dissipation_prime([rate])[0])}

		for quantity, (predicted, analytic) in table_2d.items():
			if collect:
				surfaces.append(_surface_rows(quantity, E, EV, predicted, analytic))
			else:
				errors[quantity] = relative_l2_error_values(analytic, predicted, [eps, epsv])
		for quantity, (predicted, analytic) in table_1d.items():
			if collect:
				surfaces.append(_surface_rows(quantity, rate, None, predicted, analytic))
			else:
				errors[quantity] = relative_l2_error_values(analytic, predicted, [rate])
	return(errors, pd.concat(surfaces, ignore_index=True))


def evaluate_diffusion(evaluator, reference, ranges, points, quadrature_n=1001, grid_n=101, coverage_radius=0.02, extrapolation_margin=0.0):
	"""
	psihat = psi/f'' on the data-covered part of the (c, j) rectangle and on the whole (optionally enlarged) rectangle.
	points: training samples (c, j) defining the covered region.
	Surfaces also hold f, f' over c and psi, dpsi/dj over (c, j); only psihat enters the errors.
	"""

	def widened(bounds):
		lo, hi = bounds
		pad = extrapolation_margin * (hi - lo)
		return(lo - pad, hi + pad)

	c_range = widened(ranges["z0"])
	j_range = widened(ranges["w"])

	errors, surfaces = {}, []
	for n_points, collect in ((quadrature_n, False), (grid_n, True)):
		c = np.linspace(*c_range, n_points)
		j = np.linspace(*j_range, n_points)
		C, J = np.meshgrid(c, j, indexing="ij")

		predicted = evaluator("psi", [C], J) / evaluator("f_zz", [C])
		analytic = reference.psihat(C, J)
		covered = coverage_mask(points, C, J, coverage_radius, (ranges["z0"], ranges["w"]))

		if collect:
			frame = _surface_rows("psihat", C, J, predicted, analytic)
			frame["covered"] = covered.ravel()
			surfaces.append(frame)
			surfaces.append(_surface_rows("f", c, None, evaluator("f", [c]), reference.free_energy(c)))
			surfaces.append(_surface_rows("f_prime", c, None, evaluator("f_z0", [c]), reference.chemical_potential(c)))
			surfaces.append(_surface_rows("psi", C, J, evaluator("psi", [C], J), reference.dissipation(C, J)))
			surfaces.append(_surface_rows("psi_prime", C, J, evaluator("psi_w", [C], J), reference.dissipation_prime(C, J)))
		else:
			errors["psihat_covered"] = relative_l2_error_values(analytic, predicted, [c, j], mask=covered)
			errors["psihat_rectangle"] = relative_l2_error_values(analytic, predicted, [c, j])
	return(errors, pd.concat(surfaces, ignore_index=True))


def evaluate_pair(pair, dataset, reference, evaluate_cfg):
	""" (errors dict, surfaces DataFrame) for a pair against its reference over the ranges of the training data """

	experiment = dataset.experiment
	if pair.experiment != experiment:
		raise ConfigError("checkpoint was trained for '{0}', dataset is for '{1}'".format(pair.experiment, experiment), "experiment")

	evaluator = PairEvaluator(pair, experiment)
	ranges = data_ranges(dataset)
	quadrature_n, grid_n = evaluate_cfg["quadrature_n"], evaluate_cfg["grid_n"]

	if experiment == "phase":
		return(evaluate_phase(evaluator, reference, ranges, quadrature_n, grid_n))
	elif experiment == "visco":
		return(evaluate_visco(evaluator, reference, ranges, quadrature_n, grid_n))

	pde = dataset.train["pde"]
	points = np.column_stack([pde.column("concentration"), pde.column("flux")])
	return(evaluate_diffusion(evaluator, reference, ranges, points, quadrature_n, grid_n,
								coverage_radius=evaluate_cfg["coverage_radius"],
								extrapolation_margin=evaluate_cfg["extrapolation_margin"]))


def error_table(errors, experiment, **columns):
	""" One-row table with an err_<quantity> column per quantity (percent) """

	row = dict(columns)
	row["experiment"] = experiment
	for quantity in ERROR_QUANTITIES[experiment]:
		row["err_" + quantity] = errors[quantity]
	return(pd.DataFrame([row]))
