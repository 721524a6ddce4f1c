#!/usr/bin/env python

"""
Classes and functions for assembling training datasets from simulated trajectories:
phase-space-uniform selection, neighbour packing, train/test split and normalization statistics

@license: MIT
"""

import os
import json
import numpy as np
import pandas as pd
from dataclasses import dataclass, field

from thermopot.utils.diffcore import NumericError
from thermopot.utils.config import ConfigError
from thermopot.utils.potentials import Normalization, scale_statistics, characteristic_scales
from thermopot.utils.residuals import SampleSet, SAMPLE_COLUMNS
from thermopot.utils.utilities import make_directory

PROVENANCE_COLUMNS = ("step", "time", "station")

#--------------------------------------------------------------------------------------------------#
#-------------------------------------------- Selection -------------------------------------------#
#--------------------------------------------------------------------------------------------------#

def uniform_phase_space_select(values, target_count):
	"""
	Indices of the values nearest to the nodes of a uniform grid with target_count nodes over [min, max].
	Ties go to the lower index; duplicates keep their first occurrence.
	"""

	values = np.asarray(values, dtype=float).ravel()
	if values.size == 0:
		raise NumericError("Cannot select from an empty set of values")
	if target_count < 2:
		raise ValueError("target_count must be >= 2")

	lo, hi = values.min(), values.max()
	if lo == hi:
		return(np.array([0]))

	grid = np.linspace(lo, hi, target_count)
	order = np.argsort(values, kind="stable")
	sorted_values = values[order]
	n = len(sorted_values)

	pos = np.clip(np.searchsorted(sorted_values, grid, side="left"), 1, n - 1)
	left_value, right_value = sorted_values[pos - 1], sorted_values[pos]

	#first occurrence of each candidate value is its lowest original index (stable sort)
	left_index = order[np.searchsorted(sorted_values, left_value, side="left")]
	right_index = order[np.searchsorted(sorted_values, right_value, side="left")]

	left_distance = grid - left_value
	right_distance = right_value - grid
	take_left = (left_distance < right_distance) | ((left_distance == right_distance) & (left_index < right_index))
	chosen = np.where(take_left, left_index, right_index)

	_, first = np.unique(chosen, return_index=True)
	return(chosen[np.sort(first)])


def split_indices(n, ratio, seed):
	""" Seeded random split of range(n) into sorted (train, test) index arrays """

	if n == 0:
		raise NumericError("Cannot split an empty selection")
	rng = np.random.default_rng(seed)
	permutation = rng.permutation(n)
	n_train = int(round(ratio * n))
	if n >= 2:
		n_train = min(max(n_train, 1), n - 1)
	return(np.sort(permutation[:n_train]), np.sort(permutation[n_train:]))


def decile_histogram(values, lo, hi):
	""" Counts of values in ten equal bins spanning [lo, hi] """
	counts, _ = np.histogram(np.asarray(values, dtype=float), bins=10, range=(lo, hi))
	return(counts)


def _random_cap(n, cap, seed):
	if cap is None or n <= cap:
		return(np.arange(n))
	rng = np.random.default_rng(seed)
	return(np.sort(rng.choice(n, size=cap, replace=False)))

#--------------------------------------------------------------------------------------------------#
#--------------------------------------------- Packing --------------------------------------------#
#--------------------------------------------------------------------------------------------------#

def _grid_frame(tf, rows, node_columns):
	""" Provenance of samples at (snapshot row, node) pairs """
	n_rows, n_nodes = len(rows), len(node_columns)
	return({"step": np.repeat(tf.steps[rows], n_nodes),
			"time": np.repeat(tf.times[rows], n_nodes),
			"station": np.tile(node_columns, n_rows)})

def pack_phase(tf, rows=None):
	""" PDE samples at interior nodes i=1..N-1: (e_i, e_{i+1}, v_i) from the element strains either side of node i """

	strain, velocity = tf.fields["strain"], tf.fields["velocity"]
	rows = np.arange(strain.shape[0]) if rows is None else np.asarray(rows)
	n_x = tf.grid["n_x"]

	pde = _grid_frame(tf, rows, np.arange(1, n_x))
	pde["strain"] = strain[rows, :-1].ravel()
	pde["strain_next"] = strain[rows, 1:].ravel()
	pde["velocity"] = velocity[rows].ravel()
	return(pd.DataFrame(pde))

def pack_phase_bc(tf, rows=None):
	rows = np.arange(len(tf.trace_times)) if rows is None else np.asarray(rows)
	return(pd.DataFrame({"step": tf.trace_steps[rows], "time": tf.trace_times[rows], "station": tf.grid["n_x"],
						"strain_bc": tf.traces["strain_bc"][rows], "traction": tf.traces["traction"][rows]}))

def pack_visco(tf):
	""" PDE samples at interior nodes for every output step with a forward-difference rate """

	if "viscous_strain" not in tf.fields:
		raise ConfigError("the learning pipeline needs exactly one Maxwell element", "simulation.viscous_moduli")
	strain = tf.fields["strain"]
	viscous = tf.fields["viscous_strain"]
	rate = tf.fields["viscous_strain_rate"]
	rows = np.arange(rate.shape[0])
	n_x = tf.grid["n_x"]

	pde = _grid_frame(tf, rows, np.arange(1, n_x))
	pde["strain"] = strain[rows, :-1].ravel()
	pde["strain_next"] = strain[rows, 1:].ravel()
	pde["viscous_strain"] = viscous[rows, :-1].ravel()
	pde["viscous_strain_next"] = viscous[rows, 1:].ravel()
	pde["viscous_strain_rate"] = rate[rows, :-1].ravel()
	pde["acceleration"] = tf.fields["acceleration"][rows].ravel()
	return(pd.DataFrame(pde))

def pack_visco_bc(tf):
	return(pd.DataFrame({"step": tf.trace_steps, "time": tf.trace_times, "station": tf.grid["n_x"],
						"strain_bc": tf.traces["strain_bc"],
						"viscous_strain_bc": tf.traces["viscous_strain_bc"],
						"traction": tf.traces["traction"]}))

def pack_diffusion(tf):
	""" (c_i, c_{i+1}, j_{i+1/2}) on the periodic grid """

	c, j = tf.fields["concentration"], tf.fields["flux"]
	rows = np.arange(c.shape[0])
	pde = _grid_frame(tf, rows, np.arange(c.shape[1]))
	pde["concentration"] = c.ravel()
	pde["concentration_next"] = np.roll(c, -1, axis=1).ravel()
	pde["flux"] = j.ravel()
	return(pd.DataFrame(pde))

#--------------------------------------------------------------------------------------------------#
#--------------------------------------------- Dataset --------------------------------------------#
#--------------------------------------------------------------------------------------------------#

def normalization_data(experiment, samples):
	"""
	Arrays the input normalizations are fitted on, from a dict of training SampleSets.
	Returns a dict with keys 'f', 'psi_w' and (diffusion) 'psi_z'.
	"""

	pde, bc = samples["pde"], samples.get("bc")
	if experiment == "phase":
		f = np.concatenate([pde.column("strain"), pde.column("strain_next"), bc.column("strain_bc")])
		return({"f": f, "psi_w": pde.column("velocity")})

	elif experiment == "visco":
		f = np.vstack([np.column_stack([pde.column("strain"), pde.column("viscous_strain")]),
					np.column_stack([pde.column("strain_next"), pde.column("viscous_strain_next")]),
					np.column_stack([bc.column("strain_bc"), bc.column("viscous_strain_bc")])])
		return({"f": f, "psi_w": pde.column("viscous_strain_rate")})

	concentration = np.concatenate([pde.column("concentration"), pde.column("concentration_next")])
	return({"f": concentration, "psi_z": pde.column("concentration"), "psi_w": pde.column("flux")})


@dataclass
class Dataset:
	""" Train/test sample sets of one experiment with the statistics fitted on the training split """

	experiment: str
	dX: float
	train: dict
	test: dict
	normalizations: dict
	stats: dict
	meta: dict = field(default_factory=dict)

	@property
	def scales(self):
		return(characteristic_scales(self.experiment, self.stats))

	@property
	def kinds(self):
		return(list(SAMPLE_COLUMNS[self.experiment].keys()))

	def counts(self):
		return({"{0}_{1}".format(split, kind): len(samples[kind]) for split, samples in (("train", self.train), ("test", self.test)) for kind in self.kinds})

	#---------------- Output ----------------#
	def save(self, outdir, prefix, config_hash=None):

		make_directory(outdir)
		written = []
		tables = {}
		for split, samples in (("train", self.train), ("test", self.test)):
			for kind in self.kinds:
				fname = os.path.join(outdir, "{0}_{1}_{2}.csv".format(prefix, split, kind))
				samples[kind].frame.to_csv(fname, index=False)
				tables["{0}_{1}".format(split, kind)] = os.path.basename(fname)
				written.append(fname)

		manifest = {"experiment": self.experiment,
					"config_hash": config_hash,
					"dX": self.dX,
					"tables": tables,
					"columns": {kind: list(PROVENANCE_COLUMNS) + list(columns) for kind, columns in SAMPLE_COLUMNS[self.experiment].items()},
					"counts": self.counts(),
					"normalizations": {key: norm.to_dict() for key, norm in self.normalizations.items()},
					"stats": self.stats,
					"scales": list(self.scales),
					"meta": self.meta}

		manifest_file = os.path.join(outdir, "{0}_dataset.json".format(prefix))
		with open(manifest_file, "w") as f:
			json.dump(manifest, f, indent=4)
		written.append(manifest_file)
		return(written)

	@classmethod
	def load(cls, manifest_file):

		with open(manifest_file) as f:
			manifest = json.load(f)
		indir = os.path.dirname(manifest_file)

		dX = manifest["dX"]
		splits = {"train": {}, "test": {}}
		for key, fname in manifest["tables"].items():
			split, kind = key.split("_", 1)
			splits[split][kind] = SampleSet(pd.read_csv(os.path.join(indir, fname)), dX)

		meta = manifest["meta"]
		meta["config_hash"] = manifest.get("config_hash")
		return(cls(experiment=manifest["experiment"], dX=dX, train=splits["train"], test=splits["test"],
					normalizations={key: Normalization.from_dict(dct) for key, dct in manifest["normalizations"].items()},
					stats=manifest["stats"], meta=meta))


def build_dataset(tf, experiment, policy, split_ratio, seed, target_count=4170, coarse_stride=3000, max_pde_samples=None, logger=None):
	"""
	Packed, selected and split samples of a trajectory.
	policy: 'phase-space' (uniform in the boundary strain and the velocity), 'uniform-time' (every coarse_stride
	steps) or 'random' (all candidates, optionally capped).
	"""

	if tf.experiment != experiment:
		raise ConfigError("trajectory was simulated for '{0}', not '{1}'".format(tf.experiment, experiment), "experiment")

	meta = {"policy": policy, "split_seed": seed, "split_ratio": split_ratio}
	if experiment == "phase":
		if policy == "uniform-time":
			pde_rows = np.flatnonzero(tf.steps % coarse_stride == 0)
			bc_rows = np.flatnonzero(tf.trace_steps % coarse_stride == 0)
			meta["coarse_stride"] = coarse_stride
		else:
			pde_rows, bc_rows = None, None
		pde = pack_phase(tf, pde_rows)
		bc = pack_phase_bc(tf, bc_rows)

		if policy == "phase-space":
			bc_select = uniform_phase_space_select(bc["strain_bc"].to_numpy(), target_count)
			pde_select = uniform_phase_space_select(pde["velocity"].to_numpy(), target_count)
		else:
			bc_select = _random_cap(len(bc), target_count, seed)
			pde_select = _random_cap(len(pde), target_count, seed)

		strain_range = (float(tf.traces["strain_bc"].min()), float(tf.traces["strain_bc"].max()))
		meta["bc_strain_range"] = list(strain_range)
		meta["bc_deciles"] = decile_histogram(bc["strain_bc"].to_numpy()[bc_select], *strain_range).tolist()
		meta["length"] = tf.grid["length"]
		selected = {"pde": pde.iloc[pde_select], "bc": bc.iloc[bc_select]}

	elif experiment == "visco":
		if policy != "random":
			raise ConfigError("only 'random' sampling applies to the viscoelastic experiment", "preprocess.sampling")
		pde = pack_visco(tf)
		meta["density"] = tf.meta["constants"]["density"]
		selected = {"pde": pde.iloc[_random_cap(len(pde), max_pde_samples, seed)], "bc": pack_visco_bc(tf)}

	elif experiment in ("diffusion-linear", "diffusion-nonlinear"):
		if policy != "random":
			raise ConfigError("only 'random' sampling applies to the diffusion experiments", "preprocess.sampling")
		pde = pack_diffusion(tf)
		selected = {"pde": pde.iloc[_random_cap(len(pde), max_pde_samples, seed)]}

	else:
		raise ConfigError("unknown experiment '{0}'".format(experiment), "experiment")

	dX = tf.grid["dX"]
	train, test = {}, {}
	for kind, frame in selected.items():
		if len(frame) == 0:
			raise NumericError("Selection produced no {0} samples".format(kind))
		train_idx, test_idx = split_indices(len(frame), split_ratio, seed)
		train[kind] = SampleSet(frame.iloc[train_idx], dX)
		test[kind] = SampleSet(frame.iloc[test_idx], dX)
		if logger is not None:
			logger.stats("Selected {0} {1} samples ({2} train / {3} test)".format(len(frame), kind, len(train_idx), len(test_idx)))

	normalizations = {key: Normalization.fit(values) for key, values in normalization_data(experiment, train).items()}
	stats = scale_statistics(experiment,
							train["pde"].columns_dict(train["pde"].frame.columns),
							train["bc"].columns_dict(train["bc"].frame.columns) if "bc" in train else None,
							length=meta.get("length"))

	meta["upstream_config_hash"] = tf.meta.get("config_hash")
	return(Dataset(experiment, dX, train, test, normalizations, stats, meta))
