#!/usr/bin/env python

"""
Potentials: dimensional free energy density f and dissipation potential density psi built from
normalized networks, with the origin and rate constraints imposed by construction

@license: MIT
"""

import numpy as np
from dataclasses import dataclass

from thermopot.utils.diffcore import Constant, NumericError, derivative, as_node
from thermopot.utils.networks import IntegrableNetwork, Inn, Ficinn, Picinn

#--------------------------------------------------------------------------------------------------#

@dataclass
class Normalization:
	""" Per-component mean and standard deviation, fitted on training data and frozen """

	mean: np.ndarray
	std: np.ndarray

	def __post_init__(self):
		self.mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
		self.std = np.atleast_1d(np.asarray(self.std, dtype=float))
		if self.mean.shape != self.std.shape:
			raise ValueError("Normalization mean and std differ in shape")
		if np.any(~(self.std > 0)):
			raise NumericError("Normalization needs std > 0 for every component (got {0})".format(self.std.tolist()))

	@classmethod
	def fit(cls, data):
		""" data: array (n_samples, n_components) or (n_samples,) """

		data = np.asarray(data, dtype=float)
		if data.ndim == 1:
			data = data[:, None]
		if data.shape[0] == 0:
			raise NumericError("Cannot fit normalization to an empty dataset")
		return(cls(data.mean(axis=0), data.std(axis=0)))

	@property
	def n_components(self):
		return(len(self.mean))

	def apply(self, nodes):
		""" z~ = (z - mu)/sigma per component, for a list of width-1 nodes """

		if len(nodes) != self.n_components:
			raise ValueError("Normalization has {0} components, got {1} nodes".format(self.n_components, len(nodes)))
		return([(as_node(node) - float(mu)) * (1.0 / float(sigma)) for node, mu, sigma in zip(nodes, self.mean, self.std)])

	def to_dict(self):
		return({"mean": self.mean.tolist(), "std": self.std.tolist()})

	@classmethod
	def from_dict(cls, dct):
		return(cls(dct["mean"], dct["std"]))


def _zeros_like_nodes(nodes):
	return([Constant(np.zeros(1)) for _ in nodes])

#--------------------------------------------------------------------------------------------------#
#------------------------------------------ Potential pair ----------------------------------------#
#--------------------------------------------------------------------------------------------------#

class PotentialPair:
	"""
	f(z)   = f*[f~(z~) - f~(0~)]                                    ('origin' form)
	f(e,v) = f*[f~(e,v) - f~(0,0) - df~/de|0 * e]                    ('viscoelastic' form)
	psi(z,w) = psi*[psi~(z,w) - psi~(z,0) - sum_k dpsi~/dw_k|0 w_k]
	where 0~ is the normalized image of the dimensional origin.
	"""

	def __init__(self, experiment, f_net, psi_net, f_norm, psi_w_norm, f_scale, psi_scale, psi_z_norm=None, f_form="origin"):

		if f_form not in ("origin", "viscoelastic"):
			raise ValueError("Unknown free energy form '{0}'".format(f_form))
		if isinstance(psi_net, Picinn) and psi_z_norm is None:
			raise ValueError("A partially convex dissipation network needs a normalization of its state inputs")

		self.experiment = experiment
		self.f_net = f_net
		self.psi_net = psi_net
		self.f_norm = f_norm
		self.psi_z_norm = psi_z_norm
		self.psi_w_norm = psi_w_norm
		self.f_scale = float(f_scale)
		self.psi_scale = float(psi_scale)
		self.f_form = f_form

	#----- networks on dimensional inputs -----#
	def f_tilde(self, z):
		return(self.f_net.forward(self.f_norm.apply(z)))

	def psi_tilde(self, z, w):
		w_tilde = self.psi_w_norm.apply(w)
		if isinstance(self.psi_net, Picinn):
			return(self.psi_net.forward(self.psi_z_norm.apply(z), w_tilde))
		return(self.psi_net.forward(w_tilde))

	#----- dimensional potentials -----#
	def free_energy(self, z):
		origin = _zeros_like_nodes(z)
		return(self.f_scale * (self.f_tilde(z) - self.f_tilde(origin)))

	def free_energy_viscoelastic(self, strain, viscous_strain):

		strain0, viscous_strain0 = Constant(np.zeros(1)), Constant(np.zeros(1))
		at_origin = self.f_tilde([strain0, viscous_strain0])
		slope = derivative(at_origin, strain0)
		return(self.f_scale * (self.f_tilde([strain, viscous_strain]) - at_origin - slope * strain))

	def free_energy_density(self, z):
		""" f in the form selected for this pair """
		if self.f_form == "viscoelastic":
			return(self.free_energy_viscoelastic(*z))
		return(self.free_energy(z))

	def dissipation(self, z, w):

		w0 = _zeros_like_nodes(w)
		base = self.psi_tilde(z, w0)
		value = self.psi_tilde(z, w) - base
		for w0_k, w_k in zip(w0, w):
			value = value - derivative(base, w0_k) * w_k
		return(self.psi_scale * value)

	#----- parameters -----#
	@property
	def networks(self):
		return([self.f_net, self.psi_net])

	def parameter_nodes(self):
		return(self.f_net.parameter_nodes() + self.psi_net.parameter_nodes())

	def get_values(self):
		values = self.f_net.get_values()
		values.update(self.psi_net.get_values())
		return(values)

	def set_values(self, node_values):
		for net in self.networks:
			net.set_values(node_values)

	def bind(self, bindings):
		for net in self.networks:
			net.bind(bindings)
		return(bindings)

	def to_dict(self):
		return({"experiment": self.experiment,
				"f_form": self.f_form,
				"f_scale": self.f_scale,
				"psi_scale": self.psi_scale,
				"f_norm": self.f_norm.to_dict(),
				"psi_z_norm": None if self.psi_z_norm is None else self.psi_z_norm.to_dict(),
				"psi_w_norm": self.psi_w_norm.to_dict(),
				"f_net": self.f_net.to_dict(),
				"psi_net": self.psi_net.to_dict()})

	@classmethod
	def from_dict(cls, dct):
		return(cls(dct["experiment"],
					IntegrableNetwork.from_dict(dct["f_net"]),
					IntegrableNetwork.from_dict(dct["psi_net"]),
					Normalization.from_dict(dct["f_norm"]),
					Normalization.from_dict(dct["psi_w_norm"]),
					dct["f_scale"], dct["psi_scale"],
					psi_z_norm=None if dct["psi_z_norm"] is None else Normalization.from_dict(dct["psi_z_norm"]),
					f_form=dct["f_form"]))


class AnalyticPair:
	"""
	Closed-form potentials with the PotentialPair interface.
	free_energy_fn(z) and dissipation_fn(z, w) take lists of nodes and return graph nodes.
	"""

	def __init__(self, experiment, free_energy_fn, dissipation_fn):
		self.experiment = experiment
		self.free_energy_fn = free_energy_fn
		self.dissipation_fn = dissipation_fn

	def free_energy_density(self, z):
		return(as_node(self.free_energy_fn(z)))

	def dissipation(self, z, w):
		return(as_node(self.dissipation_fn(z, w)))

	def parameter_nodes(self):
		return([])

	def get_values(self):
		return({})

	def set_values(self, node_values):
		pass

	def bind(self, bindings):
		return(bindings)

#--------------------------------------------------------------------------------------------------#
#-------------------------------------- Building and scales ---------------------------------------#
#--------------------------------------------------------------------------------------------------#

def _maxmin(values):
	values = np.asarray(values, dtype=float)
	if values.size == 0:
		raise NumericError("Cannot compute scales from an empty dataset")
	return(float(values.max() - values.min()))

def _std(values):
	values = np.asarray(values, dtype=float)
	if values.size == 0:
		raise NumericError("Cannot compute scales from an empty dataset")
	return(float(values.std()))


def scale_statistics(experiment, pde, bc=None, length=None):
	""" Statistics of the training split needed by characteristic_scales. pde/bc map column names to arrays """

	if experiment == "phase":
		return({"traction_std": _std(bc["traction"]),
				"strain_bc_std": _std(bc["strain_bc"]),
				"velocity_std": _std(pde["velocity"]),
				"length": float(length)})

	elif experiment == "visco":
		return({"traction_maxmin": _maxmin(bc["traction"]),
				"strain_bc_maxmin": _maxmin(bc["strain_bc"]),
				"viscous_strain_maxmin": _maxmin(pde["viscous_strain"]),
				"viscous_strain_rate_maxmin": _maxmin(pde["viscous_strain_rate"])})

	elif experiment in ("diffusion-linear", "diffusion-nonlinear"):
		flux = np.asarray(pde["flux"], dtype=float)
		if flux.size == 0:
			raise NumericError("Cannot compute scales from an empty dataset")
		return({"flux_absmax": float(np.abs(flux).max())})

	raise ValueError("Unknown experiment '{0}'".format(experiment))


def characteristic_scales(experiment, stats):
	""" (f*, psi*) for an experiment from its training statistics """

	if not stats:
		raise NumericError("Cannot compute scales from an empty dataset")

	if experiment == "phase":
		f_scale = stats["traction_std"] * stats["strain_bc_std"]
		psi_scale = stats["traction_std"] * stats["velocity_std"] / stats["length"]

	elif experiment == "visco":
		f_scale = stats["traction_maxmin"] * stats["strain_bc_maxmin"]
		psi_scale = f_scale * stats["viscous_strain_maxmin"] / stats["viscous_strain_rate_maxmin"]

	elif experiment in ("diffusion-linear", "diffusion-nonlinear"):
		f_scale = 1.0
		psi_scale = stats["flux_absmax"]

	else:
		raise ValueError("Unknown experiment '{0}'".format(experiment))

	if not (f_scale > 0 and psi_scale > 0):
		raise NumericError("Degenerate characteristic scales f*={0}, psi*={1}".format(f_scale, psi_scale))

	return(f_scale, psi_scale)


def build_potential_pair(experiment, normalizations, scales, hidden_widths, seed):
	"""
	Freshly initialized pair for an experiment.
	normalizations: dict with 'f', 'psi_w' and (diffusion) 'psi_z' Normalization objects.
	hidden_widths: dict with 'f' and 'psi' hidden layer widths.
	"""

	f_norm = normalizations["f"]
	psi_w_norm = normalizations["psi_w"]
	f_net = Inn(f_norm.n_components, hidden_widths["f"], name="f")

	if experiment in ("diffusion-linear", "diffusion-nonlinear"):
		psi_z_norm = normalizations["psi_z"]
		psi_net = Picinn(psi_z_norm.n_components, psi_w_norm.n_components, hidden_widths["psi"], name="psi")
	else:
		psi_z_norm = None
		psi_net = Ficinn(psi_w_norm.n_components, hidden_widths["psi"], name="psi")

	f_net.initialize(seed)
	psi_net.initialize(seed + 1)

	f_form = "viscoelastic" if experiment == "visco" else "origin"
	return(PotentialPair(experiment, f_net, psi_net, f_norm, psi_w_norm, scales[0], scales[1], psi_z_norm=psi_z_norm, f_form=f_form))
