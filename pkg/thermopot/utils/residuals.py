#!/usr/bin/env python

"""
Residuals: discrete residual operators per experiment, weighted mean-square loss assembly
and adaptive loss weights from the diagonal blocks of the neural tangent kernel

@license: MIT
"""

import numpy as np
import pandas as pd
from dataclasses import dataclass, field

from thermopot.utils.diffcore import (Input, Bindings, Constant, NumericError, derivative, mean,
										param_gradient, evaluate_many, topological_order)

#Sample columns per experiment and sample kind
SAMPLE_COLUMNS = {
	"phase": {"pde": ("strain", "strain_next", "velocity"),
			  "bc": ("strain_bc", "traction")},
	"visco": {"pde": ("strain", "strain_next", "viscous_strain", "viscous_strain_next", "viscous_strain_rate", "acceleration"),
			  "bc": ("strain_bc", "viscous_strain_bc", "traction")},
	"diffusion-linear": {"pde": ("concentration", "concentration_next", "flux")},
	"diffusion-nonlinear": {"pde": ("concentration", "concentration_next", "flux")},
}

#Loss terms: (term name, sample kind)
LOSS_TERMS = {
	"phase": (("pde", "pde"), ("bc", "bc")),
	"visco": (("eq", "pde"), ("int", "pde"), ("bc", "bc")),
	"diffusion-linear": (("pde", "pde"),),
	"diffusion-nonlinear": (("pde", "pde"),),
}


class DegenerateKernelError(NumericError):
	""" A loss term has a vanishing NTK trace """
	pass

#--------------------------------------------------------------------------------------------------#
#------------------------------------------- Samples ----------------------------------------------#
#--------------------------------------------------------------------------------------------------#

class SampleSet:
	""" Table of packed samples (one row per sample) with the grid spacing attached """

	def __init__(self, frame, dX=None):
		self.frame = frame.reset_index(drop=True)
		self.dX = dX

	def __len__(self):
		return(len(self.frame))

	def column(self, name):
		return(self.frame[name].to_numpy(dtype=float))

	def subset(self, indices):
		return(SampleSet(self.frame.iloc[np.asarray(indices, dtype=int)], self.dX))

	def columns_dict(self, names):
		return({name: self.column(name) for name in names})

	@classmethod
	def from_columns(cls, columns, dX=None):
		return(cls(pd.DataFrame(columns), dX))


def sample_inputs(columns, prefix):
	""" One Input node per column """
	return({name: Input("{0}.{1}".format(prefix, name)) for name in columns})

#--------------------------------------------------------------------------------------------------#
#-------------------------------------- Residual operators ----------------------------------------#
#--------------------------------------------------------------------------------------------------#

def residual_phase_pde(pair, s, dX):
	""" [f'(e_{i+1}) - f'(e_i)]/dX - psi'(v_i) """

	f_next = pair.free_energy_density([s["strain_next"]])
	f_here = pair.free_energy_density([s["strain"]])
	psi = pair.dissipation([], [s["velocity"]])

	stress_jump = derivative(f_next, s["strain_next"]) - derivative(f_here, s["strain"])
	return(stress_jump * (1.0 / dX) - derivative(psi, s["velocity"]))

def residual_phase_bc(pair, s):
	""" t - f'(e_N) """
	f_bc = pair.free_energy_density([s["strain_bc"]])
	return(s["traction"] - derivative(f_bc, s["strain_bc"]))

def residual_visco(pair, s, dX, density):
	"""
	r_eq  = [f_e(e_{i+1}, ev_{i+1}) - f_e(e_i, ev_i)]/dX - rho a_i
	r_int = psi'(rate_i) + f_ev(e_i, ev_i)
	"""

	f_next = pair.free_energy_density([s["strain_next"], s["viscous_strain_next"]])
	f_here = pair.free_energy_density([s["strain"], s["viscous_strain"]])
	psi = pair.dissipation([], [s["viscous_strain_rate"]])

	stress_jump = derivative(f_next, s["strain_next"]) - derivative(f_here, s["strain"])
	r_eq = stress_jump * (1.0 / dX) - density * s["acceleration"]
	r_int = derivative(psi, s["viscous_strain_rate"]) + derivative(f_here, s["viscous_strain"])
	return(r_eq, r_int)

def residual_visco_bc(pair, s):
	""" t - f_e(e_N, ev_N) """
	f_bc = pair.free_energy_density([s["strain_bc"], s["viscous_strain_bc"]])
	return(s["traction"] - derivative(f_bc, s["strain_bc"]))

def residual_diffusion(pair, s, dX):
	""" [f'(c_{i+1}) - f'(c_i)]/dX + psi_j(c_i, j_{i+1/2}) """

	f_next = pair.free_energy_density([s["concentration_next"]])
	f_here = pair.free_energy_density([s["concentration"]])
	psi = pair.dissipation([s["concentration"]], [s["flux"]])

	potential_jump = derivative(f_next, s["concentration_next"]) - derivative(f_here, s["concentration"])
	return(potential_jump * (1.0 / dX) + derivative(psi, s["flux"]))

#--------------------------------------------------------------------------------------------------#
#------------------------------------------ Loss assembly -----------------------------------------#
#--------------------------------------------------------------------------------------------------#

@dataclass
class LossTerm:
	name: str
	kind: str				#sample kind the term is evaluated on ('pde' or 'bc')
	residual: object		#batched residual node
	inputs: dict			#column -> Input node

	@property
	def mse(self):
		return(mean(self.residual * self.residual))


@dataclass
class LossAssembly:
	experiment: str
	pair: object
	terms: list
	alpha: np.ndarray = None
	dX: float = None
	meta: dict = field(default_factory=dict)

	def __post_init__(self):
		if self.alpha is None:
			self.alpha = np.ones(len(self.terms))
		self.alpha = np.asarray(self.alpha, dtype=float)
		if len(self.alpha) != len(self.terms):
			raise ValueError("Need one loss weight per term ({0} terms, {1} weights)".format(len(self.terms), len(self.alpha)))
		if np.any(~(self.alpha > 0)):
			raise ValueError("Loss weights must be positive (got {0})".format(self.alpha.tolist()))

	@property
	def term_names(self):
		return([term.name for term in self.terms])

	def bind(self, samples, bindings=None):
		""" Bindings with the parameters of the pair and the sample columns of every term """

		bindings = Bindings() if bindings is None else bindings
		self.pair.bind(bindings)
		for term in self.terms:
			sample_set = samples.get(term.kind)
			if sample_set is None or len(sample_set) == 0:
				raise NumericError("Loss term '{0}' has an empty sample set".format(term.name))
			for column, node in term.inputs.items():
				bindings.bind(node, sample_set.column(column))
		return(bindings)

	def term_losses(self):
		return([term.mse for term in self.terms])

	def loss_values(self, samples):
		""" (total, per-term mean squares) evaluated on a sample dict """

		bindings = self.bind(samples)
		mses = evaluate_many(self.term_losses(), bindings)
		mses = np.array([float(np.ravel(mse)[0]) for mse in mses])
		return(float(np.dot(self.alpha, mses)), mses)


def build_loss_assembly(pair, experiment, dX, density=None, alpha=None):
	""" Residual graphs for an experiment with fresh Input nodes per sample kind """

	columns = SAMPLE_COLUMNS[experiment]
	inputs = {kind: sample_inputs(cols, kind) for kind, cols in columns.items()}

	if experiment == "phase":
		terms = [LossTerm("pde", "pde", residual_phase_pde(pair, inputs["pde"], dX), inputs["pde"]),
				 LossTerm("bc", "bc", residual_phase_bc(pair, inputs["bc"]), inputs["bc"])]

	elif experiment == "visco":
		if density is None:
			raise ValueError("The viscoelastic residuals need the density")
		r_eq, r_int = residual_visco(pair, inputs["pde"], dX, density)
		terms = [LossTerm("eq", "pde", r_eq, inputs["pde"]),
				 LossTerm("int", "pde", r_int, inputs["pde"]),
				 LossTerm("bc", "bc", residual_visco_bc(pair, inputs["bc"]), inputs["bc"])]

	elif experiment in ("diffusion-linear", "diffusion-nonlinear"):
		terms = [LossTerm("pde", "pde", residual_diffusion(pair, inputs["pde"], dX), inputs["pde"])]

	else:
		raise ValueError("Unknown experiment '{0}'".format(experiment))

	#Residual nodes only use the inputs they depend on
	for term in terms:
		term.inputs = {column: node for column, node in term.inputs.items() if _depends_on(term.residual, node)}

	return(LossAssembly(experiment, pair, terms, alpha=alpha, dX=dX, meta={"density": density}))


def _depends_on(expr, leaf):
	return(any(node is leaf for node in topological_order([expr])))


def total_loss(la, alpha=None):
	""" Graph of sum_k alpha_k * mean(r_k^2), with the weights held constant """

	alpha = la.alpha if alpha is None else np.asarray(alpha, dtype=float)
	loss = None
	for weight, term in zip(alpha, la.terms):
		weighted = Constant(np.array([weight])) * term.mse
		loss = weighted if loss is None else loss + weighted
	return(loss)

#--------------------------------------------------------------------------------------------------#
#------------------------------------- Adaptive loss weights --------------------------------------#
#--------------------------------------------------------------------------------------------------#

def kernel_trace(term, pair, sample_set, max_samples=None, seed=0, chunk_size=512):
	""" tr(K_kk) = sum over samples and parameters of (d residual / d theta)^2 """

	n = len(sample_set)
	if n == 0:
		raise NumericError("Loss term '{0}' has an empty sample set".format(term.name))

	indices = np.arange(n)
	if max_samples is not None and max_samples < n:
		rng = np.random.default_rng(seed)
		indices = np.sort(rng.choice(n, size=max_samples, replace=False))

	trace = 0.0
	for start in range(0, len(indices), chunk_size):
		chunk = sample_set.subset(indices[start:start + chunk_size])
		bindings = pair.bind(Bindings())
		for column, node in term.inputs.items():
			bindings.bind(node, chunk.column(column))

		grads = param_gradient(term.residual, bindings, per_sample=True)
		trace += float(sum(np.sum(np.square(g)) for g in grads.values()))

	return(trace)


def ntk_adaptive_weights(la, samples, max_samples=None, seed=0, chunk_size=512, logger=None):
	"""
	alpha_k = tr(K) / tr(K_kk) with tr(K) = sum_k tr(K_kk).
	Returns (alpha, traces).
	"""

	traces = []
	for term in la.terms:
		trace = kernel_trace(term, la.pair, samples[term.kind], max_samples=max_samples, seed=seed, chunk_size=chunk_size)
		if logger is not None:
			logger.debug("NTK trace of term '{0}': {1:.6e}".format(term.name, trace))
		if not trace > 0:
			raise DegenerateKernelError("NTK trace of loss term '{0}' is zero".format(term.name))
		traces.append(trace)

	traces = np.array(traces)
	alpha = traces.sum() / traces
	return(alpha, traces)
