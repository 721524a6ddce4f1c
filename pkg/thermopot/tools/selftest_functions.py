#!/usr/bin/env python

"""
Property checks of the differentiation core, the networks, the potential constraints, the adaptive
loss weights and the simulators. Every check returns a CheckResult; none of them trains a network.

@license: MIT
"""

import numpy as np
from dataclasses import dataclass

from thermopot.utils.diffcore import (Input, Parameter, Bindings, softplus, logistic, exp, log, neg, matvec, nonneg,
										mean, derivative, evaluate, evaluate_many, value_and_gradient)
from thermopot.utils.networks import Ficinn, Picinn
from thermopot.utils.potentials import Normalization, build_potential_pair
from thermopot.utils.residuals import SampleSet, build_loss_assembly, kernel_trace, ntk_adaptive_weights
from thermopot.tools.simulate_functions import (DoubleWellSpec, ViscoMaterial, ViscoReference, DiffusionReference,
												DIFFUSION_MODELS, initial_concentration, diffusion_step,
												simulate_phase, simulate_visco_1d, simulate_diffusion)

@dataclass
class CheckResult:
	name: str
	passed: bool
	worst: float			#worst observed error (or increase) of the check
	tolerance: float
	detail: str = ""

	def as_row(self):
		return({"check": self.name, "passed": self.passed, "worst": self.worst, "tolerance": self.tolerance, "detail": self.detail})


def _result(name, worst, tolerance, detail=""):
	worst = float(worst)
	return(CheckResult(name, bool(worst <= tolerance), worst, tolerance, detail))


def _relative_error(analytic, numeric, floor=1e-3):
	analytic, numeric = np.asarray(analytic, dtype=float), np.asarray(numeric, dtype=float)
	denominator = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
	return(float(np.max(np.abs(analytic - numeric) / denominator)))

#--------------------------------------------------------------------------------------------------#
#----------------------------------------- Gradient checks ----------------------------------------#
#--------------------------------------------------------------------------------------------------#

_UNARY = (softplus,
		logistic,
		neg,
		lambda a: a * a,
		lambda a: exp(logistic(a)),
		lambda a: log(1.0 + softplus(a)))

def random_graph(rng, width=3):
	""" Random small graph x -> out with its parameter values. Returns (x, out, {param node: value}) """

	x = Input("x")
	W = Parameter("W", (width, 1))
	b = Parameter("b", (width,))
	U = Parameter("U", (width, width))
	V = Parameter("V", (1, width))

	h = matvec(W, x) + b
	for _ in range(rng.integers(1, 4)):
		h = _UNARY[rng.integers(len(_UNARY))](h)
		if rng.random() < 0.5:
			h = matvec(nonneg(U) if rng.random() < 0.5 else U, h)
	out = matvec(V, h)
	if rng.random() < 0.5:
		out = out * x

	values = {node: rng.normal(0.0, 0.7, size=node.shape) for node in (W, b, U, V)}
	return(x, out, values)


def _param_fd(scalar, bindings, h=1e-5):
	""" Central differences of a scalar node over every entry of every bound parameter """

	grads = {}
	for node in [node for node in bindings if node.op == "param"]:
		base = bindings[node].copy()
		grad = np.zeros(base.shape)
		for index in range(base.size):
			values = []
			for sign in (1.0, -1.0):
				perturbed = base.copy()
				perturbed.flat[index] += sign * h
				bindings[node] = perturbed
				values.append(float(np.ravel(evaluate(scalar, bindings))[0]))
			grad.flat[index] = (values[0] - values[1]) / (2.0 * h)
		bindings[node] = base
		grads[node] = grad
	return(grads)


def _compare_param_gradients(scalar, bindings):

	_, analytic = value_and_gradient(scalar, bindings)
	numeric = _param_fd(scalar, bindings)
	worst = 0.0
	for node, grad in numeric.items():
		worst = max(worst, _relative_error(analytic.get(node, np.zeros(grad.shape)), grad))
	return(worst)


def check_gradients(n_graphs=100, n_samples=4, seed=0, tolerance=1e-4):
	""" Input, parameter and mixed (parameter gradient of an input derivative) derivatives against central differences """

	rng = np.random.default_rng(seed)
	worst = {"input": 0.0, "parameter": 0.0, "mixed": 0.0}
	h = 1e-5

	for _ in range(n_graphs):
		x, out, values = random_graph(rng)
		points = rng.uniform(-1.0, 1.0, n_samples)

		bindings = Bindings()
		for node, value in values.items():
			bindings.bind(node, value)
		bindings.bind(x, points)

		#input derivative
		dout_dx = derivative(out, x)
		analytic = evaluate(dout_dx, bindings)
		shifted = []
		for sign in (1.0, -1.0):
			bindings.bind(x, points + sign * h)
			shifted.append(evaluate(out, bindings))
		bindings.bind(x, points)
		worst["input"] = max(worst["input"], _relative_error(analytic, (shifted[0] - shifted[1]) / (2.0 * h)))

		worst["parameter"] = max(worst["parameter"], _compare_param_gradients(mean(out), bindings))
		worst["mixed"] = max(worst["mixed"], _compare_param_gradients(mean(dout_dx), bindings))

	return([_result("gradient ({0})".format(kind), error, tolerance, "{0} random graphs".format(n_graphs)) for kind, error in worst.items()])

#--------------------------------------------------------------------------------------------------#
#------------------------------------------- Convexity --------------------------------------------#
#--------------------------------------------------------------------------------------------------#

def hessian_nodes(out, inputs):
	""" Graphs of all second derivatives of out with respect to a list of width-1 input nodes """
	first = [derivative(out, w) for w in inputs]
	return([[derivative(first[i], inputs[j]) for j in range(len(inputs))] for i in range(len(inputs))])


def _randomize(network, rng, scale=1.0):
	network.values = {key: rng.normal(0.0, scale, size=node.shape) for key, node in network.params.items()}


def min_hessian_eigenvalue(out, w_inputs, bindings):
	""" Smallest eigenvalue of the Hessian in w over all bound samples """

	H = hessian_nodes(out, w_inputs)
	flat = evaluate_many([H[i][j] for i in range(len(w_inputs)) for j in range(len(w_inputs))], bindings)
	k = len(w_inputs)
	n = flat[0].shape[0]
	hessians = np.stack([np.ravel(value) for value in flat], axis=-1).reshape(n, k, k)
	hessians = 0.5 * (hessians + np.swapaxes(hessians, 1, 2))
	return(float(np.linalg.eigvalsh(hessians).min()))


def check_convexity(n_draws=1000, n_param_draws=20, w_width=2, hidden=(5, 5), seed=0, tolerance=1e-7):
	""" Hessians in w of FICINN and PICINN outputs are positive semidefinite """

	rng = np.random.default_rng(seed)
	n_points = max(1, n_draws // n_param_draws)
	results = []

	w = [Input("w{0}".format(k)) for k in range(w_width)]
	z = [Input("z")]
	ficinn = Ficinn(w_width, hidden, name="psi")
	picinn = Picinn(1, w_width, hidden, name="psi")
	graphs = {"FICINN": (ficinn, ficinn.forward(w)), "PICINN": (picinn, picinn.forward(z, w))}

	for label, (network, out) in graphs.items():
		lowest = np.inf
		for _ in range(n_param_draws):
			_randomize(network, rng)
			bindings = network.bind(Bindings())
			for node in w:
				bindings.bind(node, rng.normal(0.0, 2.0, n_points))
			bindings.bind(z[0], rng.normal(0.0, 2.0, n_points))
			lowest = min(lowest, min_hessian_eigenvalue(out, w, bindings))
		results.append(_result("convexity ({0})".format(label), -lowest, tolerance,
								"min eigenvalue {0:.3e} over {1} draws".format(lowest, n_points * n_param_draws)))
	return(results)

#--------------------------------------------------------------------------------------------------#
#-------------------------------------- Potential constraints -------------------------------------#
#--------------------------------------------------------------------------------------------------#

def random_pair(experiment, rng, hidden=(4, 4)):
	""" Potential pair with random normalizations, scales and parameters """

	def norm(n_components):
		return(Normalization(rng.normal(0.0, 0.5, n_components), rng.uniform(0.5, 2.0, n_components)))

	normalizations = {"f": norm(2 if experiment == "visco" else 1), "psi_w": norm(1), "psi_z": norm(1)}
	scales = (float(rng.uniform(0.1, 10.0)), float(rng.uniform(0.1, 10.0)))
	pair = build_potential_pair(experiment, normalizations, scales, {"f": list(hidden), "psi": list(hidden)}, int(rng.integers(1000)))
	for network in pair.networks:
		_randomize(network, rng)
	return(pair)


def check_constraints(n_states=1000, seed=0, tolerance=1e-12):
	""" psi(z,0) = 0, d psi/dw (z,0) = 0, f(0) = 0 and, for the viscoelastic form, df/de (0,0) = 0 """

	rng = np.random.default_rng(seed)
	worst = {"psi(z,0)": 0.0, "dpsi/dw(z,0)": 0.0, "f(0)": 0.0, "df/de(0,0)": 0.0}

	for experiment in ("phase", "visco", "diffusion-linear", "diffusion-nonlinear"):
		pair = random_pair(experiment, rng)
		diffusion = experiment.startswith("diffusion")

		c = Input("c")
		rate = Input("w")
		state = [c] if diffusion else []
		psi = pair.dissipation(state, [rate])
		dpsi = derivative(psi, rate)

		bindings = pair.bind(Bindings())
		bindings.bind(rate, np.zeros(n_states))
		bindings.bind(c, rng.uniform(0.01, 1.2, n_states))
		psi_value, dpsi_value = evaluate_many([psi, dpsi], bindings)
		worst["psi(z,0)"] = max(worst["psi(z,0)"], np.max(np.abs(psi_value)) / pair.psi_scale)
		worst["dpsi/dw(z,0)"] = max(worst["dpsi/dw(z,0)"], np.max(np.abs(dpsi_value)) / pair.psi_scale)

		z = [Input("z{0}".format(k)) for k in range(pair.f_norm.n_components)]
		f = pair.free_energy_density(z)
		for node in z:
			bindings.bind(node, np.zeros(1))
		worst["f(0)"] = max(worst["f(0)"], np.max(np.abs(evaluate(f, bindings))) / pair.f_scale)
		if experiment == "visco":
			slope = evaluate(derivative(f, z[0]), bindings)
			worst["df/de(0,0)"] = max(worst["df/de(0,0)"], np.max(np.abs(slope)) / pair.f_scale)

	return([_result("constraint {0}".format(name), error, tolerance) for name, error in worst.items()])

#--------------------------------------------------------------------------------------------------#
#--------------------------------------- Adaptive loss weights ------------------------------------#
#--------------------------------------------------------------------------------------------------#

def phase_micro_problem(rng, n_samples=5, hidden=(3,)):
	""" Loss assembly of the phase experiment on a handful of random samples """

	strain = rng.uniform(-0.02, 0.04, n_samples)
	pde = SampleSet.from_columns({"strain": strain,
									"strain_next": strain + rng.normal(0.0, 0.002, n_samples),
									"velocity": rng.normal(0.0, 1.0, n_samples)}, dX=0.06)
	bc = SampleSet.from_columns({"strain_bc": rng.uniform(-0.02, 0.04, n_samples),
									"traction": rng.normal(0.0, 1.0, n_samples)}, dX=0.06)
	normalizations = {"f": Normalization.fit(strain), "psi_w": Normalization.fit(pde.column("velocity"))}
	pair = build_potential_pair("phase", normalizations, (1.0, 1.0), {"f": list(hidden), "psi": list(hidden)}, int(rng.integers(1000)))
	for network in pair.networks:
		_randomize(network, rng, scale=0.7)
	return(build_loss_assembly(pair, "phase", 0.06), {"pde": pde, "bc": bc})


def brute_force_trace(la, term, samples, h=1e-6):
	""" Sum over samples and parameter entries of the squared central-difference Jacobian of a residual """

	bindings = la.bind(samples)
	trace = 0.0
	for node in la.pair.parameter_nodes():
		base = bindings[node].copy()
		for index in range(base.size):
			values = []
			for sign in (1.0, -1.0):
				perturbed = base.copy()
				perturbed.flat[index] += sign * h
				bindings[node] = perturbed
				values.append(evaluate(term.residual, bindings))
			bindings[node] = base
			trace += float(np.sum(((values[0] - values[1]) / (2.0 * h))**2))
	return(trace)


def check_ntk(n_problems=3, seed=0, tolerance=1e-4):
	""" NTK traces against brute-force Jacobians and the normalization sum 1/alpha_k = 1 """

	rng = np.random.default_rng(seed)
	worst_trace, worst_sum = 0.0, 0.0
	for _ in range(n_problems):
		la, samples = phase_micro_problem(rng)
		for term in la.terms:
			trace = kernel_trace(term, la.pair, samples[term.kind])
			reference = brute_force_trace(la, term, samples)
			worst_trace = max(worst_trace, abs(trace - reference) / max(abs(reference), 1e-300))
		alpha, _ = ntk_adaptive_weights(la, samples)
		worst_sum = max(worst_sum, abs(np.sum(1.0 / alpha) - 1.0))

	return([_result("ntk trace", worst_trace, tolerance, "{0} micro-problems".format(n_problems)),
			_result("ntk sum 1/alpha", worst_sum, 1e-12)])

#--------------------------------------------------------------------------------------------------#
#-------------------------------------------- Simulators ------------------------------------------#
#--------------------------------------------------------------------------------------------------#

def check_diffusion_conservation(n_x=99, n_steps=40, tolerance=1e-12):
	""" Per-step mass conservation and the discrete continuity identity of recorded snapshots """

	dX = 1.0 / n_x
	X = np.arange(n_x) * dX
	worst_mass, worst_continuity = 0.0, 0.0
	for model in DIFFUSION_MODELS:
		dt = 2.55e-5 if model == "linear" else 1.01e-5

		c = initial_concentration(X)
		mass = c.sum()
		for _ in range(n_steps):
			c, _ = diffusion_step(c, dt, dX, model)
			worst_mass = max(worst_mass, abs(c.sum() - mass) / mass)
			mass = c.sum()

		tf = simulate_diffusion(model, n_x=n_x, dt=dt, total_time=n_steps * dt, n_snapshots=n_steps + 1)
		conc, flux = tf.fields["concentration"], tf.fields["flux"]
		residual = (conc[1:] - conc[:-1]) + dt * (flux[:-1] - np.roll(flux[:-1], 1, axis=1)) / dX
		worst_continuity = max(worst_continuity, float(np.max(np.abs(residual))))

	return([_result("diffusion mass conservation", worst_mass, tolerance, "relative change per step"),
			_result("diffusion continuity", worst_continuity, tolerance)])


def check_stationarity(tolerance=1e-12):
	""" Equilibrium initial states stay put: uniform concentration, unloaded bars """

	worst = 0.0
	for model in DIFFUSION_MODELS:
		c = np.full(40, 0.5)
		c_next, j = diffusion_step(c, 1e-5, 1.0 / 40, model)
		worst = max(worst, np.max(np.abs(c_next - c)), np.max(np.abs(j)))

	tf = simulate_phase(DoubleWellSpec(), n_x=20, pull_velocity=0.0, dt=1e-7, total_time=1e-5, trace_stride=10, field_stride=10)
	worst = max(worst, np.max(np.abs(tf.fields["strain"])), np.max(np.abs(tf.traces["traction"])))

	tf = simulate_visco_1d(ViscoMaterial(), n_x=10, dt=1e-4, output_dt=1e-3, total_time=0.01)
	worst = max(worst, np.max(np.abs(tf.fields["stress"])), np.max(np.abs(tf.fields["viscous_strain"])))

	return([_result("stationarity", worst, tolerance, "diffusion, phase and viscoelastic rest states")])


def check_visco_identities(n_states=1000, seed=0, tolerance=1e-12):
	""" df_1D/de equals the 1D stress and df_1D/d(ev) the viscous stress """

	rng = np.random.default_rng(seed)
	reference = ViscoReference(ViscoMaterial())
	e, ev = Input("e"), Input("ev")
	f = reference.free_energy(e, [ev])

	eps = rng.uniform(-0.02, 0.02, n_states)
	epsv = rng.uniform(-0.02, 0.02, n_states)
	bindings = Bindings().bind(e, eps).bind(ev, epsv)
	df_de, df_dev = [np.ravel(value) for value in evaluate_many([derivative(f, e), derivative(f, ev)], bindings)]

	sigma = reference.stress(eps, [epsv])
	sigma_v = reference.viscous_stresses(eps, [epsv])[0]
	return([_result("df/de = stress", np.max(np.abs(df_de - sigma)) / np.max(np.abs(sigma)), tolerance),
			_result("df/dev = viscous stress", np.max(np.abs(df_dev - sigma_v)) / np.max(np.abs(sigma_v)), tolerance)])


def check_lyapunov(n_steps=200, tolerance=1e-8):
	""" With the analytic linear pair the total free energy never increases along the linear-diffusion trajectory """

	dt = 2.55e-5
	tf = simulate_diffusion("linear", dt=dt, total_time=n_steps * dt, n_snapshots=n_steps + 1)
	pair = DiffusionReference("linear").analytic_pair()

	c = Input("c")
	f = pair.free_energy_density([c])
	totals = []
	for snapshot in tf.fields["concentration"]:
		totals.append(float(np.sum(evaluate(f, Bindings().bind(c, snapshot)))))
	increase = float(np.max(np.diff(totals)))
	return([_result("lyapunov", max(increase, 0.0), tolerance, "largest per-step change {0:.3e}".format(increase))])

#--------------------------------------------------------------------------------------------------#

def run_property_suite(n_graphs=100, n_draws=1000, n_states=1000, seed=0, logger=None):
	""" All checks in order. Returns a list of CheckResult """

	checks = [("gradients", lambda: check_gradients(n_graphs=n_graphs, seed=seed)),
				("convexity", lambda: check_convexity(n_draws=n_draws, seed=seed)),
				("constraints", lambda: check_constraints(n_states=n_states, seed=seed)),
				("adaptive weights", lambda: check_ntk(seed=seed)),
				("conservation", check_diffusion_conservation),
				("stationarity", check_stationarity),
				("viscoelastic identities", lambda: check_visco_identities(n_states=n_states, seed=seed)),
				("lyapunov", check_lyapunov)]

	results = []
	for label, check in checks:
		if logger is not None:
			logger.info("Running {0} checks".format(label))
		for result in check():
			if logger is not None:
				level = logger.stats if result.passed else logger.error
				level("{0}: {1} (worst {2:.3e}, tolerance {3:.0e}) {4}".format(result.name, "passed" if result.passed else "FAILED",
																			result.worst, result.tolerance, result.detail))
			results.append(result)
	return(results)
