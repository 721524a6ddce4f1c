#!/usr/bin/env python

"""
Classes and functions for fitting potential pairs: Adam, the full-batch training loop with frozen
(or periodically refreshed) loss weights, the relative L2 error metric and checkpoints

@license: MIT
"""

import os
import json
import time
import numpy as np
import pandas as pd
from dataclasses import dataclass
from scipy.integrate import trapezoid

from thermopot.utils.diffcore import Bindings, NumericError, value_and_gradient, evaluate
from thermopot.utils.potentials import PotentialPair
from thermopot.utils.residuals import LOSS_TERMS, total_loss, ntk_adaptive_weights
from thermopot.utils.utilities import make_directory

#--------------------------------------------------------------------------------------------------#
#----------------------------------------------- Adam ---------------------------------------------#
#--------------------------------------------------------------------------------------------------#

@dataclass
class AdamState:
	m: dict
	v: dict
	t: int = 0

	@classmethod
	def zeros(cls, params):
		return(cls({key: np.zeros_like(value) for key, value in params.items()},
					{key: np.zeros_like(value) for key, value in params.items()}, 0))


def adam_step(params, grads, state, lr, beta1=0.9, beta2=0.999, eps_adam=1e-8):
	""" One bias-corrected Adam update. Parameters without a gradient get a zero gradient. Returns (params, state) """

	t = state.t + 1
	new_params, m, v = {}, {}, {}
	for key, value in params.items():
		g = grads.get(key)
		if g is None:
			g = np.zeros_like(value)
		elif g.shape != value.shape:
			raise ValueError("Gradient shape {0} does not match parameter shape {1}".format(g.shape, value.shape))

		m[key] = beta1 * state.m[key] + (1.0 - beta1) * g
		v[key] = beta2 * state.v[key] + (1.0 - beta2) * g * g
		m_hat = m[key] / (1.0 - beta1**t)
		v_hat = v[key] / (1.0 - beta2**t)
		new_params[key] = value - lr * m_hat / (np.sqrt(v_hat) + eps_adam)

	return(new_params, AdamState(m, v, t))

#--------------------------------------------------------------------------------------------------#
#------------------------------------------- Loss weights -----------------------------------------#
#--------------------------------------------------------------------------------------------------#

def dimensional_weights(experiment, stats):
	""" Constant weights from dimensional analysis: phase alpha_PDE = (L/sd_t)^2, alpha_BC = 1/sd_t^2; ones otherwise """

	if experiment == "phase":
		traction_std = stats["traction_std"]
		return(np.array([(stats["length"] / traction_std)**2, 1.0 / traction_std**2]))
	return(np.ones(len(LOSS_TERMS[experiment])))


def initial_weights(la, cfg, train_samples, stats=None, logger=None):
	""" (alpha, traces) for the configured weight mode; traces is None for constant weights """

	if cfg.weights_mode == "constant":
		if cfg.constant_weights is not None:
			alpha = np.asarray(cfg.constant_weights, dtype=float)
			if len(alpha) != len(LOSS_TERMS[la.experiment]):
				raise ValueError("Experiment '{0}' needs {1} constant weights".format(la.experiment, len(LOSS_TERMS[la.experiment])))
		else:
			alpha = dimensional_weights(la.experiment, stats)
		return(alpha, None)

	return(ntk_adaptive_weights(la, train_samples, max_samples=cfg.max_ntk_samples, seed=cfg.seed, logger=logger))

#--------------------------------------------------------------------------------------------------#
#---------------------------------------- Gradient checking ---------------------------------------#
#--------------------------------------------------------------------------------------------------#

def _subset_samples(samples, n_samples, seed):
	rng = np.random.default_rng(seed)
	subset = {}
	for kind, sample_set in samples.items():
		n = min(n_samples, len(sample_set))
		subset[kind] = sample_set.subset(np.sort(rng.choice(len(sample_set), size=n, replace=False)))
	return(subset)


GRADIENT_CHECK_TOLERANCE = 1e-3

def check_loss_gradient(la, samples, n_samples=5, n_entries=20, seed=0):
	"""
	Largest relative difference between the reverse-mode gradient of the total loss and central
	finite differences, over n_entries random parameter entries on an n_samples micro-batch.
	"""

	micro = _subset_samples(samples, n_samples, seed)
	loss = total_loss(la)
	bindings = la.bind(micro)
	_, grads = value_and_gradient(loss, bindings)

	rng = np.random.default_rng(seed)
	nodes = la.pair.parameter_nodes()
	scale = max(float(np.max(np.abs(g))) for g in grads.values()) if grads else 1.0

	worst = 0.0
	for _ in range(n_entries):
		node = nodes[rng.integers(len(nodes))]
		flat_index = rng.integers(int(np.prod(node.shape)))
		base = bindings[node].copy()

		h = 1e-6 * max(1.0, abs(base.flat[flat_index]))
		values = []
		for sign in (1.0, -1.0):
			perturbed = base.copy()
			perturbed.flat[flat_index] += sign * h
			bindings[node] = perturbed
			values.append(float(np.ravel(evaluate(loss, bindings))[0]))
		bindings[node] = base

		numeric = (values[0] - values[1]) / (2.0 * h)
		analytic = float(grads[node].flat[flat_index]) if node in grads else 0.0
		denominator = max(abs(numeric), abs(analytic), 1e-6 * scale)
		worst = max(worst, abs(numeric - analytic) / denominator)

	return(worst)

#--------------------------------------------------------------------------------------------------#
#--------------------------------------------- Training -------------------------------------------#
#--------------------------------------------------------------------------------------------------#

def _loss_row(la, train_samples, test_samples):
	train_total, train_terms = la.loss_values(train_samples)
	test_total, _ = la.loss_values(test_samples)
	return(train_total, train_terms, test_total)


def train(la, cfg, train_samples, test_samples, stats=None, logger=None, checkpoint_path=None, checkpoint_meta=None):
	"""
	Full-batch Adam on the weighted residual loss.
	The pair in la is updated in place and, on return, holds the parameters with the lowest test loss.
	Returns (pair, history DataFrame, info dict with alpha, traces, best_epoch and best_test_loss).
	"""

	pair = la.pair
	alpha, traces = initial_weights(la, cfg, train_samples, stats=stats, logger=logger)
	la.alpha = alpha
	if logger is not None:
		logger.info("Loss weights ({0}): {1}".format(cfg.weights_mode, ", ".join("{0}={1:.4e}".format(name, a) for name, a in zip(la.term_names, alpha))))

	if cfg.gradient_check:
		error = check_loss_gradient(la, train_samples, seed=cfg.seed)
		if error > GRADIENT_CHECK_TOLERANCE:
			raise NumericError("Loss gradient differs from finite differences by {0:.2e} (relative)".format(error))
		if logger is not None:
			logger.debug("Loss gradient check passed ({0:.2e})".format(error))

	loss = total_loss(la)
	bindings = la.bind(train_samples)
	params = pair.get_values()
	state = AdamState.zeros(params)

	rows = []
	best = {"epoch": 0, "test_loss": np.inf, "values": dict(params)}
	start = time.time()

	def record(epoch):
		train_total, train_terms, test_total = _loss_row(la, train_samples, test_samples)
		row = {"epoch": epoch, "loss": train_total}
		for name, value, weight in zip(la.term_names, train_terms, la.alpha):
			row["loss_" + name] = value
			row["alpha_" + name] = weight
		row["test_loss"] = test_total
		row["elapsed"] = time.time() - start
		rows.append(row)

		if test_total < best["test_loss"]:
			best.update({"epoch": epoch, "test_loss": test_total, "values": dict(pair.get_values())})
		if logger is not None:
			logger.stats("Epoch {0}: loss {1:.6e}, test loss {2:.6e}".format(epoch, train_total, test_total))

	# parameters of the latest epoch whose loss evaluated finite
	last_finite = {"epoch": 0, "values": params}

	def abort(epoch, error):
		pair.set_values(last_finite["values"])
		message = "Loss became non-finite at epoch {0} ({1})".format(epoch, error)
		if checkpoint_path is not None:
			fname = os.path.splitext(checkpoint_path)[0] + "_last_finite.json"
			save_checkpoint(fname, pair, la, epoch=last_finite["epoch"], meta=checkpoint_meta)
			message += "; last finite parameters (epoch {0}) written to {1}".format(last_finite["epoch"], fname)
		if logger is not None:
			logger.error(message)
		raise NumericError(message)

	for epoch in range(cfg.epochs):

		if cfg.weights_mode == "periodic" and epoch > 0 and epoch % cfg.ntk_every == 0:
			la.alpha, traces = ntk_adaptive_weights(la, train_samples, max_samples=cfg.max_ntk_samples, seed=cfg.seed, logger=logger)
			loss = total_loss(la)
			if logger is not None:
				logger.info("Recomputed loss weights at epoch {0}: {1}".format(epoch, la.alpha.tolist()))

		try:
			if epoch % cfg.eval_every == 0:
				record(epoch)
			pair.bind(bindings)
			_, grads = value_and_gradient(loss, bindings)
		except NumericError as e:
			abort(epoch, e)
		last_finite = {"epoch": epoch, "values": params}

		params, state = adam_step(params, grads, state, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps_adam)
		pair.set_values(params)

	try:
		record(cfg.epochs)
	except NumericError as e:
		abort(cfg.epochs, e)
	pair.set_values(best["values"])

	history = pd.DataFrame(rows)
	info = {"alpha": np.asarray(la.alpha).tolist(),
			"traces": None if traces is None else np.asarray(traces).tolist(),
			"best_epoch": best["epoch"],
			"best_test_loss": best["test_loss"],
			"weights_mode": cfg.weights_mode}

	if checkpoint_path is not None:
		save_checkpoint(checkpoint_path, pair, la, epoch=best["epoch"], meta=dict(checkpoint_meta or {}, **info))

	return(pair, history, info)

#--------------------------------------------------------------------------------------------------#
#---------------------------------------------- Errors --------------------------------------------#
#--------------------------------------------------------------------------------------------------#

def relative_l2_error_values(analytic, predicted, axes, mask=None):
	"""
	100 * int |A - P|^2 / int |A|^2 by the trapezoidal rule on a tensor grid.
	axes: one coordinate array per array dimension. mask excludes grid points (set to zero in both integrals).
	"""

	analytic = np.asarray(analytic, dtype=float)
	predicted = np.asarray(predicted, dtype=float)
	if mask is not None:
		analytic = np.where(mask, analytic, 0.0)
		predicted = np.where(mask, predicted, 0.0)

	numerator = (analytic - predicted)**2
	denominator = analytic**2
	for axis in reversed(axes):
		numerator = trapezoid(numerator, axis, axis=-1)
		denominator = trapezoid(denominator, axis, axis=-1)

	if not denominator > 0:
		raise NumericError("Relative error undefined: the reference vanishes on the domain")
	return(100.0 * float(numerator) / float(denominator))


def relative_l2_error(A_ana, A_pred, domain, quadrature_n=1001, mask=None):
	"""
	Relative squared L2 error in percent of two callables on [x1, x2] or on a rectangle ((x1, x2), (y1, y2)).
	In 2D the callables take (X, Y) meshgrids and mask, if given, is a callable of (X, Y).
	"""

	domain = tuple(domain)
	if np.ndim(domain[0]) == 0:
		x = np.linspace(domain[0], domain[1], quadrature_n)
		return(relative_l2_error_values(A_ana(x), A_pred(x), [x], None if mask is None else mask(x)))

	(x1, x2), (y1, y2) = domain
	x = np.linspace(x1, x2, quadrature_n)
	y = np.linspace(y1, y2, quadrature_n)
	X, Y = np.meshgrid(x, y, indexing="ij")
	return(relative_l2_error_values(A_ana(X, Y), A_pred(X, Y), [x, y], None if mask is None else mask(X, Y)))

#--------------------------------------------------------------------------------------------------#
#-------------------------------------------- Checkpoints -----------------------------------------#
#--------------------------------------------------------------------------------------------------#

def save_checkpoint(path, pair, la, epoch=None, meta=None):

	outdir = os.path.dirname(path)
	if outdir:
		make_directory(outdir)

	checkpoint = {"experiment": la.experiment,
				"epoch": epoch,
				"alpha": np.asarray(la.alpha).tolist(),
				"term_names": la.term_names,
				"dX": la.dX,
				"density": la.meta.get("density"),
				"pair": pair.to_dict(),
				"meta": meta or {}}
	with open(path, "w") as f:
		json.dump(checkpoint, f, indent=4)
	return(path)


def load_checkpoint(path):
	""" Returns (PotentialPair, checkpoint dict) """

	with open(path) as f:
		checkpoint = json.load(f)
	return(PotentialPair.from_dict(checkpoint["pair"]), checkpoint)
