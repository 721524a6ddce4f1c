#!/usr/bin/env python

"""
Ablate: trains a baseline and a variant on the same trajectory and compares their errors.
Modes: 'uniform-time' (coarse uniform-in-time sampling against phase-space-uniform sampling)
and 'constant-weights' (constant dimensional loss weights against adaptive weights)

@license: MIT
"""

import os
import copy
import argparse
import numpy as np
import pandas as pd

from thermopot.parsers import add_ablate_arguments
from thermopot.utils.config import ConfigError, ExperimentConfig, validate_config, config_from_args, config_hash
from thermopot.utils.logger import ThermopotLogger
from thermopot.utils.utilities import check_cores, run_parallel, make_directory
from thermopot.tools.simulate import simulate_from_config, trajectory_manifest
from thermopot.tools.simulate_functions import TrajectoryField
from thermopot.tools.preprocess import preprocess_from_config
from thermopot.tools.train import train_from_config
from thermopot.tools.evaluate import evaluate_from_config
from thermopot.tools.evaluate_functions import ERROR_QUANTITIES

ABLATION_MODES = ("uniform-time", "constant-weights")

#--------------------------------------------------------------------------------------------------#

def ablation_variants(config, mode):
	""" [(label, config)] for the baseline and the variant of an ablation mode """

	if mode not in ABLATION_MODES:
		raise ConfigError("unknown ablation mode '{0}'".format(mode), "mode")

	baseline = config.to_dict()
	variant = copy.deepcopy(baseline)
	if mode == "uniform-time":
		if config.experiment != "phase":
			raise ConfigError("the uniform-time ablation applies to the phase experiment only", "experiment")
		baseline["preprocess"]["sampling"] = "phase-space"
		variant["preprocess"]["sampling"] = "uniform-time"
	else:
		baseline["train"]["weights_mode"] = "adaptive"
		variant["train"]["weights_mode"] = "constant"

	variants = []
	for label, dct in (("baseline", baseline), ("variant", variant)):
		cfg = ExperimentConfig.from_dict(validate_config(dct))
		cfg.prefix = "{0}_{1}_{2}".format(config.prefix, mode, label)
		variants.append((label, cfg))
	return(variants)


def ablation_run(variant, tf, verbosity, queue=None):
	""" Preprocess, train and evaluate one variant. Returns one result row """

	label, config = variant
	logger = ThermopotLogger("Ablate ({0})".format(label), verbosity, queue)

	dataset = preprocess_from_config(config, tf, logger)
	outdir = config.stage_dir("ablate")
	checkpoint_path = os.path.join(outdir, "{0}_checkpoint.json".format(config.prefix))
	pair, history, info = train_from_config(config, dataset, logger, checkpoint_path)
	history.to_csv(os.path.join(outdir, "{0}_history.csv".format(config.prefix)), index=False)
	errors, _ = evaluate_from_config(config, pair, dataset)

	row = {"run": label,
			"sampling": config.preprocess["sampling"],
			"weights_mode": config.train.weights_mode,
			"alpha": " ".join("{0:.6e}".format(a) for a in info["alpha"]),
			"best_test_loss": info["best_test_loss"]}
	for quantity in ERROR_QUANTITIES[config.experiment]:
		row["err_" + quantity] = errors[quantity]
	if "bc_deciles" in dataset.meta:
		row["empty_deciles"] = int(np.sum(np.asarray(dataset.meta["bc_deciles"]) == 0))
		row["bc_deciles"] = " ".join(str(count) for count in dataset.meta["bc_deciles"])
	return(row)

#--------------------------------------------------------------------------------------------------#

def run_ablate(args):

	config = config_from_args(args)
	outdir = config.stage_dir("ablate")
	table_path = os.path.join(outdir, "{0}_ablation_{1}.csv".format(config.prefix, args.mode))

	logger = ThermopotLogger("Ablate", args.verbosity)
	logger.begin()

	parser = add_ablate_arguments(argparse.ArgumentParser())
	logger.arguments_overview(parser, args)
	logger.output_files([table_path])

	args.cores = check_cores(args.cores, logger)
	make_directory(outdir)
	variants = ablation_variants(config, args.mode)

	#Reuse a stored trajectory of the same experiment if there is one
	manifest = args.trajectory if args.trajectory is not None else trajectory_manifest(config)
	if os.path.exists(manifest):
		logger.info("Reading trajectory from {0}".format(manifest))
		tf = TrajectoryField.load(manifest)
		if tf.experiment != config.experiment:
			raise ConfigError("trajectory was simulated for '{0}'".format(tf.experiment), "experiment")
	else:
		logger.info("Simulating experiment '{0}'".format(config.experiment))
		tf = simulate_from_config(config, logger)

	if args.cores > 1:
		logger.start_logger_queue()
		rows = run_parallel(ablation_run, variants, [tf, args.verbosity, logger.queue], args.cores, logger)
		logger.stop_logger_queue()
	else:
		rows = run_parallel(ablation_run, variants, [tf, args.verbosity], 1, logger)

	table = pd.DataFrame(rows)
	table.insert(0, "mode", args.mode)
	table["config_hash"] = config_hash(config)
	table.to_csv(table_path, index=False)

	for row in rows:
		logger.stats("{0}: {1}".format(row["run"], ", ".join("{0}={1:.4f}%".format(key, value) for key, value in row.items() if key.startswith("err_"))))
	logger.end()
