#!/usr/bin/env python

"""
Evaluate: relative errors of learned potentials against the closed-form references and plot-ready surfaces

@license: MIT
"""

import os
import argparse

from thermopot.parsers import add_evaluate_arguments
from thermopot.utils.config import ConfigError, config_from_args, config_hash
from thermopot.utils.logger import ThermopotLogger
from thermopot.utils.utilities import check_files, make_directory
from thermopot.tools.preprocess import dataset_manifest, check_upstream
from thermopot.tools.preprocess_functions import Dataset
from thermopot.tools.train import checkpoint_file
from thermopot.tools.train_functions import load_checkpoint
from thermopot.tools.evaluate_functions import reference_from_config, evaluate_pair, error_table

#--------------------------------------------------------------------------------------------------#

def evaluate_from_config(config, pair, dataset):
	""" (errors, surfaces) of a pair over the data ranges of dataset """

	if pair.experiment != config.experiment:
		raise ConfigError("checkpoint is for '{0}', config for '{1}'".format(pair.experiment, config.experiment), "experiment")
	reference = reference_from_config(config.experiment, config.simulation)
	return(evaluate_pair(pair, dataset, reference, config.evaluate))

#--------------------------------------------------------------------------------------------------#

def run_evaluate(args):

	config = config_from_args(args)
	args.dataset = dataset_manifest(config) if args.dataset is None else args.dataset
	args.checkpoint = checkpoint_file(config) if args.checkpoint is None else args.checkpoint

	outdir = config.stage_dir("evaluate")
	errors_path = os.path.join(outdir, "{0}_errors.csv".format(config.prefix))
	surfaces_path = os.path.join(outdir, "{0}_surfaces.csv".format(config.prefix))

	logger = ThermopotLogger("Evaluate", args.verbosity)
	logger.begin()

	parser = add_evaluate_arguments(argparse.ArgumentParser())
	logger.arguments_overview(parser, args)
	logger.output_files([errors_path, surfaces_path])

	check_files([args.dataset, args.checkpoint], "r", logger)
	make_directory(outdir)

	dataset = Dataset.load(args.dataset)
	pair, checkpoint = load_checkpoint(args.checkpoint)
	check_upstream(checkpoint["meta"].get("config_hash"), config_hash(config), "train", logger)

	logger.info("Evaluating checkpoint from epoch {0}".format(checkpoint["epoch"]))
	errors, surfaces = evaluate_from_config(config, pair, dataset)
	for quantity, value in errors.items():
		logger.stats("Relative error of {0}: {1:.4f}%".format(quantity, value))

	table = error_table(errors, config.experiment, checkpoint=os.path.basename(args.checkpoint), config_hash=config_hash(config))
	table.to_csv(errors_path, index=False)
	surfaces.to_csv(surfaces_path, index=False)
	logger.end()
