#!/usr/bin/env python

"""
Train: fits the free energy and dissipation networks of an experiment to its dataset

@license: MIT
"""

import os
import argparse

from thermopot.parsers import add_train_arguments
from thermopot.utils.config import ConfigError, config_from_args, config_hash
from thermopot.utils.logger import ThermopotLogger
from thermopot.utils.utilities import check_files, make_directory
from thermopot.utils.potentials import build_potential_pair
from thermopot.utils.residuals import build_loss_assembly
from thermopot.tools.preprocess import dataset_manifest, check_upstream
from thermopot.tools.preprocess_functions import Dataset
from thermopot.tools.train_functions import train

#--------------------------------------------------------------------------------------------------#

def train_from_config(config, dataset, logger=None, checkpoint_path=None):
	""" (pair, history, info) for a dataset with the network and training settings of config """

	if dataset.experiment != config.experiment:
		raise ConfigError("dataset is for '{0}', config for '{1}'".format(dataset.experiment, config.experiment), "experiment")

	hidden = {"f": config.network["f_hidden"], "psi": config.network["psi_hidden"]}
	pair = build_potential_pair(config.experiment, dataset.normalizations, dataset.scales, hidden, config.seeds["init"])
	la = build_loss_assembly(pair, config.experiment, dataset.dX, density=dataset.meta.get("density"))

	if logger is not None:
		logger.stats("Characteristic scales: f* = {0:.6e}, psi* = {1:.6e}".format(*dataset.scales))
		logger.stats("Parameters: f {0}, psi {1}".format(pair.f_net.n_parameters, pair.psi_net.n_parameters))

	meta = {"config_hash": config_hash(config), "dataset_config_hash": dataset.meta.get("config_hash")}
	return(train(la, config.train, dataset.train, dataset.test, stats=dataset.stats, logger=logger,
					checkpoint_path=checkpoint_path, checkpoint_meta=meta))


def checkpoint_file(config):
	return(os.path.join(config.stage_dir("train"), "{0}_checkpoint.json".format(config.prefix)))

#--------------------------------------------------------------------------------------------------#

def run_train(args):

	config = config_from_args(args)
	args.dataset = dataset_manifest(config) if args.dataset is None else args.dataset

	outdir = config.stage_dir("train")
	checkpoint_path = checkpoint_file(config)
	history_path = os.path.join(outdir, "{0}_history.csv".format(config.prefix))

	logger = ThermopotLogger("Train", args.verbosity)
	logger.begin()

	parser = add_train_arguments(argparse.ArgumentParser())
	logger.arguments_overview(parser, args)
	logger.config_overview(config)
	logger.output_files([checkpoint_path, history_path])

	check_files([args.dataset], "r", logger)
	make_directory(outdir)

	dataset = Dataset.load(args.dataset)
	check_upstream(dataset.meta.get("config_hash"), config_hash(config), "preprocess", logger)
	logger.info("Training on {0}".format(", ".join("{0} {1}".format(n, key) for key, n in dataset.counts().items())))

	pair, history, info = train_from_config(config, dataset, logger, checkpoint_path)
	history.to_csv(history_path, index=False)

	logger.info("Best test loss {0:.6e} at epoch {1}".format(info["best_test_loss"], info["best_epoch"]))
	logger.end()
