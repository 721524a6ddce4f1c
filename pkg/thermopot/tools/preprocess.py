#!/usr/bin/env python

"""
Preprocess: selects, packs and splits trajectory samples into a training dataset

@license: MIT
"""

import os
import argparse

from thermopot.parsers import add_preprocess_arguments
from thermopot.utils.config import config_from_args, config_hash
from thermopot.utils.logger import ThermopotLogger
from thermopot.utils.utilities import check_files, make_directory
from thermopot.tools.simulate import trajectory_manifest
from thermopot.tools.simulate_functions import TrajectoryField
from thermopot.tools.preprocess_functions import build_dataset

#--------------------------------------------------------------------------------------------------#

def preprocess_from_config(config, tf, logger=None):
	pre = config.preprocess
	return(build_dataset(tf, config.experiment, pre["sampling"], pre["split_ratio"], config.seeds["split"],
							target_count=pre["target_count"], coarse_stride=pre["coarse_stride"],
							max_pde_samples=pre["max_pde_samples"], logger=logger))


def dataset_manifest(config):
	return(os.path.join(config.stage_dir("preprocess"), "{0}_dataset.json".format(config.prefix)))


def check_upstream(manifest_hash, current_hash, stage, logger):
	""" Warn when an input was produced with a different configuration """
	if manifest_hash is not None and manifest_hash != current_hash:
		logger.warning("Input from stage '{0}' was produced with a different configuration (hash {1:.12})".format(stage, manifest_hash))

#--------------------------------------------------------------------------------------------------#

def run_preprocess(args):

	config = config_from_args(args)
	args.trajectory = trajectory_manifest(config) if args.trajectory is None else args.trajectory

	logger = ThermopotLogger("Preprocess", args.verbosity)
	logger.begin()

	parser = add_preprocess_arguments(argparse.ArgumentParser())
	logger.arguments_overview(parser, args)
	logger.config_overview(config)

	check_files([args.trajectory], "r", logger)
	outdir = config.stage_dir("preprocess")
	make_directory(outdir)

	logger.info("Reading trajectory from {0}".format(args.trajectory))
	tf = TrajectoryField.load(args.trajectory)
	check_upstream(tf.meta.get("config_hash"), config_hash(config), "simulate", logger)

	logger.info("Building dataset with '{0}' sampling".format(config.preprocess["sampling"]))
	dataset = preprocess_from_config(config, tf, logger)
	if "bc_deciles" in dataset.meta:
		logger.stats("Boundary strain deciles: {0}".format(dataset.meta["bc_deciles"]))

	written = dataset.save(outdir, config.prefix, config_hash(config))
	logger.output_files(written)
	logger.end()
