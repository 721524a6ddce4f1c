#!/usr/bin/env python

"""
Simulate: generates the trajectory data of an experiment with its finite-difference simulator

@license: MIT
"""

import os
import argparse

from thermopot.parsers import add_simulate_arguments
from thermopot.utils.config import config_from_args, config_hash
from thermopot.utils.logger import ThermopotLogger
from thermopot.utils.utilities import make_directory
from thermopot.tools.simulate_functions import (DoubleWellSpec, ViscoMaterial, chirp_displacement, initial_concentration,
												simulate_phase, simulate_visco_1d, simulate_diffusion)

#--------------------------------------------------------------------------------------------------#

def simulate_from_config(config, logger=None):
	""" TrajectoryField of the experiment described by config """

	sim = config.simulation
	if config.experiment == "phase":
		well = DoubleWellSpec(sim["height"], sim["well_left"], sim["well_right"], sim["tilt"], (sim["strain_min"], sim["strain_max"]))
		return(simulate_phase(well, viscosity=sim["viscosity"], length=sim["length"], pull_velocity=sim["pull_velocity"],
								n_x=sim["n_x"], dt=sim["dt"], total_time=sim["total_time"], seed=config.seeds["data"],
								initial_noise=sim["initial_noise"], trace_stride=sim["trace_stride"], field_stride=sim["field_stride"],
								logger=logger))

	elif config.experiment == "visco":
		material = ViscoMaterial(sim["youngs_modulus"], sim["poisson_ratio"], sim["density"], sim["viscous_moduli"], sim["relaxation_times"])
		return(simulate_visco_1d(material, length=sim["length"], n_x=sim["n_x"], dt=sim["dt"], output_dt=sim["output_dt"],
									total_time=sim["total_time"],
									bc_displacement=chirp_displacement(sim["amplitude"], sim["start_frequency"], sim["sweep_rate"]),
									logger=logger))

	model = config.experiment.split("-")[1]
	initial = lambda X: initial_concentration(X, sim["c_mean"], sim["c_amplitude"], sim["wavenumber"])
	return(simulate_diffusion(model, n_x=sim["n_x"], dt=sim["dt"], total_time=sim["total_time"],
								n_snapshots=sim["n_snapshots"], initial=initial, logger=logger))


def trajectory_manifest(config):
	return(os.path.join(config.stage_dir("simulate"), "{0}_simulation_manifest.json".format(config.prefix)))

#--------------------------------------------------------------------------------------------------#

def run_simulate(args):

	config = config_from_args(args)

	logger = ThermopotLogger("Simulate", args.verbosity)
	logger.begin()

	parser = add_simulate_arguments(argparse.ArgumentParser())
	logger.arguments_overview(parser, args)
	logger.config_overview(config)

	outdir = config.stage_dir("simulate")
	make_directory(outdir)

	logger.info("Simulating experiment '{0}'".format(config.experiment))
	tf = simulate_from_config(config, logger)
	logger.stats("Recorded {0} snapshots of {1}".format(len(tf.times), ", ".join(tf.fields)))

	written = tf.save(outdir, config.prefix, config_hash(config))
	logger.output_files(written)
	logger.end()
