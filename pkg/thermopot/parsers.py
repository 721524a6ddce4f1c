#!/usr/bin/env python

"""
THERMOPOT argument parsers, one add_<tool>_arguments per tool

@license: MIT
"""

import argparse
from thermopot.utils.utilities import format_help_description, positive_int
from thermopot.utils.logger import add_logger_args
from thermopot.utils.config import EXPERIMENTS, WEIGHT_MODES, SAMPLING_POLICIES

#--------------------------------------------------------------------------------------------------------#
def _add_config_arguments(reqargs):
	""" Every pipeline stage reads an experiment config """

	reqargs.add_argument('-c', '--config', metavar="<yaml>", help="Experiment config in .yaml format (default: shipped config of --experiment)")
	reqargs.add_argument('-e', '--experiment', metavar="<id>", choices=EXPERIMENTS, help="Experiment id ({0}); needed if --config is not given".format("/".join(EXPERIMENTS)))
	return(reqargs)

def _add_stage_run_arguments(runargs):

	runargs.add_argument('--output-dir', metavar="<directory>", help="Output directory of all stages (default: output_dir of the config)")
	runargs.add_argument('--seed-override', metavar="<int>", type=int, help="Use this seed for data, split and initialization (default: seeds of the config)")
	runargs = add_logger_args(runargs)
	return(runargs)

def _add_train_options(optargs):

	optargs.add_argument('--weights-mode', metavar="<mode>", choices=WEIGHT_MODES, help="Loss weights ({0}) (default: from config)".format("/".join(WEIGHT_MODES)))
	optargs.add_argument('--max-ntk-samples', metavar="<int>", type=positive_int, help="Subsample size per loss term for the NTK traces (default: all samples)")
	optargs.add_argument('--epochs', metavar="<int>", type=int, help="Number of Adam epochs (default: from config)")
	return(optargs)

def _stage_description(name, description, usage, outputs):
	description += "\n\nUsage:\nTHERMOPOT {0}\n\n".format(usage)
	description += "Output files:\n" + "\n".join(["- {0}".format(output) for output in outputs])
	return(format_help_description(name, description))

#--------------------------------------------------------------------------------------------------------#
def add_simulate_arguments(parser):

	parser.formatter_class = lambda prog: argparse.RawDescriptionHelpFormatter(prog, max_help_position=35, width=90)
	description = "Simulate runs the finite-difference simulator of an experiment (viscous bar with a double-well free energy, "
	description += "1D viscoelastic bar under a chirp, periodic linear/nonlinear diffusion) and stores the trajectory."
	parser.description = _stage_description("simulate", description, "simulate --experiment <id> (--config <config.yaml>)",
											["<output_dir>/simulate/<prefix>_simulation_manifest.json",
											"<output_dir>/simulate/<prefix>_snapshots.csv",
											"<output_dir>/simulate/<prefix>_field_<field>.csv",
											"<output_dir>/simulate/<prefix>_trace_<trace>.csv"])

	parser._action_groups.pop()	#pop -h

	reqargs = parser.add_argument_group('Required arguments')
	reqargs = _add_config_arguments(reqargs)

	runargs = parser.add_argument_group('Run arguments')
	runargs = _add_stage_run_arguments(runargs)

	return(parser)

#--------------------------------------------------------------------------------------------------------#
def add_preprocess_arguments(parser):

	parser.formatter_class = lambda prog: argparse.RawDescriptionHelpFormatter(prog, max_help_position=35, width=90)
	description = "Preprocess selects samples from a trajectory (phase-space-uniform, uniform-in-time or random), "
	description += "packs them into residual inputs and splits them into training and test sets."
	parser.description = _stage_description("preprocess", description, "preprocess --experiment <id> (--trajectory <manifest.json>)",
											["<output_dir>/preprocess/<prefix>_dataset.json",
											"<output_dir>/preprocess/<prefix>_<train/test>_<pde/bc>.csv"])

	parser._action_groups.pop()	#pop -h

	reqargs = parser.add_argument_group('Required arguments')
	reqargs = _add_config_arguments(reqargs)

	optargs = parser.add_argument_group('Optional arguments')
	optargs.add_argument('--trajectory', metavar="<json>", help="Simulation manifest (default: <output_dir>/simulate/<prefix>_simulation_manifest.json)")
	optargs.add_argument('--sampling', metavar="<policy>", choices=SAMPLING_POLICIES, help="Sample selection ({0}) (default: from config)".format("/".join(SAMPLING_POLICIES)))

	runargs = parser.add_argument_group('Run arguments')
	runargs = _add_stage_run_arguments(runargs)

	return(parser)

#--------------------------------------------------------------------------------------------------------#
def add_train_arguments(parser):

	parser.formatter_class = lambda prog: argparse.RawDescriptionHelpFormatter(prog, max_help_position=35, width=90)
	description = "Train fits the free energy and dissipation networks to a dataset with full-batch Adam on the "
	description += "weighted residual loss. The parameters with the lowest test loss are checkpointed."
	parser.description = _stage_description("train", description, "train --experiment <id> (--dataset <dataset.json>)",
											["<output_dir>/train/<prefix>_checkpoint.json",
											"<output_dir>/train/<prefix>_history.csv"])

	parser._action_groups.pop()	#pop -h

	reqargs = parser.add_argument_group('Required arguments')
	reqargs = _add_config_arguments(reqargs)

	optargs = parser.add_argument_group('Optional arguments')
	optargs.add_argument('--dataset', metavar="<json>", help="Dataset manifest (default: <output_dir>/preprocess/<prefix>_dataset.json)")
	optargs = _add_train_options(optargs)

	runargs = parser.add_argument_group('Run arguments')
	runargs = _add_stage_run_arguments(runargs)

	return(parser)

#--------------------------------------------------------------------------------------------------------#
def add_evaluate_arguments(parser):

	parser.formatter_class = lambda prog: argparse.RawDescriptionHelpFormatter(prog, max_help_position=35, width=90)
	description = "Evaluate computes relative L2 errors of the learned potentials against the closed-form references "
	description += "over the data ranges and writes plot-ready grids of predicted and analytic surfaces."
	parser.description = _stage_description("evaluate", description, "evaluate --experiment <id> (--checkpoint <checkpoint.json>)",
											["<output_dir>/evaluate/<prefix>_errors.csv",
											"<output_dir>/evaluate/<prefix>_surfaces.csv"])

	parser._action_groups.pop()	#pop -h

	reqargs = parser.add_argument_group('Required arguments')
	reqargs = _add_config_arguments(reqargs)

	optargs = parser.add_argument_group('Optional arguments')
	optargs.add_argument('--dataset', metavar="<json>", help="Dataset manifest (default: <output_dir>/preprocess/<prefix>_dataset.json)")
	optargs.add_argument('--checkpoint', metavar="<json>", help="Trained checkpoint (default: <output_dir>/train/<prefix>_checkpoint.json)")

	runargs = parser.add_argument_group('Run arguments')
	runargs = _add_stage_run_arguments(runargs)

	return(parser)

#--------------------------------------------------------------------------------------------------------#
def add_ablate_arguments(parser):

	parser.formatter_class = lambda prog: argparse.RawDescriptionHelpFormatter(prog, max_help_position=35, width=90)
	description = "Ablate trains a baseline and a variant on the same trajectory and tabulates their errors. "
	description += "uniform-time: coarse uniform-in-time sampling against phase-space-uniform sampling (phase only). "
	description += "constant-weights: constant dimensional loss weights against adaptive weights."
	parser.description = _stage_description("ablate", description, "ablate --experiment <id> --mode <uniform-time/constant-weights>",
											["<output_dir>/ablate/<prefix>_ablation_<mode>.csv",
											"<output_dir>/ablate/<prefix>_<mode>_<run>_{checkpoint.json,history.csv}"])

	parser._action_groups.pop()	#pop -h

	reqargs = parser.add_argument_group('Required arguments')
	reqargs = _add_config_arguments(reqargs)
	reqargs.add_argument('--mode', metavar="<mode>", choices=["uniform-time", "constant-weights"], help="Ablation to run (uniform-time/constant-weights) (default: uniform-time)", default="uniform-time")

	optargs = parser.add_argument_group('Optional arguments')
	optargs.add_argument('--trajectory', metavar="<json>", help="Simulation manifest to reuse (default: simulate if <output_dir>/simulate holds none)")
	optargs = _add_train_options(optargs)

	runargs = parser.add_argument_group('Run arguments')
	runargs.add_argument('--cores', metavar="<int>", type=positive_int, help="Number of cores; baseline and variant run in parallel with 2 (default: 1)", default=1)
	runargs = _add_stage_run_arguments(runargs)

	return(parser)

#--------------------------------------------------------------------------------------------------------#
def add_selftest_arguments(parser):

	parser.formatter_class = lambda prog: argparse.RawDescriptionHelpFormatter(prog, max_help_position=35, width=90)
	description = "Selftest runs the property suite: derivatives against finite differences, convexity of the dissipation "
	description += "networks, potential constraints, NTK traces and the conservation properties of the simulators."
	parser.description = _stage_description("selftest", description, "selftest (--output <results.csv>)", ["<results.csv> (if --output is given)"])

	parser._action_groups.pop()	#pop -h

	optargs = parser.add_argument_group('Optional arguments')
	optargs.add_argument('--n-graphs', metavar="<int>", type=positive_int, help="Random graphs for the gradient checks (default: 100)", default=100)
	optargs.add_argument('--n-draws', metavar="<int>", type=positive_int, help="(parameter, input) draws per convexity check (default: 1000)", default=1000)
	optargs.add_argument('--n-states', metavar="<int>", type=positive_int, help="Random states for the constraint checks (default: 1000)", default=1000)
	optargs.add_argument('--seed', metavar="<int>", type=int, help="Seed of the random draws (default: 0)", default=0)
	optargs.add_argument('--output', metavar="<csv>", help="Write the check results to this file")

	runargs = parser.add_argument_group('Run arguments')
	runargs = add_logger_args(runargs)

	return(parser)
