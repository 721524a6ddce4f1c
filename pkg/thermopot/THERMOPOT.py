#!/usr/bin/env python

"""
THERMOPOT top-level parser

@license: MIT
"""

import sys
import argparse
from argparse import SUPPRESS
import textwrap
import importlib

from thermopot.parsers import *
from thermopot.utils.utilities import add_underscore_options
from thermopot.utils.diffcore import NumericError
from thermopot.utils.config import ConfigError
from thermopot import __version__ as THERMOPOT_VERSION

EXIT_CONFIG_ERROR = 2
EXIT_NUMERIC_ERROR = 3


def main():

	#~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~#

	all_parser_info = {"Pipeline stages":
							{
							"simulate": {"help": "Generate trajectory data with the finite-difference simulator of an experiment", "add_arguments": add_simulate_arguments, "function": "thermopot.tools.simulate.run_simulate"},
							"preprocess": {"help": "Select, pack and split trajectory samples into a dataset", "add_arguments": add_preprocess_arguments, "function": "thermopot.tools.preprocess.run_preprocess"},
							"train": {"help": "Fit free energy and dissipation networks to a dataset", "add_arguments": add_train_arguments, "function": "thermopot.tools.train.run_train", "space": "\t\t\t"},
							"evaluate": {"help": "Relative errors and potential surfaces against the closed-form references", "add_arguments": add_evaluate_arguments, "function": "thermopot.tools.evaluate.run_evaluate"},
							},

						"Experiments and checks":
							{
							"ablate": {"help": "Compare sampling policies or loss weightings on the same trajectory", "add_arguments": add_ablate_arguments, "function": "thermopot.tools.ablate.run_ablate", "space": "\t\t\t"},
							"selftest": {"help": "Run the derivative, convexity and conservation property suite", "add_arguments": add_selftest_arguments, "function": "thermopot.tools.selftest.run_selftest"},
							}
						}

	#~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~#

	parser = argparse.ArgumentParser("THERMOPOT", usage=SUPPRESS)
	parser._action_groups.pop()
	parser.formatter_class = lambda prog: argparse.RawDescriptionHelpFormatter(prog, max_help_position=25, width=90)
	parser.description = textwrap.dedent('''
										 ______________________________________________________________________________
										|                                                                              |
										|                           ~ T H E R M O P O T ~                              |
										|          Free energy and dissipation potentials learned from data            |
										|______________________________________________________________________________|

										Usage: THERMOPOT <TOOLNAME> [arguments]

										''')

	subparsers = parser.add_subparsers(title=None, metavar="")

	#Add all tools to parser
	all_tool_parsers = {}
	for group in all_parser_info:
		parser.description += group + ":\n"

		info = all_parser_info[group]
		for tool in info:
			parser.description += "   {0}{1}{2}\n".format(tool, info[tool].get("space", "\t\t"), info[tool]["help"])
			subparser = subparsers.add_parser(tool, usage=SUPPRESS)
			subparser = info[tool]["add_arguments"](subparser)
			subparser.set_defaults(module=info[tool]["function"])
			all_tool_parsers[tool.lower()] = subparser

			#Add version to subparser
			subparser.add_argument("--version", action='version', version=THERMOPOT_VERSION)
			subparser = add_underscore_options(subparser)

		parser.description += "\n"

	parser.description += "For help on each tool, please run: THERMOPOT <TOOLNAME> --help\n"
	parser.description += "For version number: THERMOPOT --version"
	parser.add_argument("--version", action='version', version=THERMOPOT_VERSION)

	argv = sys.argv[1:]

	#If no args, print help for top-level THERMOPOT
	if len(argv) == 0:
		parser.print_help()
		sys.exit()

	#Tool name without arguments prints the help of the tool; selftest runs with defaults
	if argv[0].lower() in all_tool_parsers and len(argv) == 1:
		if argv[0].lower() != "selftest":
			all_tool_parsers[argv[0].lower()].print_help()
			sys.exit()

	argv[0] = argv[0].lower()
	args = parser.parse_args(argv)

	#Depending on subparser chosen, load main script entry and run
	function_str = args.module
	mod_name, func_name = function_str.rsplit(".", 1)
	module = importlib.import_module(mod_name)	#load specific module
	func = getattr(module, func_name)
	args.func = func

	#Run specified function with arguments
	try:
		args.func(args)
	except ConfigError as e:
		sys.stderr.write("ERROR: invalid configuration ({0})\n".format(e))
		sys.exit(EXIT_CONFIG_ERROR)
	except NumericError as e:
		sys.stderr.write("ERROR: numerical failure ({0})\n".format(e))
		sys.exit(EXIT_NUMERIC_ERROR)


if __name__ == "__main__":
	main()
