#!/usr/bin/env python

"""
Selftest: runs the property suite (derivatives, convexity, potential constraints, adaptive weights, simulators)

@license: MIT
"""

import argparse
import pandas as pd

from thermopot.parsers import add_selftest_arguments
from thermopot.utils.diffcore import NumericError
from thermopot.utils.logger import ThermopotLogger
from thermopot.utils.utilities import check_files
from thermopot.tools.selftest_functions import run_property_suite

#--------------------------------------------------------------------------------------------------#

def run_selftest(args):

	logger = ThermopotLogger("Selftest", args.verbosity)
	logger.begin()

	parser = add_selftest_arguments(argparse.ArgumentParser())
	logger.arguments_overview(parser, args)
	logger.output_files([args.output])

	if args.output is not None:
		check_files([args.output], "w", logger)

	results = run_property_suite(n_graphs=args.n_graphs, n_draws=args.n_draws, n_states=args.n_states, seed=args.seed, logger=logger)
	if args.output is not None:
		pd.DataFrame([result.as_row() for result in results]).to_csv(args.output, index=False)

	failed = [result.name for result in results if not result.passed]
	logger.info("{0} of {1} checks passed".format(len(results) - len(failed), len(results)))
	if len(failed) > 0:
		raise NumericError("Failed checks: {0}".format(", ".join(failed)))
	logger.end()
