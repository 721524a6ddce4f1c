import numpy as np
import pytest

from thermopot.tools.selftest_functions import (CheckResult, random_graph, check_gradients, check_convexity, check_constraints,
												check_ntk, run_property_suite)


def test_check_result_row():
	result = CheckResult("lyapunov", False, 2e-3, 1e-8, "largest per-step change")
	row = result.as_row()
	assert row == {"check": "lyapunov", "passed": False, "worst": 2e-3, "tolerance": 1e-8, "detail": "largest per-step change"}


def test_random_graphs_are_seeded():
	_, _, first = random_graph(np.random.default_rng(4))
	_, _, second = random_graph(np.random.default_rng(4))
	for a, b in zip(first.values(), second.values()):
		np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("check", [
	lambda: check_gradients(n_graphs=5, seed=11),
	lambda: check_convexity(n_draws=30, n_param_draws=3, seed=11),
	lambda: check_constraints(n_states=30, seed=11),
	lambda: check_ntk(n_problems=1, seed=11),
])
def test_checks_pass_with_other_seeds(check):
	results = check()
	assert len(results) > 0
	for result in results:
		assert result.passed, result


def test_property_suite():
	results = run_property_suite(n_graphs=3, n_draws=40, n_states=20, seed=0)
	names = [result.name for result in results]
	assert len(names) == len(set(names))
	assert "lyapunov" in names and "stationarity" in names
	failed = [result for result in results if not result.passed]
	assert failed == []
