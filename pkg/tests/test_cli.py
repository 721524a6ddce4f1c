import os
import sys
import argparse
import numpy as np
import pandas as pd
import pytest
import yaml

from thermopot import THERMOPOT
from thermopot.parsers import add_train_arguments, add_preprocess_arguments, add_selftest_arguments
from thermopot.utils.config import ConfigError, config_from_args, load_config
from thermopot.tools.ablate import ablation_variants
from thermopot.tools.selftest_functions import CheckResult


def _run(monkeypatch, *argv):
	monkeypatch.setattr(sys, "argv", ["THERMOPOT"] + list(argv))
	THERMOPOT.main()


def _tiny_diffusion_config(tmp_path):
	config = {"experiment": "diffusion-linear",
				"output_dir": str(tmp_path / "out"),
				"simulation": {"n_x": 20, "dt": 1.0e-3, "total_time": 0.05, "n_snapshots": 11},
				"network": {"f_hidden": [3], "psi_hidden": [3]},
				"train": {"epochs": 5, "eval_every": 1, "gradient_check": False},
				"evaluate": {"quadrature_n": 51, "grid_n": 11, "coverage_radius": 0.05}}
	path = tmp_path / "tiny.yaml"
	path.write_text(yaml.safe_dump(config))
	return(str(path))

#------------------------------------------------ Parsers -----------------------------------------------#

def test_train_parser_overrides():
	parser = add_train_arguments(argparse.ArgumentParser())
	args = parser.parse_args(["--experiment", "phase", "--epochs", "3", "--weights-mode", "constant", "--seed-override", "5"])
	assert args.verbosity == 3 and args.dataset is None

	config = config_from_args(args)
	assert config.train.epochs == 3
	assert config.train.weights_mode == "constant"
	assert config.seeds == {"data": 5, "split": 5, "init": 5}


def test_preprocess_parser_sampling():
	args = add_preprocess_arguments(argparse.ArgumentParser()).parse_args(["-e", "phase", "--sampling", "uniform-time"])
	assert config_from_args(args).preprocess["sampling"] == "uniform-time"

	with pytest.raises(SystemExit):
		add_preprocess_arguments(argparse.ArgumentParser()).parse_args(["-e", "phase", "--sampling", "everything"])


def test_config_or_experiment_is_needed():
	args = add_train_arguments(argparse.ArgumentParser()).parse_args([])
	with pytest.raises(ConfigError):
		config_from_args(args)


def test_selftest_parser_defaults():
	args = add_selftest_arguments(argparse.ArgumentParser()).parse_args([])
	assert (args.n_graphs, args.n_draws, args.n_states, args.seed, args.output) == (100, 1000, 1000, 0, None)

#---------------------------------------------- Entry point ---------------------------------------------#

def test_no_arguments_prints_help(monkeypatch, capsys):
	with pytest.raises(SystemExit) as error:
		_run(monkeypatch)
	assert error.value.code is None
	assert "selftest" in capsys.readouterr().out


def test_invalid_config_exits_with_code_2(monkeypatch, tmp_path):
	path = tmp_path / "bad.yaml"
	path.write_text(yaml.safe_dump({"experiment": "diffusion-linear", "simulation": {"nx": 20}}))
	with pytest.raises(SystemExit) as error:
		_run(monkeypatch, "simulate", "--config", str(path), "--output_dir", str(tmp_path), "--verbosity", "0")
	assert error.value.code == THERMOPOT.EXIT_CONFIG_ERROR


def test_failed_check_exits_with_code_3(monkeypatch):
	monkeypatch.setattr("thermopot.tools.selftest.run_property_suite",
						lambda **kwargs: [CheckResult("stationarity", False, 1.0, 1e-12)])
	with pytest.raises(SystemExit) as error:
		_run(monkeypatch, "selftest")
	assert error.value.code == THERMOPOT.EXIT_NUMERIC_ERROR


def test_selftest_writes_results(monkeypatch, tmp_path):
	monkeypatch.setattr("thermopot.tools.selftest.run_property_suite",
						lambda **kwargs: [CheckResult("lyapunov", True, 0.0, 1e-8)])
	output = str(tmp_path / "results.csv")
	_run(monkeypatch, "selftest", "--output", output, "--verbosity", "0")
	table = pd.read_csv(output)
	assert table["check"].tolist() == ["lyapunov"] and table["passed"].all()


def test_diffusion_pipeline(monkeypatch, tmp_path):
	config = _tiny_diffusion_config(tmp_path)
	for stage in ("simulate", "preprocess", "train", "evaluate"):
		_run(monkeypatch, stage, "--config", config, "--verbosity", "0")

	out = tmp_path / "out"
	for path in ("simulate/diffusion-linear_simulation_manifest.json",
					"preprocess/diffusion-linear_dataset.json",
					"train/diffusion-linear_checkpoint.json",
					"train/diffusion-linear_history.csv",
					"evaluate/diffusion-linear_surfaces.csv"):
		assert os.path.exists(str(out / path)), path

	history = pd.read_csv(str(out / "train" / "diffusion-linear_history.csv"))
	assert history["epoch"].tolist() == list(range(6))

	errors = pd.read_csv(str(out / "evaluate" / "diffusion-linear_errors.csv"))
	assert np.isfinite(errors.loc[0, "err_psihat_covered"])
	assert errors.loc[0, "experiment"] == "diffusion-linear"


def test_missing_upstream_file_exits(monkeypatch, tmp_path):
	config = _tiny_diffusion_config(tmp_path)
	with pytest.raises(SystemExit) as error:
		_run(monkeypatch, "train", "--config", config, "--verbosity", "0")
	assert "does not exists" in str(error.value.code)

#------------------------------------------------ Ablation ----------------------------------------------#

def test_ablation_variants():
	config = load_config(experiment="phase")
	(base_label, base), (variant_label, variant) = ablation_variants(config, "uniform-time")
	assert (base_label, variant_label) == ("baseline", "variant")
	assert base.preprocess["sampling"] == "phase-space" and variant.preprocess["sampling"] == "uniform-time"
	assert variant.prefix == "phase_uniform-time_variant"

	_, (_, constant) = ablation_variants(load_config(experiment="visco"), "constant-weights")
	assert constant.train.weights_mode == "constant"


def test_ablation_modes_are_checked():
	with pytest.raises(ConfigError):
		ablation_variants(load_config(experiment="diffusion-linear"), "uniform-time")
	with pytest.raises(ConfigError):
		ablation_variants(load_config(experiment="phase"), "dropout")
