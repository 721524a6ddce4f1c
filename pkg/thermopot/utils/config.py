#!/usr/bin/env python

"""
Config: reading and validation of experiment configuration files (.yaml)

@license: MIT
"""

import os
import copy
import json
import hashlib
import yaml
from dataclasses import dataclass, asdict

from thermopot.utils.diffcore import ThermopotError

EXPERIMENTS = ("phase", "visco", "diffusion-linear", "diffusion-nonlinear")
WEIGHT_MODES = ("adaptive", "constant", "periodic")
SAMPLING_POLICIES = ("phase-space", "uniform-time", "random")

CONFIG_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "configs")
SHIPPED_CONFIGS = {"phase": "phase.yaml",
					"visco": "visco.yaml",
					"diffusion-linear": "diffusion_linear.yaml",
					"diffusion-nonlinear": "diffusion_nonlinear.yaml"}


class ConfigError(ThermopotError):
	""" Invalid configuration; 'path' is the dotted path of the offending field """

	def __init__(self, message, path=None):
		self.path = path
		if path is not None:
			message = "{0}: {1}".format(path, message)
		ThermopotError.__init__(self, message)

class StabilityError(ConfigError):
	""" Time step violates the stability limit of an explicit scheme """
	pass

#--------------------------------------------------------------------------------------------------#
#-------------------------------------------- Defaults --------------------------------------------#
#--------------------------------------------------------------------------------------------------#

_DIFFUSION_SIMULATION = {"n_x": 99,
						"total_time": 0.025,
						"n_snapshots": 201,
						"c_mean": 0.5,
						"c_amplitude": 0.49,
						"wavenumber": 2,
						"beta": 1.0}

_SIMULATION_DEFAULTS = {
	"phase": {"height": 1.0e8,				#pN/nm^2, quartic prefactor of the double well
			"well_left": 0.0,
			"well_right": 0.01,
			"tilt": 0.0,
			"strain_min": -0.02,
			"strain_max": 0.04,
			"viscosity": 8.0,				#pN ns nm^-2
			"length": 9.0,					#nm
			"pull_velocity": 9.5,			#nm/ns
			"n_x": 150,
			"dt": 9.0e-9,					#ns
			"total_time": 0.028,			#ns
			"trace_stride": 10,
			"field_stride": 1500,
			"initial_noise": 0.0},

	"visco": {"youngs_modulus": 7.5e5,		#Pa
			"poisson_ratio": 0.49,
			"density": 970.0,				#kg/m^3
			"viscous_moduli": [7.5e4],		#Pa
			"relaxation_times": [0.01],		#s
			"length": 1.0,					#m
			"n_x": 250,
			"dt": 1.0e-4,
			"output_dt": 1.0e-3,
			"total_time": 1.0,
			"amplitude": 0.01,				#m
			"start_frequency": 1.0,			#Hz
			"sweep_rate": 9.0},				#Hz/s

	"diffusion-linear": dict(_DIFFUSION_SIMULATION, dt=2.55e-5),
	"diffusion-nonlinear": dict(_DIFFUSION_SIMULATION, dt=1.01e-5),
}

_TRAIN_DEFAULTS = {
	"phase": {"epochs": 30000, "learning_rate": 1e-4},
	"visco": {"epochs": 30000, "learning_rate": 1e-4},
	"diffusion-linear": {"epochs": 12000, "learning_rate": 8e-4},
	"diffusion-nonlinear": {"epochs": 12000, "learning_rate": 8e-4},
}

_NETWORK_DEFAULTS = {
	"phase": {"f_hidden": [25, 25], "psi_hidden": [25, 25]},
	"visco": {"f_hidden": [25, 25], "psi_hidden": [25, 25]},
	"diffusion-linear": {"f_hidden": [10, 10], "psi_hidden": [10, 10]},
	"diffusion-nonlinear": {"f_hidden": [10, 10], "psi_hidden": [10, 10]},
}


def default_config(experiment):
	""" Complete configuration dict of an experiment with every default filled in """

	if experiment not in EXPERIMENTS:
		raise ConfigError("unknown experiment '{0}' (choose from {1})".format(experiment, ", ".join(EXPERIMENTS)), "experiment")

	train = {"epochs": None,
			"learning_rate": None,
			"beta1": 0.9,
			"beta2": 0.999,
			"eps_adam": 1e-8,
			"weights_mode": "adaptive",
			"ntk_every": 1000,
			"max_ntk_samples": None,
			"eval_every": 100,
			"constant_weights": None,
			"gradient_check": True}
	train.update(_TRAIN_DEFAULTS[experiment])

	config = {"experiment": experiment,
			"output_dir": "thermopot_output",
			"prefix": experiment,
			"seeds": {"data": 0, "split": 1, "init": 2},
			"simulation": copy.deepcopy(_SIMULATION_DEFAULTS[experiment]),
			"preprocess": {"sampling": "phase-space" if experiment == "phase" else "random",
							"target_count": 4170,
							"split_ratio": 0.8,
							"coarse_stride": 3000,
							"max_pde_samples": None},
			"network": copy.deepcopy(_NETWORK_DEFAULTS[experiment]),
			"train": train,
			"evaluate": {"quadrature_n": 1001,
						"grid_n": 101,
						"coverage_radius": 0.02,
						"extrapolation_margin": 0.0}}
	return(config)

#--------------------------------------------------------------------------------------------------#
#------------------------------------------- Validation -------------------------------------------#
#--------------------------------------------------------------------------------------------------#

def _is_number(value):
	return(isinstance(value, (int, float)) and not isinstance(value, bool))

def _is_int(value):
	return(isinstance(value, int) and not isinstance(value, bool))

def _check_type(value, default, path):
	""" The type of a value is judged against the default it replaces """

	if default is None or value is None:
		return
	if isinstance(default, bool):
		ok = isinstance(value, bool)
	elif _is_int(default):
		ok = _is_int(value)
	elif isinstance(default, float):
		ok = _is_number(value)
	elif isinstance(default, str):
		ok = isinstance(value, str)
	elif isinstance(default, list):
		ok = isinstance(value, list) and all(_is_number(element) for element in value)
	else:
		ok = True
	if not ok:
		raise ConfigError("expected a value of type {0}, got {1!r}".format(type(default).__name__, value), path)

def merge_config(defaults, user, path=""):
	""" Recursively merge user values over defaults; unknown keys are errors """

	merged = copy.deepcopy(defaults)
	for key, value in (user or {}).items():
		key_path = "{0}.{1}".format(path, key) if path else key
		if key not in defaults:
			raise ConfigError("unknown key", key_path)
		if isinstance(defaults[key], dict):
			if not isinstance(value, dict):
				raise ConfigError("expected a mapping", key_path)
			merged[key] = merge_config(defaults[key], value, key_path)
		else:
			_check_type(value, defaults[key], key_path)
			merged[key] = value
	return(merged)


def _require(condition, message, path):
	if not condition:
		raise ConfigError(message, path)


def validate_config(config):
	""" Semantic checks that type checking cannot express """

	experiment = config["experiment"]
	for name, seed in config["seeds"].items():
		_require(_is_int(seed) and seed >= 0, "seeds must be non-negative integers", "seeds." + name)

	sim = config["simulation"]
	for key in ("n_x", "dt", "total_time"):
		_require(sim[key] > 0, "must be > 0", "simulation." + key)

	if experiment == "phase":
		_require(sim["strain_min"] < sim["strain_max"], "strain_min must be below strain_max", "simulation.strain_min")
		_require(sim["trace_stride"] >= 1 and sim["field_stride"] >= 1, "strides must be >= 1", "simulation.trace_stride")
		coarse = config["preprocess"]["coarse_stride"]
		_require(coarse % sim["field_stride"] == 0 and coarse % sim["trace_stride"] == 0,
					"must be a multiple of simulation.field_stride and simulation.trace_stride", "preprocess.coarse_stride")

	elif experiment == "visco":
		_require(len(sim["viscous_moduli"]) == len(sim["relaxation_times"]), "need one relaxation time per viscous modulus", "simulation.relaxation_times")
		_require(all(tau > 0 for tau in sim["relaxation_times"]), "relaxation times must be > 0", "simulation.relaxation_times")
		_require(sim["output_dt"] >= sim["dt"], "output_dt must be >= dt", "simulation.output_dt")
		_require(-1.0 < sim["poisson_ratio"] < 0.5, "must lie in (-1, 0.5)", "simulation.poisson_ratio")

	else:
		_require(sim["n_snapshots"] >= 2, "must be >= 2", "simulation.n_snapshots")
		_require(0 < sim["c_mean"] - abs(sim["c_amplitude"]), "initial concentration must stay positive", "simulation.c_amplitude")

	pre = config["preprocess"]
	_require(pre["sampling"] in SAMPLING_POLICIES, "must be one of {0}".format(", ".join(SAMPLING_POLICIES)), "preprocess.sampling")
	_require(0 < pre["split_ratio"] < 1, "must lie in (0, 1)", "preprocess.split_ratio")
	_require(pre["target_count"] >= 2, "must be >= 2", "preprocess.target_count")
	_require(pre["max_pde_samples"] is None or pre["max_pde_samples"] >= 1, "must be >= 1", "preprocess.max_pde_samples")
	if pre["sampling"] != "random":
		_require(experiment == "phase", "only the phase experiment supports '{0}' sampling".format(pre["sampling"]), "preprocess.sampling")

	for key in ("f_hidden", "psi_hidden"):
		widths = config["network"][key]
		_require(len(widths) >= 1 and all(_is_int(w) and w >= 1 for w in widths), "widths must be integers >= 1", "network." + key)

	train = config["train"]
	_require(train["weights_mode"] in WEIGHT_MODES, "must be one of {0}".format(", ".join(WEIGHT_MODES)), "train.weights_mode")
	_require(train["max_ntk_samples"] is None or train["max_ntk_samples"] >= 1, "must be >= 1", "train.max_ntk_samples")
	if train["constant_weights"] is not None:
		_require(isinstance(train["constant_weights"], list), "must be a list of weights", "train.constant_weights")
		_require(all(w > 0 for w in train["constant_weights"]), "weights must be > 0", "train.constant_weights")

	_require(config["evaluate"]["quadrature_n"] >= 2, "must be >= 2", "evaluate.quadrature_n")
	_require(config["evaluate"]["grid_n"] >= 2, "must be >= 2", "evaluate.grid_n")
	return(config)

#--------------------------------------------------------------------------------------------------#
#------------------------------------------ Config types ------------------------------------------#
#--------------------------------------------------------------------------------------------------#

@dataclass
class TrainConfig:
	epochs: int
	learning_rate: float
	beta1: float = 0.9
	beta2: float = 0.999
	eps_adam: float = 1e-8
	seed: int = 0
	weights_mode: str = "adaptive"
	ntk_every: int = 1000
	max_ntk_samples: int = None
	eval_every: int = 100
	constant_weights: list = None
	gradient_check: bool = True

	def __post_init__(self):
		if not (_is_int(self.epochs) and self.epochs >= 0):
			raise ConfigError("must be an integer >= 0", "train.epochs")
		if not self.learning_rate > 0:
			raise ConfigError("must be > 0", "train.learning_rate")
		if self.weights_mode not in WEIGHT_MODES:
			raise ConfigError("must be one of {0}".format(", ".join(WEIGHT_MODES)), "train.weights_mode")
		if self.eval_every < 1:
			raise ConfigError("must be >= 1", "train.eval_every")
		if self.ntk_every < 1:
			raise ConfigError("must be >= 1", "train.ntk_every")


@dataclass
class ExperimentConfig:
	experiment: str
	output_dir: str
	prefix: str
	seeds: dict
	simulation: dict
	preprocess: dict
	network: dict
	train: TrainConfig
	evaluate: dict

	@classmethod
	def from_dict(cls, config):

		train = dict(config["train"])
		train["seed"] = config["seeds"]["init"]
		return(cls(experiment=config["experiment"],
					output_dir=config["output_dir"],
					prefix=config["prefix"],
					seeds=dict(config["seeds"]),
					simulation=dict(config["simulation"]),
					preprocess=dict(config["preprocess"]),
					network=dict(config["network"]),
					train=TrainConfig(**train),
					evaluate=dict(config["evaluate"])))

	def to_dict(self):
		dct = asdict(self)
		del dct["train"]["seed"]
		return(dct)

	def stage_dir(self, stage):
		return(os.path.join(self.output_dir, stage))


def config_hash(config):
	""" sha256 of the canonical JSON form of a validated config (output location excluded) """

	dct = config.to_dict() if isinstance(config, ExperimentConfig) else copy.deepcopy(config)
	dct.pop("output_dir", None)
	canonical = json.dumps(dct, sort_keys=True, separators=(",", ":"))
	return(hashlib.sha256(canonical.encode("utf-8")).hexdigest())

#--------------------------------------------------------------------------------------------------#
#--------------------------------------------- Reading --------------------------------------------#
#--------------------------------------------------------------------------------------------------#

def read_config_yaml(config_yaml):
	""" Read a yaml document into a dict """

	with open(config_yaml, "r") as stream:
		try:
			config_dict = yaml.safe_load(stream)
		except yaml.YAMLError as exc:
			raise ConfigError("could not parse yaml ({0})".format(exc), config_yaml)

	if config_dict is None:
		config_dict = {}
	if not isinstance(config_dict, dict):
		raise ConfigError("the top level of a config must be a mapping", config_yaml)
	return(config_dict)


def shipped_config_path(experiment):
	if experiment not in SHIPPED_CONFIGS:
		raise ConfigError("unknown experiment '{0}' (choose from {1})".format(experiment, ", ".join(EXPERIMENTS)), "experiment")
	return(os.path.normpath(os.path.join(CONFIG_DIR, SHIPPED_CONFIGS[experiment])))


def apply_overrides(config_dict, overrides):
	""" Command-line overrides; keys with value None are ignored """

	config_dict = copy.deepcopy(config_dict)
	overrides = {key: value for key, value in overrides.items() if value is not None}

	if "seed_override" in overrides:
		config_dict["seeds"] = {name: overrides["seed_override"] for name in ("data", "split", "init")}
	if "output_dir" in overrides:
		config_dict["output_dir"] = overrides["output_dir"]
	if "sampling" in overrides:
		config_dict.setdefault("preprocess", {})["sampling"] = overrides["sampling"]
	for key in ("weights_mode", "max_ntk_samples", "epochs"):
		if key in overrides:
			config_dict.setdefault("train", {})[key] = overrides[key]
	return(config_dict)


def load_config(config_path=None, experiment=None, overrides=None):
	"""
	Build a validated ExperimentConfig from a yaml file and/or an experiment name.
	The file's 'experiment' key decides which defaults apply.
	"""

	user = read_config_yaml(config_path) if config_path is not None else {}
	if experiment is not None and user.get("experiment", experiment) != experiment:
		raise ConfigError("config is for experiment '{0}', not '{1}'".format(user["experiment"], experiment), "experiment")

	experiment = user.get("experiment", experiment)
	if experiment is None:
		raise ConfigError("missing experiment id", "experiment")

	user = apply_overrides(user, overrides or {})
	config = merge_config(default_config(experiment), user)
	validate_config(config)
	return(ExperimentConfig.from_dict(config))


def config_from_args(args):
	""" ExperimentConfig from the --config/--experiment options and the command-line overrides of a tool """

	config_path = getattr(args, "config", None)
	experiment = getattr(args, "experiment", None)
	if config_path is None and experiment is None:
		raise ConfigError("either --config or --experiment is needed", "experiment")
	if config_path is None:
		config_path = shipped_config_path(experiment)

	overrides = {key: getattr(args, key, None) for key in ("seed_override", "output_dir", "sampling", "weights_mode", "max_ntk_samples", "epochs")}
	return(load_config(config_path, experiment, overrides))
