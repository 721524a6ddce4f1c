#!/usr/bin/env python

"""
Networks: integrable (INN), fully input-convex (FICINN) and partially input-convex (PICINN) networks
built as diffcore graphs, with the non-negative weight realization and Glorot initialization

@license: MIT
"""

import numpy as np
from dataclasses import dataclass

from thermopot.utils.diffcore import (Parameter, ShapeError, matvec, softplus, nonneg, stack,
										nonneg_value, as_node)

NONNEG_EPS = 5.0

#--------------------------------------------------------------------------------------------------#

def realize_nonneg(raw, eps=NONNEG_EPS):
	""" Realized weight: raw >= 0 -> raw + exp(-eps), raw < 0 -> exp(raw - eps). Always > 0 """
	return(nonneg_value(raw, eps))


@dataclass(frozen=True)
class LayerSpec:
	input_width: int
	hidden_widths: tuple
	output_width: int = 1

	def __post_init__(self):
		object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
		for width in (self.input_width, self.output_width) + self.hidden_widths:
			if int(width) < 1:
				raise ShapeError("All layer widths must be >= 1 (got {0})".format(self))

	@property
	def widths(self):
		return([self.input_width] + list(self.hidden_widths) + [self.output_width])


def glorot_init(network, seed):
	"""
	Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))) and zero biases for all parameters of network.
	Non-negative weights are drawn in raw space. Parameters are drawn in definition order from one seeded generator.
	"""

	rng = np.random.default_rng(seed)
	values = {}
	for key, node in network.params.items():
		if key.startswith("b"):
			values[key] = np.zeros(node.shape)
		else:
			fan_out, fan_in = node.shape
			bound = np.sqrt(6.0 / (fan_in + fan_out))
			values[key] = rng.uniform(-bound, bound, size=node.shape)
	return(values)


def _as_vector(inputs, width, name):
	""" Combine a list of width-1 nodes (or a single vector node) into one vector node """

	if isinstance(inputs, (list, tuple)):
		node = inputs[0] if len(inputs) == 1 else stack(inputs)
	else:
		node = as_node(inputs)
	if node.shape != (width,):
		raise ShapeError("{0} expects an input of width {1}, got shape {2}".format(name, width, node.shape))
	return(node)

#--------------------------------------------------------------------------------------------------#
#------------------------------------------ Networks ----------------------------------------------#
#--------------------------------------------------------------------------------------------------#

class IntegrableNetwork:
	""" Common parameter handling of the three architectures. Parameter nodes are named '<name>.<key>' """

	kind = None

	def __init__(self, name):
		self.name = name
		self.params = {}		#key -> Parameter node, in definition order
		self.values = {}		#key -> ndarray

	def _add_param(self, key, shape):
		self.params[key] = Parameter("{0}.{1}".format(self.name, key), shape)

	def initialize(self, seed):
		self.values = glorot_init(self, seed)
		return(self)

	@property
	def n_parameters(self):
		return(int(sum(np.prod(node.shape) for node in self.params.values())))

	def parameter_nodes(self):
		return(list(self.params.values()))

	def get_values(self):
		""" {Parameter node: array} """
		return({node: self.values[key] for key, node in self.params.items()})

	def set_values(self, node_values):
		for key, node in self.params.items():
			if node in node_values:
				self.values[key] = np.asarray(node_values[node], dtype=float)

	def bind(self, bindings):
		for key, node in self.params.items():
			bindings.bind(node, self.values[key])
		return(bindings)

	def realized(self, key):
		""" Realized value of a parameter (non-negative weights pass through realize_nonneg) """
		if key.startswith("Wy"):
			return(realize_nonneg(self.values[key]))
		return(self.values[key])

	#Checkpointing
	def architecture(self):
		raise NotImplementedError()

	def to_dict(self):
		return({"kind": self.kind,
				"name": self.name,
				"eps": NONNEG_EPS,
				"architecture": self.architecture(),
				"params": {key: self.values[key].tolist() for key in self.params}})

	@staticmethod
	def from_dict(dct):

		kinds = {"inn": Inn, "ficinn": Ficinn, "picinn": Picinn}
		if dct.get("kind") not in kinds:
			raise ValueError("Unknown network kind '{0}'".format(dct.get("kind")))

		network = kinds[dct["kind"]](name=dct["name"], **dct["architecture"])
		for key, node in network.params.items():
			value = np.array(dct["params"][key], dtype=float).reshape(node.shape)
			network.values[key] = value
		return(network)


class Inn(IntegrableNetwork):
	""" y_{i+1} = softplus(W_i y_i + b_i) on hidden layers; affine output layer """

	kind = "inn"

	def __init__(self, input_width, hidden_widths, output_width=1, name="f"):

		IntegrableNetwork.__init__(self, name)
		self.spec = LayerSpec(input_width, hidden_widths, output_width)
		widths = self.spec.widths
		for i in range(len(widths) - 1):
			self._add_param("W{0}".format(i), (widths[i+1], widths[i]))
			self._add_param("b{0}".format(i), (widths[i+1],))

	def architecture(self):
		return({"input_width": self.spec.input_width, "hidden_widths": list(self.spec.hidden_widths), "output_width": self.spec.output_width})

	def forward(self, z):

		y = _as_vector(z, self.spec.input_width, "INN '{0}'".format(self.name))
		n_layers = len(self.spec.widths) - 1
		for i in range(n_layers):
			a = matvec(self.params["W{0}".format(i)], y) + self.params["b{0}".format(i)]
			y = softplus(a) if i < n_layers - 1 else a
		return(y)


class Ficinn(IntegrableNetwork):
	"""
	Fully input-convex network:
	y_1 = softplus(W_0^w w + b_0), y_{i+1} = g(nonneg(W_i^y) y_i + W_i^w w + b_i) for i >= 1, affine output layer
	"""

	kind = "ficinn"

	def __init__(self, input_width, hidden_widths, output_width=1, name="psi"):

		IntegrableNetwork.__init__(self, name)
		self.spec = LayerSpec(input_width, hidden_widths, output_width)
		widths = self.spec.widths
		for i in range(len(widths) - 1):
			if i > 0:
				self._add_param("Wy{0}".format(i), (widths[i+1], widths[i]))
			self._add_param("Ww{0}".format(i), (widths[i+1], widths[0]))
			self._add_param("b{0}".format(i), (widths[i+1],))

	def architecture(self):
		return({"input_width": self.spec.input_width, "hidden_widths": list(self.spec.hidden_widths), "output_width": self.spec.output_width})

	def forward(self, w):

		w = _as_vector(w, self.spec.input_width, "FICINN '{0}'".format(self.name))
		n_layers = len(self.spec.widths) - 1
		y = None
		for i in range(n_layers):
			a = matvec(self.params["Ww{0}".format(i)], w) + self.params["b{0}".format(i)]
			if i > 0:
				a = a + matvec(nonneg(self.params["Wy{0}".format(i)], NONNEG_EPS), y)
			y = softplus(a) if i < n_layers - 1 else a
		return(y)


class Picinn(IntegrableNetwork):
	"""
	Partially input-convex network, convex in w for every fixed z. Two tracks per layer:
	non-convex track  x_{i+1} = softplus(W^zx x_i + b^zx)
	convex track      y_{i+1} = g(nonneg(W^y)[y_i * softplus(W^yx x_i + b^yx)] + W^w[w * (W^wx x_i + b^wx)] + W^x x_i + b)
	with x_0 = z, y_0 = w, no y-term on layer 0 and an affine output layer.
	"""

	kind = "picinn"

	def __init__(self, z_width, w_width, hidden_widths, output_width=1, name="psi"):

		IntegrableNetwork.__init__(self, name)
		hidden_widths = tuple(int(w) for w in hidden_widths)
		self.z_width = int(z_width)
		self.w_width = int(w_width)
		self.spec = LayerSpec(self.z_width + self.w_width, hidden_widths, output_width)

		self.x_widths = [self.z_width] + list(hidden_widths)
		self.y_widths = [self.w_width] + list(hidden_widths) + [output_width]
		self.n_layers = len(hidden_widths) + 1

		for i in range(self.n_layers):
			if i < self.n_layers - 1:
				self._add_param("Wzx{0}".format(i), (self.x_widths[i+1], self.x_widths[i]))
				self._add_param("bzx{0}".format(i), (self.x_widths[i+1],))
			if i > 0:
				self._add_param("Wy{0}".format(i), (self.y_widths[i+1], self.y_widths[i]))
				self._add_param("Wyx{0}".format(i), (self.y_widths[i], self.x_widths[i]))
				self._add_param("byx{0}".format(i), (self.y_widths[i],))
			self._add_param("Ww{0}".format(i), (self.y_widths[i+1], self.w_width))
			self._add_param("Wwx{0}".format(i), (self.w_width, self.x_widths[i]))
			self._add_param("bwx{0}".format(i), (self.w_width,))
			self._add_param("Wx{0}".format(i), (self.y_widths[i+1], self.x_widths[i]))
			self._add_param("b{0}".format(i), (self.y_widths[i+1],))

	def architecture(self):
		return({"z_width": self.z_width, "w_width": self.w_width, "hidden_widths": list(self.spec.hidden_widths), "output_width": self.spec.output_width})

	def forward(self, z, w):

		x = _as_vector(z, self.z_width, "PICINN '{0}' (z)".format(self.name))
		w = _as_vector(w, self.w_width, "PICINN '{0}' (w)".format(self.name))
		p = self.params

		y = w
		for i in range(self.n_layers):
			gate = matvec(p["Wwx{0}".format(i)], x) + p["bwx{0}".format(i)]
			a = matvec(p["Ww{0}".format(i)], w * gate) + matvec(p["Wx{0}".format(i)], x) + p["b{0}".format(i)]
			if i > 0:
				y_gate = softplus(matvec(p["Wyx{0}".format(i)], x) + p["byx{0}".format(i)])
				a = a + matvec(nonneg(p["Wy{0}".format(i)], NONNEG_EPS), y * y_gate)

			if i < self.n_layers - 1:
				y = softplus(a)
				x = softplus(matvec(p["Wzx{0}".format(i)], x) + p["bzx{0}".format(i)])
			else:
				y = a
		return(y)
