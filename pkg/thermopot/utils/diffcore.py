#!/usr/bin/env python

"""
Diffcore: expression graphs for small dense networks with forward-mode input derivatives
and reverse-mode parameter gradients.

Graphs are built from Node objects. Values of 'batched' nodes carry a leading sample axis, so one
graph evaluation covers a whole sample set. A derivative with respect to an input is itself a graph
(see derivative()), which means parameter gradients of expressions containing input derivatives
come out of the same reverse pass.

@license: MIT
"""

import weakref
import numpy as np
from scipy.special import expit

#--------------------------------------------------------------------------------------------------#
#------------------------------------------- Errors -----------------------------------------------#
#--------------------------------------------------------------------------------------------------#

class ThermopotError(Exception):
	""" Base class for errors raised within thermopot """
	pass

class BindingError(ThermopotError):
	""" A leaf of a graph was evaluated without a value """
	pass

class NumericError(ThermopotError):
	""" NaN/Inf values, unstable simulations and other numerical failures """
	pass

class ShapeError(ThermopotError):
	""" Inconsistent shapes while building a graph """
	pass

#--------------------------------------------------------------------------------------------------#
#-------------------------------------------- Nodes -----------------------------------------------#
#--------------------------------------------------------------------------------------------------#

LEAVES = ("input", "param", "const")

class Node:
	""" A node of an expression graph. 'shape' is the per-sample shape of the value """

	__slots__ = ("op", "args", "shape", "batched", "label", "attr", "data", "_order", "__weakref__")

	#numpy scalars defer to the Node operators below
	__array_ufunc__ = None

	def __init__(self, op, args=(), shape=(), batched=False, label=None, attr=None, data=None):
		self.op = op
		self.args = tuple(args)
		self.shape = tuple(shape)
		self.batched = batched
		self.label = label
		self.attr = attr
		self.data = data
		self._order = None

	def __repr__(self):
		return("Node({0})".format(describe(self, depth=2)))

	#Arithmetic builds new nodes
	def __add__(self, other):
		return(add(self, other))

	def __radd__(self, other):
		return(add(other, self))

	def __sub__(self, other):
		return(add(self, neg(other)))

	def __rsub__(self, other):
		return(add(other, neg(self)))

	def __mul__(self, other):
		return(mul(self, other))

	def __rmul__(self, other):
		return(mul(other, self))

	def __neg__(self):
		return(neg(self))

	def __truediv__(self, other):
		return(mul(self, reciprocal(other)))

	def __rtruediv__(self, other):
		return(mul(other, reciprocal(self)))

	def __pow__(self, exponent):
		return(power(self, exponent))


def Input(label, width=1):
	""" A per-sample input; bound to an array of shape (n_samples,) or (n_samples, width) """
	return(Node("input", shape=(width,), batched=True, label=label))

def Parameter(label, shape):
	""" A trainable parameter shared across samples """
	return(Node("param", shape=shape, batched=False, label=label))

def Constant(value, label=None):
	value = np.array(value, dtype=float)
	return(Node("const", shape=value.shape, batched=False, label=label, data=value))

def as_node(x):
	if isinstance(x, Node):
		return(x)
	return(Constant(x))

#Compound nodes are interned so that e.g. logistic(a) built twice is evaluated once
_interned = weakref.WeakValueDictionary()

def _make(op, args, shape, batched, attr=None):

	key = (op, tuple(id(arg) for arg in args), attr)
	node = _interned.get(key)
	if node is None:
		node = Node(op, args, shape=shape, batched=batched, attr=attr)
		_interned[key] = node
	return(node)


def _broadcast(a, b):

	if (a.batched and len(b.shape) > 1 and not b.batched) or (b.batched and len(a.shape) > 1 and not a.batched):
		raise ShapeError("Cannot broadcast batched node against matrix-shaped node: {0} vs {1}".format(describe(a), describe(b)))
	try:
		shape = np.broadcast_shapes(a.shape, b.shape)
	except ValueError:
		raise ShapeError("Shapes {0} and {1} do not broadcast ({2}, {3})".format(a.shape, b.shape, describe(a), describe(b)))
	return(shape)

#--------------------------------------------------------------------------------------------------#
#---------------------------------------- Node builders -------------------------------------------#
#--------------------------------------------------------------------------------------------------#

def add(a, b):
	a, b = as_node(a), as_node(b)
	return(_make("add", (a, b), _broadcast(a, b), a.batched or b.batched))

def mul(a, b):
	""" Elementwise product """
	a, b = as_node(a), as_node(b)
	return(_make("mul", (a, b), _broadcast(a, b), a.batched or b.batched))

def _unary(op, a, attr=None):
	a = as_node(a)
	return(_make(op, (a,), a.shape, a.batched, attr))

def neg(a):
	return(_unary("neg", a))

def softplus(a):
	return(_unary("softplus", a))

def logistic(a):
	return(_unary("logistic", a))

def reciprocal(a):
	return(_unary("reciprocal", a))

def log(a):
	return(_unary("log", a))

def exp(a):
	return(_unary("exp", a))

def power(a, exponent):
	return(_unary("power", a, float(exponent)))

def nonneg(a, eps=5.0):
	""" Realized non-negative weight from an unconstrained raw weight """
	return(_unary("nonneg", a, float(eps)))

def nonneg_slope(a, eps=5.0):
	return(_unary("nonneg_slope", a, float(eps)))

def matvec(W, x):
	""" Matrix-vector product W x; W is unbatched with shape (out, in) """

	W, x = as_node(W), as_node(x)
	if W.batched or len(W.shape) != 2:
		raise ShapeError("matvec expects an unbatched matrix, got {0}".format(describe(W)))
	if len(x.shape) != 1 or x.shape[0] != W.shape[1]:
		raise ShapeError("matvec shape mismatch: matrix {0} against vector {1}".format(W.shape, x.shape))
	return(_make("matvec", (W, x), (W.shape[0],), x.batched))

def stack(parts):
	""" Concatenate vector nodes along their last axis """

	parts = [as_node(part) for part in parts]
	for part in parts:
		if len(part.shape) != 1:
			raise ShapeError("stack expects vector nodes, got {0}".format(describe(part)))
	width = sum(part.shape[0] for part in parts)
	return(_make("stack", tuple(parts), (width,), any(part.batched for part in parts)))

def mean(a):
	""" Mean over the sample axis """
	a = as_node(a)
	if not a.batched:
		return(a)
	return(_make("mean", (a,), a.shape, False))

#--------------------------------------------------------------------------------------------------#
#------------------------------------------- Bindings ---------------------------------------------#
#--------------------------------------------------------------------------------------------------#

class Bindings(dict):
	""" Values of the input and parameter leaves of a graph, keyed by node """

	def bind(self, node, value):

		value = np.asarray(value, dtype=float)
		if node.op == "input":
			if value.ndim == 1:
				value = value[:, None]
			if value.ndim != 2 or value.shape[1] != node.shape[0]:
				raise BindingError("Input '{0}' expects shape (n, {1}), got {2}".format(node.label, node.shape[0], value.shape))
		elif node.op == "param":
			if value.shape != node.shape:
				raise BindingError("Parameter '{0}' expects shape {1}, got {2}".format(node.label, node.shape, value.shape))
		else:
			raise BindingError("Only input and parameter nodes can be bound (got '{0}')".format(node.op))

		self[node] = value
		return(self)

#--------------------------------------------------------------------------------------------------#
#------------------------------------------ Evaluation --------------------------------------------#
#--------------------------------------------------------------------------------------------------#

def nonneg_value(a, eps=5.0):
	""" W~ >= 0 -> W~ + exp(-eps); W~ < 0 -> exp(W~ - eps) """
	a = np.asarray(a, dtype=float)
	return(np.where(a >= 0, a + np.exp(-eps), np.exp(np.minimum(a, 0.0) - eps)))

def nonneg_slope_value(a, eps=5.0):
	a = np.asarray(a, dtype=float)
	return(np.where(a >= 0, 1.0, np.exp(np.minimum(a, 0.0) - eps)))

def softplus_value(a):
	""" log(1+exp(a)) computed as max(a,0) + log1p(exp(-|a|)) """
	return(np.maximum(a, 0.0) + np.log1p(np.exp(-np.abs(a))))

def _stack_values(*vals):

	n = max([val.shape[0] for val in vals if val.ndim == 2], default=None)
	if n is None:
		return(np.concatenate(vals, axis=-1))
	vals = [val if val.ndim == 2 else np.broadcast_to(val, (n, val.shape[-1])) for val in vals]
	return(np.concatenate(vals, axis=-1))

_FORWARD = {
	"add": lambda node, a, b: a + b,
	"mul": lambda node, a, b: a * b,
	"neg": lambda node, a: -a,
	"softplus": lambda node, a: softplus_value(a),
	"logistic": lambda node, a: expit(a),
	"reciprocal": lambda node, a: 1.0 / a,
	"log": lambda node, a: np.log(a),
	"exp": lambda node, a: np.exp(a),
	"power": lambda node, a: a ** node.attr,
	"nonneg": lambda node, a: nonneg_value(a, node.attr),
	"nonneg_slope": lambda node, a: nonneg_slope_value(a, node.attr),
	"matvec": lambda node, W, x: x @ W.T,
	"stack": lambda node, *parts: _stack_values(*parts),
	"mean": lambda node, a: a.mean(axis=0),
}


def describe(node, depth=3):
	""" Short textual path of a node and its operands, used in error messages """

	if node.op in LEAVES:
		if node.label is not None:
			return("{0}:{1}".format(node.op, node.label))
		return("{0}{1}".format(node.op, list(node.shape)))
	if depth <= 0:
		return("{0}(...)".format(node.op))
	return("{0}({1})".format(node.op, ", ".join(describe(arg, depth - 1) for arg in node.args)))


def topological_order(roots):
	""" Nodes reachable from roots, operands before the nodes using them """

	order = []
	seen = set()
	for root in roots:
		if root._order is None:
			root._order = _postorder(root)
		for node in root._order:
			if id(node) not in seen:
				seen.add(id(node))
				order.append(node)
	return(order)

def _postorder(root):

	order = []
	visited = set()
	stack_ = [(root, False)]
	while stack_:
		node, expanded = stack_.pop()
		if id(node) in visited:
			continue
		if expanded:
			visited.add(id(node))
			order.append(node)
		else:
			stack_.append((node, True))
			for arg in reversed(node.args):
				if id(arg) not in visited:
					stack_.append((arg, False))
	return(tuple(order))


def forward_pass(roots, bindings):
	""" Evaluate every node needed for roots. Returns dict node -> value """

	values = {}
	for node in topological_order(roots):

		if node.op == "const":
			values[node] = node.data
			continue

		if node.op in ("input", "param"):
			if node not in bindings:
				raise BindingError("No value bound for {0}".format(describe(node)))
			out = bindings[node]
		else:
			with np.errstate(all="ignore"):
				out = _FORWARD[node.op](node, *[values[arg] for arg in node.args])

		if not np.all(np.isfinite(out)):
			raise NumericError("Non-finite value at {0}".format(describe(node)))
		values[node] = out

	return(values)


def evaluate(expr, bindings):
	""" Value of expr; shape (n_samples,)+expr.shape for batched nodes """
	return(forward_pass([expr], bindings)[expr])

def evaluate_many(exprs, bindings):
	values = forward_pass(exprs, bindings)
	return([values[expr] for expr in exprs])

#--------------------------------------------------------------------------------------------------#
#---------------------------------- Forward mode (input tangents) ---------------------------------#
#--------------------------------------------------------------------------------------------------#

def _tangent_sum(a, b):
	if a is None:
		return(b)
	if b is None:
		return(a)
	return(a + b)

def _tangent(node, ts):
	""" Graph for d(node) given the tangent graphs ts of its operands (None = independent) """

	op = node.op
	args = node.args

	if op == "add":
		return(_tangent_sum(ts[0], ts[1]))

	elif op == "mul":
		a, b = args
		left = ts[0] * b if ts[0] is not None else None
		right = a * ts[1] if ts[1] is not None else None
		return(_tangent_sum(left, right))

	elif op == "neg":
		return(-ts[0])

	elif op == "softplus":
		return(logistic(args[0]) * ts[0])

	elif op == "logistic":
		return(node * (1.0 - node) * ts[0])

	elif op == "reciprocal":
		return(-(node * node) * ts[0])

	elif op == "log":
		return(ts[0] * reciprocal(args[0]))

	elif op == "exp":
		return(node * ts[0])

	elif op == "power":
		p = node.attr
		if p == 1.0:
			return(ts[0])
		if p == 2.0:
			return(2.0 * args[0] * ts[0])
		return(p * power(args[0], p - 1.0) * ts[0])

	elif op == "nonneg":
		return(nonneg_slope(args[0], node.attr) * ts[0])

	elif op == "matvec":
		W, x = args
		left = matvec(ts[0], x) if ts[0] is not None else None
		right = matvec(W, ts[1]) if ts[1] is not None else None
		return(_tangent_sum(left, right))

	elif op == "stack":
		return(stack([t if t is not None else Constant(np.zeros(part.shape)) for part, t in zip(args, ts)]))

	elif op == "mean":
		return(mean(ts[0]))

	raise NotImplementedError("No input derivative for '{0}' nodes".format(op))


def derivative(expr, wrt, component=None):
	"""
	Graph of d expr / d wrt, where wrt is an input or constant node of the graph.
	For vector-valued wrt, 'component' selects the direction (one-hot).
	The result is an ordinary graph: it can be evaluated, differentiated again, or passed to param_gradient.
	"""

	if wrt.op not in ("input", "const"):
		raise ValueError("Derivatives are taken with respect to input or constant nodes (got {0})".format(describe(wrt)))

	width = wrt.shape[-1] if len(wrt.shape) > 0 else 1
	if component is None:
		if width != 1:
			raise ValueError("A component index is needed for vector node {0}".format(describe(wrt)))
		seed = Constant(np.ones(wrt.shape))
	else:
		direction = np.zeros(wrt.shape)
		direction[..., component] = 1.0
		seed = Constant(direction)

	tangents = {}
	for node in topological_order([expr]):
		if node is wrt:
			tangents[node] = seed
		elif node.op in LEAVES:
			tangents[node] = None
		else:
			ts = [tangents[arg] for arg in node.args]
			tangents[node] = None if all(t is None for t in ts) else _tangent(node, ts)

	result = tangents[expr]
	if result is None:
		return(Constant(np.zeros(expr.shape)))
	return(result)


def input_derivative(expr, bindings, wrt, component=None):
	""" Value of d expr / d wrt at the bound point """
	return(evaluate(derivative(expr, wrt, component), bindings))

#--------------------------------------------------------------------------------------------------#
#--------------------------------- Reverse mode (parameter gradients) -----------------------------#
#--------------------------------------------------------------------------------------------------#

def _unbroadcast(g, shape):
	""" Sum g down to shape (numpy broadcasting in reverse) """

	g = np.asarray(g)
	while g.ndim > len(shape):
		g = g.sum(axis=0)
	for axis, size in enumerate(shape):
		if size == 1 and g.shape[axis] != 1:
			g = g.sum(axis=axis, keepdims=True)
	if g.shape != tuple(shape):
		g = np.broadcast_to(g, shape)
	return(g)

def _vjp(node, g, values, per_sample):
	""" Upstream gradient g pushed to the operands of node (unreduced) """

	op = node.op
	args = node.args

	if op == "add":
		return((g, g))

	elif op == "mul":
		a, b = values[args[0]], values[args[1]]
		return((g * b, g * a))

	elif op == "neg":
		return((-g,))

	elif op == "softplus":
		return((g * expit(values[args[0]]),))

	elif op == "logistic":
		s = values[node]
		return((g * s * (1.0 - s),))

	elif op == "reciprocal":
		r = values[node]
		return((-g * r * r,))

	elif op == "log":
		return((g / values[args[0]],))

	elif op == "exp":
		return((g * values[node],))

	elif op == "power":
		p = node.attr
		return((g * p * values[args[0]] ** (p - 1.0),))

	elif op == "nonneg":
		return((g * nonneg_slope_value(values[args[0]], node.attr),))

	elif op == "matvec":
		W, x = values[args[0]], values[args[1]]
		gx = g @ W
		if per_sample:
			gW = g[..., :, None] * x[..., None, :]
		elif g.ndim == 2 and x.ndim == 2:
			gW = g.T @ x
		elif g.ndim == 2:
			gW = np.outer(g.sum(axis=0), x)
		else:
			gW = np.outer(g, x)
		return((gW, gx))

	elif op == "stack":
		widths = [arg.shape[0] for arg in args]
		splits = np.cumsum(widths)[:-1]
		return(tuple(np.split(g, splits, axis=-1)))

	elif op == "mean":
		if per_sample:
			raise ValueError("Per-sample gradients are undefined through a mean over samples")
		a = values[args[0]]
		return((np.broadcast_to(g / a.shape[0], a.shape),))

	raise NotImplementedError("No parameter gradient for '{0}' nodes".format(op))


def value_and_gradient(scalar, bindings, per_sample=False):
	"""
	Evaluate scalar and its gradient with respect to every parameter node in its graph.
	With per_sample=True the root must be batched and each gradient gets a leading sample axis.
	Returns (value, {parameter node: gradient}).
	"""

	if scalar.shape not in ((), (1,)):
		raise ShapeError("Gradients need a scalar root, got shape {0}".format(scalar.shape))
	if per_sample and not scalar.batched:
		raise ValueError("Per-sample gradients need a batched root")

	order = topological_order([scalar])
	values = forward_pass([scalar], bindings)
	root_value = values[scalar]
	n_samples = root_value.shape[0] if scalar.batched else None

	#Only walk into subgraphs that contain parameters
	has_params = {}
	for node in order:
		has_params[node] = node.op == "param" or any(has_params[arg] for arg in node.args)

	grads = {scalar: np.ones_like(root_value)}
	param_grads = {}
	for node in reversed(order):

		g = grads.pop(node, None)
		if g is None:
			continue
		if node.op == "param":
			param_grads[node] = g
			continue
		if node.op in LEAVES:
			continue

		for arg, ga in zip(node.args, _vjp(node, g, values, per_sample)):
			if not has_params[arg]:
				continue
			if per_sample and not arg.batched:
				target = (n_samples,) + arg.shape
			else:
				target = values[arg].shape
			ga = _unbroadcast(ga, target)
			if arg in grads:
				grads[arg] = grads[arg] + ga
			else:
				grads[arg] = ga

	return(root_value, param_grads)


def param_gradient(scalar, bindings, per_sample=False):
	""" Gradient of scalar with respect to all its parameter nodes, {node: array} """
	return(value_and_gradient(scalar, bindings, per_sample=per_sample)[1])
