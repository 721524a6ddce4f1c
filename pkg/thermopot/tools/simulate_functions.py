#!/usr/bin/env python

"""
Classes and functions for generating trajectory data with explicit finite-difference schemes
(viscous phase transformation, 1D viscoelastic wave, linear and nonlinear diffusion) and the
closed-form potentials used as reference for each of them

@license: MIT
"""

import os
import json
import numpy as np
import pandas as pd
from dataclasses import dataclass, field
from scipy.special import i0e

from thermopot.utils.diffcore import NumericError, log as log_node
from thermopot.utils.config import ConfigError, StabilityError
from thermopot.utils.potentials import AnalyticPair
from thermopot.utils.bessel import C_MAX, invert_m_array, dm_dc
from thermopot.utils.utilities import Progress, make_directory

#--------------------------------------------------------------------------------------------------#
#---------------------------------------- Trajectory data -----------------------------------------#
#--------------------------------------------------------------------------------------------------#

@dataclass
class TrajectoryField:
	"""
	Output of a simulation run.
	fields[name] has shape (n_rows, len(stations[name])); row k belongs to snapshot k (times[k], steps[k]).
	traces[name] has shape (n_trace,) sampled at trace_times/trace_steps.
	"""

	experiment: str
	grid: dict
	times: np.ndarray
	steps: np.ndarray
	fields: dict
	stations: dict
	units: dict
	traces: dict = field(default_factory=dict)
	trace_times: np.ndarray = None
	trace_steps: np.ndarray = None
	trace_stations: dict = field(default_factory=dict)
	meta: dict = field(default_factory=dict)

	def __post_init__(self):
		for name, values in self.fields.items():
			if values.ndim != 2 or values.shape[1] != len(self.stations[name]) or values.shape[0] > len(self.times):
				raise ValueError("Field '{0}' has shape {1} inconsistent with its stations/snapshots".format(name, values.shape))
			if not np.all(np.isfinite(values)):
				raise NumericError("Field '{0}' contains non-finite values".format(name))
		for name, values in self.traces.items():
			if len(values) != len(self.trace_times):
				raise ValueError("Trace '{0}' does not match the trace times".format(name))

	#---------------- Output ----------------#
	def _field_frame(self, name):

		values = self.fields[name]
		n_rows, n_stations = values.shape
		index = np.repeat(np.arange(n_rows), n_stations)
		return(pd.DataFrame({"index": index,
							"time": np.asarray(self.times)[index],
							"station": np.tile(self.stations[name], n_rows),
							"value": values.ravel(),
							"units": self.units.get(name, "")}))

	def _trace_frame(self, name):
		n = len(self.trace_times)
		return(pd.DataFrame({"index": np.arange(n),
							"step": self.trace_steps,
							"time": self.trace_times,
							"station": self.trace_stations.get(name, -1),
							"value": self.traces[name],
							"units": self.units.get(name, "")}))

	def save(self, outdir, prefix, config_hash=None):
		""" One CSV per field and trace plus a JSON manifest. Returns the list of written files """

		make_directory(outdir)
		written = []
		manifest = {"experiment": self.experiment,
					"config_hash": config_hash,
					"grid": self.grid,
					"units": self.units,
					"meta": self.meta,
					"fields": {}, "traces": {}}

		snapshot_file = os.path.join(outdir, "{0}_snapshots.csv".format(prefix))
		pd.DataFrame({"index": np.arange(len(self.times)), "step": self.steps, "time": self.times}).to_csv(snapshot_file, index=False)
		manifest["snapshots"] = os.path.basename(snapshot_file)
		written.append(snapshot_file)

		for name in self.fields:
			fname = os.path.join(outdir, "{0}_field_{1}.csv".format(prefix, name))
			self._field_frame(name).to_csv(fname, index=False)
			manifest["fields"][name] = os.path.basename(fname)
			written.append(fname)

		for name in self.traces:
			fname = os.path.join(outdir, "{0}_trace_{1}.csv".format(prefix, name))
			self._trace_frame(name).to_csv(fname, index=False)
			manifest["traces"][name] = os.path.basename(fname)
			written.append(fname)

		manifest_file = os.path.join(outdir, "{0}_simulation_manifest.json".format(prefix))
		with open(manifest_file, "w") as f:
			json.dump(manifest, f, indent=4)
		written.append(manifest_file)

		return(written)

	@classmethod
	def load(cls, manifest_file):

		with open(manifest_file) as f:
			manifest = json.load(f)
		indir = os.path.dirname(manifest_file)

		snapshots = pd.read_csv(os.path.join(indir, manifest["snapshots"]))
		fields, stations = {}, {}
		for name, fname in manifest["fields"].items():
			table = pd.read_csv(os.path.join(indir, fname)).sort_values(["index", "station"], kind="stable")
			stations[name] = np.unique(table["station"].to_numpy())
			fields[name] = table["value"].to_numpy(dtype=float).reshape(-1, len(stations[name]))

		traces, trace_stations = {}, {}
		trace_times, trace_steps = None, None
		for name, fname in manifest["traces"].items():
			table = pd.read_csv(os.path.join(indir, fname)).sort_values("index", kind="stable")
			traces[name] = table["value"].to_numpy(dtype=float)
			trace_stations[name] = int(table["station"].iloc[0])
			trace_times = table["time"].to_numpy(dtype=float)
			trace_steps = table["step"].to_numpy(dtype=int)

		tf = cls(experiment=manifest["experiment"], grid=manifest["grid"],
					times=snapshots["time"].to_numpy(dtype=float), steps=snapshots["step"].to_numpy(dtype=int),
					fields=fields, stations=stations, units=manifest["units"],
					traces=traces, trace_times=trace_times, trace_steps=trace_steps, trace_stations=trace_stations,
					meta=manifest["meta"])
		tf.meta["config_hash"] = manifest.get("config_hash")
		return(tf)

#--------------------------------------------------------------------------------------------------#
#--------------------------------------- Phase transformation -------------------------------------#
#--------------------------------------------------------------------------------------------------#

@dataclass
class DoubleWellSpec:
	"""
	f(e) = A (e - e1)^2 (e - e2)^2 + tilt e, shifted so that f(0) = 0.
	value() also accepts graph nodes.
	"""

	height: float = 1.0e8
	well_left: float = 0.0
	well_right: float = 0.01
	tilt: float = 0.0
	strain_range: tuple = (-0.02, 0.04)

	def __post_init__(self):
		self.strain_range = tuple(self.strain_range)
		minima = self.minima()
		if len(minima) != 2:
			raise ConfigError("the double well needs exactly two local minima in {0} (found {1})".format(self.strain_range, len(minima)), "simulation")

	def _raw(self, eps):
		return(self.height * (eps - self.well_left)**2 * (eps - self.well_right)**2 + self.tilt * eps)

	def value(self, eps):
		return(self._raw(eps) - self._raw(0.0))

	def derivative(self, eps):
		a, b = self.well_left, self.well_right
		return(2.0 * self.height * (eps - a) * (eps - b) * (2.0 * eps - a - b) + self.tilt)

	def curvature(self, eps):
		a, b = self.well_left, self.well_right
		return(2.0 * self.height * ((eps - a)**2 + (eps - b)**2 + 4.0 * (eps - a) * (eps - b)))

	def max_curvature(self):
		#curvature is a convex parabola in e; its maximum over an interval sits at an end
		return(float(max(self.curvature(self.strain_range[0]), self.curvature(self.strain_range[1]))))

	def minima(self):
		a, b = self.well_left, self.well_right
		coefficients = 2.0 * self.height * np.array([2.0, -3.0 * (a + b), (a + b)**2 + 2.0 * a * b, -a * b * (a + b)])
		coefficients[-1] += self.tilt
		roots = np.roots(coefficients)
		roots = np.sort(roots[np.abs(roots.imag) < 1e-12].real)
		lo, hi = self.strain_range
		return([float(r) for r in roots if lo <= r <= hi and self.curvature(r) > 0])


@dataclass
class QuadraticSpec:
	""" Single well f(e) = E e^2 / 2 """

	stiffness: float
	strain_range: tuple = (-1.0, 1.0)

	def value(self, eps):
		return(0.5 * self.stiffness * eps**2)

	def derivative(self, eps):
		return(self.stiffness * eps)

	def curvature(self, eps):
		return(self.stiffness + 0.0 * eps)

	def max_curvature(self):
		return(float(self.stiffness))


def simulate_phase(well, viscosity=8.0, length=9.0, pull_velocity=9.5, n_x=150, dt=9e-9, total_time=0.028,
					seed=0, initial_noise=0.0, trace_stride=10, field_stride=1500, logger=None):
	"""
	Viscous bar pulled at one end: eta v_i = [f'(e_{i+1}) - f'(e_i)]/dX on interior nodes,
	u_i <- u_i + dt v_i, u_0 = 0, u_N = v_p t/2.
	Boundary strain and traction are recorded every trace_stride steps, full fields every field_stride steps.
	"""

	dX = length / n_x
	dt_max = viscosity * dX**2 / (2.0 * well.max_curvature())
	if dt > dt_max:
		raise StabilityError("time step {0} exceeds the explicit stability limit {1:.4g}".format(dt, dt_max), "simulation.dt")

	n_steps = int(round(total_time / dt))
	if n_steps < 1:
		raise ConfigError("total_time is shorter than one time step", "simulation.total_time")
	lo, hi = well.strain_range

	u = np.zeros(n_x + 1)
	if initial_noise > 0:
		rng = np.random.default_rng(seed)
		u[1:-1] += initial_noise * dX * rng.standard_normal(n_x - 1)

	n_traces = (n_steps - 1) // trace_stride + 1
	n_fields = (n_steps - 1) // field_stride + 1
	trace_strain = np.empty(n_traces)
	trace_traction = np.empty(n_traces)
	displacement = np.empty((n_fields, n_x + 1))
	strain = np.empty((n_fields, n_x))
	velocity = np.empty((n_fields, n_x - 1))

	progress = Progress(n_steps, logger, prefix="Simulation progress") if logger is not None else None
	report_every = max(1, n_steps // 20)

	inv_dx = 1.0 / dX
	inv_eta_dx = 1.0 / (viscosity * dX)
	for n in range(n_steps):

		eps = np.diff(u) * inv_dx
		stress = well.derivative(eps)
		v = np.diff(stress) * inv_eta_dx

		if n % trace_stride == 0:
			if eps.min() < lo or eps.max() > hi:
				raise NumericError("Strain left the range [{0}, {1}] at step {2}".format(lo, hi, n))
			k = n // trace_stride
			trace_strain[k] = eps[-1]
			trace_traction[k] = stress[-1]

		if n % field_stride == 0:
			k = n // field_stride
			displacement[k] = u
			strain[k] = eps
			velocity[k] = v

		u[1:-1] += dt * v
		u[-1] = pull_velocity * (n + 1) * dt / 2.0

		if progress is not None and n % report_every == 0:
			progress.write(n)

	steps = np.arange(n_fields) * field_stride
	trace_steps = np.arange(n_traces) * trace_stride
	units = {"displacement": "nm", "strain": "1", "velocity": "nm/ns", "strain_bc": "1", "traction": "pN/nm^2"}

	return(TrajectoryField(experiment="phase",
							grid={"n_x": n_x, "dX": dX, "length": length, "periodic": False},
							times=steps * dt, steps=steps,
							fields={"displacement": displacement, "strain": strain, "velocity": velocity},
							stations={"displacement": np.arange(n_x + 1), "strain": np.arange(1, n_x + 1), "velocity": np.arange(1, n_x)},
							units=units,
							traces={"strain_bc": trace_strain, "traction": trace_traction},
							trace_times=trace_steps * dt, trace_steps=trace_steps,
							trace_stations={"strain_bc": n_x, "traction": n_x},
							meta={"scheme": "explicit Euler, central differences",
								"dt": dt, "n_steps": n_steps, "trace_stride": trace_stride, "field_stride": field_stride,
								"stability_limit": dt_max, "seed": seed, "initial_noise": initial_noise,
								"constants": {"viscosity": viscosity, "pull_velocity": pull_velocity,
											"well": {key: getattr(well, key) for key in well.__dataclass_fields__}}}))


class PhaseReference:
	""" Closed forms f(e), f'(e), psi(v) = eta v^2/2, psi'(v) = eta v """

	def __init__(self, well, viscosity):
		self.well = well
		self.viscosity = viscosity

	def free_energy(self, eps):
		return(self.well.value(eps))

	def stress(self, eps):
		return(self.well.derivative(eps))

	def dissipation(self, v):
		return(0.5 * self.viscosity * v**2)

	def dissipation_prime(self, v):
		return(self.viscosity * v)

	def analytic_pair(self):
		return(AnalyticPair("phase", lambda z: self.free_energy(z[0]), lambda z, w: self.dissipation(w[0])))

#--------------------------------------------------------------------------------------------------#
#----------------------------------------- Viscoelasticity ----------------------------------------#
#--------------------------------------------------------------------------------------------------#

@dataclass
class ViscoMaterial:
	""" Isotropic viscoelastic solid with a Prony series of Maxwell elements, reduced to 1D """

	youngs_modulus: float = 7.5e5
	poisson_ratio: float = 0.49
	density: float = 970.0
	viscous_moduli: tuple = (7.5e4,)
	relaxation_times: tuple = (0.01,)

	def __post_init__(self):
		self.viscous_moduli = np.atleast_1d(np.asarray(self.viscous_moduli, dtype=float))
		self.relaxation_times = np.atleast_1d(np.asarray(self.relaxation_times, dtype=float))
		if self.viscous_moduli.shape != self.relaxation_times.shape:
			raise ConfigError("need one relaxation time per viscous modulus", "simulation.relaxation_times")

	@property
	def n_elements(self):
		return(len(self.viscous_moduli))

	@property
	def bulk_modulus(self):
		return(self.youngs_modulus / (3.0 * (1.0 - 2.0 * self.poisson_ratio)))

	@property
	def shear_modulus(self):
		return(self.youngs_modulus / (2.0 * (1.0 + self.poisson_ratio)))

	@property
	def theta(self):
		return(1.0 + (self.shear_modulus + self.viscous_moduli.sum()) / (3.0 * self.bulk_modulus))

	@property
	def modulus_1d(self):
		return(3.0 * self.shear_modulus / self.theta)

	@property
	def viscous_moduli_1d(self):
		return(3.0 * self.viscous_moduli / self.theta)

	@property
	def viscosities_1d(self):
		return(3.0 * self.viscous_moduli * self.relaxation_times)

	@property
	def wave_speed(self):
		return(float(np.sqrt((self.modulus_1d + self.viscous_moduli_1d.sum()) / self.density)))

	def constants(self):
		return({"youngs_modulus": self.youngs_modulus, "poisson_ratio": self.poisson_ratio, "density": self.density,
				"viscous_moduli": self.viscous_moduli.tolist(), "relaxation_times": self.relaxation_times.tolist(),
				"bulk_modulus": self.bulk_modulus, "shear_modulus": self.shear_modulus, "theta": self.theta,
				"modulus_1d": self.modulus_1d, "viscous_moduli_1d": self.viscous_moduli_1d.tolist(),
				"viscosities_1d": self.viscosities_1d.tolist(), "wave_speed": self.wave_speed})


class ViscoReference:
	"""
	Reduced 1D potentials of the viscoelastic solid. Every method works on numpy arrays and on graph nodes;
	viscous strains and rates are given as one entry per Maxwell element.
	"""

	def __init__(self, material):
		self.material = material

	def stress(self, eps, viscous_strains):
		m = self.material
		sigma = m.modulus_1d * eps
		for modulus, epsv in zip(m.viscous_moduli_1d, viscous_strains):
			sigma = sigma + modulus * (eps - epsv)
		return(sigma)

	def free_energy(self, eps, viscous_strains):
		m = self.material
		f = 0.5 * m.theta * m.modulus_1d * eps**2
		for modulus, epsv in zip(m.viscous_moduli_1d, viscous_strains):
			f = f + 0.5 * m.theta * modulus * (eps - epsv)**2
		sigma = self.stress(eps, viscous_strains)
		return(f - m.theta / (18.0 * m.bulk_modulus) * sigma**2)

	def viscous_stresses(self, eps, viscous_strains):
		""" df/d(ev_a) = -3 Gv_a (e - ev_a) + Gv_a sigma / 3K, per element """
		m = self.material
		sigma = self.stress(eps, viscous_strains)
		return([-3.0 * modulus * (eps - epsv) + modulus / (3.0 * m.bulk_modulus) * sigma
				for modulus, epsv in zip(m.viscous_moduli, viscous_strains)])

	def dissipation(self, rates):
		psi = 0.0
		for viscosity, rate in zip(self.material.viscosities_1d, rates):
			psi = psi + 0.5 * viscosity * rate**2
		return(psi)

	def dissipation_prime(self, rates):
		return([viscosity * rate for viscosity, rate in zip(self.material.viscosities_1d, rates)])

	def viscous_strain_rates(self, eps, viscous_strains):
		""" Stationarity of the internal variables: psi'(rate) + df/d(ev) = 0 """
		m = self.material
		sigma = self.stress(eps, viscous_strains)
		return([(eps - epsv - sigma / (9.0 * m.bulk_modulus)) / tau for epsv, tau in zip(viscous_strains, m.relaxation_times)])

	def analytic_pair(self):
		if self.material.n_elements != 1:
			raise ValueError("The viscoelastic potential pair is defined for a single Maxwell element")
		return(AnalyticPair("visco", lambda z: self.free_energy(z[0], [z[1]]), lambda z, w: self.dissipation([w[0]])))


def reference_visco_potentials(material):
	return(ViscoReference(material))


def chirp_displacement(amplitude=0.01, start_frequency=1.0, sweep_rate=9.0):
	""" u(t) = A [1 - cos(2 pi (f0 + k t) t)] """
	return(lambda t: amplitude * (1.0 - np.cos(2.0 * np.pi * (start_frequency + sweep_rate * t) * t)))


def simulate_visco_1d(material, length=1.0, n_x=250, dt=1e-4, output_dt=1e-3, total_time=1.0,
						bc_displacement=None, initial_displacement=None, logger=None):
	"""
	rho a = d(sigma)/dX on a bar fixed at X=0 with prescribed displacement at X=L.
	The wave part is integrated with velocity Verlet at dt; the internal variables are advanced with
	forward Euler once per output step, so the recorded forward-difference rates are the rates used.
	"""

	dX = length / n_x
	dt_max = dX / material.wave_speed
	if dt > dt_max:
		raise StabilityError("time step {0} exceeds the CFL limit {1:.4g}".format(dt, dt_max), "simulation.dt")

	substeps = int(round(output_dt / dt))
	if substeps < 1 or abs(substeps * dt - output_dt) > 1e-9 * output_dt:
		raise ConfigError("output_dt must be an integer multiple of dt", "simulation.output_dt")
	n_out = int(round(total_time / output_dt))

	bc = bc_displacement if bc_displacement is not None else (lambda t: 0.0)
	X = np.linspace(0.0, length, n_x + 1)
	u = np.zeros(n_x + 1) if initial_displacement is None else np.asarray(initial_displacement(X), dtype=float).copy()
	u[0] = 0.0
	u[-1] = bc(0.0)
	vel = np.zeros(n_x + 1)

	n_alpha = material.n_elements
	E = material.modulus_1d
	E_alpha = material.viscous_moduli_1d[:, None]
	tau = material.relaxation_times[:, None]
	K = material.bulk_modulus
	rho = material.density
	epsv = np.zeros((n_alpha, n_x))

	def stress_of(u):
		eps = np.diff(u) / dX
		return(eps, E * eps + (E_alpha * (eps - epsv)).sum(axis=0))

	def acceleration_of(sigma):
		acc = np.zeros(n_x + 1)
		acc[1:-1] = np.diff(sigma) / (rho * dX)
		return(acc)

	rec = {"displacement": np.empty((n_out + 1, n_x + 1)),
			"velocity": np.empty((n_out + 1, n_x + 1)),
			"strain": np.empty((n_out + 1, n_x)),
			"stress": np.empty((n_out + 1, n_x)),
			"acceleration": np.empty((n_out + 1, n_x - 1))}
	viscous = np.empty((n_out + 1, n_alpha, n_x))

	progress = Progress(n_out, logger, prefix="Simulation progress") if logger is not None else None
	for n in range(n_out + 1):

		eps, sigma = stress_of(u)
		acc = acceleration_of(sigma)
		rec["displacement"][n] = u
		rec["velocity"][n] = vel
		rec["strain"][n] = eps
		rec["stress"][n] = sigma
		rec["acceleration"][n] = acc[1:-1]
		viscous[n] = epsv

		if not np.all(np.isfinite(sigma)):
			raise NumericError("Non-finite stress at output step {0}".format(n))
		if n == n_out:
			break

		rate = (eps[None, :] - sigma[None, :] / (9.0 * K) - epsv) / tau

		for s in range(substeps):
			k = n * substeps + s
			vel_half = vel + 0.5 * dt * acc
			u = u + dt * vel_half
			u[0] = 0.0
			u[-1] = bc((k + 1) * dt)
			acc = acceleration_of(stress_of(u)[1])
			vel = vel_half + 0.5 * dt * acc
			vel[0] = 0.0
			vel[-1] = (u[-1] - bc(k * dt)) / dt

		epsv = epsv + output_dt * rate

		if progress is not None and n % max(1, n_out // 20) == 0:
			progress.write(n)

	fields = dict(rec)
	stations = {"displacement": np.arange(n_x + 1), "velocity": np.arange(n_x + 1), "strain": np.arange(1, n_x + 1),
				"stress": np.arange(1, n_x + 1), "acceleration": np.arange(1, n_x)}
	units = {"displacement": "m", "velocity": "m/s", "strain": "1", "stress": "Pa", "acceleration": "m/s^2",
			"strain_bc": "1", "traction": "Pa"}

	traces = {"strain_bc": rec["strain"][:, -1].copy(), "traction": rec["stress"][:, -1].copy()}
	rates = np.diff(viscous, axis=0) / output_dt
	for alpha in range(n_alpha):
		suffix = "" if n_alpha == 1 else "_{0}".format(alpha + 1)
		for name, values in (("viscous_strain", viscous[:, alpha]), ("viscous_strain_rate", rates[:, alpha])):
			fields[name + suffix] = values
			stations[name + suffix] = np.arange(1, n_x + 1)
			units[name + suffix] = "1" if name == "viscous_strain" else "1/s"
		traces["viscous_strain_bc" + suffix] = viscous[:, alpha, -1].copy()
		units["viscous_strain_bc" + suffix] = "1"

	steps = np.arange(n_out + 1) * substeps
	return(TrajectoryField(experiment="visco",
							grid={"n_x": n_x, "dX": dX, "length": length, "periodic": False},
							times=np.arange(n_out + 1) * output_dt, steps=steps,
							fields=fields, stations=stations, units=units,
							traces=traces, trace_times=np.arange(n_out + 1) * output_dt, trace_steps=steps,
							trace_stations={name: n_x for name in traces},
							meta={"scheme": "velocity Verlet (wave), forward Euler per output step (internal variables)",
								"dt": dt, "output_dt": output_dt, "substeps": substeps, "cfl_limit": dt_max,
								"rate_definition": "forward difference of stored viscous strain",
								"constants": material.constants()}))

#--------------------------------------------------------------------------------------------------#
#-------------------------------------------- Diffusion -------------------------------------------#
#--------------------------------------------------------------------------------------------------#

DIFFUSION_MODELS = ("linear", "nonlinear")

def initial_concentration(X, c_mean=0.5, c_amplitude=0.49, wavenumber=2):
	return(c_mean + c_amplitude * np.sin(2.0 * np.pi * wavenumber * X))

def diffusion_flux(c, dX, model, c_max=C_MAX):
	""" Flux at faces i+1/2 with the physical sign (j = -grad of the driving quantity) """

	if model == "linear":
		return(-(np.roll(c, -1) - c) / dX)
	elif model == "nonlinear":
		m = invert_m_array(c, c_max)
		m_next = np.roll(m, -1)
		m_face = 0.5 * (m + m_next)
		return(-m_face * (np.log(2.0 * m_next) - np.log(2.0 * m)) / dX)
	raise ValueError("Unknown diffusion model '{0}'".format(model))

def diffusion_step(c, dt, dX, model, c_max=C_MAX):
	""" One conservative FTCS step on a periodic grid. Returns (c_next, flux used) """
	j = diffusion_flux(c, dX, model, c_max)
	return(c - dt * (j - np.roll(j, 1)) / dX, j)


def simulate_diffusion(model, n_x=99, dt=2.55e-5, total_time=0.025, n_snapshots=201, initial=None,
						c_max=C_MAX, logger=None):

	if model not in DIFFUSION_MODELS:
		raise ConfigError("unknown diffusion model '{0}'".format(model), "experiment")

	dX = 1.0 / n_x
	X = np.arange(n_x) * dX
	c = initial_concentration(X) if initial is None else np.asarray(initial(X), dtype=float) * np.ones(n_x)

	max_diffusivity = 1.0 if model == "linear" else float(np.max(dm_dc(c, c_max)))
	dt_max = dX**2 / (2.0 * max_diffusivity)
	if dt > dt_max:
		raise StabilityError("time step {0} exceeds the FTCS stability limit {1:.4g}".format(dt, dt_max), "simulation.dt")

	n_steps = int(round(total_time / dt))
	snapshot_steps = np.unique(np.round(np.linspace(0, n_steps, n_snapshots)).astype(int))
	concentration = np.empty((len(snapshot_steps), n_x))
	flux = np.empty((len(snapshot_steps), n_x))

	k = 0
	progress = Progress(n_steps, logger, prefix="Simulation progress") if logger is not None else None
	for step in range(n_steps + 1):
		try:
			c_next, j = diffusion_step(c, dt, dX, model, c_max)
		except NumericError as e:
			raise NumericError("Diffusion simulation failed at step {0}: {1}".format(step, e))

		if k < len(snapshot_steps) and step == snapshot_steps[k]:
			concentration[k] = c
			flux[k] = j
			k += 1
		c = c_next

		if progress is not None and step % max(1, n_steps // 20) == 0:
			progress.write(step)

	experiment = "diffusion-{0}".format(model)
	return(TrajectoryField(experiment=experiment,
							grid={"n_x": n_x, "dX": dX, "length": 1.0, "periodic": True},
							times=snapshot_steps * dt, steps=snapshot_steps,
							fields={"concentration": concentration, "flux": flux},
							stations={"concentration": np.arange(n_x), "flux": np.arange(n_x)},
							units={"concentration": "1", "flux": "1"},
							meta={"scheme": "conservative FTCS, periodic", "dt": dt, "n_steps": n_steps,
								"stability_limit": dt_max, "model": model,
								"flux_sign": "j[i] is the flux at face i+1/2, j = -(stencil gradient)",
								"face_mobility": "arithmetic mean" if model == "nonlinear" else None}))

def simulate_diffusion_linear(n_x=99, dt=2.55e-5, total_time=0.025, initial=None, n_snapshots=201, logger=None):
	return(simulate_diffusion("linear", n_x=n_x, dt=dt, total_time=total_time, n_snapshots=n_snapshots, initial=initial, logger=logger))

def simulate_diffusion_nonlinear(n_x=99, dt=1.01e-5, total_time=0.025, initial=None, n_snapshots=201, c_max=C_MAX, logger=None):
	return(simulate_diffusion("nonlinear", n_x=n_x, dt=dt, total_time=total_time, n_snapshots=n_snapshots, initial=initial, c_max=c_max, logger=logger))


class DiffusionReference:
	"""
	linear:    f = (c log c - c)/beta,                        psi = j^2/(2 beta c)
	nonlinear: f = [c log(2m) - log I0(2 sqrt(2m))]/beta,      psi = j^2/(2 beta m),  m = m(c)
	psihat = psi/f'' = j^2/2 (linear), j^2/(2 m'(c)) (nonlinear)
	"""

	def __init__(self, model, beta=1.0, c_max=C_MAX):
		if model not in DIFFUSION_MODELS:
			raise ValueError("Unknown diffusion model '{0}'".format(model))
		self.model = model
		self.beta = beta
		self.c_max = c_max

	def free_energy(self, c):
		c = np.asarray(c, dtype=float)
		if self.model == "linear":
			return((c * np.log(c) - c) / self.beta)
		m = invert_m_array(c, self.c_max)
		x = 2.0 * np.sqrt(2.0 * m)
		return((c * np.log(2.0 * m) - (np.log(i0e(x)) + x)) / self.beta)

	def chemical_potential(self, c):
		c = np.asarray(c, dtype=float)
		if self.model == "linear":
			return(np.log(c) / self.beta)
		return(np.log(2.0 * invert_m_array(c, self.c_max)) / self.beta)

	def curvature(self, c):
		""" f''(c) """
		c = np.asarray(c, dtype=float)
		if self.model == "linear":
			return(1.0 / (self.beta * c))
		m = invert_m_array(c, self.c_max)
		return(dm_dc(c, self.c_max) / (self.beta * m))

	def dissipation(self, c, j):
		c = np.asarray(c, dtype=float)
		mobility = c if self.model == "linear" else invert_m_array(c, self.c_max)
		return(np.asarray(j)**2 / (2.0 * self.beta * mobility))

	def dissipation_prime(self, c, j):
		""" dpsi/dj """
		c = np.asarray(c, dtype=float)
		mobility = c if self.model == "linear" else invert_m_array(c, self.c_max)
		return(np.asarray(j) / (self.beta * mobility))

	def psihat(self, c, j):
		c, j = np.broadcast_arrays(np.asarray(c, dtype=float), np.asarray(j, dtype=float))
		if self.model == "linear":
			return(0.5 * j**2)
		return(j**2 / (2.0 * dm_dc(c, self.c_max)))

	def analytic_pair(self):
		""" Graph form of the linear pair """
		if self.model != "linear":
			raise ValueError("Only the linear diffusion pair has a graph form")
		beta = self.beta
		return(AnalyticPair("diffusion-linear",
							lambda z: (z[0] * log_node(z[0]) - z[0]) * (1.0 / beta),
							lambda z, w: w[0] * w[0] / (2.0 * beta * z[0])))


def reference_diffusion_potentials(model, beta=1.0, c_max=C_MAX):
	return(DiffusionReference(model, beta=beta, c_max=c_max))

def reference_diffusion_psihat(model, c_max=C_MAX):
	""" psihat(c, j) of a diffusion model """
	return(DiffusionReference(model, c_max=c_max).psihat)
