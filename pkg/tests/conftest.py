import numpy as np
import pytest

from thermopot.tools.simulate_functions import DoubleWellSpec, simulate_phase, simulate_diffusion
from thermopot.tools.preprocess_functions import build_dataset


@pytest.fixture(scope="session")
def well():
	return(DoubleWellSpec())


@pytest.fixture(scope="session")
def phase_trajectory(well):
	""" Short pull of a 20-element bar; fields every 100 steps, traces every 10 """
	return(simulate_phase(well, n_x=20, dt=5e-7, total_time=0.01, trace_stride=10, field_stride=100))


@pytest.fixture(scope="session")
def phase_dataset(phase_trajectory):
	return(build_dataset(phase_trajectory, "phase", "phase-space", 0.8, seed=1, target_count=300, coarse_stride=1000))


@pytest.fixture(scope="session")
def diffusion_trajectory():
	return(simulate_diffusion("linear", n_x=20, dt=1e-3, total_time=0.05, n_snapshots=11))


@pytest.fixture(scope="session")
def diffusion_dataset(diffusion_trajectory):
	return(build_dataset(diffusion_trajectory, "diffusion-linear", "random", 0.8, seed=1))


@pytest.fixture
def rng():
	return(np.random.default_rng(12345))
