import numpy as np
import pytest
from scipy.special import iv

from thermopot.utils.diffcore import NumericError
from thermopot.utils.bessel import C_MAX, c_of_m, dc_dm, invert_m, invert_m_array, dm_dc


def test_relation_against_unscaled_bessel_functions():
	m = np.array([0.01, 0.1, 0.5, 1.0])
	s = np.sqrt(2.0 * m)
	np.testing.assert_allclose(c_of_m(m), s * iv(1, 2 * s) / iv(0, 2 * s), rtol=1e-13)


def test_small_m_series_is_continuous():
	below, above = c_of_m(0.999e-8), c_of_m(1.001e-8)
	assert below == pytest.approx(2 * 0.999e-8, rel=1e-7)
	assert above == pytest.approx(2 * 1.001e-8, rel=1e-7)


def test_relation_is_increasing():
	m = np.linspace(0.0, 3.0, 3001)
	assert np.all(np.diff(c_of_m(m)) > 0)


def test_derivative_against_finite_differences():
	m = np.array([1e-4, 0.05, 0.3, 1.5])
	h = 1e-7 * m
	numeric = (c_of_m(m + h) - c_of_m(m - h)) / (2 * h)
	np.testing.assert_allclose(dc_dm(m), numeric, rtol=1e-6)


def test_array_inversion():
	c = np.linspace(1e-6, C_MAX - 1e-3, 500)
	m = invert_m_array(c)
	np.testing.assert_allclose(c_of_m(m), c, rtol=1e-11, atol=1e-13)


@pytest.mark.parametrize("c", [1e-5, 0.01, 0.5, 1.1])
def test_scalar_and_array_inversion_agree(c):
	assert invert_m_array(np.array([c]))[0] == pytest.approx(invert_m(c), rel=1e-10)


def test_inverse_derivative():
	c = np.array([0.1, 0.5, 0.9])
	h = 1e-6
	numeric = (invert_m_array(c + h) - invert_m_array(c - h)) / (2 * h)
	np.testing.assert_allclose(dm_dc(c), numeric, rtol=1e-6)


@pytest.mark.parametrize("c", [0.0, -0.1, C_MAX, 2.0, np.nan])
def test_out_of_range_concentration(c):
	with pytest.raises(NumericError):
		invert_m_array(np.array([0.5, c]))
	with pytest.raises(NumericError):
		invert_m(c)
