#!/usr/bin/env python

"""
Bessel: the mean-density relation c(m) = s I1(2s)/I0(2s), s = sqrt(2m), of the nonlinear diffusion model,
its derivative and its inverse m(c)

@license: MIT
"""

import numpy as np
from scipy.special import i0e, i1e
from scipy.optimize import brentq

from thermopot.utils.diffcore import NumericError

C_MAX = 1.2
SERIES_LIMIT = 1e-8			#below this m the series c = 2m - 2m^2 is used

#--------------------------------------------------------------------------------------------------#

def bessel_ratio(x):
	""" I1(x)/I0(x); exponentially scaled functions cancel the growth of both """
	x = np.asarray(x, dtype=float)
	return(i1e(x) / i0e(x))

def c_of_m(m):
	m = np.asarray(m, dtype=float)
	s = np.sqrt(2.0 * m)
	c = s * bessel_ratio(2.0 * s)
	return(np.where(m < SERIES_LIMIT, 2.0 * m - 2.0 * m**2, c))

def dc_dm(m):
	""" c'(m) = [R(2s) + 2s R'(2s)]/s with R' = 1 - R/x - R^2 """

	m = np.asarray(m, dtype=float)
	small = m < SERIES_LIMIT
	m_safe = np.where(small, 1.0, m)

	s = np.sqrt(2.0 * m_safe)
	x = 2.0 * s
	R = bessel_ratio(x)
	dR = 1.0 - R / x - R**2
	derivative = (R + x * dR) / s
	return(np.where(small, 2.0 - 4.0 * m, derivative))

def _upper_bracket(c_max):
	""" m with c(m) > c_max (c grows like sqrt(2m) - 1/4) """
	return(0.5 * (c_max + 1.0)**2)

#--------------------------------------------------------------------------------------------------#

def _check_range(c, c_max):
	c = np.asarray(c, dtype=float)
	if np.any(~(c > 0)) or np.any(~(c < c_max)):
		bad = c[~((c > 0) & (c < c_max))]
		raise NumericError("Concentration {0} outside the invertible range (0, {1})".format(bad.ravel()[0], c_max))
	return(c)

def invert_m(c, c_max=C_MAX):
	""" m such that c(m) = c, by bracketed root finding on the monotone relation """

	c = float(_check_range(c, c_max))
	m_hi = _upper_bracket(c_max)
	m = brentq(lambda m: float(c_of_m(m)) - c, 0.0, m_hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
	return(m)

def invert_m_array(c, c_max=C_MAX, tol=1e-12):
	"""
	Vectorized inversion: table lookup followed by Newton iterations on c(m) - c.
	Entries that do not converge to tol fall back to invert_m.
	"""

	c = _check_range(c, c_max)
	m_hi = _upper_bracket(c_max)

	m_grid = np.linspace(0.0, m_hi, 4001)
	m = np.interp(c, c_of_m(m_grid), m_grid)
	for _ in range(8):
		m = m - (c_of_m(m) - c) / dc_dm(m)
		m = np.clip(m, 1e-300, m_hi)

	failed = np.abs(c_of_m(m) - c) >= tol
	if np.any(failed):
		flat = m.reshape(-1) if m.ndim > 0 else m.reshape(1)
		for idx in np.flatnonzero(failed.reshape(-1)):
			flat[idx] = invert_m(np.asarray(c).reshape(-1)[idx], c_max)
		m = flat.reshape(np.shape(c))
	return(m)

def dm_dc(c, c_max=C_MAX):
	""" m'(c) = 1/c'(m(c)) """
	return(1.0 / dc_dm(invert_m_array(c, c_max)))
