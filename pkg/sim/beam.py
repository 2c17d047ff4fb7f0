"""
Multimode VCSEL beam model.

Laguerre-Gaussian mode intensities, beam-radius propagation and the power
collected by a small detector aperture. Factorials go through log-gamma so
high-order modes neither overflow nor lose integer precision.
"""

import math

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .errors import ConfigError, OutOfRangeError
from .models import VcselParams

# Highest supported p + l
MAX_MODE_ORDER = 60


def _check_order(p: int, l: int) -> None:
    if p < 0 or l < 0:
        raise ConfigError(f"mode orders must be nonnegative, got p={p}, l={l}")
    if p + l > MAX_MODE_ORDER:
        raise OutOfRangeError(f"mode order p + l = {p + l} exceeds {MAX_MODE_ORDER}")


def laguerre_poly(p: int, l: int, x):
    """
    Generalized Laguerre polynomial L_p^l(x).

    Evaluates sum_m (-1)^m (p+l)! / ((p-m)! (l+m)! m!) x^m with
    log-gamma coefficients.

    Args:
        p: Radial order
        l: Azimuthal order
        x: Scalar or array argument

    Returns:
        Polynomial value, same shape as x
    """
    _check_order(p, l)
    m = np.arange(p + 1)
    log_c = gammaln(p + l + 1) - gammaln(p - m + 1) - gammaln(l + m + 1) - gammaln(m + 1)
    coeffs = np.where(m % 2 == 0, 1.0, -1.0) * np.exp(log_c)
    value = np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), coeffs)
    return float(value) if np.ndim(value) == 0 else value


def beam_radius(params: VcselParams, d) -> float:
    """
    Beam radius w(d) at distance d from the waist.

    w(d) = w0 sqrt(1 + (M^2 lambda d / (pi n w0^2))^2); with M^2 = 1 this is
    the ideal Gaussian propagation law.
    """
    d_arr = np.asarray(d, dtype=float)
    if np.any(d_arr < 0):
        raise ConfigError("distance must be nonnegative")
    zr = math.pi * params.refractive_index * params.w0**2 / (params.m_squared * params.wavelength)
    w = params.w0 * np.sqrt(1.0 + (d_arr / zr) ** 2)
    return float(w) if np.ndim(w) == 0 else w


def mode_norm_const(p: int, l: int, w0: float) -> float:
    """Normalization constant A_p^l = (1/w0) sqrt(2 p! / (pi (p+l)!))."""
    _check_order(p, l)
    if w0 <= 0:
        raise ConfigError("w0 must be positive")
    return math.sqrt(2.0 * math.exp(gammaln(p + 1) - gammaln(p + l + 1)) / math.pi) / w0


def mode_intensity(params: VcselParams, p: int, l: int, r, z):
    """
    Intensity |u_pl(r, z)|^2 per watt of mode power (W/m^2 per W).

    Integrates to one over the transverse plane for every z.
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ConfigError("radial distance must be nonnegative")
    w = beam_radius(params, z)
    a = mode_norm_const(p, l, params.w0)
    t = 2.0 * r_arr**2 / w**2
    lag = laguerre_poly(p, l, t)
    value = a**2 * (params.w0 / w) ** 2 * t**l * np.square(lag) * np.exp(-t)
    return float(value) if np.ndim(value) == 0 else value


def radial_power_density(params: VcselParams, r, z):
    """Radial power density P sum a_pl |u_pl(r, z)|^2 in W/m^2."""
    total = sum(a * mode_intensity(params, p, l, r, z) for p, l, a in params.mode_coeffs)
    return params.total_optical_power * total


def power_on_aperture(
    params: VcselParams,
    axial_dist: float,
    radial_offset: float,
    aperture_area: float,
    incidence: float,
) -> float:
    """
    Optical power collected by a small aperture.

    Small-aperture approximation: intensity at the detector center times
    the projected area.

    Args:
        params: Transmitter parameters
        axial_dist: Distance along the beam axis in meters
        radial_offset: Distance from the beam axis in meters
        aperture_area: Detector area in square meters
        incidence: Angle of incidence in degrees

    Returns:
        Received optical power in watts (0 for back-facing detectors)
    """
    if axial_dist <= 0:
        raise ConfigError("axial distance must be positive")
    if aperture_area < 0:
        raise ConfigError("aperture area must be nonnegative")
    if incidence >= 90.0:
        return 0.0
    density = radial_power_density(params, radial_offset, axial_dist)
    return float(density) * aperture_area * math.cos(math.radians(incidence))


def power_on_aperture_exact(
    params: VcselParams,
    axial_dist: float,
    radial_offset: float,
    aperture_area: float,
    incidence: float,
) -> float:
    """
    Aperture power by quadrature of the density over the detector disk.

    Reference for the small-aperture approximation; not used on the hot path.
    """
    if axial_dist <= 0:
        raise ConfigError("axial distance must be positive")
    if incidence >= 90.0 or aperture_area == 0.0:
        return 0.0
    radius = math.sqrt(aperture_area / math.pi)

    def integrand(theta: float, s: float) -> float:
        rho = math.sqrt(max(0.0, radial_offset**2 + s**2 + 2.0 * radial_offset * s * math.cos(theta)))
        return float(radial_power_density(params, rho, axial_dist)) * s

    value, _ = integrate.dblquad(integrand, 0.0, radius, 0.0, 2.0 * math.pi, epsabs=0.0, epsrel=1e-10)
    return value * math.cos(math.radians(incidence))
