"""Closed-form effective quantities for the vanishing-roughness-speed limit.

In this regime the cell problems collapse to one ODE in z1 whose solution is
explicit, so every coefficient reduces to a periodic integral over the wall
profile: a0 and b0 for velocity and microrotation, c0 for temperature.  All
integrals use adaptive Gauss-Kronrod quadrature at 1e-12 absolute tolerance.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import NonPositiveA0Warning, OutOfDomain, QuadratureFailure
from .geometry import RoughnessProfile

QUAD_ABS_TOL = 1e-12
# accept anything comfortably below the 1e-10 oracle-agreement budget
_ERR_CEILING = 1e-11


@dataclass
class SubcriticalCoefficients:
    """All closed-form coefficients plus the intermediate profile integrals."""

    a0: float
    b0: float
    c0: float
    int_h3: float
    int_h6: float
    int_h2G: float
    pi_prime: object            # callable z1 -> d/dz1 of the cell pressure
    harmonic_a: float = 0.0     # labeled diagnostic: (integral of h^-3)^-1 / 12


def _integrate(fn, profile: RoughnessProfile | None = None) -> float:
    """Periodic integral over (-1/2, 1/2) with sample knots as breakpoints."""
    points = None
    if profile is not None and profile.kind == "tabulated":
        m = len(profile.payload["samples"])
        if m <= 400:
            points = (-0.5 + np.arange(1, m) / m).tolist()
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(fn, -0.5, 0.5, epsabs=QUAD_ABS_TOL,
                                      epsrel=QUAD_ABS_TOL, limit=800,
                                      points=points)
        except QuadratureFailure:
            raise
        except Exception as exc:
            raise QuadratureFailure(f"adaptive quadrature failed: {exc}") from exc
    if not np.isfinite(val) or err > _ERR_CEILING:
        raise QuadratureFailure(
            f"quadrature error estimate {err:.2e} exceeds {_ERR_CEILING:.0e}")
    return float(val)


def _int_h_power(profile: RoughnessProfile, power: int) -> float:
    return _integrate(lambda z: profile.h(z) ** power, profile)


def compute_pi_prime(profile: RoughnessProfile):
    """Derivative of the periodic cell pressure: 1 - h^3(z1) / (integral of h^3).

    The returned callable is vectorized.  Its zero mean (periodicity of the
    pressure itself) is verified to 1e-10 before returning.
    """
    j3 = _int_h_power(profile, 3)

    def pi_prime(z1):
        return 1.0 - np.asarray(profile.h(z1), dtype=float) ** 3 / j3

    mean = _integrate(pi_prime, profile)
    if abs(mean) > 1e-10:
        raise QuadratureFailure(
            f"pressure-derivative mean {mean:.3e} violates periodicity")
    return pi_prime


def pi_prime_ode_residual(profile: RoughnessProfile, n_points: int = 1000) -> float:
    """Max-norm residual of h^3 q' - 3 h^2 h' q + 3 h^2 h' = 0 for q = pi_prime.

    q' is analytic: q = 1 - h^3/J3 gives q' = -3 h^2 h' / J3.
    """
    j3 = _int_h_power(profile, 3)
    z = np.linspace(-0.5, 0.5, n_points)
    h = np.asarray(profile.h(z), dtype=float)
    dh = np.asarray(profile.dh(z), dtype=float)
    q = 1.0 - h ** 3 / j3
    dq = -3.0 * h ** 2 * dh / j3
    return float(np.max(np.abs(h ** 3 * dq - 3 * h ** 2 * dh * q + 3 * h ** 2 * dh)))


def compute_a0(profile: RoughnessProfile) -> float:
    """Velocity coefficient (1/12)(2 J3 - J6/J3) with J_p the h^p integrals."""
    j3 = _int_h_power(profile, 3)
    j6 = _int_h_power(profile, 6)
    a0 = (2.0 * j3 - j6 / j3) / 12.0
    if a0 <= 0.0:
        warnings.warn(
            f"effective velocity coefficient a0 = {a0:.6e} is not positive; "
            "the closed form does not guarantee positivity for strongly "
            "peaked walls", NonPositiveA0Warning, stacklevel=2)
    return a0


def compute_b0(profile: RoughnessProfile) -> float:
    """Microrotation coefficient: one twelfth of the h^3 integral."""
    return _int_h_power(profile, 3) / 12.0


def compute_c0(profile: RoughnessProfile, G) -> float:
    """Temperature coefficient: half the integral of h^2(z1) G(z1)."""
    return 0.5 * _integrate(
        lambda z: float(profile.h(z)) ** 2 * float(G(z)), profile)


def harmonic_mean_coefficient(profile: RoughnessProfile) -> float:
    """Diagnostic only: the Reynolds-closure value (integral of h^-3)^-1 / 12.

    Reported next to a0 so the two closures can be compared; never used in
    any model output.
    """
    return 1.0 / (12.0 * _int_h_power(profile, -3))


def compute_coefficients(profile: RoughnessProfile, G=None) -> SubcriticalCoefficients:
    """Evaluate every subcritical coefficient in one pass."""
    if G is None:
        G = lambda z: np.ones_like(np.asarray(z, dtype=float))
    j3 = _int_h_power(profile, 3)
    j6 = _int_h_power(profile, 6)
    a0 = (2.0 * j3 - j6 / j3) / 12.0
    if a0 <= 0.0:
        warnings.warn(
            f"effective velocity coefficient a0 = {a0:.6e} is not positive",
            NonPositiveA0Warning, stacklevel=2)
    int_h2g = _integrate(lambda z: float(profile.h(z)) ** 2 * float(G(z)), profile)
    return SubcriticalCoefficients(
        a0=a0, b0=j3 / 12.0, c0=0.5 * int_h2g,
        int_h3=j3, int_h6=j6, int_h2G=int_h2g,
        pi_prime=compute_pi_prime(profile),
        harmonic_a=harmonic_mean_coefficient(profile),
    )


def subcritical_cell_fields(profile: RoughnessProfile, z, pi_prime=None,
                            k: float = 1.0, G=None):
    """Closed-form cell fields at one point z = (z1, z2).

    Returns (u_bl, w_bl, T_hat):
        u_bl  = (1/2)(1 + pi_prime(z1)) (z2^2 - h z2)
        w_bl  = -(1/2)(z2^2 - h z2)
        T_hat = k G(z1) z2
    Raises OutOfDomain unless 0 <= z2 <= h(z1).
    """
    z1, z2 = float(z[0]), float(z[1])
    h = float(profile.h(z1))
    if not (0.0 <= z2 <= h * (1.0 + 1e-12)):
        raise OutOfDomain(f"z2 = {z2} outside [0, h(z1) = {h}]")
    if pi_prime is None:
        pi_prime = compute_pi_prime(profile)
    if G is None:
        G = lambda s: 1.0
    parab = z2 * z2 - h * z2
    u_bl = 0.5 * (1.0 + float(pi_prime(z1))) * parab
    w_bl = -0.5 * parab
    t_hat = k * float(G(z1)) * z2
    return u_bl, w_bl, t_hat
