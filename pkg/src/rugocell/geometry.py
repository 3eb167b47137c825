"""Periodic wall profiles and the terrain-following cell discretization.

The reference cell is the region between a flat bottom wall and a periodic
upper wall z2 = h(z1), with z1 ranging over the unit period (-1/2, 1/2).
All solvers work in mapped coordinates (xi, eta) = (z1, z2/h(z1)), which
flatten the cell onto the unit square.  This module owns the profile
representation, the structured mesh with its metric arrays, and the
second-order quadrature used for every cell integral.

Grid conventions
----------------
xi_node[i]  = -1/2 + i*d1   for i = 0..n1-1   (periodic; node n1 wraps to 0)
xi_cent[i]  = xi_node[i] + d1/2
eta_node[j] = j*d2          for j = 0..n2
eta_cent[j] = (j + 1/2)*d2  for j = 0..n2-1

Physical coordinates: z1 = xi, z2 = eta*h(xi).  A field sampled at
(xi_node, eta_cent) has shape (n1, n2); a field sampled at every node
(xi_node, eta_node) has shape (n1, n2+1); a field on interior horizontal
edges (xi_cent, eta_node interior) has shape (n1, n2-1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from .errors import BadResolution, NonPositiveGap, ShapeMismatch, TooFewSamples

_PERIOD_LEFT = -0.5
_PERIOD_RIGHT = 0.5


@dataclass(frozen=True)
class RoughnessProfile:
    """Periodic upper-wall gap function h(z1) on the unit period.

    Parameters
    ----------
    kind : str
        Either ``"cosine"`` (finite cosine series) or ``"tabulated"``
        (periodic cubic spline through uniform samples).
    h : callable
        Gap height; accepts scalars or numpy arrays, periodic extension.
    dh : callable
        Derivative h'(z1), same calling convention.
    h_antideriv : callable
        Antiderivative of h with value 0 at z1 = -1/2; exact per kind,
        used for cell areas.
    h_min, h_max : float
        Cached global extrema over one period.
    payload : dict
        The normalized construction data (mean/amplitudes/harmonics or
        the sample list); kept for hashing and report provenance.
    """

    kind: str
    h: Callable
    dh: Callable
    h_antideriv: Callable
    h_min: float
    h_max: float
    payload: dict = field(repr=False)


def _wrap(z):
    """Map z1 into the base period [-1/2, 1/2)."""
    z = np.asarray(z, dtype=float)
    return (z - _PERIOD_LEFT) % 1.0 + _PERIOD_LEFT


def _refine_extremum(fun, z_coarse, sign):
    """Polish min (sign=+1) or max (sign=-1) of fun near a coarse argmin."""
    half_step = 1.5 / len(z_coarse)
    k = int(np.argmin(sign * fun(z_coarse)))
    lo, hi = z_coarse[k] - half_step, z_coarse[k] + half_step
    res = minimize_scalar(lambda z: sign * fun(z), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    coarse_best = float(fun(z_coarse[k]))
    refined = float(fun(res.x))
    return min(coarse_best, refined) if sign > 0 else max(coarse_best, refined)


def _extrema(h):
    zs = np.linspace(_PERIOD_LEFT, _PERIOD_RIGHT, 16385)
    h_min = _refine_extremum(h, zs, +1.0)
    h_max = _refine_extremum(h, zs, -1.0)
    return h_min, h_max


def _make_cosine(merged):
    mean = float(merged["mean"])
    if "amplitudes" in merged:
        amps = np.atleast_1d(np.asarray(merged["amplitudes"], dtype=float))
    elif "amplitude" in merged:
        amps = np.atleast_1d(float(merged["amplitude"]))
    else:
        amps = np.zeros(0)
    harmonics = np.asarray(merged.get("harmonics", np.arange(1, len(amps) + 1)), dtype=float)
    if len(harmonics) != len(amps):
        raise ShapeMismatch(f"{len(amps)} amplitudes but {len(harmonics)} harmonics")
    if mean - np.sum(np.abs(amps)) <= 0.0:
        raise NonPositiveGap(
            f"cosine profile needs mean > sum of |amplitudes|; got {mean} vs {np.sum(np.abs(amps))}")

    two_pi_k = 2.0 * np.pi * harmonics

    def h(z):
        z = np.asarray(z, dtype=float)
        return mean + np.cos(np.multiply.outer(z, two_pi_k)) @ amps

    def dh(z):
        z = np.asarray(z, dtype=float)
        return -np.sin(np.multiply.outer(z, two_pi_k)) @ (amps * two_pi_k)

    def h_antideriv(z):
        z = np.asarray(z, dtype=float)
        base = mean * (z - _PERIOD_LEFT)
        if len(amps) == 0:
            return base
        sins = np.sin(np.multiply.outer(z, two_pi_k)) - np.sin(_PERIOD_LEFT * two_pi_k)
        return base + sins @ (amps / two_pi_k)

    payload = {"kind": "cosine", "mean": mean,
               "amplitudes": [float(a) for a in amps],
               "harmonics": [int(k) for k in harmonics]}
    h_min, h_max = _extrema(h)
    if h_min <= 0.0:
        raise NonPositiveGap(f"profile minimum {h_min} is not positive")
    return RoughnessProfile("cosine", h, dh, h_antideriv, h_min, h_max, payload)


def _make_tabulated(merged):
    samples = np.asarray(merged["samples"], dtype=float)
    if samples.ndim != 1 or len(samples) < 8:
        raise TooFewSamples(f"need at least 8 samples on the period, got {samples.size}")
    if np.any(samples <= 0.0):
        raise NonPositiveGap("tabulated profile has a non-positive sample")
    if not np.all(np.isfinite(samples)):
        raise NonPositiveGap("tabulated profile has a non-finite sample")

    # Samples sit on the uniform grid z_k = -1/2 + k/M, endpoint excluded;
    # the periodic spline needs the wrap point repeated.
    m = len(samples)
    knots = _PERIOD_LEFT + np.arange(m + 1) / m
    spline = CubicSpline(knots, np.append(samples, samples[0]), bc_type="periodic")
    dspline = spline.derivative()
    aspline = spline.antiderivative()

    def h(z):
        return spline(_wrap(z))

    def dh(z):
        return dspline(_wrap(z))

    period_total = float(aspline(_PERIOD_RIGHT) - aspline(_PERIOD_LEFT))

    def h_antideriv(z):
        # Integrate from -1/2, honoring full periods for arguments outside.
        z = np.asarray(z, dtype=float)
        periods = np.floor(z - _PERIOD_LEFT)
        zw = z - periods
        return periods * period_total + (aspline(zw) - aspline(_PERIOD_LEFT))

    payload = {"kind": "tabulated", "samples": [float(s) for s in samples]}
    h_min, h_max = _extrema(h)
    if h_min <= 0.0:
        raise NonPositiveGap(f"spline through the samples dips to {h_min}")
    return RoughnessProfile("tabulated", h, dh, h_antideriv, h_min, h_max, payload)


def make_profile(spec=None, **kwargs) -> RoughnessProfile:
    """Build a RoughnessProfile from a specification mapping.

    Parameters
    ----------
    spec : dict, optional
        Keys: ``kind`` ("cosine" | "tabulated").  Cosine takes ``mean``
        plus ``amplitude`` (scalar) or ``amplitudes``/``harmonics``
        (parallel lists).  Tabulated takes ``samples``, values of h on
        the uniform grid -1/2 + k/M for k = 0..M-1.
    **kwargs
        Merged over ``spec`` for convenience.

    Returns
    -------
    RoughnessProfile

    Raises
    ------
    NonPositiveGap
        If the gap closes anywhere (cosine: mean <= sum |amplitudes|;
        tabulated: a sample or the interpolating spline is <= 0).
    TooFewSamples
        Fewer than 8 tabulated samples.
    """
    merged = {**(spec or {}), **kwargs}
    kind = merged.get("kind", "cosine")
    if kind in ("cosine", "analytic-cosine"):
        return _make_cosine(merged)
    if kind == "tabulated":
        return _make_tabulated(merged)
    raise ShapeMismatch(f"unknown profile kind {kind!r}")


@dataclass(frozen=True)
class CellMesh:
    """Structured terrain-following mesh of the cell.

    Metric arrays hold the gap and its derivative along node lines
    (``h_node``, ``dh_node`` at xi_node) and along cell-center lines
    (``h_cent``, ``dh_cent`` at xi_cent).  ``column_area[i]`` is the exact
    integral of h over column i, so cell areas sum to the exact period
    integral of h.
    """

    n1: int
    n2: int
    profile: RoughnessProfile
    xi_node: np.ndarray
    xi_cent: np.ndarray
    eta_node: np.ndarray
    eta_cent: np.ndarray
    h_node: np.ndarray
    dh_node: np.ndarray
    h_cent: np.ndarray
    dh_cent: np.ndarray
    column_area: np.ndarray
    d1: float
    d2: float

    @property
    def total_area(self) -> float:
        return float(np.sum(self.column_area))


def build_mesh(profile: RoughnessProfile, n1: int, n2: int) -> CellMesh:
    """Discretize the cell with n1 periodic columns and n2 vertical intervals.

    Parameters
    ----------
    profile : RoughnessProfile
    n1, n2 : int
        Interval counts; each must be even and at least 4 (staggered
        layouts pair intervals).

    Returns
    -------
    CellMesh

    Raises
    ------
    BadResolution
        If a count is odd or below 4.
    """
    for name, n in (("n1", n1), ("n2", n2)):
        if n < 4 or n % 2 != 0:
            raise BadResolution(f"{name} must be even and >= 4, got {n}")
    d1 = 1.0 / n1
    d2 = 1.0 / n2
    xi_node = _PERIOD_LEFT + d1 * np.arange(n1)
    xi_cent = xi_node + 0.5 * d1
    eta_node = d2 * np.arange(n2 + 1)
    eta_cent = d2 * (np.arange(n2) + 0.5)
    edges = _PERIOD_LEFT + d1 * np.arange(n1 + 1)
    anti = np.asarray(profile.h_antideriv(edges), dtype=float)
    return CellMesh(
        n1=n1, n2=n2, profile=profile,
        xi_node=xi_node, xi_cent=xi_cent,
        eta_node=eta_node, eta_cent=eta_cent,
        h_node=np.asarray(profile.h(xi_node), dtype=float),
        dh_node=np.asarray(profile.dh(xi_node), dtype=float),
        h_cent=np.asarray(profile.h(xi_cent), dtype=float),
        dh_cent=np.asarray(profile.dh(xi_cent), dtype=float),
        column_area=np.diff(anti),
        d1=d1, d2=d2,
    )


def cell_quadrature(mesh: CellMesh, field) -> float:
    """Integrate a grid field over the physical cell.

    The Jacobian of the terrain-following map is h(z1), so each column
    carries weight h * d1.  Three layouts are recognized by shape:

    * ``(n1, n2)``   - values at (xi_node, eta_cent); midpoint rule in eta.
    * ``(n1, n2+1)`` - values at every node; trapezoid rule in eta.
    * ``(n1, n2-1)`` - values at (xi_cent, interior eta_node); trapezoid
      rule with zero boundary values (no-slip fields).

    Parameters
    ----------
    mesh : CellMesh
    field : array_like

    Returns
    -------
    float
        Second-order approximation of the physical integral.

    Raises
    ------
    ShapeMismatch
        If the field shape matches none of the layouts.
    """
    f = np.asarray(field, dtype=float)
    n1, n2 = mesh.n1, mesh.n2
    w = mesh.d1 * mesh.d2
    if f.shape == (n1, n2):
        return float(np.sum(mesh.h_node[:, None] * f) * w)
    if f.shape == (n1, n2 + 1):
        col = f[:, 1:-1].sum(axis=1) + 0.5 * (f[:, 0] + f[:, -1])
        return float(np.sum(mesh.h_node * col) * w)
    if f.shape == (n1, n2 - 1):
        return float(np.sum(mesh.h_cent[:, None] * f) * w)
    raise ShapeMismatch(f"field shape {f.shape} fits no layout of a {n1}x{n2} mesh")
