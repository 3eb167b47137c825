"""Macroscopic profiles assembled from effective coefficients.

Dispatches on the wall-speed regime: finite positive aspect ratio solves the
three cell problems, the vanishing limit uses the closed forms, and the
infinite limit returns the documented zero-flow stub without solving.
Pressure, velocity, and microrotation have the same algebraic shape in both
solved regimes; only the coefficients differ.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import subcritical as sub
from .errors import (OutOfDomain, QuadratureFailure, SupercriticalLimitWarning,
                     UnsupportedRegime, ValidationError)
from .geometry import RoughnessProfile, build_mesh
from .heat_cell import temperature_profile
from .laplace_cell import solve_laplace_cell
from .stokes_cell import solve_stokes_cell

_QUAD_OPTS = dict(epsabs=1e-12, epsrel=1e-12, limit=500)


@dataclass(frozen=True)
class FluidParams:
    """Dimensionless numbers of the flow.

    M and Ra are accepted for completeness but have no effect on the limit
    model; this is asserted by tests, not just documented.
    """

    N: float
    Pr: float
    q_left: float
    q_right: float
    L: float = 1.0
    D: float = 0.0
    M: float = 0.0
    Ra: float = 0.0
    k: float = 1.0

    def __post_init__(self):
        problems = []
        if not (0.0 < self.N < 1.0):
            problems.append(f"coupling number N must lie in (0, 1), got {self.N}")
        if not self.Pr > 0.0:
            problems.append(f"Prandtl number Pr must be positive, got {self.Pr}")
        if not self.L > 0.0:
            problems.append(f"characteristic length L must be positive, got {self.L}")
        if self.D < 0.0:
            problems.append(f"D must be nonnegative, got {self.D}")
        if self.M < 0.0:
            problems.append(f"M must be nonnegative, got {self.M}")
        if self.k < 0.0:
            problems.append(f"flux scale k must be nonnegative, got {self.k}")
        for name in ("N", "Pr", "q_left", "q_right", "L", "D", "M", "Ra", "k"):
            v = getattr(self, name)
            if not math.isfinite(v):
                problems.append(f"{name} must be finite, got {v}")
        if problems:
            raise ValidationError(problems)


def _as_callable(spec, periodic: bool, what: str):
    """Turn a forcing specification into a vectorized callable.

    Specs: a bare number; a callable (used as-is); or a mapping with
    kind = constant | tabulated | polynomial | cosine.  Tabulated data for
    the x1 functions spans [-1/2, 1/2] endpoints included and interpolates
    linearly; periodic tabulated data lives on the endpoint-free uniform
    grid and interpolates with a periodic cubic spline.
    """
    if callable(spec):
        return spec
    if isinstance(spec, (int, float)):
        v = float(spec)
        return lambda x: np.full_like(np.asarray(x, dtype=float), v)
    if not isinstance(spec, dict):
        raise ValidationError([f"{what}: unsupported specification {spec!r}"])
    kind = spec.get("kind")
    if kind == "constant":
        v = float(spec.get("value", 0.0))
        if not math.isfinite(v):
            raise ValidationError([f"{what}: constant value must be finite"])
        return lambda x: np.full_like(np.asarray(x, dtype=float), v)
    if kind == "tabulated":
        samples = np.asarray(spec.get("samples", ()), dtype=float)
        if samples.size < 2:
            raise ValidationError([f"{what}: tabulated form needs at least 2 samples"])
        if not np.all(np.isfinite(samples)):
            raise ValidationError([f"{what}: tabulated samples must be finite"])
        if periodic:
            from scipy.interpolate import CubicSpline
            m = samples.size
            grid = np.concatenate([-0.5 + np.arange(m) / m, [0.5]])
            vals = np.concatenate([samples, samples[:1]])
            spline = CubicSpline(grid, vals, bc_type="periodic")
            return lambda z: spline((np.asarray(z, dtype=float) + 0.5) % 1.0 - 0.5)
        grid = np.linspace(-0.5, 0.5, samples.size)
        return lambda x: np.interp(np.asarray(x, dtype=float), grid, samples)
    if kind == "polynomial":
        coeffs = np.asarray(spec.get("coeffs", ()), dtype=float)
        if coeffs.size == 0 or not np.all(np.isfinite(coeffs)):
            raise ValidationError([f"{what}: polynomial needs finite coefficients"])
        return lambda x: np.polynomial.polynomial.polyval(
            np.asarray(x, dtype=float), coeffs)
    if kind == "cosine":
        mean = float(spec.get("mean", 0.0))
        amp = float(spec.get("amplitude", 1.0))
        harmonic = int(spec.get("harmonic", 1))
        return lambda x: mean + amp * np.cos(
            2.0 * np.pi * harmonic * np.asarray(x, dtype=float))
    raise ValidationError([f"{what}: unknown forcing kind {kind!r}"])


@dataclass(frozen=True)
class ForcingData:
    """Body force f1(x1), microrotation source g(x1), wall flux shape G(z1)."""

    f1: object
    g: object
    G: object

    @classmethod
    def build(cls, f1=0.0, g=0.0, G=1.0) -> "ForcingData":
        return cls(
            f1=_as_callable(f1, periodic=False, what="f1"),
            g=_as_callable(g, periodic=False, what="g"),
            G=_as_callable(G, periodic=True, what="G"),
        )


@dataclass(frozen=True)
class Regime:
    """Which limit model to evaluate.

    mode: "critical" (finite positive aspect lam), "subcritical",
    "supercritical", or "auto" (lam below threshold drops to subcritical,
    infinite lam to the supercritical stub).
    """

    mode: str = "critical"
    lam: float = 1.0
    threshold: float = 1e-2

    def resolve(self) -> str:
        if self.mode not in ("critical", "subcritical", "supercritical", "auto"):
            raise UnsupportedRegime(f"unknown regime mode {self.mode!r}")
        if self.mode == "auto":
            if math.isinf(self.lam):
                return "supercritical"
            return "subcritical" if self.lam < self.threshold else "critical"
        if self.mode == "critical" and math.isinf(self.lam):
            return "supercritical"
        return self.mode


@dataclass(frozen=True)
class Discretization:
    """Cell grid resolution and solver knobs for the critical regime."""

    n1: int = 96
    n2: int = 96
    nx1: int = 101
    tol: float = 1e-10
    max_unknowns: int = 200_000
    surface_measure: str = "arclength"


@dataclass
class MacroReport:
    """Everything run_model produces: profiles, coefficients, diagnostics."""

    regime: str
    lam: float | None
    x1: np.ndarray
    p: np.ndarray
    U1_av: float
    U2_av: float            # structurally zero in every regime
    W_av: np.ndarray
    T_av: np.ndarray
    coefficients: dict      # name -> {"value": float, "provenance": str}
    diagnostics: dict = field(default_factory=dict)
    cell_solutions: dict = field(default_factory=dict)


def _integral(fn, lo: float, hi: float) -> float:
    try:
        val, err = integrate.quad(fn, lo, hi, **_QUAD_OPTS)
    except Exception as exc:
        raise QuadratureFailure(f"forcing integral failed: {exc}") from exc
    if not math.isfinite(val) or err > 1e-10:
        raise QuadratureFailure(
            f"forcing integral error estimate {err:.2e} too large")
    return float(val)


def _cumulative_f1(f1, x1: np.ndarray):
    """Integral of f1 from -1/2 to each sample, one shared float chain.

    Returns (per-sample values in input order, total over the full span).
    The total is the literal last float of the same chain, so pressure
    endpoints close exactly.
    """
    order = np.argsort(x1, kind="stable")
    xs = x1[order]
    chain = np.empty(xs.size)
    acc, prev = 0.0, -0.5
    for i, x in enumerate(xs):
        if x > prev:
            acc += _integral(f1, prev, float(x))
            prev = float(x)
        chain[i] = acc
    total = acc
    if prev < 0.5:
        total = acc + _integral(f1, prev, 0.5)
    out = np.empty_like(chain)
    out[order] = chain
    return out, total


def pressure_profile(params: FluidParams, f1, x1_samples) -> np.ndarray:
    """Macroscopic pressure at the sample points.

    p(x1) = q_left - (q_left - q_right + Pr * total) (x1 + 1/2)
            + Pr * integral of f1 from -1/2 to x1,
    evaluated in a blended form whose endpoint values are exactly q_left
    and q_right: the cumulative integral and its total share one float
    chain, and the affine part is a convex blend of the end pressures.
    """
    x1 = np.asarray(x1_samples, dtype=float)
    if x1.size and (x1.min() < -0.5 - 1e-12 or x1.max() > 0.5 + 1e-12):
        raise OutOfDomain("pressure samples must lie in [-1/2, 1/2]")
    cumulative, total = _cumulative_f1(f1, x1)
    t = x1 + 0.5
    return ((1.0 - t) * params.q_left + t * params.q_right
            + params.Pr * (cumulative - t * total))


def average_velocity(a: float, params: FluidParams, f1) -> float:
    """Constant-in-x1 average streamwise velocity.

    U1 = a (1 - N) / Pr * (q_left - q_right + Pr * integral of f1).
    """
    drive = params.q_left - params.q_right + params.Pr * _integral(f1, -0.5, 0.5)
    return a * (1.0 - params.N) / params.Pr * drive


def average_microrotation(b: float, params: FluidParams, g, x1_samples) -> np.ndarray:
    """Pointwise average microrotation b * g(x1) / L."""
    x1 = np.asarray(x1_samples, dtype=float)
    return b * np.asarray(g(x1), dtype=float) / params.L


def _supercritical_report(x1: np.ndarray) -> MacroReport:
    warnings.warn(
        "infinite aspect limit: velocity and microrotation vanish in the "
        "roughness zone; returning the zero stub instead of solving",
        SupercriticalLimitWarning, stacklevel=3)
    nan = np.full(x1.shape, np.nan)
    note = ("infinite aspect limit; flow and microrotation vanish, "
            "no system was solved")
    return MacroReport(
        regime="supercritical", lam=float("inf"), x1=x1,
        p=nan.copy(), U1_av=0.0, U2_av=0.0,
        W_av=np.zeros_like(x1), T_av=nan.copy(),
        coefficients={
            "a": {"value": 0.0, "provenance": note},
            "b": {"value": 0.0, "provenance": note},
        },
        diagnostics={"note": note},
    )


def run_model(profile: RoughnessProfile, params: FluidParams,
              forcing: ForcingData, regime: Regime,
              discretization: Discretization | None = None) -> MacroReport:
    """Evaluate the limit model end to end and package a MacroReport."""
    disc = discretization or Discretization()
    x1 = np.linspace(-0.5, 0.5, disc.nx1)
    resolved = regime.resolve()

    if resolved == "supercritical":
        return _supercritical_report(x1)

    if resolved == "subcritical":
        coeffs = sub.compute_coefficients(profile, forcing.G)
        a, b = coeffs.a0, coeffs.b0
        t_av = np.full(x1.shape, coeffs.c0 * params.k)
        prov_a = "closed-form quadrature: (2 J3 - J6/J3)/12 over the wall profile"
        prov_b = "closed-form quadrature: J3/12 over the wall profile"
        coeff_table = {
            "a": {"value": a, "provenance": prov_a},
            "b": {"value": b, "provenance": prov_b},
            "c0": {"value": coeffs.c0,
                   "provenance": "closed-form quadrature: (1/2) int h^2 G"},
            "harmonic_a": {"value": coeffs.harmonic_a,
                           "provenance": "diagnostic only: Reynolds-closure "
                                         "value (int h^-3)^-1/12, never used "
                                         "in outputs"},
        }
        diagnostics = {"int_h3": coeffs.int_h3, "int_h6": coeffs.int_h6,
                       "int_h2G": coeffs.int_h2G}
        report = MacroReport(
            regime="subcritical", lam=None, x1=x1,
            p=pressure_profile(params, forcing.f1, x1),
            U1_av=average_velocity(a, params, forcing.f1), U2_av=0.0,
            W_av=average_microrotation(b, params, forcing.g, x1),
            T_av=t_av, coefficients=coeff_table, diagnostics=diagnostics,
        )
        report.cell_solutions["subcritical"] = coeffs
        return report

    # critical regime: three cell solves on the terrain-following mesh
    lam = float(regime.lam)
    mesh = build_mesh(profile, disc.n1, disc.n2)
    stokes = solve_stokes_cell(mesh, lam, tol=disc.tol,
                               max_unknowns=disc.max_unknowns)
    laplace = solve_laplace_cell(mesh, lam, tol=disc.tol,
                                 max_unknowns=disc.max_unknowns)
    t_av, heat_solutions = temperature_profile(
        mesh, lam, laplace, params, forcing.g, forcing.G, x1,
        tol=disc.tol, surface_measure=disc.surface_measure)
    a, b = stokes.a_lambda, laplace.b_lambda
    grid = f"{disc.n1}x{disc.n2}"
    coeff_table = {
        "a": {"value": a,
              "provenance": f"velocity cell solve at lam={lam:g}, grid {grid}; "
                            "dissipation integral"},
        "b": {"value": b,
              "provenance": f"microrotation cell solve at lam={lam:g}, "
                            f"grid {grid}; dissipation integral"},
    }
    diagnostics = {
        "stokes": stokes.solve_report,
        "laplace": laplace.solve_report,
        "heat": [s.solve_report for s in heat_solutions],
        "divergence_residual": stokes.divergence_residual,
        "heat_peclet_max": max((s.peclet_max for s in heat_solutions),
                               default=0.0),
        "heat_distinct_solves": len(heat_solutions),
    }
    report = MacroReport(
        regime="critical", lam=lam, x1=x1,
        p=pressure_profile(params, forcing.f1, x1),
        U1_av=average_velocity(a, params, forcing.f1), U2_av=0.0,
        W_av=average_microrotation(b, params, forcing.g, x1),
        T_av=np.asarray(t_av), coefficients=coeff_table,
        diagnostics=diagnostics,
    )
    report.cell_solutions.update(
        {"stokes": stokes, "laplace": laplace, "heat": heat_solutions,
         "mesh": mesh})
    return report
