"""Report emission: JSON report, CSV profiles, field dumps, and the sweep.

Every float is printed in shortest round-trip decimal at the configured
number of significant digits, and the in-memory ReportFile holds exactly
those rounded values, so serialize -> parse is lossless by construction.
Nothing time-dependent goes into the body except the one timestamp field
in metadata; two runs of the same config differ only there.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, canonical_dict, config_hash
from .errors import IoError
from .geometry import build_mesh
from .laplace_cell import solve_laplace_cell
from .macro import MacroReport, Regime, run_model
from .stokes_cell import solve_stokes_cell
from .subcritical import SubcriticalCoefficients, compute_coefficients, \
    subcritical_cell_fields


def round_floats(obj, precision: int):
    """Round every float to shortest-decimal at the given significant digits.

    NaN and infinities become None (JSON has no literal for them); numpy
    scalars and arrays collapse to plain Python types.
    """
    if isinstance(obj, (bool, int, str)) or obj is None:
        return obj
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return None
        return float(f"{v:.{precision}g}")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [round_floats(v, precision) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): round_floats(v, precision) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v, precision) for v in obj]
    return str(obj)


@dataclass
class ReportFile:
    """The JSON report contents, already rounded to output precision."""

    metadata: dict
    config: dict
    regime: dict
    coefficients: dict
    profiles: dict
    diagnostics: dict
    sweep: list | None = None

    def serialize(self) -> str:
        body = {"metadata": self.metadata, "config": self.config,
                "regime": self.regime, "coefficients": self.coefficients,
                "profiles": self.profiles, "diagnostics": self.diagnostics}
        if self.sweep is not None:
            body["sweep"] = self.sweep
        return json.dumps(body, indent=2, allow_nan=False) + "\n"

    @classmethod
    def parse(cls, text: str) -> "ReportFile":
        body = json.loads(text)
        return cls(metadata=body["metadata"], config=body["config"],
                   regime=body["regime"], coefficients=body["coefficients"],
                   profiles=body["profiles"], diagnostics=body["diagnostics"],
                   sweep=body.get("sweep"))


def _solver_report_dict(rep) -> dict:
    # wall_time is deliberately dropped: reports must be reproducible
    return {"method": rep.method, "iterations": rep.iterations,
            "residual": rep.residual}


def _diagnostics_dict(report: MacroReport) -> dict:
    out = {}
    for key, val in report.diagnostics.items():
        if hasattr(val, "method") and hasattr(val, "residual"):
            out[key] = _solver_report_dict(val)
        elif isinstance(val, list) and val and hasattr(val[0], "method"):
            out[key] = [_solver_report_dict(v) for v in val]
        else:
            out[key] = val
    return out


def build_report_file(report: MacroReport, config: RunConfig,
                      sweep_rows: list | None = None,
                      timestamp: str | None = None) -> ReportFile:
    """Assemble the rounded, serialization-ready report structure."""
    p = config.output.precision
    n = report.x1.size
    profiles = {
        "x1": report.x1,
        "p": report.p,
        "U1_av": np.full(n, report.U1_av),
        "U2_av": np.zeros(n),
        "W_av": report.W_av,
        "T_av": report.T_av,
    }
    if timestamp is None:
        timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    meta = {"tool": "rugocell", "version": __version__,
            "config_hash": config_hash(config), "created": timestamp}
    regime = {"mode": report.regime}
    if report.lam is not None and math.isfinite(report.lam):
        regime["lambda"] = report.lam
    return ReportFile(
        metadata=round_floats(meta, p),
        config=round_floats(canonical_dict(config), 17),
        regime=round_floats(regime, p),
        coefficients=round_floats(report.coefficients, p),
        profiles=round_floats(profiles, p),
        diagnostics=round_floats(_diagnostics_dict(report), p),
        sweep=round_floats(sweep_rows, p) if sweep_rows is not None else None,
    )


def _fmt(v: float, precision: int) -> str:
    if isinstance(v, float) and not math.isfinite(v):
        return "nan"
    return f"{v:.{precision}g}"


def profiles_csv(report: MacroReport, precision: int) -> str:
    """CSV with header x1,p,U1_av,U2_av,W_av,T_av and exactly nx1 rows."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x1", "p", "U1_av", "U2_av", "W_av", "T_av"])
    for i in range(report.x1.size):
        writer.writerow([
            _fmt(float(report.x1[i]), precision),
            _fmt(float(report.p[i]), precision),
            _fmt(float(report.U1_av), precision),
            _fmt(0.0, precision),
            _fmt(float(report.W_av[i]), precision),
            _fmt(float(report.T_av[i]), precision),
        ])
    return buf.getvalue()


def _centers_of_nodes(arr: np.ndarray) -> np.ndarray:
    """Average a periodic-in-axis-0 node field (n1, n2+1) onto cell centers."""
    right = np.roll(arr, -1, axis=0)
    return 0.25 * (arr[:, :-1] + arr[:, 1:] + right[:, :-1] + right[:, 1:])


def _field_rows(mesh, columns: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    names = list(columns)
    writer.writerow(["z1", "z2"] + names)
    z1 = mesh.xi_cent
    for i in range(mesh.n1):
        for j in range(mesh.n2):
            z2 = mesh.eta_cent[j] * mesh.h_cent[i]
            writer.writerow([f"{z1[i]:.9g}", f"{z2:.9g}"]
                            + [f"{columns[n][i, j]:.9g}" for n in names])
    return buf.getvalue()


def _stokes_dump(sol) -> str:
    mesh = sol.mesh
    u1c = 0.5 * (sol.u1 + np.roll(sol.u1, -1, axis=0))
    faces = np.zeros((mesh.n1, mesh.n2 + 1))
    faces[:, 1:-1] = sol.u2
    u2c = 0.5 * (faces[:, :-1] + faces[:, 1:])
    return _field_rows(mesh, {"u1": u1c, "u2": u2c, "pi": sol.pi})


def _laplace_dump(sol) -> str:
    mesh = sol.mesh
    wc = 0.5 * (sol.w + np.roll(sol.w, -1, axis=0))
    return _field_rows(mesh, {"w": wc})


def _heat_dump(sol) -> str:
    return _field_rows(sol.mesh, {"T": _centers_of_nodes(sol.T)})


def _subcritical_dump(profile, coeffs: SubcriticalCoefficients,
                      forcing, k: float) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["z1", "z2", "u_bl", "w_bl", "T_hat"])
    for z1 in np.linspace(-0.5, 0.5, 65):
        h = float(profile.h(z1))
        for eta in (np.arange(32) + 0.5) / 32:
            z2 = eta * h
            u, w, t = subcritical_cell_fields(
                profile, (z1, z2), pi_prime=coeffs.pi_prime, k=k,
                G=forcing.G)
            writer.writerow([f"{z1:.9g}", f"{z2:.9g}", f"{u:.9g}",
                             f"{w:.9g}", f"{t:.9g}"])
    return buf.getvalue()


def emit(report: MacroReport, config: RunConfig, out_dir: str | Path | None = None,
         sweep_rows: list | None = None) -> list:
    """Write the report artifacts; returns the list of paths written."""
    out = Path(out_dir) if out_dir is not None else Path(config.output.directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create output directory {out}: {exc}") from exc
    written = []

    def write(name: str, text: str):
        path = out / name
        try:
            path.write_text(text)
        except OSError as exc:
            raise IoError(f"cannot write {path}: {exc}") from exc
        written.append(path)

    formats = config.output.formats
    if "json" in formats:
        write("report.json",
              build_report_file(report, config, sweep_rows).serialize())
    if "csv" in formats:
        write("profiles.csv", profiles_csv(report, config.output.precision))
        if sweep_rows is not None:
            write("sweep.csv", sweep_csv(sweep_rows, config.output.precision))
    if config.output.dump_fields:
        sols = report.cell_solutions
        if "stokes" in sols:
            write("stokes_cell.csv", _stokes_dump(sols["stokes"]))
        if "laplace" in sols:
            write("laplace_cell.csv", _laplace_dump(sols["laplace"]))
        for i, hs in enumerate(sols.get("heat", [])):
            write(f"heat_cell_{i:03d}.csv", _heat_dump(hs))
        if "subcritical" in sols:
            write("subcritical_fields.csv",
                  _subcritical_dump(config.profile, sols["subcritical"],
                                    config.forcing, config.physics.k))
    return written


def sweep_csv(rows: list, precision: int) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["lambda", "a", "b", "regime"])
    for row in rows:
        writer.writerow([_fmt(row["lambda"], precision),
                         _fmt(row["a"], precision),
                         _fmt(row["b"], precision), row["regime"]])
    return buf.getvalue()


def sweep(config: RunConfig, lambda_list, refine: bool = False) -> list:
    """Effective coefficients a and b across aspect parameters.

    One critical-regime pair of cell solves per positive lambda, rows sorted
    ascending, with the closed-form limit appended as a labeled lambda = 0
    row.  refine=True reruns each critical row at doubled resolution and
    attaches the refined values for a convergence check.
    """
    disc = config.discretization
    mesh = build_mesh(config.profile, disc.n1, disc.n2)
    rows = []
    for lam in sorted(float(v) for v in lambda_list):
        stokes = solve_stokes_cell(mesh, lam, tol=disc.tol,
                                   max_unknowns=disc.max_unknowns)
        laplace = solve_laplace_cell(mesh, lam, tol=disc.tol,
                                     max_unknowns=disc.max_unknowns)
        row = {"lambda": lam, "a": stokes.a_lambda, "b": laplace.b_lambda,
               "regime": "critical"}
        if refine:
            fine = build_mesh(config.profile, 2 * disc.n1, 2 * disc.n2)
            row["refined"] = {
                "n1": 2 * disc.n1, "n2": 2 * disc.n2,
                "a": solve_stokes_cell(fine, lam, tol=disc.tol,
                                       max_unknowns=disc.max_unknowns).a_lambda,
                "b": solve_laplace_cell(fine, lam, tol=disc.tol,
                                        max_unknowns=disc.max_unknowns).b_lambda,
            }
        rows.append(row)
    coeffs = compute_coefficients(config.profile, config.forcing.G)
    rows.append({"lambda": 0.0, "a": coeffs.a0, "b": coeffs.b0,
                 "regime": "subcritical"})
    rows.sort(key=lambda r: r["lambda"])
    return rows


def run_from_config(config: RunConfig) -> MacroReport:
    """Convenience wrapper: evaluate the model described by a RunConfig."""
    return run_model(config.profile, config.physics, config.forcing,
                     config.regime, config.discretization)
