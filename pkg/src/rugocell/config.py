"""Run configuration: TOML parsing, validation, and the semantic hash.

A config file has up to six tables: roughness, physics, forcing, regime,
discretization, output.  Only physics.N, physics.Pr, physics.q_left and
physics.q_right are required; everything else has documented defaults
(flat wall, no forcing, critical regime at lam = 1, 96x96 cell grid,
101 pressure samples).

The semantic hash covers exactly the fields that can change a computed
number, with the regime resolved first: a subcritical run ignores the cell
grid and the aspect parameter, the supercritical stub ignores nearly
everything, and M and Ra never enter (they are accepted but dead in the
limit model).  The hashed dictionary is also what reports echo back.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ImportError:                       # Python 3.10
    import tomli as tomllib

from .errors import ParseError, RugocellError, ValidationError
from .geometry import RoughnessProfile, make_profile
from .macro import Discretization, FluidParams, ForcingData, Regime

_SECTIONS = ("roughness", "physics", "forcing", "regime", "discretization",
             "output")
_KEYS = {
    "roughness": {"kind", "mean", "amplitude", "amplitudes", "harmonics",
                  "samples", "sample_file"},
    "physics": {"N", "Pr", "L", "D", "M", "Ra", "k", "q_left", "q_right"},
    "forcing": {"f1", "g", "G"},
    "regime": {"mode", "lambda", "threshold"},
    "discretization": {"n1", "n2", "nx1", "tol", "max_unknowns"},
    "output": {"directory", "formats", "precision", "dump_fields",
               "surface_measure"},
}
_FORCING_KINDS = {"constant", "tabulated", "polynomial", "cosine"}


@dataclass(frozen=True)
class OutputOptions:
    directory: str = "rugocell_out"
    formats: tuple = ("json", "csv")
    precision: int = 12
    dump_fields: bool = False
    surface_measure: str = "arclength"


@dataclass
class RunConfig:
    """Validated inputs for one run, with the wall profile already built."""

    profile: RoughnessProfile
    physics: FluidParams
    forcing: ForcingData
    regime: Regime
    discretization: Discretization
    output: OutputOptions
    roughness_canonical: dict = field(default_factory=dict)
    forcing_canonical: dict = field(default_factory=dict)


def _number(raw, section, key, problems, default=None, required=False):
    if key not in raw:
        if required:
            problems.append(f"{section}.{key} is required")
        return default
    v = raw[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        problems.append(f"{section}.{key} must be a number, got {v!r}")
        return default
    return float(v)


def _canonical_forcing(spec, name, problems):
    """Normalize one forcing entry to a canonical dict for hashing."""
    if isinstance(spec, bool):
        problems.append(f"forcing.{name} must be a number or a table")
        return None
    if isinstance(spec, (int, float)):
        return {"kind": "constant", "value": float(spec)}
    if not isinstance(spec, dict):
        problems.append(f"forcing.{name} must be a number or a table")
        return None
    kind = spec.get("kind")
    if kind not in _FORCING_KINDS:
        problems.append(f"forcing.{name}.kind must be one of "
                        f"{sorted(_FORCING_KINDS)}, got {kind!r}")
        return None
    if kind == "constant":
        return {"kind": "constant", "value": float(spec.get("value", 0.0))}
    if kind == "tabulated":
        samples = spec.get("samples", ())
        try:
            vals = [float(s) for s in samples]
        except (TypeError, ValueError):
            problems.append(f"forcing.{name}.samples must be a list of numbers")
            return None
        if len(vals) < 2 or not all(math.isfinite(v) for v in vals):
            problems.append(f"forcing.{name}.samples needs >= 2 finite values")
            return None
        return {"kind": "tabulated", "samples": vals}
    if kind == "polynomial":
        coeffs = spec.get("coeffs", ())
        try:
            vals = [float(c) for c in coeffs]
        except (TypeError, ValueError):
            problems.append(f"forcing.{name}.coeffs must be a list of numbers")
            return None
        if not vals or not all(math.isfinite(v) for v in vals):
            problems.append(f"forcing.{name}.coeffs needs finite values")
            return None
        return {"kind": "polynomial", "coeffs": vals}
    return {"kind": "cosine", "mean": float(spec.get("mean", 0.0)),
            "amplitude": float(spec.get("amplitude", 1.0)),
            "harmonic": int(spec.get("harmonic", 1))}


def _load_samples_file(path: Path, problems):
    """Wall samples: one value per line, '#' comments and blank lines ok."""
    try:
        text = path.read_text()
    except OSError as exc:
        problems.append(f"roughness.sample_file: cannot read {path}: {exc}")
        return None
    vals = []
    for ln, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip().rstrip(",")
        if not body:
            continue
        for tok in re.split(r"[,\s]+", body):
            try:
                vals.append(float(tok))
            except ValueError:
                problems.append(
                    f"roughness.sample_file line {ln}: not a number: {tok!r}")
                return None
    return vals


def _build_roughness(raw: dict, base_dir: Path, problems):
    kind = raw.get("kind", "cosine")
    if kind == "cosine":
        mean = _number(raw, "roughness", "mean", problems, default=1.0)
        if "amplitude" in raw and "amplitudes" in raw:
            problems.append("roughness: give amplitude or amplitudes, not both")
            return None, {}
        if "amplitudes" in raw:
            try:
                amps = [float(a) for a in raw["amplitudes"]]
                harmonics = [int(h) for h in raw.get(
                    "harmonics", range(1, len(amps) + 1))]
            except (TypeError, ValueError):
                problems.append("roughness: amplitudes/harmonics must be "
                                "lists of numbers")
                return None, {}
            if len(harmonics) != len(amps):
                problems.append("roughness: amplitudes and harmonics lengths differ")
                return None, {}
        else:
            amps = [float(_number(raw, "roughness", "amplitude", problems,
                                  default=0.0))]
            harmonics = [1]
        canon = {"kind": "cosine", "mean": mean, "amplitudes": amps,
                 "harmonics": harmonics}
        try:
            profile = make_profile(kind="cosine", mean=mean, amplitudes=amps,
                                   harmonics=harmonics)
        except RugocellError as exc:
            problems.append(f"roughness: {exc}")
            return None, canon
        return profile, canon
    if kind == "tabulated":
        if "samples" in raw:
            try:
                samples = [float(s) for s in raw["samples"]]
            except (TypeError, ValueError):
                problems.append("roughness: samples must be a list of numbers")
                return None, {"kind": "tabulated"}
        elif "sample_file" in raw:
            samples = _load_samples_file(base_dir / raw["sample_file"], problems)
            if samples is None:
                return None, {"kind": "tabulated"}
        else:
            problems.append("roughness: tabulated kind needs samples or sample_file")
            return None, {"kind": "tabulated"}
        canon = {"kind": "tabulated", "samples": samples}
        try:
            profile = make_profile(kind="tabulated", samples=samples)
        except RugocellError as exc:
            problems.append(f"roughness: {exc}")
            return None, canon
        return profile, canon
    problems.append(f"roughness.kind must be cosine or tabulated, got {kind!r}")
    return None, {}


def parse_config(text: str, base_dir: str | Path = ".") -> RunConfig:
    """Parse and validate config text; collects every violation, not just one."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        msg = str(exc)
        m = re.search(r"line (\d+), column (\d+)", msg)
        if m:
            raise ParseError(msg.split(" (at line")[0],
                             line=int(m.group(1)), column=int(m.group(2))) from exc
        raise ParseError(msg) from exc

    problems: list[str] = []
    for section in raw:
        if section not in _SECTIONS:
            problems.append(f"unknown section [{section}]")
    for section in _SECTIONS:
        body = raw.get(section, {})
        if not isinstance(body, dict):
            problems.append(f"[{section}] must be a table")
            continue
        for key in body:
            if key not in _KEYS[section]:
                problems.append(f"unknown key {section}.{key}")

    phys_raw = raw.get("physics", {}) if isinstance(raw.get("physics", {}), dict) else {}
    kwargs = {}
    for key, required, default in (
            ("N", True, None), ("Pr", True, None),
            ("q_left", True, None), ("q_right", True, None),
            ("L", False, 1.0), ("D", False, 0.0), ("M", False, 0.0),
            ("Ra", False, 0.0), ("k", False, 1.0)):
        v = _number(phys_raw, "physics", key, problems,
                    default=default, required=required)
        if v is not None:
            kwargs[key] = v
    physics = None
    if all(k in kwargs for k in ("N", "Pr", "q_left", "q_right")):
        try:
            physics = FluidParams(**kwargs)
        except ValidationError as exc:
            problems.extend(f"physics: {p}" for p in exc.problems)

    rough_raw = raw.get("roughness", {})
    profile, rough_canon = (None, {})
    if isinstance(rough_raw, dict):
        profile, rough_canon = _build_roughness(rough_raw, Path(base_dir),
                                                problems)

    forcing_raw = raw.get("forcing", {}) if isinstance(raw.get("forcing", {}), dict) else {}
    canon_f1 = _canonical_forcing(forcing_raw.get("f1", 0.0), "f1", problems)
    canon_g = _canonical_forcing(forcing_raw.get("g", 0.0), "g", problems)
    canon_G = _canonical_forcing(forcing_raw.get("G", 1.0), "G", problems)
    forcing = None
    if None not in (canon_f1, canon_g, canon_G):
        try:
            forcing = ForcingData.build(f1=canon_f1, g=canon_g, G=canon_G)
        except ValidationError as exc:
            problems.extend(exc.problems)

    reg_raw = raw.get("regime", {}) if isinstance(raw.get("regime", {}), dict) else {}
    mode = reg_raw.get("mode", "critical")
    lam = _number(reg_raw, "regime", "lambda", problems, default=1.0)
    threshold = _number(reg_raw, "regime", "threshold", problems, default=1e-2)
    if mode not in ("critical", "subcritical", "supercritical", "auto"):
        problems.append(f"regime.mode must be critical, subcritical, "
                        f"supercritical, or auto, got {mode!r}")
    elif mode in ("critical", "auto") and not (lam > 0.0 or math.isinf(lam)):
        problems.append(f"regime.lambda must be positive, got {lam}")
    if threshold is not None and threshold <= 0.0:
        problems.append(f"regime.threshold must be positive, got {threshold}")
    regime = Regime(mode=mode, lam=lam, threshold=threshold)

    disc_raw = raw.get("discretization", {}) if isinstance(raw.get("discretization", {}), dict) else {}
    n1 = int(_number(disc_raw, "discretization", "n1", problems, default=96))
    n2 = int(_number(disc_raw, "discretization", "n2", problems, default=96))
    nx1 = int(_number(disc_raw, "discretization", "nx1", problems, default=101))
    tol = _number(disc_raw, "discretization", "tol", problems, default=1e-10)
    max_unknowns = int(_number(disc_raw, "discretization", "max_unknowns",
                               problems, default=200_000))
    for name, n in (("n1", n1), ("n2", n2)):
        if not (8 <= n <= 1024):
            problems.append(f"discretization.{name} must lie in [8, 1024], got {n}")
        elif n % 2:
            problems.append(f"discretization.{name} must be even, got {n}")
    if nx1 < 2:
        problems.append(f"discretization.nx1 must be at least 2, got {nx1}")
    if tol is not None and not (0.0 < tol <= 1e-2):
        problems.append(f"discretization.tol must lie in (0, 1e-2], got {tol}")
    if max_unknowns < 1:
        problems.append("discretization.max_unknowns must be positive")

    out_raw = raw.get("output", {}) if isinstance(raw.get("output", {}), dict) else {}
    directory = str(out_raw.get("directory", "rugocell_out"))
    formats = out_raw.get("formats", ["json", "csv"])
    if isinstance(formats, str):
        formats = [formats]
    if not all(f in ("json", "csv") for f in formats) or not formats:
        problems.append(f"output.formats entries must be json or csv, got {formats!r}")
        formats = ["json", "csv"]
    precision = int(_number(out_raw, "output", "precision", problems, default=12))
    if not (1 <= precision <= 17):
        problems.append(f"output.precision must lie in [1, 17], got {precision}")
    dump_fields = out_raw.get("dump_fields", False)
    if not isinstance(dump_fields, bool):
        problems.append("output.dump_fields must be a boolean")
        dump_fields = False
    surface_measure = out_raw.get("surface_measure", "arclength")
    if surface_measure not in ("arclength", "flat"):
        problems.append(f"output.surface_measure must be arclength or flat, "
                        f"got {surface_measure!r}")

    if problems:
        raise ValidationError(problems)

    return RunConfig(
        profile=profile,
        physics=physics,
        forcing=forcing,
        regime=regime,
        discretization=Discretization(n1=n1, n2=n2, nx1=nx1, tol=tol,
                                      max_unknowns=max_unknowns,
                                      surface_measure=surface_measure),
        output=OutputOptions(directory=directory, formats=tuple(formats),
                             precision=precision, dump_fields=dump_fields,
                             surface_measure=surface_measure),
        roughness_canonical=rough_canon,
        forcing_canonical={"f1": canon_f1, "g": canon_g, "G": canon_G},
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base_dir=path.parent)


def canonical_dict(config: RunConfig) -> dict:
    """The semantically meaningful inputs, with the regime resolved.

    M and Ra are always absent (dead in the limit model).  A subcritical
    run drops the cell grid, the aspect parameter, the drift number D, and
    the surface measure, none of which enter the closed forms.  The
    supercritical stub keeps only the sample count and print precision.
    """
    resolved = config.regime.resolve()
    disc = config.discretization
    if resolved == "supercritical":
        return {
            "regime": {"mode": "supercritical"},
            "discretization": {"nx1": disc.nx1},
            "output": {"precision": config.output.precision},
        }
    p = config.physics
    base = {
        "roughness": config.roughness_canonical,
        "forcing": config.forcing_canonical,
        "physics": {"N": p.N, "Pr": p.Pr, "L": p.L, "k": p.k,
                    "q_left": p.q_left, "q_right": p.q_right},
    }
    if resolved == "subcritical":
        base["regime"] = {"mode": "subcritical"}
        base["discretization"] = {"nx1": disc.nx1}
        base["output"] = {"precision": config.output.precision}
        return base
    base["physics"]["D"] = p.D
    base["regime"] = {"mode": "critical", "lambda": config.regime.lam}
    base["discretization"] = {"n1": disc.n1, "n2": disc.n2, "nx1": disc.nx1,
                              "tol": disc.tol,
                              "max_unknowns": disc.max_unknowns}
    base["output"] = {"precision": config.output.precision,
                      "surface_measure": config.output.surface_measure}
    return base


def config_hash(config: RunConfig) -> str:
    """sha256 over the canonical dictionary, serialized reproducibly."""
    blob = json.dumps(canonical_dict(config), sort_keys=True,
                      separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(blob.encode()).hexdigest()
