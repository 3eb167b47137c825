"""Config parsing, the semantic hash, and report files."""

import json

import numpy as np
import pytest

from rugocell.config import (canonical_dict, config_hash, load_config,
                             parse_config)
from rugocell.errors import ParseError, ValidationError
from rugocell.macro import run_model
from rugocell.report import (ReportFile, build_report_file, emit,
                             profiles_csv, round_floats, sweep)

MINIMAL = """
[physics]
N = 0.5
Pr = 1.0
q_left = 1.0
q_right = 0.0
"""

COSINE = MINIMAL + """
[roughness]
kind = "cosine"
mean = 1.0
amplitude = 0.5

[regime]
mode = "subcritical"

[discretization]
nx1 = 11
"""

SMALL_CRITICAL = MINIMAL + """
[roughness]
kind = "cosine"
mean = 1.0
amplitude = 0.4

[regime]
mode = "critical"
lambda = 1.0

[discretization]
n1 = 16
n2 = 16
nx1 = 9
"""


class TestParsing:
    def test_minimal_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.discretization.n1 == 96
        assert cfg.discretization.n2 == 96
        assert cfg.discretization.nx1 == 101
        assert cfg.regime.mode == "critical"
        assert cfg.regime.lam == 1.0
        assert cfg.output.directory == "rugocell_out"
        assert cfg.output.precision == 12
        assert float(cfg.profile.h(0.37)) == 1.0   # default wall is flat

    def test_missing_required_key(self):
        text = MINIMAL.replace("q_right = 0.0", "")
        with pytest.raises(ValidationError) as info:
            parse_config(text)
        assert "q_right" in str(info.value)

    def test_bad_range_reported_with_name(self):
        with pytest.raises(ValidationError) as info:
            parse_config(MINIMAL.replace("N = 0.5", "N = 1.5"))
        assert "N" in str(info.value)

    def test_problems_aggregate(self):
        text = MINIMAL.replace("N = 0.5", "N = 1.5").replace(
            "Pr = 1.0", "Pr = -2.0")
        with pytest.raises(ValidationError) as info:
            parse_config(text)
        msg = str(info.value)
        assert "N" in msg and "Pr" in msg

    def test_unknown_section(self):
        with pytest.raises(ValidationError) as info:
            parse_config(MINIMAL + "\n[turbulence]\nmodel = 1\n")
        assert "turbulence" in str(info.value)

    def test_unknown_key(self):
        with pytest.raises(ValidationError) as info:
            parse_config(MINIMAL + "\n[discretization]\nn3 = 4\n")
        assert "n3" in str(info.value)

    def test_odd_grid_rejected(self):
        with pytest.raises(ValidationError) as info:
            parse_config(MINIMAL + "\n[discretization]\nn1 = 17\n")
        assert "n1" in str(info.value)

    def test_toml_error_carries_position(self):
        with pytest.raises(ParseError) as info:
            parse_config(MINIMAL + "\nbroken = = 1\n")
        assert info.value.line is not None

    def test_sample_file(self, tmp_path):
        m = 16
        zk = -0.5 + np.arange(m) / m
        lines = ["# wall heights"]
        lines += [f"{v:.12g}" for v in 1.0 + 0.2 * np.cos(2 * np.pi * zk)]
        path = tmp_path / "wall.txt"
        path.write_text("\n".join(lines) + "\n")
        text = MINIMAL + f"""
[roughness]
kind = "tabulated"
sample_file = "wall.txt"
"""
        cfg = parse_config(text, base_dir=tmp_path)
        assert float(cfg.profile.h(0.0)) == pytest.approx(1.2, abs=1e-9)

    def test_load_config(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text(COSINE)
        cfg = load_config(path)
        assert cfg.regime.mode == "subcritical"


class TestSemanticHash:
    def test_presentation_fields_do_not_change_hash(self):
        base = config_hash(parse_config(COSINE))
        decorated = COSINE + """
[physics]
M = 9.0
Ra = 4.0

[output]
directory = "elsewhere"
formats = ["json"]
dump_fields = true
"""
        # merge manually: TOML forbids repeating a table, so patch the text
        text = COSINE.replace("[physics]",
                              "[physics]\nM = 9.0\nRa = 4.0") + """
[output]
directory = "elsewhere"
formats = ["json"]
dump_fields = true
"""
        assert config_hash(parse_config(text)) == base

    def test_semantic_fields_change_hash(self):
        base = config_hash(parse_config(COSINE))
        for old, new in (
                ("N = 0.5", "N = 0.6"),
                ("amplitude = 0.5", "amplitude = 0.3"),
                ("nx1 = 11", "nx1 = 13"),
        ):
            other = config_hash(parse_config(COSINE.replace(old, new)))
            assert other != base, f"{old} -> {new} should change the hash"

    def test_precision_changes_hash(self):
        text = COSINE + "\n[output]\nprecision = 10\n"
        assert config_hash(parse_config(text)) != config_hash(
            parse_config(COSINE))

    def test_subcritical_ignores_cell_grid_and_lambda(self):
        base = config_hash(parse_config(COSINE))
        regrid = COSINE.replace("nx1 = 11", "nx1 = 11\nn1 = 32\nn2 = 32")
        relam = COSINE.replace('mode = "subcritical"',
                               'mode = "subcritical"\nlambda = 0.5')
        assert config_hash(parse_config(regrid)) == base
        assert config_hash(parse_config(relam)) == base

    def test_critical_sees_cell_grid_and_lambda(self):
        base = config_hash(parse_config(SMALL_CRITICAL))
        regrid = SMALL_CRITICAL.replace("n1 = 16", "n1 = 32")
        relam = SMALL_CRITICAL.replace("lambda = 1.0", "lambda = 2.0")
        assert config_hash(parse_config(regrid)) != base
        assert config_hash(parse_config(relam)) != base

    def test_auto_matches_resolved_mode(self):
        auto = SMALL_CRITICAL.replace('mode = "critical"', 'mode = "auto"')
        a, b = parse_config(auto), parse_config(SMALL_CRITICAL)
        assert canonical_dict(a) == canonical_dict(b)
        assert config_hash(a) == config_hash(b)

    def test_supercritical_ignores_roughness(self):
        sup = COSINE.replace('mode = "subcritical"', 'mode = "supercritical"')
        other = sup.replace("amplitude = 0.5", "amplitude = 0.2")
        assert config_hash(parse_config(sup)) == config_hash(
            parse_config(other))

    def test_hash_is_hex_sha256(self):
        h = config_hash(parse_config(MINIMAL))
        assert len(h) == 64
        int(h, 16)


class TestRounding:
    def test_nan_and_inf_become_null(self):
        out = round_floats({"a": float("nan"), "b": float("inf"),
                            "c": [1.0, float("-inf")]}, 12)
        assert out["a"] is None and out["b"] is None
        assert out["c"][1] is None

    def test_precision_applied(self):
        assert round_floats(1.0 / 3.0, 3) == 0.333

    def test_numpy_scalars_coerced(self):
        out = round_floats({"v": np.float64(0.5), "n": np.int64(3)}, 12)
        assert type(out["v"]) is float and type(out["n"]) is int


@pytest.fixture(scope="module")
def sub_run():
    cfg = parse_config(COSINE)
    rep = run_model(cfg.profile, cfg.physics, cfg.forcing, cfg.regime,
                    cfg.discretization)
    return cfg, rep


class TestReportFile:
    def test_round_trip(self, sub_run):
        cfg, rep = sub_run
        rf = build_report_file(rep, cfg, timestamp="2026-01-01T00:00:00Z")
        again = ReportFile.parse(rf.serialize())
        assert again == rf

    def test_metadata(self, sub_run):
        cfg, rep = sub_run
        rf = build_report_file(rep, cfg, timestamp="x")
        assert rf.metadata["config_hash"] == config_hash(cfg)
        assert rf.metadata["tool"] == "rugocell"
        assert rf.regime["mode"] == "subcritical"

    def test_serialized_json_has_no_nan(self, sub_run):
        cfg, rep = sub_run
        text = build_report_file(rep, cfg, timestamp="x").serialize()
        json.loads(text)           # strict: would fail on bare NaN
        assert "NaN" not in text

    def test_profiles_csv_shape(self, sub_run):
        cfg, rep = sub_run
        text = profiles_csv(rep, cfg.output.precision)
        lines = text.strip().split("\n")
        assert lines[0] == "x1,p,U1_av,U2_av,W_av,T_av"
        assert len(lines) == 1 + cfg.discretization.nx1
        u2 = [row.split(",")[3] for row in lines[1:]]
        assert set(u2) == {"0"}


class TestEmit:
    def test_writes_and_determinism(self, sub_run, tmp_path):
        cfg, rep = sub_run
        out1 = emit(rep, cfg, out_dir=tmp_path / "one")
        out2 = emit(rep, cfg, out_dir=tmp_path / "two")
        names1 = sorted(p.name for p in out1)
        names2 = sorted(p.name for p in out2)
        assert "report.json" in names1 and "profiles.csv" in names1
        assert names1 == names2
        for name in names1:
            a = (tmp_path / "one" / name).read_text()
            b = (tmp_path / "two" / name).read_text()
            if name == "report.json":
                a = "\n".join(l for l in a.split("\n") if '"created"' not in l)
                b = "\n".join(l for l in b.split("\n") if '"created"' not in l)
            assert a == b, f"{name} differs between identical runs"

    def test_sweep_rows(self):
        cfg = parse_config(SMALL_CRITICAL)
        rows = sweep(cfg, [1.0, 0.5])
        lams = [row["lambda"] for row in rows]
        assert lams[0] == 0.0           # closed-form row comes first
        assert lams[1:] == [0.5, 1.0]   # then sorted aspect values
        assert rows[0]["a"] > 0.0
        for row in rows[1:]:
            assert row["a"] > 0.0 and row["b"] > 0.0

    def test_sweep_empty_list_keeps_reference_row(self):
        cfg = parse_config(COSINE)
        rows = sweep(cfg, [])
        assert len(rows) == 1 and rows[0]["lambda"] == 0.0
