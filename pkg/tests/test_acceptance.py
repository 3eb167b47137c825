"""Acceptance gate: ten checks, one visible pass/fail line each.

Each test prints a single [C##] PASS/FAIL line with the measured numbers
(capture is bypassed so the lines always reach the terminal), then asserts.
"""

import time

import numpy as np
import pytest

from rugocell.config import parse_config
from rugocell.geometry import build_mesh, make_profile
from rugocell.laplace_cell import energy_identity_check as laplace_energy
from rugocell.laplace_cell import solve_laplace_cell
from rugocell.heat_cell import temperature_profile
from rugocell.macro import FluidParams, ForcingData, pressure_profile
from rugocell.report import build_report_file, emit, run_from_config
from rugocell.stokes_cell import energy_identity_check as stokes_energy
from rugocell.stokes_cell import solve_stokes_cell
from rugocell.subcritical import (compute_coefficients, compute_pi_prime,
                                  pi_prime_ode_residual)

SMOOTH = 1.0 / 12.0


@pytest.fixture
def announce(capsys):
    def _p(line):
        with capsys.disabled():
            print("\n" + line)
    return _p


def check(announce, tag, ok, detail):
    announce(f"[{tag}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"{tag}: {detail}"


def simpson(fn, panels=100_000):
    z = np.linspace(-0.5, 0.5, 2 * panels + 1)
    w = np.ones_like(z)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float(np.sum(w * fn(z)) / (2 * panels) / 3.0)


@pytest.fixture(scope="module")
def flat96():
    """Flat-wall 96x96 flow and rotation solves for lam in {0.5, 1, 2}."""
    profile = make_profile(kind="cosine", mean=1.0, amplitude=0.0)
    mesh = build_mesh(profile, 96, 96)
    t0 = time.perf_counter()
    solves = {lam: (solve_stokes_cell(mesh, lam), solve_laplace_cell(mesh, lam))
              for lam in (0.5, 1.0, 2.0)}
    elapsed = time.perf_counter() - t0
    return {"profile": profile, "mesh": mesh, "solves": solves,
            "elapsed": elapsed}


@pytest.fixture(scope="module")
def cosine_series():
    """Cosine-wall solves at lam = 1 under mesh doubling, with timings."""
    profile = make_profile(kind="cosine", mean=1.0, amplitude=0.5)
    rows = {}
    for n in (48, 96, 192):
        mesh = build_mesh(profile, n, n)
        t0 = time.perf_counter()
        st = solve_stokes_cell(mesh, 1.0)
        t_st = time.perf_counter() - t0
        t0 = time.perf_counter()
        la = solve_laplace_cell(mesh, 1.0)
        t_la = time.perf_counter() - t0
        rows[n] = {"stokes": st, "laplace": la, "t_stokes": t_st,
                   "t_laplace": t_la}
    return {"profile": profile, "rows": rows}


def test_c01_flat_wall_recovery(flat96, announce):
    errs = []
    for lam, (st, la) in flat96["solves"].items():
        errs.append(abs(st.a_lambda - SMOOTH) / SMOOTH)
        errs.append(abs(la.b_lambda - SMOOTH) / SMOOTH)
    worst = max(errs)
    elapsed = flat96["elapsed"]
    ok = worst <= 5e-3 and elapsed <= 30.0
    check(announce, "C01", ok,
          f"flat wall 96x96, lam in {{0.5, 1, 2}}: worst relative error "
          f"{worst:.2e} vs 1/12 (limit 5e-3), six solves in {elapsed:.1f} s "
          f"(limit 30 s)")


def test_c02_energy_identities(flat96, cosine_series, announce):
    errs = []
    for st, la in flat96["solves"].values():
        errs.append(stokes_energy(st))
        errs.append(laplace_energy(la))
    for row in cosine_series["rows"].values():
        errs.append(stokes_energy(row["stokes"]))
        errs.append(laplace_energy(row["laplace"]))
    worst = max(errs)
    ok = worst <= 1e-6
    check(announce, "C02", ok,
          f"energy identity defect over {len(errs)} converged solves: "
          f"max {worst:.2e} relative (limit 1e-6)")


def test_c03_incompressibility(flat96, cosine_series, announce):
    divs, fluxes = [], []
    for st, _ in flat96["solves"].values():
        divs.append(st.divergence_residual)
        fluxes.append(abs(st.int_u2))
    for row in cosine_series["rows"].values():
        divs.append(row["stokes"].divergence_residual)
        fluxes.append(abs(row["stokes"].int_u2))
    ok = max(divs) <= 1e-10 and max(fluxes) <= 1e-8
    check(announce, "C03", ok,
          f"direct-path scaled divergence: max {max(divs):.2e} "
          f"(limit 1e-10); vertical flux |int u2|: max {max(fluxes):.2e} "
          f"(limit 1e-8), not imposed by the solver")


def test_c04_subcritical_oracle(announce):
    t0 = time.perf_counter()
    profile = make_profile(kind="cosine", mean=1.0, amplitude=0.5)
    G = ForcingData.build(G=1.0).G
    coeffs = compute_coefficients(profile, G)
    h = lambda z: np.asarray(profile.h(z))
    j3 = simpson(lambda z: h(z) ** 3)
    j6 = simpson(lambda z: h(z) ** 6)
    a_brute = (2.0 * j3 - j6 / j3) / 12.0
    b_brute = j3 / 12.0
    c_brute = 0.5 * simpson(lambda z: h(z) ** 2)
    elapsed = time.perf_counter() - t0
    gaps = (abs(coeffs.a0 - a_brute), abs(coeffs.b0 - b_brute),
            abs(coeffs.c0 - c_brute))
    near = (abs(coeffs.a0 - 0.0333215) <= 1e-7
            and abs(coeffs.b0 - 0.1145833) <= 1e-7
            and abs(coeffs.c0 - 0.5625) <= 1e-12)
    ok = max(gaps) <= 1e-10 and near and elapsed <= 1.0
    check(announce, "C04", ok,
          f"closed forms vs 1e5-panel Simpson oracle: gaps a={gaps[0]:.1e} "
          f"b={gaps[1]:.1e} c={gaps[2]:.1e} (limit 1e-10); values "
          f"a0={coeffs.a0:.7f} b0={coeffs.b0:.7f} c0={coeffs.c0:.4f}; "
          f"{elapsed:.2f} s (limit 1 s)")


def test_c05_pressure_cell_ode(announce):
    profile = make_profile(kind="cosine", mean=1.0, amplitude=0.5)
    residual = pi_prime_ode_residual(profile, 2000)
    q = compute_pi_prime(profile)
    mean = abs(simpson(lambda z: np.asarray(q(z))))
    ok = residual <= 1e-8 and mean <= 1e-10
    check(announce, "C05", ok,
          f"closed-form pressure gradient: max ODE residual {residual:.2e} "
          f"(limit 1e-8), mean over the period {mean:.2e} (limit 1e-10)")


def test_c06_pressure_endpoints_and_linearity(announce):
    rng = np.random.default_rng(2026)
    x1 = np.linspace(-0.5, 0.5, 21)

    def draw():
        ql, qr = rng.normal(scale=3.0, size=2)
        c = rng.normal(size=3)
        amp = rng.normal()
        f1 = lambda x, c=c, amp=amp: (
            c[0] + c[1] * np.asarray(x) + c[2] * np.asarray(x) ** 2
            + amp * np.cos(2.0 * np.pi * np.asarray(x)))
        params = FluidParams(N=0.5, Pr=float(rng.uniform(0.2, 5.0)),
                             q_left=float(ql), q_right=float(qr))
        return params, f1

    exact = 0
    instances = [draw() for _ in range(100)]
    for params, f1 in instances:
        p = pressure_profile(params, f1, x1)
        if p[0] == params.q_left and p[-1] == params.q_right:
            exact += 1

    worst_super = 0.0
    for i in range(0, 50, 2):
        (pa, fa), (pb, fb) = instances[i], instances[i + 1]
        if pa.Pr != pb.Pr:
            pb = FluidParams(N=pb.N, Pr=pa.Pr, q_left=pb.q_left,
                             q_right=pb.q_right)
        merged = FluidParams(N=pa.N, Pr=pa.Pr,
                             q_left=pa.q_left + pb.q_left,
                             q_right=pa.q_right + pb.q_right)
        fsum = lambda x, fa=fa, fb=fb: np.asarray(fa(x)) + np.asarray(fb(x))
        gap = np.abs(pressure_profile(merged, fsum, x1)
                     - pressure_profile(pa, fa, x1)
                     - pressure_profile(pb, fb, x1)).max()
        worst_super = max(worst_super, gap)

    ok = exact == 100 and worst_super <= 1e-12
    check(announce, "C06", ok,
          f"pressure endpoints bitwise equal to the boundary data in "
          f"{exact}/100 random (q, f1) instances; worst superposition "
          f"defect {worst_super:.2e} over 25 pairs (limit 1e-12)")


def test_c07_heat_degenerate_case(flat96, announce):
    mesh = flat96["mesh"]
    w = flat96["solves"][1.0][1]
    forcing = ForcingData.build(f1=0.0, g=1.0, G=1.0)
    x1 = np.linspace(-0.5, 0.5, 5)

    def solve(k):
        params = FluidParams(N=0.5, Pr=1.0, q_left=1.0, q_right=0.0,
                             D=0.0, k=k)
        t_av, _ = temperature_profile(mesh, 1.0, w, params, forcing.g,
                                      forcing.G, x1)
        return t_av

    t1 = solve(1.0)
    err_crit = np.abs(t1 - 0.5).max() / 0.5
    t3 = solve(3.0)
    lin = np.abs(t3 - 3.0 * t1).max() / np.abs(t3).max()
    coeffs = compute_coefficients(flat96["profile"], forcing.G)
    sub_gap = abs(coeffs.c0 * 1.0 - 0.5)
    ok = err_crit <= 5e-3 and sub_gap <= 1e-15 and lin <= 1e-10
    check(announce, "C07", ok,
          f"flat wall, D=0, G=1, k=1: critical T_av off 0.5 by "
          f"{err_crit:.2e} relative (limit 5e-3); closed-form c0*k - 0.5 = "
          f"{sub_gap:.1e} (limit 1e-15); k-linearity defect {lin:.2e} "
          f"(limit 1e-10)")


def test_c08_grid_convergence(cosine_series, announce):
    rows = cosine_series["rows"]
    a = {n: rows[n]["stokes"].a_lambda for n in (48, 96, 192)}
    b = {n: rows[n]["laplace"].b_lambda for n in (48, 96, 192)}
    order_a = np.log2(abs(a[48] - a[96]) / abs(a[96] - a[192]))
    order_b = np.log2(abs(b[48] - b[96]) / abs(b[96] - b[192]))
    slowest = max(max(r["t_stokes"], r["t_laplace"]) for r in rows.values())
    ok = order_a >= 1.8 and order_b >= 1.8 and slowest <= 60.0
    check(announce, "C08", ok,
          f"cosine wall, 48 -> 96 -> 192 doubling: observed order "
          f"a={order_a:.2f}, b={order_b:.2f} (limit 1.8); slowest single "
          f"solve {slowest:.1f} s (limit 60 s)")


CONFIG_TEMPLATE = """
[physics]
N = 0.5
Pr = 1.0
q_left = 1.0
q_right = 0.0
M = {M}
Ra = {Ra}

[roughness]
kind = "cosine"
mean = 1.0
amplitude = 0.4

[forcing]
f1 = 0.3
g = 1.0

[regime]
mode = "{mode}"
lambda = 1.0

[discretization]
n1 = 16
n2 = 16
nx1 = 9

[output]
dump_fields = true
"""


def _frozen_report(text):
    cfg = parse_config(text)
    report = run_from_config(cfg)
    return build_report_file(report, cfg, timestamp="1970-01-01T00:00:00Z")


def test_c09_dead_parameters(announce):
    gaps = []
    for mode in ("critical", "subcritical"):
        base = _frozen_report(
            CONFIG_TEMPLATE.format(M=0.0, Ra=0.0, mode=mode)).serialize()
        bumped = _frozen_report(
            CONFIG_TEMPLATE.format(M=11.0, Ra=4.5, mode=mode)).serialize()
        gaps.append((mode, base == bumped))
    ok = all(same for _, same in gaps)
    check(announce, "C09", ok,
          "perturbing M and Ra leaves the serialized report bit-identical: "
          + ", ".join(f"{mode}={same}" for mode, same in gaps))


def test_c10_determinism(tmp_path, announce):
    cfg = parse_config(CONFIG_TEMPLATE.format(M=0.0, Ra=0.0, mode="critical"))
    written = []
    for sub in ("one", "two"):
        report = run_from_config(cfg)
        written.append(emit(report, cfg, out_dir=tmp_path / sub))
    names = sorted(p.name for p in written[0])
    identical = []
    for name in names:
        a = (tmp_path / "one" / name).read_text()
        b = (tmp_path / "two" / name).read_text()
        if name == "report.json":
            strip = lambda t: "\n".join(
                l for l in t.split("\n") if '"created"' not in l)
            a, b = strip(a), strip(b)
        identical.append(a == b)
    ok = len(names) >= 2 and all(identical)
    check(announce, "C10", ok,
          f"two identical runs: {sum(identical)}/{len(names)} emitted files "
          f"byte-identical modulo the timestamp ({', '.join(names)})")
