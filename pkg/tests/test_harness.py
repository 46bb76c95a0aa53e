import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from esav import spectral as sp
from esav.errors import ConfigError, InvalidArgumentError, InvariantViolation
from esav.harness import (
    PRESETS,
    InvariantMonitor,
    RunConfig,
    apply_overrides,
    compare_sav_esav,
    convergence_study,
    energy_ladder,
    initial_condition,
    integrate,
    preset,
    reference_solution,
    run_simulation,
    splitmix64,
    uniform,
)
from esav.harness import io, studies
from esav.harness.initial import two_bubbles
from esav.spectral import Grid

from oracles import BUBBLE_CENTRE_VALUE, SPLITMIX64_SEED0, heat_mode_factor_euler


@pytest.fixture(autouse=True)
def private_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("ESAV_CACHE_DIR", str(tmp_path / "cache"))
    monkeypatch.setenv("ESAV_THREADS", "1")


def small(**kw):
    base = dict(nx=16, ny=16, dt=1e-3, t_final=1e-2)
    base.update(kw)
    return RunConfig(**base)


# -- random numbers and initial data -------------------------------------------


def test_splitmix64_test_vector():
    assert tuple(int(v) for v in splitmix64(0, 3)) == SPLITMIX64_SEED0


def test_splitmix64_offsets_continue_the_stream():
    full = splitmix64(12345, 10)
    assert np.array_equal(full[4:], splitmix64(12345, 6, offset=4))


@given(st.integers(0, 2**64 - 1))
def test_uniform_range_and_determinism(seed):
    u = uniform(seed, (8, 8))
    assert u.min() >= -1.0 and u.max() < 1.0
    assert np.array_equal(u, uniform(seed, (8, 8)))


def test_seed_out_of_range():
    with pytest.raises(ConfigError):
        splitmix64(2**64, 1)
    with pytest.raises(ConfigError, match="seed"):
        small(seed=-1)


def test_bubble_centre_value():
    g = Grid(10, 10, 1.0, 1.0)
    phi = two_bubbles(g)
    assert phi[3, 5] == pytest.approx(BUBBLE_CENTRE_VALUE, abs=1e-14)
    assert phi.min() > -1.0 - 1e-12 and phi.max() < 1.0 + 1e-12


def test_initial_conditions():
    g = Grid(32, 32)
    ex3 = initial_condition("example3", g, 7)["phi"]
    assert ex3.min() >= 0.25 - 0.4 and ex3.max() < 0.25 + 0.4
    assert abs(ex3.mean() - 0.25) < 0.1
    ex5 = initial_condition("example5", g, 7)["phi"]
    assert ex5.mean() == pytest.approx(0.07, abs=1e-15)
    ex7 = initial_condition("example7", g, 7)
    assert np.abs(ex7["phi"]).max() <= 1e-3 and np.abs(ex7["rho"] - 0.2).max() <= 1e-3
    # phi and rho use disjoint parts of the stream
    assert not np.allclose(ex7["phi"], 1e3 * (ex7["rho"] - 0.2) * 1e-3)
    with pytest.raises(ConfigError, match="unknown initial"):
        initial_condition("example9", g)


def test_crystallite_datum():
    cfg = preset("example4-reduced")
    phi = initial_condition(cfg.initial, cfg.grid(), 0)["phi"]
    assert phi[0, 0] == pytest.approx(0.285)
    assert phi.max() > 0.285 + 0.25


# -- configuration -------------------------------------------------------------


def test_example1_defaults():
    c = preset("example1")
    assert (c.model, c.epsilon, c.mobility, c.nx, c.ny, c.t_final) == ("allen-cahn", 0.1, 1.0, 128, 128, 0.032)
    assert c.n_steps == 200
    assert c.ladder == (1.6e-4, 8e-5, 4e-5, 2e-5, 1e-5) and c.reference_dt == 1e-8


def test_presets_validate_and_build():
    for name, p in PRESETS.items():
        c = p.config
        assert c.example == name
        c.integrator()


def test_unknown_preset():
    with pytest.raises(ConfigError, match="example"):
        preset("example42")


@pytest.mark.parametrize("change,field", [
    (dict(model="stokes"), "model"),
    (dict(scheme="mesav1"), "scheme"),
    (dict(nx=15), "nx"),
    (dict(dt=-1.0), "dt"),
    (dict(dt=1.0), "dt"),
    (dict(epsilon=0.0), "epsilon"),
    (dict(snapshot_times=(1.0,)), "snapshot_times"),
    (dict(trace_every=0), "trace_every"),
    (dict(scheme="esav1", c=0.0), "c"),
    (dict(ladder=(1e-3, -1e-3)), "ladder"),
])
def test_validation_names_field(change, field):
    with pytest.raises(ConfigError) as info:
        small(**change)
    assert info.value.field == field
    assert field in str(info.value)


@pytest.mark.parametrize("t,dt,n", [(0.032, 1.6e-4, 200), (1.0, 0.3, 4), (6.0, 1e-3, 6000), (0.1, 0.1, 1)])
def test_step_count(t, dt, n):
    assert small(t_final=t, dt=dt).n_steps == n


def test_with_drops_late_snapshots():
    c = preset("example2").with_(t_final=1.0)
    assert max(c.snapshot_times) <= 1.0
    with pytest.raises(ConfigError):
        preset("example2").with_(t_final=1.0, snapshot_times=(2.0,))


def test_physics_key_ignores_output_options():
    a = small()
    assert a.physics_key() == a.with_(trace_every=5, checks=False, example="x").physics_key()
    assert a.physics_key() != a.with_(seed=1).physics_key()


def test_coerce_and_overrides():
    c = apply_overrides(RunConfig(), {"example": "example6", "dt": "1e-3", "checks": "off", "c": "none"})
    assert c.model == "surfactant" and c.dt == 1e-3 and c.checks is False and c.c is None
    with pytest.raises(ConfigError, match="epsilonn"):
        apply_overrides(RunConfig(), {"epsilonn": "0.1"})
    with pytest.raises(ConfigError, match="nx"):
        apply_overrides(RunConfig(), {"nx": "many"})


# -- files ----------------------------------------------------------------------


def test_snapshot_roundtrip_is_bit_exact(tmp_path):
    g = Grid(8, 6, 1.5, 2.5)
    f = np.random.default_rng(0).standard_normal(g.shape)
    p = io.write_snapshot(tmp_path / "a.snap", g, f, 0.1)
    raw = p.read_bytes()
    header, _, body = raw.partition(b"\n")
    assert header == b"ESAVSNAP v1 8 6 1.5 2.5 0.10000000000000001"
    assert body == f.astype("<f8").tobytes()
    g2, f2, t = io.read_snapshot(p)
    assert g2 == g and t == 0.1 and np.array_equal(f, f2)


def test_snapshot_rejects_garbage(tmp_path):
    p = tmp_path / "bad.snap"
    p.write_bytes(b"NOPE\n1234")
    with pytest.raises(InvalidArgumentError):
        io.read_snapshot(p)


def test_trace_header():
    assert ",".join(io.trace_header(False)) == "t,E_original,E_modified,s_r,mass,inner_iters,solves"
    assert ",".join(io.trace_header(True)) == "t,E_original,E_modified,s_r,s_q,mass,mass_rho,inner_iters,solves"


def test_fmt_keeps_full_precision():
    x = 0.1 + 0.2
    assert float(io.fmt(x)) == x and io.fmt(3) == "3"


def test_config_file_parsing(tmp_path):
    p = tmp_path / "a.ini"
    p.write_text("# comment\nexample = \"example1\"\ndt = 8e-5  # finer\n", encoding="utf-8")
    pairs, lines = io.read_config_pairs(p)
    assert pairs == {"example": '"example1"', "dt": "8e-5"}
    assert lines == {"example": 2, "dt": 3}


@pytest.mark.parametrize("text,line", [
    ("dt = 1\ndt = 2\n", 2),
    ("dt = 1\nthis is not a pair\n", 2),
])
def test_config_file_errors_carry_line(tmp_path, text, line):
    p = tmp_path / "bad.ini"
    p.write_text(text, encoding="utf-8")
    with pytest.raises(ConfigError) as info:
        io.read_config_pairs(p)
    assert info.value.line == line and f":{line}:" in str(info.value)


def test_config_file_rejects_other_sections(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[run]\ndt = 1\n[extra]\nx = 1\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="extra"):
        io.read_config_pairs(p)


def test_config_echo_roundtrip(tmp_path):
    c = preset("example2").with_(seed=2**63 + 5, c=3.5)
    io.write_config(tmp_path / "c.ini", c)
    pairs, _ = io.read_config_pairs(tmp_path / "c.ini")
    assert apply_overrides(RunConfig(), pairs) == c


# -- runs ------------------------------------------------------------------------


def test_run_writes_artifacts(tmp_path):
    c = small(snapshot_times=(0.0, 0.005, 0.01))
    res = run_simulation(c, tmp_path)
    assert res.ok and res.steps == 10 and res.total_solves == 10
    assert {p.name for p in tmp_path.iterdir()} >= {"config.ini", "trace.csv", "summary.json"}
    assert len(res.snapshot_paths) == 3
    tr = io.read_trace(tmp_path / "trace.csv")
    assert len(tr["t"]) == 11 and tr["t"][-1] == pytest.approx(0.01)
    assert np.all(np.diff(tr["E_modified"]) <= 0)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["violation_count"] == 0 and summary["steps"] == 10
    _, phi, t = io.read_snapshot(tmp_path / io.snapshot_name("phi", 0.01))
    assert t == pytest.approx(0.01) and np.array_equal(phi, res.state.phi)


def test_trace_cadence():
    res = run_simulation(small(trace_every=3))
    steps = np.rint(res.trace["t"] / 1e-3).astype(int)
    assert list(steps) == [0, 3, 6, 9, 10]


def test_runs_are_bitwise_deterministic(tmp_path):
    c = small(model="cahn-hilliard", initial="example3", seed=11, snapshot_times=(0.01,))
    run_simulation(c, tmp_path / "a")
    run_simulation(c, tmp_path / "b")
    for name in ("trace.csv", io.snapshot_name("phi", 0.01)):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_surfactant_run_trace(tmp_path):
    c = preset("example6").with_(nx=16, ny=16, t_final=0.05)
    res = run_simulation(c, tmp_path)
    assert res.ok and res.max_inner_iters >= 1 and res.max_ledger_residual < 1e-11
    assert set(io.read_trace(tmp_path / "trace.csv")) == set(io.trace_header(True))


def test_monitor_flags_energy_rise_and_mass_drift():
    m = InvariantMonitor(10.0, {"mass": 1.0}, slack=1e-8, tol=1e-12, check_mass=True)
    m.update(1, 0.1, 9.0, {"mass": 1.0})
    assert not m.violations
    m.update(2, 0.2, 9.5, {"mass": 1.0 + 1e-9})
    assert [v.kind for v in m.violations] == ["energy", "mass"]


def test_raise_for_violations():
    res = run_simulation(small())
    res.raise_for_violations()
    m = InvariantMonitor(1.0, {}, slack=0.0, tol=0.0, check_mass=False)
    m.update(1, 0.1, 1.0 + 1e-15, {})
    res.violations = m.violations
    assert not res.ok and "1 invariant violation" in res.summary()
    with pytest.raises(InvariantViolation, match="step 1"):
        res.raise_for_violations()


def test_integrate_matches_run():
    c = small()
    state, _, solves = integrate(c)
    assert np.array_equal(state.phi, run_simulation(c).state.phi) and solves == 10


# -- studies ---------------------------------------------------------------------


def linear_cfg(scheme="esav1"):
    return RunConfig(model="linear-test", scheme=scheme, initial="sin-x", nx=16, ny=16, dt=0.1, t_final=0.8)


def test_exact_linear_solution():
    c = linear_cfg()
    x, _ = c.grid().mesh()
    ref = studies.exact_linear_solution(c)["phi"]
    assert np.max(np.abs(ref - math.exp(-0.8) * np.sin(x))) < 1e-14
    with pytest.raises(ConfigError):
        studies.exact_linear_solution(small())


@pytest.mark.parametrize("scheme,order", [("esav1", 1), ("sav1", 1), ("esav-cn", 2), ("sav-cn", 2)])
def test_convergence_against_exact(tmp_path, scheme, order):
    c = linear_cfg(scheme)
    rep = convergence_study(c, ladder=(0.1, 0.05, 0.025, 0.0125), out_csv=tmp_path / "conv.csv")
    assert rep.ok and rep.rates["phi"][0] is None
    for r in rep.rates["phi"][1:]:
        assert abs(r - order) < 0.1
    lines = (tmp_path / "conv.csv").read_text().splitlines()
    assert lines[0] == "dt,error_phi,rate_phi" and len(lines) == 5
    if order == 1:
        x, _ = c.grid().mesh()
        expect = abs(heat_mode_factor_euler(1.0, 0.1, 1.0) ** 8 - math.exp(-0.8)) * math.sqrt(2) * math.pi
        assert rep.errors["phi"][0] == pytest.approx(expect, rel=1e-10)


def test_ladder_must_divide_final_time():
    with pytest.raises(ConfigError, match="whole number"):
        convergence_study(linear_cfg(), ladder=(0.3,))


def test_reference_cache(tmp_path):
    c = small(t_final=4e-3)
    a = reference_solution(c, 1e-4)
    files = sorted(p.name for p in (tmp_path / "cache").iterdir())
    assert len(files) == 2 and files[0].endswith(".json")
    b = reference_solution(c, 1e-4)
    assert np.array_equal(a["phi"], b["phi"])
    assert studies.reference_key(c.with_(dt=1e-4)) != studies.reference_key(c.with_(dt=1e-4, seed=3))


def test_reference_cache_can_be_disabled(tmp_path, monkeypatch):
    monkeypatch.setenv("ESAV_CACHE_DIR", "off")
    assert studies.cache_dir() is None
    reference_solution(small(t_final=2e-3), 1e-4)


def test_reference_convergence_study(tmp_path):
    c = small(model="cahn-hilliard", mobility=0.1, t_final=8e-3, ladder=(8e-4, 4e-4, 2e-4), reference_dt=2e-5)
    rep = convergence_study(c)
    assert rep.reference_dt == 2e-5 and all(abs(r - 1) < 0.1 for r in rep.rates["phi"][1:])


def test_comparison(tmp_path):
    c = linear_cfg()
    comp = compare_sav_esav(c, ladder=(0.1, 0.05), out_dir=tmp_path)
    per_e, per_s = comp.solves_per_step()
    assert per_e == [1.0, 1.0] and per_s == [2.0, 2.0]
    assert (tmp_path / "comparison.csv").read_text().startswith(
        "dt,error_esav,error_sav,wall_esav,wall_sav,solves_esav,solves_sav")
    assert (tmp_path / "convergence_esav1.csv").exists() and (tmp_path / "convergence_sav1.csv").exists()
    with pytest.raises(ConfigError):
        compare_sav_esav(preset("example6"), ladder=(1e-2,))


def test_energy_ladder(tmp_path):
    c = small(t_final=0.02)
    out = energy_ladder(c, (1e-3, 1e-2), out_dir=tmp_path)
    assert set(out) == {1e-3, 1e-2} and all(r.ok for r in out.values())
    assert (tmp_path / "dt_0.001" / "trace.csv").exists() and (tmp_path / "dt_0.01" / "trace.csv").exists()


def test_parallel_ladder_matches_serial(monkeypatch):
    c = linear_cfg()
    serial = convergence_study(c, ladder=(0.1, 0.05), workers=1)
    parallel = convergence_study(c, ladder=(0.1, 0.05), workers=2)
    assert serial.errors == parallel.errors


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("ESAV_THREADS", "3")
    assert studies.max_workers(10) == 3 and studies.max_workers(2) == 2
    monkeypatch.setenv("ESAV_THREADS", "zero")
    with pytest.raises(ConfigError, match="ESAV_THREADS"):
        studies.max_workers(4)


def test_mass_integral_of_constant():
    g = Grid(16, 16, 3.0, 5.0)
    assert sp.integral(g, np.full(g.shape, 2.0)) == pytest.approx(30.0)
