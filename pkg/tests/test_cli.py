import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phaseless_dsm import cli
from phaseless_dsm.config import ConfigError, format_config, parse_config
from phaseless_dsm.forward import NoiseSpec, read_phased_csv, read_phaseless_csv
from phaseless_dsm.sampling import SamplingGrid
from phaseless_dsm.scene import Rectangle

BASE = """\
[scenario]
name = tiny
mode = {mode}

[source]
g = 1

[component.1]
shape = rect(1, 2, 1, 1.6)
f = 5

[wavenumbers]
k_min = 0.5
k_max = 20
count = 20

[directions]
count = 4
arc_start = -pi/2
arc_stop = pi/2

[reference]
z0 = {z0}
tau = {tau}

[noise]
type = relative
level = 0.1
seed = 7

[sampling]
x_lo = -2
x_hi = 4
y_lo = -2
y_hi = 4
nx = 21
ny = 21
"""


def text(mode="full-scheme-two", z0="(4, 4)", tau="1, -1, i"):
    return BASE.format(mode=mode, z0=z0, tau=tau)


# -- parsing ------------------------------------------------------------------------

def test_bundled_rect_s5_parses():
    cfg = parse_config(cli.bundled_scenarios()["rect-s5"])
    assert cfg.mode == "full-scheme-two"
    assert cfg.components == (("rect(1, 2, 1, 1.6)", "5"),)
    assert (cfg.k_min, cfg.k_max, cfg.count) == (0.5, 20.0, 20)
    assert cfg.z0s == ((4.0, 4.0),)
    assert cfg.taus == (1, -1, 1j)
    assert len(cfg.angles) == 20 and cfg.angles[-1] == pytest.approx(math.pi / 2)
    assert cfg.model().components[0].shape == Rectangle(1, 2, 1, 1.6)


@pytest.mark.parametrize("name", sorted(cli.bundled_scenarios()))
def test_every_bundled_scenario_validates(name):
    parse_config(cli.bundled_scenarios()[name])


def test_bundled_scenarios_cover_all_reference_points():
    z0s = {cfg.z0s for cfg in map(parse_config, cli.bundled_scenarios().values())}
    for z0 in ((1.5, 4.0), (4.0, 4.0), (12.0, 12.0)):
        assert (z0,) in z0s


def errors_of(source):
    with pytest.raises(ConfigError) as info:
        parse_config(source)
    return info.value.errors


def test_empty_tau_rejected_for_scheme_two():
    errs = errors_of(text(tau=""))
    assert any("tau" in e for e in errs)


def test_duplicate_angles_rejected():
    source = text().replace("count = 4\narc_start = -pi/2\narc_stop = pi/2", "angles = 0, 0.5, 0")
    assert any("duplicate direction" in e for e in errors_of(source))


def test_unknown_key_reported_with_line():
    source = text().replace("f = 5", "f = 5\ncolour = red")
    errs = errors_of(source)
    line = source.splitlines().index("colour = red") + 1
    assert errs == [f"line {line}: [component.1] colour: unknown key"]


@pytest.mark.parametrize("change, needle", [
    (("[scenario]", "[scene]"), "unknown section"),
    (("mode = full-scheme-two", "mode = draw"), "mode"),
    (("f = 5", "f = sin(x)"), "f"),
    (("tau = 1, -1, i", "tau = 1, -1, 2"), "collinear"),
    (("z0 = (4, 4)", "z0 = (1.5, 1.2)"), "inside the source support"),
    (("k_min = 0.5", "k_min = 0.6"), "k_min"),
    (("level = 0.1", "level = -0.1"), "non-negative"),
    (("nx = 21", "nx = 1"), "sampling"),
    (("shape = rect(1, 2, 1, 1.6)", "shape = blob(1)"), "shape"),
    (("k_max = 20", "k_max = 20\nk_max = 30"), "syntax error"),
])
def test_validation_errors(change, needle):
    errs = errors_of(text().replace(*change))
    assert any(needle in e for e in errs), errs


def test_mode_specific_strengths():
    errs = errors_of(text(mode="full-scheme-one", tau="1, -1, i"))
    assert any("tau = 0" in e for e in errs)
    parse_config(text(mode="full-scheme-one", tau="0, 1"))
    errs = errors_of(text(mode="retrieve", z0="(4, 4), (12, 12)"))
    assert any("single reference point" in e for e in errs)


def test_expressions_in_numbers_and_shapes():
    source = text().replace("rect(1, 2, 1, 1.6)", "polygon((-2, 0), (1, 0), (-1/2, 3*sqrt(3)/2))")
    cfg = parse_config(source.replace("tau = 1, -1, i", "tau = 1, -1, 2^0.5*i"))
    assert cfg.taus[2] == pytest.approx(math.sqrt(2) * 1j)
    assert cfg.model().components[0].shape.vertices[2] == pytest.approx((-0.5, 1.5 * math.sqrt(3)))


def test_round_trip_of_bundled_scenarios():
    for source in cli.bundled_scenarios().values():
        cfg = parse_config(source)
        assert parse_config(format_config(cfg)) == cfg


finite = st.floats(-5, 5, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(k_max=st.floats(1, 40), count=st.integers(1, 30), angles=st.lists(
    st.floats(-math.pi, math.pi), min_size=1, max_size=6, unique_by=lambda a: round(a, 12)),
    tau1=st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False).filter(lambda t: t != 0),
    level=st.floats(0, 1), seed=st.integers(0, 2 ** 32), lo=finite)
def test_round_trip_property(k_max, count, angles, tau1, level, seed, lo):
    import dataclasses
    base = parse_config(text(mode="full-scheme-one", tau="0, 1"))
    cfg = dataclasses.replace(base, k_min=k_max / count / 2, k_max=k_max, count=count,
                              angles=tuple(angles), taus=(0j, tau1),
                              noise=NoiseSpec("absolute", level, seed),
                              sampling=SamplingGrid(lo, lo + 3, lo, lo + 1, 5, 6))
    assert parse_config(format_config(cfg)) == cfg


# -- running ------------------------------------------------------------------------------

def write(tmp_path, source, name="cfg.ini"):
    path = tmp_path / name
    path.write_text(source)
    return str(path)


def test_full_scheme_two_run(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", write(tmp_path, text()), "--out", str(out)]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["i2.csv", "i2.pgm", "manifest.json", "phased_retrieved.csv", "phaseless.csv"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest) == {"config_sha256", "seed", "artifacts", "wall_time_ms"}
    assert manifest["seed"] == 7
    assert {a["path"] for a in manifest["artifacts"]} == set(names) - {"manifest.json"}
    retrieved = read_phased_csv(out / "phased_retrieved.csv")
    assert retrieved.source == "retrieved"
    assert read_phaseless_csv(out / "phaseless.csv").magnitudes.shape == (4, 20, 3)


def test_runs_are_byte_identical(tmp_path):
    cfg = write(tmp_path, text(mode="full-scheme-one", tau="0, 1", z0="(12, 12), (-4, 4)"))
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", cfg, "--out", str(a), "--threads", "2"]) == 0
    assert cli.main(["run", cfg, "--out", str(b)]) == 0
    files = sorted(p.name for p in a.iterdir() if p.name != "manifest.json")
    assert "i1_combined.pgm" in files and "i1_z0-2.csv" in files
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ma, mb = (json.loads((d / "manifest.json").read_text()) for d in (a, b))
    assert ma["artifacts"] == mb["artifacts"]


def test_seed_override_changes_noise(tmp_path):
    cfg = write(tmp_path, text(mode="forward"))
    assert cli.main(["run", cfg, "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["run", cfg, "--out", str(tmp_path / "b"), "--seed", "8"]) == 0
    a = (tmp_path / "a" / "phaseless.csv").read_bytes()
    b = (tmp_path / "b" / "phaseless.csv").read_bytes()
    assert a != b
    assert json.loads((tmp_path / "b" / "manifest.json").read_text())["seed"] == 8


@pytest.mark.parametrize("mode, expected", [
    ("forward", {"phaseless.csv", "phased_truth.csv"}),
    ("retrieve", {"phaseless.csv", "phased_truth.csv", "phased_retrieved.csv"}),
    ("sample-i2", {"phased_truth.csv", "i2.csv", "i2.pgm"}),
])
def test_modes_emit_expected_artifacts(tmp_path, mode, expected):
    out = tmp_path / "out"
    assert cli.main(["run", write(tmp_path, text(mode=mode)), "--out", str(out)]) == 0
    assert {p.name for p in out.iterdir()} == expected | {"manifest.json"}


def test_sample_i1_writes_fields_only(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", write(tmp_path, text(mode="sample-i1", tau="0, 1")), "--out", str(out)]) == 0
    assert {p.name for p in out.iterdir()} == {"i1.csv", "i1.pgm", "manifest.json"}


def test_output_directory_precedence(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    source = text(mode="forward").replace("mode = forward", "mode = forward\noutput = from-config")
    cfg = write(tmp_path, source)
    assert cli.main(["run", cfg]) == 0
    assert (tmp_path / "from-config" / "manifest.json").exists()
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "from-env"))
    assert cli.main(["run", cfg]) == 0
    assert (tmp_path / "from-env" / "manifest.json").exists()
    assert cli.main(["run", cfg, "--out", str(tmp_path / "from-flag")]) == 0
    assert (tmp_path / "from-flag" / "manifest.json").exists()
    monkeypatch.delenv(cli.OUT_ENV)
    assert cli.main(["run", write(tmp_path, text(mode="forward"), "b.ini")]) == 0
    assert (tmp_path / "out" / "tiny" / "manifest.json").exists()


def test_exit_codes(tmp_path, capsys, monkeypatch):
    assert cli.main(["validate", write(tmp_path, text())]) == 0
    assert cli.main(["validate", write(tmp_path, text(tau=""), "bad.ini")]) == 2
    assert "config error" in capsys.readouterr().err
    assert cli.main(["run", str(tmp_path / "missing.ini")]) == 2
    assert cli.main(["run", write(tmp_path, text()), "--seed", "-1"]) == 2
    assert cli.main(["run", write(tmp_path, text()), "--threads", "0"]) == 2

    from phaseless_dsm import forward
    monkeypatch.setattr(forward, "QUAD_RTOL", 0.0)
    assert cli.main(["run", write(tmp_path, text(mode="forward")), "--out", str(tmp_path / "x")]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_scenarios_listing(capsys):
    assert cli.main(["scenarios"]) == 0
    listed = capsys.readouterr().out.split()
    assert "rect-s5" in listed and "large-slab" in listed


def test_module_entry_point(tmp_path):
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "phaseless_dsm", "validate", "rect-s5"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "rect-s5: ok" in res.stdout


@pytest.mark.slow
@pytest.mark.parametrize("name", ["large-triangle", "large-slab"])
def test_extended_fixtures_with_noise(tmp_path, name):
    out = tmp_path / name
    assert cli.main(["run", name, "--out", str(out)]) == 0
    cfg = parse_config(cli.bundled_scenarios()[name])
    assert cfg.noise.kind == "relative" and cfg.noise.level == 0.1
    rows = np.loadtxt(out / "i2.csv", delimiter=",", skiprows=1)
    peak = rows[np.argmax(rows[:, 2]), :2]
    from phaseless_dsm.scene import distance_to_support
    assert distance_to_support(cfg.model(), peak[None, :])[0] <= 2 * math.pi / cfg.k_max
