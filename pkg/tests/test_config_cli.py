import json

import pytest

from cmcstab import cli
from cmcstab.config import load_config, parse_config
from cmcstab.errors import ConfigError

CLIFFORD = """
[space]
kind = "SpaceForm"
c = 1.0

[surface]
constructor = "clifford_torus"
params = { H = 0.0 }
resolution = [48, 48]

[output]
formats = ["json", "csv", "off"]
"""

SLICE = """
[space]
kind = "ProductS2R"
kappa = 1.0
tau = 0.0

[surface]
constructor = "slice_sphere"
resolution = 3
"""


def _cfg(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _data_lines(path):
    return [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]


# -- config parsing ------------------------------------------------------------------


def test_parse_full_config(tmp_path):
    cfg = load_config(_cfg(tmp_path, CLIFFORD + '\n[solver]\nk = 3\ntol = 1e-8\nshift_policy = "potential"\n'))
    assert cfg.space.kind == "SpaceForm" and cfg.surface["resolution"] == (48, 48)
    assert cfg.solver.k == 3 and cfg.formats == ("json", "csv", "off")
    assert len(cfg.hash) == 16


@pytest.mark.parametrize(
    "data, path",
    [
        ({"space": {"kind": "Nil3"}}, "space"),
        ({"space": {"kind": "SpaceForm", "c": 1.0}, "surface": {"constructor": "hopf_torus"}}, "surface.constructor"),
        ({"surface": {"constructor": "clifford_torus", "params": {"radius": 1}}}, "surface.params"),
        ({"surface": {"constructor": "clifford_torus", "resolution": [0, 4]}}, "surface.resolution"),
        ({"solver": {"k": 0}}, "solver.k"),
        ({"solver": {"tolerance": 1}}, "solver"),
        ({"output": {"formats": ["png"]}}, "output.formats"),
        ({"sweep": {"family": "clifford", "ranges": {}}}, "sweep.ranges"),
        ({"sweep": {"family": "clifford", "ranges": {"H": [0, 1, 0]}}}, "sweep.ranges.H"),
        ({"extra": {}}, "<root>"),
    ],
)
def test_config_errors_carry_key_path(data, path):
    with pytest.raises(ConfigError) as info:
        parse_config(data)
    assert path in str(info.value)


def test_malformed_toml(tmp_path):
    with pytest.raises(ConfigError):
        load_config(_cfg(tmp_path, "[space\nkind = 1"))


def test_hash_depends_on_content():
    a = parse_config({"solver": {"k": 3}})
    b = parse_config({"solver": {"k": 4}})
    assert a.hash != b.hash and a.hash == parse_config({"solver": {"k": 3}}).hash


# -- spectrum ---------------------------------------------------------------------


def test_spectrum_clifford(tmp_path, capsys):
    out = tmp_path / "out"
    code = cli.main(["spectrum", "--config", _cfg(tmp_path, CLIFFORD), "--out", str(out)])
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["lambda1"] == pytest.approx(-4.0, abs=0.05)
    assert summary["genus"] == 1 and summary["strongly_stable"] == "unstable"
    doc = json.loads((out / "spectrum.json").read_text())
    assert doc["convention"] == "Jf+lambda f=0" and len(doc["config_hash"]) == 16
    for name in ("mesh.off", "mesh_vertices.csv", "bounds.csv"):
        text = (out / name).read_text()
        assert f"config_hash={doc['config_hash']}" in text and "convention=Jf+lambda f=0" in text
    assert "clifford_torus" in (out / "bounds.csv").read_text()


def test_spectrum_slice_is_marginal(tmp_path, capsys):
    assert cli.main(["spectrum", "--config", _cfg(tmp_path, SLICE), "--out", str(tmp_path)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert abs(summary["lambda1"]) < 1e-2 and summary["strongly_stable"] == "marginal"


def test_spectrum_bad_kind(tmp_path, capsys):
    code = cli.main(["spectrum", "--config", _cfg(tmp_path, SLICE.replace("ProductS2R", "Moon")), "--out", str(tmp_path)])
    assert code == 2
    assert "space" in capsys.readouterr().err


def test_spectrum_solver_failure(tmp_path, capsys):
    text = SLICE + "\n[solver]\ntol = 1e-16\nmax_iter = 2\n"
    assert cli.main(["spectrum", "--config", _cfg(tmp_path, text), "--out", str(tmp_path)]) == 3
    assert "solver" in capsys.readouterr().err


def test_output_directory_precedence(tmp_path, monkeypatch):
    text = SLICE.replace("resolution = 3", "resolution = 1") + f'\n[output]\ndirectory = "{tmp_path / "cfg"}"\n'
    path = _cfg(tmp_path, text)
    assert cli.main(["spectrum", "--config", path]) == 0
    assert (tmp_path / "cfg" / "spectrum.json").exists()
    monkeypatch.setenv("CMCSTAB_OUT", str(tmp_path / "env"))
    assert cli.main(["spectrum", "--config", path]) == 0
    assert (tmp_path / "env" / "spectrum.json").exists()
    assert cli.main(["spectrum", "--config", path, "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "spectrum.json").exists()


def test_bad_flags():
    assert cli.main(["spectrum", "--seed", "-1"]) == 2
    assert cli.main(["sweep", "--jobs", "0"]) == 2
    assert cli.main(["frobnicate"]) == 2


def test_spectrum_is_reproducible(tmp_path, capsys):
    path = _cfg(tmp_path, CLIFFORD.replace("[48, 48]", "[16, 16]"))
    cli.main(["spectrum", "--config", path, "--out", str(tmp_path / "a"), "--seed", "5"])
    cli.main(["spectrum", "--config", path, "--out", str(tmp_path / "b"), "--seed", "5"])
    for name in ("spectrum.json", "bounds.csv", "mesh.off", "mesh_vertices.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


# -- verify ------------------------------------------------------------------------

SMALL_VERIFY = """
[verify]
families = ["clifford", "hopf_berger"]
ladder = [[16, 16], [24, 24], [32, 32]]
"""


def test_verify_small_suite(tmp_path, capsys):
    assert cli.main(["verify", "--config", _cfg(tmp_path, SMALL_VERIFY), "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.strip().endswith("PASS")
    rows = _data_lines(tmp_path / "verify_bounds.csv")
    assert rows[0].startswith("surface,resolution,theorem_id")
    assert any("SB_A_ii" in r and "hopf_torus" in r for r in rows)
    conv = _data_lines(tmp_path / "convergence.csv")
    assert len(conv) == 1 + 6
    doc = json.loads((tmp_path / "verify.json").read_text())
    assert doc["passed"] and doc["surfaces"]["clifford"]["orders"]["lambda1_exact_to_rounding"]


def test_verify_corrupted_potential_fails(tmp_path, capsys):
    text = SMALL_VERIFY + "corrupt_potential = -1.0\n"
    assert cli.main(["verify", "--config", _cfg(tmp_path, text), "--out", str(tmp_path)]) == 4
    out = capsys.readouterr().out
    assert "violated" in out and "FAIL" in out


def test_verify_custom_surface(tmp_path, capsys):
    text = """
[space]
kind = "ProductS2S1"
kappa = 1.0
tau = 0.0
circle_length = 3.0

[surface]
constructor = "hopf_torus"
params = { c_gamma = 0.5 }
resolutions = [[16, 16], [32, 32], [64, 64]]
"""
    assert cli.main(["verify", "--config", _cfg(tmp_path, text), "--out", str(tmp_path)]) == 0
    assert "hopf_torus: bounds PASS" in capsys.readouterr().out


def test_verify_unknown_family(tmp_path):
    text = '[verify]\nfamilies = ["klein_bottle"]\n'
    assert cli.main(["verify", "--config", _cfg(tmp_path, text), "--out", str(tmp_path)]) == 2


# -- sweep -------------------------------------------------------------------------


def _sweep_rows(path):
    import csv

    rows = list(csv.DictReader(_data_lines(path)))
    return rows


def test_sweep_hopf_family(tmp_path):
    text = """
[sweep]
family = "hopf_s2s1"
ranges = { c_gamma = [0.0, 2.0, 5] }
resolution = [32, 32]
"""
    assert cli.main(["sweep", "--config", _cfg(tmp_path, text), "--out", str(tmp_path)]) == 0
    rows = _sweep_rows(tmp_path / "sweep.csv")
    assert [int(r["job"]) for r in rows] == list(range(5))
    for r in rows:
        cg = json.loads(r["params"])["c_gamma"]
        assert float(r["lambda1"]) == pytest.approx(-4 * (cg / 2) ** 2 - 1, rel=1e-2)


def test_sweep_clifford_family_parallel_matches_serial(tmp_path):
    text = """
[sweep]
family = "clifford"
ranges = { H = [0.0, 1.0, 4] }
resolution = [24, 24]
"""
    path = _cfg(tmp_path, text)
    assert cli.main(["sweep", "--config", path, "--out", str(tmp_path / "s")]) == 0
    assert cli.main(["sweep", "--config", path, "--out", str(tmp_path / "p"), "--jobs", "2"]) == 0
    a = (tmp_path / "s" / "sweep.csv").read_bytes()
    assert a == (tmp_path / "p" / "sweep.csv").read_bytes()
    for r in _sweep_rows(tmp_path / "s" / "sweep.csv"):
        H = json.loads(r["params"])["H"]
        assert float(r["lambda1"]) == pytest.approx(-4 * (H * H + 1), rel=1e-2)
        assert float(r["min_margin"]) > -1e-9


def test_sweep_validation(tmp_path):
    empty = '[sweep]\nfamily = "clifford"\nranges = {}\n'
    assert cli.main(["sweep", "--config", _cfg(tmp_path, empty), "--out", str(tmp_path)]) == 2
    wrong = '[sweep]\nfamily = "hopf_s2s1"\nranges = { H = [0, 1, 2] }\n'
    assert cli.main(["sweep", "--config", _cfg(tmp_path, wrong), "--out", str(tmp_path)]) == 2
    big = '[sweep]\nfamily = "clifford"\nmax_jobs = 3\nranges = { H = [0, 1, 4] }\n'
    assert cli.main(["sweep", "--config", _cfg(tmp_path, big), "--out", str(tmp_path)]) == 2
    assert cli.main(["sweep", "--out", str(tmp_path)]) == 2


def test_sweep_partial_failure(tmp_path):
    text = """
[sweep]
family = "clifford"
ranges = { c = [-1.0, 1.0, 3] }
resolution = [16, 16]
"""
    assert cli.main(["sweep", "--config", _cfg(tmp_path, text), "--out", str(tmp_path)]) == 5
    rows = _sweep_rows(tmp_path / "sweep.csv")
    assert [int(r["job"]) for r in rows] == [2]
    manifest = json.loads((tmp_path / "sweep_failures.json").read_text())
    assert [f["job"] for f in manifest["failures"]] == [0, 1]
    assert "UnsupportedSpace" in manifest["failures"][0]["error"]
