import json
import subprocess
import sys

import numpy as np
import pytest

from qchopper import __version__
from qchopper.cli import EXIT_COMPARE, EXIT_CONFIG, EXIT_OK, OUTPUT_ENV, main
from qchopper.config import ConfigError, load_config, parse_override
from qchopper.io import read_block, read_csv, write_block, write_csv


def run(tmp_path, name, *args):
    out = tmp_path / name
    return main([*args, "-o", str(out)]), out


# -- config -------------------------------------------------------------------

def test_defaults_need_only_kind():
    cfg = load_config(overrides=("protocol.kind=on_off",), command="envelope")
    assert cfg["scatter.beta"] == 1.0 and cfg["numeric.cutoff"] == 64
    with pytest.raises(ConfigError, match="protocol.kind"):
        load_config(command="envelope")
    with pytest.raises(ConfigError, match="no command"):
        load_config(overrides=("protocol.kind=on_off",))


def test_config_errors_name_field_and_line(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("command: envelope\nprotocol:\n  kind: on_off\nscatter:\n  beta: fast\n")
    with pytest.raises(ConfigError, match=r"line 5.*scatter.beta"):
        load_config(str(p))
    p.write_text("command: envelope\nprotocol:\n  kind: on_off\n  colour: red\n")
    with pytest.raises(ConfigError, match=r"line 4.*protocol.colour"):
        load_config(str(p))
    p.write_text("command: envelope\nprotocol: [\n")
    with pytest.raises(ConfigError, match="YAML syntax error at line"):
        load_config(str(p))


def test_override_parsing():
    assert parse_override("scatter.beta=5") == ("scatter.beta", 5)
    assert parse_override("output.formats=[csv, bin]") == ("output.formats", ["csv", "bin"])
    with pytest.raises(ConfigError):
        parse_override("scatter.beta")
    with pytest.raises(ConfigError, match="must be one of"):
        load_config(overrides=("protocol.kind=square",), command="envelope")


def test_scan_values_validated():
    with pytest.raises(ConfigError, match="scan"):
        load_config(overrides=("protocol.kind=on_off", "scan.key=scatter.beta",
                               "scan.values=[1, x]"), command="envelope")


# -- io -----------------------------------------------------------------------

def test_csv_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(1)
    cols = {"a": rng.standard_normal(50) * 1e-7, "b": rng.standard_normal(50) * 1e9,
            "c": np.array([np.inf, -np.inf, np.nan] + [1 / 3] * 47)}
    back = read_csv(write_csv(tmp_path / "x.csv", cols))
    for k, v in cols.items():
        assert np.array_equal(back[k], v, equal_nan=True)
    with pytest.raises(ValueError):
        write_csv(tmp_path / "y.csv", {"a": [1, 2], "b": [1]})


def test_block_round_trip(tmp_path):
    a = (np.arange(12) + 1j * np.arange(12)[::-1]).reshape(3, 4)
    arr, meta = read_block(write_block(tmp_path / "g.bin", a, cutoff=1))
    assert np.array_equal(arr, a) and meta["cutoff"] == 1 and meta["shape"] == [3, 4]
    (tmp_path / "junk.bin").write_bytes(b"nope")
    with pytest.raises(ValueError):
        read_block(tmp_path / "junk.bin")


# -- commands -----------------------------------------------------------------

def test_envelope_constant_is_flat(tmp_path):
    code, out = run(tmp_path, "c", "envelope", "--set", "protocol.kind=constant",
                    "--set", "grid.n_samples=16")
    assert code == EXIT_OK
    t = read_csv(out / "envelope.csv")
    assert np.allclose(t["re_A"], -1.0, atol=1e-14) and np.allclose(t["im_A"], 0, atol=1e-14)
    meta = json.loads((out / "envelope.json").read_text())
    assert meta["version"] == __version__
    assert meta["config"]["protocol"]["kind"] == "constant"
    assert (out / "config.yaml").exists() and (out / "run.json").exists()


def test_byte_identical_reruns(tmp_path):
    args = ["envelope", "--set", "protocol.kind=sign_change", "--set", "grid.n_samples=64"]
    _, a = run(tmp_path, "a", *args)
    _, b = run(tmp_path, "b", *args)
    assert (a / "envelope.csv").read_bytes() == (b / "envelope.csv").read_bytes()


def test_refuses_overwrite_without_force(tmp_path, capsys):
    args = ["envelope", "--set", "protocol.kind=on_off", "--set", "grid.n_samples=16"]
    assert run(tmp_path, "o", *args)[0] == EXIT_OK
    assert run(tmp_path, "o", *args)[0] == EXIT_CONFIG
    assert "--force" in capsys.readouterr().err
    assert run(tmp_path, "o", *args, "--force")[0] == EXIT_OK


def test_output_env_override(tmp_path, monkeypatch):
    target = tmp_path / "env_out"
    monkeypatch.setenv(OUTPUT_ENV, str(target))
    code = main(["envelope", "--set", "protocol.kind=on_off", "--set", "grid.n_samples=16"])
    assert code == EXIT_OK and (target / "envelope.csv").exists()


def test_scan_writes_one_file_per_point(tmp_path):
    code, out = run(tmp_path, "s", "envelope", "--set", "protocol.kind=on_off",
                    "--set", "grid.n_samples=16", "--set", "scan.key=scatter.beta",
                    "--set", "scan.values=[0.2, 1, 5]", "--workers", "2")
    assert code == EXIT_OK
    names = sorted(p.name for p in out.glob("envelope_beta*.csv"))
    assert names == ["envelope_beta0.2.csv", "envelope_beta1.csv", "envelope_beta5.csv"]


def test_g2_map(tmp_path):
    code, out = run(tmp_path, "g", "g2-map", "--set", "protocol.kind=sign_change",
                    "--set", "scatter.kerr=-4", "--set", "grid.n_tau_c=16",
                    "--set", "grid.n_tau_d=8")
    assert code == EXIT_OK
    t = read_csv(out / "coherence.csv")
    assert t["tau_c"].size == 128
    assert set(np.unique(t["node_flag"])) <= {0, 1, 2, 3}


def test_sidebands_with_block(tmp_path):
    code, out = run(tmp_path, "sb", "sidebands", "--set", "protocol.kind=on_off",
                    "--set", "numeric.cutoff=8", "--set", "output.formats=[csv, json, bin]")
    assert code == EXIT_OK
    G, meta = read_block(out / "green.bin")
    assert G.shape == (17, 17) and meta["cutoff"] == 8
    t = read_csv(out / "sidebands.csv")
    # the drive writes one order past the cutoff onto the outgoing field
    assert np.array_equal(t["m"], np.arange(-9, 10))


def test_compare_constant_passes(tmp_path):
    code, out = run(tmp_path, "cmp", "oracle-compare", "--set", "protocol.kind=constant",
                    "--set", "scatter.delta=0.5", "--set", "numeric.lattice.n_sites=1023")
    assert code == EXIT_OK
    rep = json.loads((out / "compare.json").read_text())["result"]
    assert rep["pass"]
    paths = {r["paths"] for r in rep["comparisons"]}
    assert {"envelope-analytic", "sideband-analytic", "oracle-analytic"} <= paths


def test_compare_tiny_cutoff_fails(tmp_path, capsys):
    code, out = run(tmp_path, "cmp1", "oracle-compare", "--set", "protocol.kind=on_off",
                    "--set", "numeric.cutoff=1", "--set", "numeric.compare.oracle=false")
    assert code == EXIT_COMPARE
    err = capsys.readouterr().err
    assert "envelope-sideband" in err and "cutoff M=1" in err
    assert (out / "compare.json").exists()


def test_zero_coupling_is_config_error(tmp_path):
    code, _ = run(tmp_path, "z", "envelope", "--set", "protocol.kind=constant",
                  "--set", "protocol.g0=0")
    assert code == EXIT_CONFIG


def test_circuit_map(tmp_path):
    code, out = run(tmp_path, "cm", "circuit-map", "--set", "circuit.omega0=100")
    assert code == EXIT_OK
    res = json.loads((out / "model.json").read_text())["result"]
    assert res["model"]["U"] == -1.0
    assert {c["name"] for c in res["validity"]} >= {"omega0/Omega", "EJ/EC"}


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qchopper", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and __version__ in proc.stdout
