import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from polariton_tunneling.cli import ConfigError, RunConfig, main
from polariton_tunneling.validation import run_suite
from polariton_tunneling import DeviceParams, QGrid

SMALL_EL = {"q_axis": {"start": 0.05, "stop": 4.0, "num": 30},
            "omega_axis": {"start": 0.6, "stop": 1.6, "num": 51}, "n_k": 5}


def base_config(**outputs):
    return {
        "device": {"omega_c0": 0.7, "rabi_res": 0.1, "mass_scale": 0.3, "qres_over_kf": 0.01},
        "grid": {"n_q": 120, "q_min": 0.05, "q_max": 4.0},
        "rates": {"kappa": 0.01, "rate_nr": 0.005},
        "outputs": outputs.get("outputs", [{"product": "dispersion", "path": "disp.csv"}]),
    }


def write(tmp_path, doc, name="run.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc))
    return path


def run(tmp_path, doc, *extra, command="run"):
    path = write(tmp_path, doc)
    return main([command, str(path), "--output-dir", str(tmp_path / "out"), *extra])


def test_dispersion_product(tmp_path):
    assert run(tmp_path, base_config()) == 0
    text = (tmp_path / "out" / "disp.csv").read_text().splitlines()
    assert text[0].startswith("# fingerprint=")
    assert text[1] == "q,omega_minus,omega_plus,photon_frac_minus,photon_frac_plus"
    data = np.loadtxt(tmp_path / "out" / "disp.csv", delimiter=",", skiprows=2)
    assert data.shape == (120, 5)
    np.testing.assert_allclose(data[:, 3] + data[:, 4], 1.0, atol=1e-12)
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["fingerprint"] == text[0].split("=")[1]
    assert {"calibration_residual", "refinement_delta"} <= set(manifest["convergence"])
    assert "eigensystem" in manifest["timings_s"]


def test_all_products_deterministic(tmp_path):
    outputs = [
        {"product": "dispersion", "path": "d.csv"},
        {"product": "spectral", "path": "s.csv", "k": 1.2},
        {"product": "el", "path": "a.json", "injector": {"shape": "box", "center": 1.0,
                                                          "width": 1.0}, **SMALL_EL},
        {"product": "el", "path": "b.csv", "injector": {"shape": "gaussian", "center": 1.2,
                                                         "width": 0.05}, **SMALL_EL},
        {"product": "validate", "path": "v.json"},
    ]
    doc = base_config(outputs=outputs)
    assert run(tmp_path, doc, "--threads", "3") == 0
    first = {name: (tmp_path / "out" / name).read_bytes() for name in
             ("d.csv", "s.csv", "a.json", "b.csv", "v.json")}
    assert run(tmp_path, doc, "--threads", "1", "--seed", "7") == 0
    for name, content in first.items():
        assert (tmp_path / "out" / name).read_bytes() == content
    fingerprints = {json.loads(first["a.json"])["fingerprint"],
                    json.loads(first["v.json"])["fingerprint"]}
    fingerprints |= {first[n].decode().splitlines()[0].split("=")[1]
                     for n in ("d.csv", "s.csv", "b.csv")}
    assert len(fingerprints) == 1


def test_spectral_product_shape(tmp_path):
    doc = base_config(outputs=[{"product": "spectral", "path": "s.csv", "k": 1.2,
                                "omega": {"start": 0.8, "stop": 1.2, "num": 401}}])
    assert run(tmp_path, doc) == 0
    data = np.loadtxt(tmp_path / "out" / "s.csv", delimiter=",", skiprows=2)
    assert data.shape == (401, 2) and np.all(data[:, 1] > 0)


def test_validate_default_passes(tmp_path, capsys):
    doc = base_config()
    doc["grid"]["n_q"] = 400
    assert run(tmp_path, doc, command="validate") == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "PASS  refinement" in out


def test_validate_coarse_grid_fails_refinement(tmp_path, capsys):
    doc = base_config()
    doc["grid"]["n_q"] = 3
    assert run(tmp_path, doc, command="validate") == 3
    captured = capsys.readouterr()
    assert "FAIL  refinement" in captured.out and "refinement" in captured.err


def test_no_resonance_exit_3(tmp_path, capsys):
    doc = base_config()
    doc["device"]["omega_c0"] = 1.2
    assert run(tmp_path, doc, command="validate") == 3
    assert "no resonant wavevector" in capsys.readouterr().err


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(extra=1),
    lambda d: d["device"].update(rabi_res=-1),
    lambda d: d["device"].update(colour="red"),
    lambda d: d["grid"].update(n_q=0),
    lambda d: d.update(outputs=[]),
    lambda d: d.update(outputs=[{"product": "plot", "path": "x"}]),
    lambda d: d.update(outputs=[{"product": "el", "path": "x.csv", **SMALL_EL}]),
    lambda d: d.update(outputs=[{"product": "spectral", "path": "x.csv",
                                 "omega": {"start": 1, "stop": 0, "num": 5}}]),
    lambda d: d.update(outputs=[{"product": "dispersion", "path": "a"},
                                {"product": "dispersion", "path": "a"}]),
])
def test_config_errors_exit_2(tmp_path, mutate):
    doc = base_config()
    mutate(doc)
    assert run(tmp_path, doc) == 2


def test_unparseable_yaml(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("device: [1\n")
    assert main(["run", str(path)]) == 2
    assert main(["run", str(tmp_path / "missing.yaml")]) == 2


def test_top_level_injector_default():
    doc = base_config(outputs=[{"product": "el", "path": "m.json", **SMALL_EL}])
    doc["injector"] = {"shape": "box", "center": 1.2, "width": 0.05}
    config = RunConfig.from_dict(doc)
    assert config.outputs[0]["injector"]["center"] == 1.2
    assert config.outputs[0]["injector"]["strength"] == 1.0


def test_fingerprint_tracks_content():
    a = RunConfig.from_dict(base_config())
    b = RunConfig.from_dict(base_config())
    assert a.fingerprint == b.fingerprint and len(a.fingerprint) == 64
    changed = base_config()
    changed["rates"]["kappa"] = 0.02
    assert RunConfig.from_dict(changed).fingerprint != a.fingerprint
    with pytest.raises(ConfigError):
        RunConfig.from_dict([1, 2])


def test_console_entry_point(tmp_path):
    path = write(tmp_path, base_config())
    proc = subprocess.run([sys.executable, "-m", "polariton_tunneling.cli", "run", str(path),
                           "--output-dir", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "o" / "disp.csv").exists()


def test_suite_names():
    p = DeviceParams()
    names = [c.name for c in run_suite(QGrid.uniform(p, n_q=50), p)]
    assert names == ["apex_sum_rule", "vector_normalization", "interlacing", "trace",
                     "first_moment", "second_moment", "residual", "spectral_sum_rule",
                     "oracle_eigenvalues", "oracle_apex_weights", "calibration", "refinement"]


def test_shipped_config_parses():
    from pathlib import Path
    path = Path(__file__).resolve().parents[1] / "configs" / "el_panels.yaml"
    config = RunConfig.load(path)
    products = [o["product"] for o in config.outputs]
    assert products.count("el") == 4 and "validate" in products
