import csv
import json

import numpy as np
import pytest

from l2ext.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, main


def _write(path, data):
    path.write_text(json.dumps(data))
    return str(path)


def _run(tmp_path, argv, name="out.json"):
    out = tmp_path / name
    code = main(argv + ["--out", str(out), "--no-timings"])
    return code, json.loads(out.read_text()) if out.exists() else None


def _complex(pairs):
    return np.array([complex(re, im) for re, im in pairs])


def test_extend_elliptic_coefficients(tmp_path):
    code, report = _run(tmp_path, ["extend", "--scenario", "elliptic"])
    assert code == EXIT_OK
    entry = report["scenarios"]["elliptic"]
    np.testing.assert_allclose(_complex(entry["coefficients"]["0"]), [1j, 1], atol=1e-15)
    np.testing.assert_allclose(_complex(entry["coefficients"]["1"]), [1j, -1], atol=1e-15)
    assert entry["degree"] == 1
    for row in entry["grid"]:
        tau = _complex(row["point"])[0]
        expected = 2j / (tau + 1j) * np.array([tau, 1])
        np.testing.assert_allclose(_complex(row["value"]), expected, atol=1e-12)


def test_extend_explicit_grid(tmp_path):
    cfg = _write(tmp_path / "g.json", {"preset": "elliptic", "name": "g", "grid": [[0, 1], [2, 3]]})
    code, report = _run(tmp_path, ["extend", "--config", cfg])
    assert code == EXIT_OK
    rows = report["scenarios"]["g"]["grid"]
    assert len(rows) == 2
    assert np.allclose(_complex(rows[0]["bounded_coords"]), 0)
    np.testing.assert_allclose(_complex(rows[0]["value"]), [1j, 1], atol=1e-15)


def test_extend_zero_vector(tmp_path):
    cfg = _write(tmp_path / "z.json", {"preset": "sp4", "name": "z", "base_vector": [[0, 0]] * 4})
    code, report = _run(tmp_path, ["extend", "--config", cfg])
    assert code == EXIT_OK
    entry = report["scenarios"]["z"]
    assert entry["degree"] == 0
    assert all(np.allclose(_complex(r["value"]), 0) for r in entry["grid"])


def test_extend_sp4_degree(tmp_path):
    code, report = _run(tmp_path, ["extend", "--scenario", "sp4"])
    assert code == EXIT_OK
    entry = report["scenarios"]["sp4"]
    assert 1 <= entry["degree"] <= 2
    assert entry["fiber_membership"]["value"] < 1e-10


def test_constant_elliptic_csv_and_json(tmp_path):
    csv_path = tmp_path / "c.csv"
    code, report = _run(tmp_path, ["constant", "--scenario", "elliptic", "--csv", str(csv_path)])
    assert code == EXIT_OK
    c = report["scenarios"]["elliptic"]["constant"]
    assert abs(c["C"]["re"] - np.pi / 2) < 1e-12
    assert abs(c["mu_D"]["re"] - np.pi) < 1e-12
    assert abs(c["ratio"] - 0.5) < 1e-12
    rows = list(csv.DictReader(csv_path.open()))
    assert len(rows) == 1
    assert abs(float(rows[0]["C"]) - np.pi / 2) < 1e-12
    assert abs(float(rows[0]["mu_D"]) - np.pi) < 1e-12
    assert abs(float(rows[0]["ratio"]) - 0.5) < 1e-12
    assert rows[0]["strict_inequality"] == "True"


def test_constant_zero_vector_fails_cleanly(tmp_path):
    cfg = _write(tmp_path / "z.json", {"preset": "elliptic", "name": "z", "base_vector": [[0, 0], [0, 0]]})
    code, report = _run(tmp_path, ["constant", "--config", cfg])
    assert code == EXIT_FAIL
    assert "InvalidBaseVector" in report["scenarios"]["z"]["error"]


def test_verify_perturbed_fails(tmp_path):
    cfg = _write(tmp_path / "p.json", {"preset": "elliptic", "name": "p", "suites": ["orthogonality"]})
    assert _run(tmp_path, ["verify", "--config", cfg])[0] == EXIT_OK
    code, report = _run(tmp_path, ["verify", "--config", cfg, "--perturb", "0.1"])
    assert code == EXIT_FAIL
    assert not report["scenarios"]["p"]["suites"]["orthogonality"]["passed"]


@pytest.mark.parametrize("argv", [
    ["verify", "--scenario", "nope"],
    ["verify", "--scenario", "sp4", "--mc-samples", "100"],
    ["extend", "--scenario", "elliptic", "--csv", "x.csv"],
    ["verify", "--scenario", "elliptic", "--max-degree", "0"],
])
def test_config_errors(tmp_path, argv):
    assert main(argv) == EXIT_CONFIG


@pytest.mark.parametrize("data", [
    {"preset": "elliptic", "colour": "blue"},
    {"preset": "elliptic", "representation": {"tag": "adjoint"}},
    {"domain": {"kind": "upper_half_plane", "genus": 2}},
    {"preset": "elliptic", "base_vector": [[1, 0]]},
    {"preset": "elliptic", "suites": ["everything"]},
    {"preset": "elliptic", "integrator": {"seed": -1}},
])
def test_bad_config_files(tmp_path, data):
    assert main(["verify", "--config", _write(tmp_path / "bad.json", data)]) == EXIT_CONFIG


def test_unreadable_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["verify", "--config", str(bad)]) == EXIT_CONFIG
    assert main(["verify", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG


def test_bad_seed_rejected():
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--seed", "-3"])
    assert exc.value.code == 2


def _small_sp4(tmp_path):
    return _write(tmp_path / "s.json", {
        "preset": "sp4", "name": "s", "suites": ["orthogonality", "averaging", "constant"],
        "integrator": {"mc_samples": 20000, "seed": 7}, "max_degree": 2,
    })


def test_verify_reproducible(tmp_path):
    cfg = _small_sp4(tmp_path)
    code_a, _ = _run(tmp_path, ["verify", "--config", cfg], "a.json")
    code_b, _ = _run(tmp_path, ["verify", "--config", cfg], "b.json")
    assert code_a == code_b == EXIT_OK
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_parallel_gives_same_numbers(tmp_path):
    cfg = _small_sp4(tmp_path)
    _, serial = _run(tmp_path, ["verify", "--config", cfg], "a.json")
    _, threaded = _run(tmp_path, ["verify", "--config", cfg, "--parallel", "3"], "b.json")
    for report in (serial, threaded):
        report["scenarios"]["s"]["config"].pop("parallel")
    assert serial == threaded


def test_seed_changes_mc_numbers(tmp_path):
    cfg = _small_sp4(tmp_path)
    _, a = _run(tmp_path, ["constant", "--config", cfg], "a.json")
    _, b = _run(tmp_path, ["constant", "--config", cfg, "--seed", "8"], "b.json")
    assert a["scenarios"]["s"]["constant"]["C"]["re"] != b["scenarios"]["s"]["constant"]["C"]["re"]


def test_timings_present_by_default(tmp_path):
    out = tmp_path / "t.json"
    assert main(["constant", "--scenario", "elliptic", "--out", str(out)]) == EXIT_OK
    assert "timings" in json.loads(out.read_text())
