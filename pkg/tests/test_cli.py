import json

import numpy as np
import pytest

from admmcert.cli import main
from admmcert.problems import load_instance


def test_generate_tv_first_difference(tmp_path):
    out = tmp_path / "tv4.txt"
    assert main(["generate", "tv", "--dims", "4", "--seed", "1", "--out", str(out)]) == 0
    spec = load_instance(out)
    expect = np.array([[1.0, -1.0, 0.0, 0.0],
                       [0.0, 1.0, -1.0, 0.0],
                       [0.0, 0.0, 1.0, -1.0]])
    np.testing.assert_array_equal(spec.F, expect)


def test_generate_trend_second_difference(tmp_path):
    out = tmp_path / "t4.txt"
    assert main(["generate", "trend", "--dims", "4", "--seed", "1", "--out", str(out)]) == 0
    spec = load_instance(out)
    np.testing.assert_array_equal(spec.F, [[1.0, -2.0, 1.0, 0.0], [0.0, 1.0, -2.0, 1.0]])


def test_generate_deterministic_per_seed(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    main(["generate", "lasso", "--dims", "5,8", "--seed", "42", "--out", str(a)])
    main(["generate", "lasso", "--dims", "5,8", "--seed", "42", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_generate_trend_dim_too_small(tmp_path, capsys):
    rc = main(["generate", "trend", "--dims", "2", "--seed", "1",
               "--out", str(tmp_path / "x.txt")])
    assert rc == 2
    assert "needs d >= 3" in capsys.readouterr().err


def test_solve_scalar_lasso_all_pass(tmp_path):
    out = tmp_path / "run"
    rc = main(["solve", "--spec", "scalar_lasso", "--out", str(out), "--N", "200"])
    assert rc == 0
    payload = json.loads((out / "certificates.json").read_text())
    assert payload["all_pass"] is True
    assert (out / "trace.csv").exists()
    assert (out / "metadata.txt").exists()


def test_solve_bad_r_cites_precondition(tmp_path, capsys):
    rc = main(["solve", "--spec", "scalar_lasso", "--out", str(tmp_path / "o"),
               "--variant", "general", "--r", "0.5", "--N", "10"])
    assert rc == 2
    assert "greater than the maximum eigenvalue" in capsys.readouterr().err


def test_solve_rerun_identical_artifacts(tmp_path):
    o1, o2 = tmp_path / "r1", tmp_path / "r2"
    for o in (o1, o2):
        assert main(["solve", "--spec", "scalar_lasso", "--out", str(o), "--N", "100"]) == 0
    for fname in ("trace.csv", "trace.json", "certificates.json"):
        assert (o1 / fname).read_bytes() == (o2 / fname).read_bytes()


def test_solve_instance_file(tmp_path):
    inst = tmp_path / "inst.txt"
    main(["generate", "lasso", "--dims", "4,3", "--seed", "9", "--out", str(inst)])
    rc = main(["solve", "--spec", str(inst), "--out", str(tmp_path / "run"), "--N", "300"])
    assert rc == 0


def test_solve_manifest_overridden_by_flags(tmp_path):
    manifest = tmp_path / "m.ini"
    manifest.write_text(
        "[instance]\nspec = scalar_lasso\n[solver]\ns = 1.0\nN = 50\n"
        f"[output]\ndir = {tmp_path / 'mrun'}\n")
    rc = main(["solve", "--manifest", str(manifest), "--N", "75"])
    assert rc == 0
    rows = (tmp_path / "mrun" / "trace.csv").read_text().strip().split("\n")
    assert len(rows) == 77  # header + 76 states


def test_missing_spec_is_usage_error(tmp_path, capsys):
    rc = main(["solve", "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "no instance given" in capsys.readouterr().err


def test_simulate_outputs_and_identity(tmp_path):
    out = tmp_path / "sim"
    rc = main(["simulate", "--spec", "scalar_lasso", "--out", str(out),
               "--delta", "1.0", "--horizon", "5.0"])
    assert rc == 0
    comp = (out / "comparison.csv").read_text().strip().split("\n")
    header = comp[0].split(",")
    i_hi = header.index("deviation_high_res")
    i_dis = header.index("deviation_discrete")
    for line in comp[1:]:
        vals = [float(v) for v in line.split(",")]
        # delta = s: the integrator IS the discrete iteration
        assert vals[i_hi] == pytest.approx(vals[i_dis], abs=1e-12)


def test_simulate_smooths_for_micro_steps(tmp_path):
    out = tmp_path / "sim2"
    rc = main(["simulate", "--spec", "scalar_lasso", "--out", str(out),
               "--delta", "0.05", "--horizon", "2.0"])
    assert rc == 0
    assert (out / "low_res.csv").exists()
    low = np.loadtxt(out / "low_res.csv", delimiter=",", skiprows=1)
    dev_col = low[:, 4]  # t, X0, Y0, Lambda0, deviation, ...
    assert np.max(dev_col) <= 1e-10


def test_report_from_solve_artifacts(tmp_path, capsys):
    out = tmp_path / "run"
    main(["solve", "--spec", "scalar_lasso", "--out", str(out), "--N", "100"])
    capsys.readouterr()
    rc = main(["report", "--spec", str(out / "certificates.json")])
    assert rc == 0
    text = capsys.readouterr().out
    assert "theorem_4_3_rate: pass" in text


def test_report_flags_failure(tmp_path, capsys):
    path = tmp_path / "cert.json"
    path.write_text(json.dumps({"all_pass": False, "certificates": [
        {"theorem": "demo", "pass": False, "worst_slack": 1.0,
         "worst_index": 0, "tolerance": 1e-9, "constants": {}}]}))
    assert main(["report", "--spec", str(path)]) == 1
    assert "demo: FAIL" in capsys.readouterr().out
