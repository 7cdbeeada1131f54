import json
from pathlib import Path

import numpy as np
import pytest

from compsim import cli, formats
from compsim.kinematics import forward_kinematics
from compsim.sim import MotionSpec, SimConfig, generate_motion, run_compensation

GOLDEN = Path(__file__).parent / "golden"


def test_default_model_loads(config):
    model = formats.load_model()
    pose = forward_kinematics(model, config.theta0)
    assert np.all(np.isfinite(pose.position))
    assert config.method == "RJM" and config.rate == 60.0
    np.testing.assert_array_equal(config.joint_limits.vel_limit, np.full(6, 0.1))


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_model_schema_errors_have_line_numbers(tmp_path):
    text = formats.default_model_path().read_text()
    bad = text.replace("axis: [0, 1, 0]}  # elbow", "axis: [0, 1]}  # elbow")
    with pytest.raises(formats.FormatError, match=r"default\.yaml:\d+: joints\.2\.axis: expected 3 values") as info:
        formats.load_model(_write(tmp_path, "default.yaml", bad))
    assert info.value.line == next(i for i, ln in enumerate(bad.splitlines(), 1) if "# elbow" in ln)
    with pytest.raises(formats.FormatError, match="version"):
        formats.load_model(_write(tmp_path, "v.yaml", text.replace("version: 1", "version: 7")))
    with pytest.raises(formats.FormatError, match="invalid YAML"):
        formats.load_model(_write(tmp_path, "y.yaml", "format: [unclosed\n"))
    with pytest.raises(formats.FormatError, match="pos_min must be < pos_max"):
        formats.load_model(_write(tmp_path, "l.yaml", text.replace(
            "position_max: [2.9, 2.9,", "position_max: [-3.0, 2.9,")))


def test_trace_round_trip(tmp_path):
    trace = generate_motion(MotionSpec(kind="Random3D", seed=9, duration=3.0))
    path = tmp_path / "trace.csv"
    formats.write_trace(trace, path)
    back = formats.load_trace(path)
    assert len(back) == len(trace)
    for a, b in zip(trace, back):
        assert a.t == b.t
        assert np.array_equal(a.p_H, b.p_H) and np.array_equal(a.v_H, b.v_H)
        np.testing.assert_allclose(a.Q_H, b.Q_H, atol=1e-15)


def test_trace_without_velocities_uses_differences(tmp_path):
    rows = ["t,px,py,pz,qw,qx,qy,qz"]
    for k in range(5):
        rows.append(f"{k / 60},{0.01 * k},0,1.2,1,0,0,0")
    trace = formats.load_trace(_write(tmp_path, "nv.csv", "\n".join(rows) + "\n"))
    np.testing.assert_allclose([s.v_H[0] for s in trace], 0.6, atol=1e-9)


def test_trace_rejects_bad_input(tmp_path):
    header = "t,px,py,pz,qw,qx,qy,qz\n"
    with pytest.raises(formats.FormatError, match=r":3: timestamps must be strictly increasing"):
        formats.load_trace(_write(tmp_path, "a.csv", header + "0.1,0,0,0,1,0,0,0\n0.05,0,0,0,1,0,0,0\n"))
    with pytest.raises(formats.FormatError, match="bad header"):
        formats.load_trace(_write(tmp_path, "b.csv", "time,x\n"))
    with pytest.raises(formats.FormatError, match=r":2: orientation"):
        formats.load_trace(_write(tmp_path, "c.csv", header + "0,0,0,0,2,0,0,0\n"))
    with pytest.raises(formats.FormatError, match=r":2: not a number"):
        formats.load_trace(_write(tmp_path, "d.csv", header + "0,a,0,0,1,0,0,0\n"))


def test_log_round_trip(tmp_path, config):
    trace = generate_motion(MotionSpec(kind="LR", duration=4.0))
    log = run_compensation(SimConfig(config.model, config.theta0, method="NBM"), trace, scenario="lr")
    path = tmp_path / "log.csv"
    formats.write_log(log, path)
    back = formats.load_log(path)
    assert (back.method, back.scenario, back.rate) == ("NBM", "lr", 60.0)
    for key in ("t", "p_H", "Q_H", "v_B", "delta_p_E", "delta_eta", "delta_eps", "theta", "theta_dot",
                "theta_dot_raw", "ee_position", "ee_orientation", "rho_E", "p1_violation", "saturated"):
        assert np.array_equal(getattr(back, key), getattr(log, key)), key


def test_log_rejects_foreign_file(tmp_path):
    with pytest.raises(formats.FormatError, match="not a compsim-log"):
        formats.load_log(_write(tmp_path, "x.csv", "a,b\n1,2\n"))


def test_config_hash_stable(config):
    fp = formats.config_fingerprint(config)
    again = json.loads(json.dumps(fp))
    assert formats.canonical_hash(fp) == formats.canonical_hash(again)
    assert formats.canonical_hash(fp) != formats.canonical_hash({**fp, "method": "NBM"})


# ---------------------------------------------------------------- CLI

def run_cli(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_cli_fk(capsys, config):
    code, out, _ = run_cli(["fk", "--theta", ",".join(map(str, config.theta0))], capsys)
    assert code == 0
    pose = json.loads(out)
    np.testing.assert_allclose(pose["position"], forward_kinematics(config.model, config.theta0).position)


def test_cli_plan(capsys):
    code, out, _ = run_cli(["plan", "--method", "nbm", "--theta", "0,0.6,1.5,0,1.0,0", "--v-b", "0,0,0.05"], capsys)
    assert code == 0
    res = json.loads(out)
    assert res["method"] == "NBM" and len(res["theta_dot"]) == 6
    assert max(abs(x) for x in res["theta_dot"]) <= 0.1
    code, _, err = run_cli(["plan", "--theta", "0,0,0,0,0"], capsys)
    assert code == 1 and "expected 6 joint values" in err
    assert err.count("\n") == 1


def test_cli_plan_singular_is_numerical_failure(capsys):
    code, _, err = run_cli(["plan", "--unfiltered", "--theta", "0,0.6,1.5,1.5707963267948966,0,0"], capsys)
    assert code == 2 and "numerical failure" in err


def test_cli_input_errors(capsys, tmp_path):
    code, _, err = run_cli(["simulate", "--bogus", "--out", tmp_path / "x.csv"], capsys)
    assert code == 1 and "unrecognized arguments" in err
    code, _, err = run_cli(["evaluate", tmp_path / "missing.csv"], capsys)
    assert code == 1 and "cannot read file" in err
    code, _, err = run_cli(["simulate", "--model", tmp_path / "nope.yaml", "--out", tmp_path / "x.csv"], capsys)
    assert code == 1


def test_cli_simulate_evaluate_compare(capsys, tmp_path):
    log_r, log_n = tmp_path / "r.csv", tmp_path / "n.csv"
    code, _, _ = run_cli(["simulate", "--method", "rjm", "--motion", "ud", "--amplitude", "0.15",
                          "--duration", "8", "--out", log_r], capsys)
    assert code == 0 and log_r.exists()
    manifest = json.loads(Path(f"{log_r}.manifest.json").read_text())
    assert manifest["outputs"]["log"]["sha256"] == formats.file_sha256(log_r)
    code, out, _ = run_cli(["evaluate", log_r], capsys)
    report = json.loads(out)
    assert set(report["axes"]) == {"x", "y", "z"} and 0.0 <= report["D_E"] <= 1.0
    run_cli(["simulate", "--method", "nbm", "--motion", "ud", "--duration", "8", "--out", log_n], capsys)
    code, out, _ = run_cli(["compare", log_n, log_r, "--out", tmp_path / "cmp.json"], capsys)
    assert code == 0
    cmp = json.loads(out)
    assert cmp["a"]["method"] == "NBM" and cmp["b"]["method"] == "RJM"
    assert json.loads((tmp_path / "cmp.json").read_text()) == cmp


def test_cli_seed_env_override(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("COMPSIM_SEED", "42")
    run_cli(["simulate", "--motion", "random3d", "--duration", "5", "--out", tmp_path / "a.csv"], capsys)
    manifest = json.loads(Path(f"{tmp_path / 'a.csv'}.manifest.json").read_text())
    assert manifest["scenarios"][0]["seed"] == 42
    assert formats.load_log(tmp_path / "a.csv").scenario.endswith("-s42")


def test_golden_end_to_end(capsys, tmp_path):
    log = tmp_path / "g.csv"
    code, _, _ = run_cli(["simulate", "--method", "rjm", "--trace", GOLDEN / "trace_ud.csv", "--out", log], capsys)
    assert code == 0
    code, out, _ = run_cli(["evaluate", log], capsys)
    got, want = json.loads(out), json.loads((GOLDEN / "report_rjm_ud.json").read_text())
    assert got["method"] == want["method"] and got["scenario"] == want["scenario"]
    assert got["D_E"] == pytest.approx(want["D_E"], abs=1e-9)
    for axis in "xyz":
        for key, value in want["axes"][axis].items():
            assert got["axes"][axis][key] == pytest.approx(value, abs=1e-9), (axis, key)
