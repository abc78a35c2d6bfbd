import io
import json

import pytest

from riemann_kwave.cli import run

import cases


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture(scope="module")
def built(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    (d / "psi.json").write_text(json.dumps({"schema_version": 1, "profiles": [{"kind": "linear", "slope": [1.0]}]}))
    code, out, err = call("build", "--model", "shallow-water", "--frame", "fast", "--base", "0,1",
                          "--rgrid", "-1:1:201", "--psi", str(d / "psi.json"), "--out", str(d / "s.json"))
    assert code == 0, err
    return d


def test_models():
    code, out, _ = call("models")
    assert code == 0 and "shallow-water" in out and "gas-polytropic" in out


def test_models_json():
    code, out, _ = call("models", "--format", "json")
    assert code == 0
    assert {m["name"] for m in json.loads(out)["models"]} >= {"shallow-water", "gas-polytropic"}


def test_branches():
    code, out, _ = call("branches", "--model", "shallow-water", "--state", "1,2", "--format", "json")
    assert code == 0
    speeds = sorted(b["speed"] for b in json.loads(out)["branches"])
    assert speeds == [-1.0, 3.0]


def test_branches_outside_domain():
    code, _, err = call("branches", "--model", "shallow-water", "--state", "0,-1")
    assert code == 2 and "DomainError" in err


def test_involutivity_reports_commutation():
    assert call("involutivity", "--model", "shallow-water", "--frame", "fast,slow")[0] == 0
    # two fields in a two-dimensional state space are always involutive; the
    # tracked gas frame only fails to commute
    code, out, _ = call("involutivity", "--model", "gas-polytropic", "--frame", "fast,slow", "--tracked",
                        "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["passed"] and doc["max_commutation"] > 1e-3


def test_build_uncertified_frame_exit_two(built):
    code, _, err = call("build", "--model", "gas-polytropic", "--frame", "fast,slow", "--tracked", "--base", "1,0",
                        "--rgrid", "-0.1:0.1:5,-0.1:0.1:5", "--psi", str(built / "psi.json"),
                        "--out", str(built / "bad.json"))
    assert code == 2 and "ContractError" in err
    assert not (built / "bad.json").exists()


def test_build_writes_solution(built):
    doc = json.loads((built / "s.json").read_text())
    assert doc["schema_version"] == 1 and len(doc["surface"]["values"]) == 201


def test_verify_default_grid_passes(built):
    code, out, err = call("verify", "--model", "shallow-water", "--solution", str(built / "s.json"),
                          "--xgrid", cases.DEFAULT_XGRID, "--out", str(built / "report.json"))
    assert code == 0, err
    assert "max residual" in out
    assert json.loads((built / "report.json").read_text())["passed"]


def test_verify_unresolved_exit_three(built):
    code, _, _ = call("verify", "--model", "shallow-water", "--solution", str(built / "s.json"),
                      "--xgrid", "-0.5:-0.3:3,-1:1:5")
    assert code == 3


def test_sample_is_byte_identical(built):
    for name, threads in (("a.csv", "1"), ("b.csv", "4")):
        code, _, err = call("sample", "--solution", str(built / "s.json"), "--xgrid", "0:0.2:5,-1:1:11",
                            "--out", str(built / name), "--threads", threads, "--plot")
        assert code == 0, err
    assert (built / "a.csv").read_bytes() == (built / "b.csv").read_bytes()
    assert "splot" in (built / "a.gp").read_text()


def test_verify_symmetry(built):
    code, _, err = call("verify-symmetry", "--solution", str(built / "s.json"), "--xgrid", "0:0.2:3,-0.5:0.5:5",
                        "--out", str(built / "sym.json"))
    assert code == 0, err
    assert json.loads((built / "sym.json").read_text())["invariance"]["max"] <= 1e-6


def test_config_violation_exit_64(tmp_path):
    (tmp_path / "c.json").write_text(json.dumps({"model": {"name": "shallow-water", "colour": "red"}}))
    code, _, err = call("models", "--config", str(tmp_path / "c.json"))
    assert code == 64 and "/model/colour" in err


def test_usage_errors_exit_64():
    assert call()[0] == 64
    assert call("no-such-command")[0] == 64
    assert call("build", "--model", "shallow-water")[0] == 64


def test_run_from_config(tmp_path):
    cfg = {
        "schema_version": 1,
        "model": {"name": "shallow-water"},
        "frame": {"selectors": ["fast"]},
        "base_state": [0.0, 1.0],
        "rgrid": "-1:1:201",
        "xgrid": "0:0.2:5,-0.5:0.5:11",
        "profiles": [{"kind": "linear", "slope": [1.0]}],
        "outputs": {"solution": str(tmp_path / "s.json"), "samples": str(tmp_path / "s.csv"),
                    "report": str(tmp_path / "r.json")},
    }
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    code, _, err = call("run", "--config", str(tmp_path / "c.json"))
    assert code == 0, err
    assert (tmp_path / "s.csv").exists() and (tmp_path / "r.json").exists()
