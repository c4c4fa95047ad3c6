import json
import subprocess
import sys
from pathlib import Path

import pytest

from ekl.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(tmp_path, text, *extra):
    cfg = tmp_path / "job.toml"
    cfg.write_text(text)
    out = tmp_path / "report.json"
    code = main(["--config", str(cfg), "--out", str(out), *extra])
    return code, json.loads(out.read_text())


@pytest.mark.parametrize("name,code", [("recognize", 0), ("ek_eval", 0), ("hurwitz_lvalue", 0), ("broken", 2)])
def test_shipped_configs(tmp_path, name, code):
    out = tmp_path / "r.json"
    assert main(["--config", str(CONFIGS / f"{name}.toml"), "--out", str(out)]) == code
    rep = json.loads(out.read_text())
    assert rep["artifact_version"]
    assert rep["verdict"] == ("pass" if code == 0 else "error")


def test_lvalue_report_contents(tmp_path):
    code, rep = run(tmp_path, (CONFIGS / "hurwitz_lvalue.toml").read_text())
    assert code == 0
    assert rep["result"]["core_recognized"] == "1/10"
    assert rep["config_fingerprint"] and "time" not in json.dumps(rep).lower()


def test_missing_field_is_named(tmp_path):
    code, rep = run(tmp_path, '[job]\ncommand = "lvalue"\n[field]\npreset = "Q(i)"\n')
    assert code == 2
    assert rep["error"]["details"]["missing"] == "character"


def test_unknown_command(tmp_path):
    code, rep = run(tmp_path, '[job]\ncommand = "frobnicate"\n[field]\npreset = "Q(i)"\n')
    assert code == 2 and rep["error"]["type"] == "MalformedConfig"


def test_failed_verification_exits_one(tmp_path):
    text = '[job]\ncommand = "verify-theta-fe"\n[field]\npreset = "Q(i)"\n[verify]\ncount = 3\nslack_bits = -60\n'
    code, rep = run(tmp_path, text)
    assert code == 1 and rep["verdict"] == "fail"


def test_budget_exit_code(tmp_path):
    text = '[job]\ncommand = "ek-eval"\n[field]\npreset = "Q(i)"\n[query]\ns = "5/2"\nz = ["1/3", 0]\nmethod = "direct"\n'
    code, rep = run(tmp_path, text)
    assert code == 3 and rep["error"]["type"] == "BudgetExceeded"


def test_seed_must_be_u64(tmp_path, capsys):
    assert main(["--config", str(CONFIGS / "recognize.toml"), "--seed", "-1"]) == 2


def test_precision_flag_overrides(tmp_path):
    code, rep = run(tmp_path, (CONFIGS / "recognize.toml").read_text(), "--precision", "200")
    assert code == 0 and rep["precision"] == 200


def test_reports_are_byte_identical(tmp_path):
    cmd = [sys.executable, "-m", "ekl.cli", "--config", str(CONFIGS / "theta_fe.toml"), "--seed", "42"]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True, env={"EKL_CACHE_DIR": str(tmp_path), "PATH": ""}).stdout
    assert a == b and len(a) > 100
