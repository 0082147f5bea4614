"""test_main.py
==============
该脚本位于 utils/ 目录，测试命令行入口 main.main(argv) 的输出与退出码：
0 = 全部通过，1 = 参数或运行错误，2 = 发现违规 / 检查失败。

执行方式：
    pytest utils/test_main.py
"""

import json
import sys
from pathlib import Path

import pytest

ROOT_DIR = Path(__file__).resolve().parent.parent
SRC_DIR = ROOT_DIR / "src"
sys.path.insert(0, str(SRC_DIR))

from main import main  # type: ignore


# -------- 单个 N -------- #

def test_stats(capsys):
    assert main(["stats", "7"]) == 0
    out = capsys.readouterr().out
    assert "D=16 O=5 E=11" in out
    assert "O←D: 5 ✓" in out


def test_stats_json_keeps_big_n_as_string(capsys):
    n = 2 ** 100 + 1
    assert main(["stats", str(n), "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["n"] == str(n)
    assert all(payload["matches"])


@pytest.mark.parametrize("arg", ["abc", "0", "-5", "1.5"])
def test_stats_rejects_bad_n(arg):
    with pytest.raises(SystemExit) as info:
        main(["stats", arg])
    assert info.value.code == 1


def test_budget_exceeded_exits_1(capsys):
    assert main(["stats", "27", "--budget", "50"]) == 1
    assert "预算超限" in capsys.readouterr().err


def test_residue(capsys):
    assert main(["residue", "993", "--digits", "9"]) == 0
    out = capsys.readouterr().out
    assert "Res=1.253142144" in out
    assert "E=61 O=32 N_odd=993" in out


def test_branch(capsys):
    assert main(["branch", "7"]) == 0
    out = capsys.readouterr().out
    assert "N_1=7  m=1" in out
    assert "N_5=5  m=4  3∤N_j" in out


# -------- 区间扫描 -------- #

def test_verify_single_power_of_two(capsys):
    assert main(["verify", "--from", "16", "--to", "16"]) == 0
    assert "1.000000000000" in capsys.readouterr().out


def test_verify_json(capsys):
    assert main(["verify", "--from", "1", "--to", "100", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["argmax"] == "9"
    assert payload["count"] == 100
    assert payload["violations"] == []


def test_verify_empty_range_exits_1():
    assert main(["verify", "--from", "10", "--to", "5"]) == 1


def test_verify_budget_violation_exits_2(capsys):
    assert main(["verify", "--from", "25", "--to", "30", "--budget", "50"]) == 2
    assert "budget=1" in capsys.readouterr().out


def test_verify_corrupt_checkpoint_exits_1(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text("garbage\n", encoding="utf-8")
    assert main(["verify", "--from", "1", "--to", "10", "--checkpoint", str(path)]) == 1


def test_verify_writes_report(tmp_path):
    report = tmp_path / "out" / "rows.csv"
    assert main(["verify", "--from", "1", "--to", "50", "--report", str(report)]) == 0
    assert len(report.read_text(encoding="utf-8").splitlines()) == 51


def test_max_residue(capsys):
    assert main(["max-residue", "--from", "1", "--to", "4"]) == 0
    assert "N=3" in capsys.readouterr().out


# -------- 数值界 -------- #

def test_bounds_small_caps(capsys):
    assert main(["bounds", "--lemma4-max", "100", "--lemma5-max", "50"]) == 0
    out = capsys.readouterr().out
    assert "lemma4" in out and "lemma5" in out


def test_bounds_zero_cap_exits_1():
    assert main(["bounds", "--lemma4-max", "0"]) == 1


def test_bounds_low_digits_exits_1():
    assert main(["bounds", "--constants", "--digits", "20"]) == 1


def test_bounds_inconclusive_exits_2(capsys):
    assert main(["bounds", "--lemma4-max", "10", "--margin", "1"]) == 2
    rows = capsys.readouterr().out
    assert "lemma4" in rows


def test_bounds_constants_json(capsys):
    assert main(["bounds", "--constants", "--json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert [r["check"] for r in rows] == ["theorem2_constant", "corollary_bound", "exceptional_starts"]
    assert all(r["fail"] == 0 and r["inconclusive"] == 0 for r in rows)


# -------- 环境变量 -------- #

def test_budget_from_environment(monkeypatch, capsys):
    import config  # type: ignore

    monkeypatch.setenv("RESIDUE_LAB_BUDGET", "123")
    assert config.resolve_step_budget() == 123
    monkeypatch.setenv("RESIDUE_LAB_BUDGET", "abc")
    assert config.resolve_step_budget() == config.FALLBACK_STEP_BUDGET
    assert "⚠️" in capsys.readouterr().err

    monkeypatch.setenv("RESIDUE_LAB_BUDGET", "50")
    assert main(["stats", "27"]) == 1


def test_bare_report_name_goes_to_output_dir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["verify", "--from", "1", "--to", "20", "--report", "rows.csv"]) == 0
    assert (tmp_path / "output" / "rows.csv").exists()


if __name__ == "__main__":
    pytest.main([__file__])
