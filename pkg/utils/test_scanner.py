"""test_scanner.py
=================
该脚本位于 utils/ 目录，测试 scanner.py：区间划分、分块扫描、合并律、并发确定性、
检查点续跑与报表输出。

执行方式：
    pytest utils/test_scanner.py
"""

import json
import sys
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from openpyxl import load_workbook
from pydantic import ValidationError

ROOT_DIR = Path(__file__).resolve().parent.parent
SRC_DIR = ROOT_DIR / "src"
sys.path.insert(0, str(SRC_DIR))

import scanner  # type: ignore
from checkpoint_utils import CheckpointError  # type: ignore
from exact import ResidueTriple  # type: ignore
from scanner import (  # type: ignore
    ChunkResult,
    ScanConfig,
    ScanReport,
    find_max_residue,
    merge,
    partition_range,
    report_rows,
    run_scan,
    scan_chunk,
)


def _same(a: ScanReport, b: ScanReport) -> bool:
    skip = {"duration_seconds"}
    return a.model_dump(exclude=skip) == b.model_dump(exclude=skip)


# -------- 区间划分 -------- #

def test_partition_range_exact_cover():
    assert partition_range(1, 10, 4) == [(1, 4), (5, 8), (9, 10)]
    assert partition_range(7, 7, 100) == [(7, 7)]


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 10 ** 6), st.integers(0, 5000), st.integers(1, 700))
def test_partition_has_no_gaps_or_overlaps(start, width, size):
    chunks = partition_range(start, start + width, size)
    assert chunks[0][0] == start
    assert chunks[-1][1] == start + width
    for (_, hi), (lo, _) in zip(chunks, chunks[1:]):
        assert lo == hi + 1


@pytest.mark.parametrize("args", [(0, 5, 1), (5, 4, 1), (1, 5, 0)])
def test_partition_rejects_bad_input(args):
    with pytest.raises(ValueError):
        partition_range(*args)


# -------- 分块扫描 -------- #

def test_scan_1_to_100():
    chunk = scan_chunk(1, 100)
    assert chunk.count == 100
    assert chunk.violations == []
    assert chunk.argmax == 9
    assert chunk.max_res.to_triple() == ResidueTriple(13, 6, 9)
    assert chunk.argmin == 1


def test_scan_single_power_of_two():
    chunk = scan_chunk(16, 16)
    assert chunk.count == 1
    assert chunk.violations == []
    assert chunk.argmax == chunk.argmin == 16
    assert chunk.max_res.to_triple() == ResidueTriple(0, 0, 1)


def test_scan_1_to_4_max_at_three():
    chunk = scan_chunk(1, 4)
    assert chunk.argmax == 3
    assert chunk.max_res.to_triple() == ResidueTriple(5, 2, 3)


def test_budget_violation_does_not_abort_chunk():
    chunk = scan_chunk(25, 30, step_budget=50)
    assert chunk.count == 6
    assert [(v.check, v.n) for v in chunk.violations] == [("budget", 27)]
    assert chunk.argmax != 27


def test_unknown_check_rejected():
    with pytest.raises(ValueError):
        scan_chunk(1, 10, checks=["lower", "nope"])


def test_odd_cache_gives_same_result():
    plain = scan_chunk(1, 3000)
    cached = scan_chunk(1, 3000, odd_cache_limit=1000)
    assert plain == cached


def test_warm_odd_cache_still_enforces_budget():
    plain = scan_chunk(100, 110, step_budget=112)
    assert [v.n for v in plain.violations] == [108, 109, 110]

    scan_chunk(27, 27, odd_cache_limit=1000)
    scan_chunk(55, 55, odd_cache_limit=1000)
    cached = scan_chunk(100, 110, step_budget=112, odd_cache_limit=1000)
    assert cached == plain


def test_budget_violation_names_the_scanned_n():
    chunk = scan_chunk(108, 108, step_budget=112)
    detail = chunk.violations[0].detail
    assert detail.startswith("N=108 ")
    assert "预算 112" in detail
    assert "奇部 27" in detail


def test_report_rows():
    rows = report_rows(6, 8)
    assert [r[:4] for r in rows] == [(6, 8, 2, 6), (7, 16, 5, 11), (8, 3, 0, 3)]
    assert rows[1][4].startswith("1.2039")


def test_chunk_count_must_match_range():
    with pytest.raises(ValidationError):
        ChunkResult(start=1, end=10, count=9)


# -------- 合并 -------- #

def test_merge_commutative_and_associative():
    a, b, c = scan_chunk(1, 100), scan_chunk(101, 250), scan_chunk(251, 400)
    assert _same(merge(a, b), merge(b, a))
    assert _same(merge(merge(a, b), c), merge(a, merge(b, c)))
    whole = ScanReport.from_chunk(scan_chunk(1, 400))
    assert _same(merge(merge(a, b), c), whole)
    assert merge(merge(a, b), c).ranges == [(1, 400)]


def test_merge_rejects_overlap():
    with pytest.raises(ValueError):
        merge(scan_chunk(1, 10), scan_chunk(10, 20))


def test_merge_keeps_disjoint_ranges():
    report = merge(scan_chunk(1, 10), scan_chunk(20, 30))
    assert report.ranges == [(1, 10), (20, 30)]
    assert report.count == 21


# -------- 整体扫描 -------- #

def test_scan_config_validation():
    with pytest.raises(ValidationError):
        ScanConfig(start=10, end=5)
    with pytest.raises(ValidationError):
        ScanConfig(start="abc", end=5)
    with pytest.raises(ValidationError):
        ScanConfig(start=1, end=5, checks="lower,bogus")
    assert ScanConfig(start="1", end="5", checks="all").checks == frozenset(
        {"lower", "wrc", "formulas", "theorem2", "product_form"}
    )


def test_run_scan_is_independent_of_workers_and_chunking():
    one = run_scan(ScanConfig(start=1, end=3000, chunk_size=3000, workers=1))
    many = run_scan(ScanConfig(start=1, end=3000, chunk_size=137, workers=4))
    assert _same(one, many)
    assert one.violations == []
    assert one.within_window
    assert one.argmax == 993
    assert one.max_decimal.startswith("1.253142144")


def test_resume_from_truncated_checkpoint(tmp_path):
    path = tmp_path / "scan.jsonl"
    cfg = ScanConfig(start=1, end=2000, chunk_size=100, checkpoint_path=path)
    full = run_scan(cfg)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 20

    path.write_text("\n".join(lines[:7]) + "\n", encoding="utf-8")
    resumed = run_scan(cfg)
    assert _same(full, resumed)
    assert len(path.read_text(encoding="utf-8").splitlines()) == 20


def test_completed_checkpoint_is_not_recomputed(tmp_path, monkeypatch):
    path = tmp_path / "scan.jsonl"
    cfg = ScanConfig(start=1, end=500, chunk_size=50, checkpoint_path=path)
    first = run_scan(cfg)

    def boom(*args, **kwargs):
        raise AssertionError("已完成的分块被重新计算")

    monkeypatch.setattr(scanner, "_scan_chunk_task", boom)
    assert _same(first, run_scan(cfg))


def test_corrupt_checkpoint_reports_line(tmp_path):
    path = tmp_path / "scan.jsonl"
    cfg = ScanConfig(start=1, end=300, chunk_size=100, checkpoint_path=path)
    run_scan(cfg)
    lines = path.read_text(encoding="utf-8").splitlines()
    path.write_text(lines[0] + "\n{not json\n", encoding="utf-8")
    with pytest.raises(CheckpointError) as info:
        run_scan(cfg)
    assert info.value.line_no == 2


def test_checkpoint_from_other_partition_rejected(tmp_path):
    path = tmp_path / "scan.jsonl"
    run_scan(ScanConfig(start=1, end=300, chunk_size=100, checkpoint_path=path))
    with pytest.raises(CheckpointError) as info:
        run_scan(ScanConfig(start=1, end=300, chunk_size=50, checkpoint_path=path))
    assert info.value.line_no == 1


def test_checkpoint_lines_are_json_with_decimal_strings(tmp_path):
    path = tmp_path / "scan.jsonl"
    run_scan(ScanConfig(start=1, end=10, chunk_size=10, checkpoint_path=path))
    record = json.loads(path.read_text(encoding="utf-8").splitlines()[0])
    assert record["start"] == "1"
    assert record["count"] == 10
    assert set(record) == {"start", "end", "max_res", "argmax", "min_res", "argmin", "violations", "count"}


def test_csv_report_includes_resumed_chunks(tmp_path):
    path = tmp_path / "scan.jsonl"
    report = tmp_path / "rows.csv"
    run_scan(ScanConfig(start=1, end=200, chunk_size=50, checkpoint_path=path))
    run_scan(ScanConfig(start=1, end=200, chunk_size=50, checkpoint_path=path, report_path=report))
    lines = report.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "N,D,O,E,residue"
    assert len(lines) == 201
    assert lines[7].startswith("7,16,5,11,1.2039")


def test_xlsx_report(tmp_path):
    report = tmp_path / "rows.xlsx"
    run_scan(ScanConfig(start=1, end=30, chunk_size=7, report_path=report))
    ws = load_workbook(report)["Residues"]
    rows = list(ws.iter_rows(values_only=True))
    assert rows[0] == ("N", "D", "O", "E", "residue")
    assert rows[-1][:2] == ("总计", 30)
    assert rows[27][0] == "27"


def test_find_max_residue():
    n, r, text = find_max_residue(ScanConfig(start=1, end=10_000, checks=[]))
    assert n == 993
    assert r == ResidueTriple(61, 32, 993)
    assert text.startswith("1.253142144")
    n, _, _ = find_max_residue(ScanConfig(start=1, end=4, checks=[]))
    assert n == 3


def test_find_max_residue_all_over_budget():
    with pytest.raises(RuntimeError):
        find_max_residue(ScanConfig(start=27, end=27, checks=[], step_budget=10))


if __name__ == "__main__":
    pytest.main([__file__])
