'''
scanner.py
==========
该文件负责在整数区间上批量运行所有启用的检查，分块、可并行、可断点续跑，结果合并与顺序无关。

流程：
1. `partition_range` 把 [start, end] 精确切成若干分块（无重叠、无遗漏）。
2. `scan_chunk` 逐个 N 运行检查：偶数 N 由奇部的步数推出（D = s + D(N_odd) 等），
   最大 / 最小残数用 `residue_compare` 精确比较，平手取较小的 N；单个 N 预算超限只记一条
   "budget" 违规，不中断分块。
3. `run_scan` 用 asyncio 调度分块：workers=1 时经 `asyncio.to_thread` 顺序执行，
   workers>1 时经 ProcessPoolExecutor 并行；`asyncio.Semaphore` 限制在途分块数。
   每完成一块由事件循环（唯一写者）向检查点追加一行；重启时已完成分块直接从检查点读回。
4. `merge` 满足结合律与交换律，最终按分块起点排序后归并，报表与 worker 数、分块完成顺序无关。

可选有界缓存（odd_cache_limit > 0）：每个进程缓存小于上限的奇数的步数，
轨迹走到缓存中的值即停止。默认关闭。

更新条件：
- 当新增扫描检查时，在 config.CHECK_NAMES 登记，并在 `_scan` 中加入对应判定。
- 当 ChunkResult / ScanReport 字段变化时，旧检查点将无法读回，需要同步说明（CONTEXTS/）。
'''

import asyncio
import sys
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

from pydantic import BaseModel, Field, field_validator, model_validator

from checkpoint_utils import CheckpointError, append_checkpoint, load_checkpoint
from config import (
    BUDGET_CHECK,
    CHECK_NAMES,
    DEFAULT_CHUNK_SIZE,
    DEFAULT_STEP_BUDGET,
    REPORT_RESIDUE_DIGITS,
    WINDOW_UPPER,
)
from exact import (
    DecimalInt,
    ResidueTriple,
    expected_counts,
    lower_holds,
    predict_counts,
    residue_below,
    residue_compare,
    residue_decimal,
    residue_fraction,
    residue_product,
    theorem2_holds,
    wrc_holds,
)
from report_utils import ReportRow, write_report
from trajectory import BudgetExceededError, StepCounts, odd_part, trajectory_stats

# 每个进程一份，只存奇数且 < odd_cache_limit
_ODD_CACHE: Dict[int, StepCounts] = {}


# -------- 数据模型 -------- #

class ResidueRecord(BaseModel):
    e: int
    o: int
    n_odd: DecimalInt

    @classmethod
    def from_triple(cls, r: ResidueTriple) -> "ResidueRecord":
        return cls(e=r.e, o=r.o, n_odd=r.n_odd)

    def to_triple(self) -> ResidueTriple:
        return ResidueTriple(self.e, self.o, self.n_odd)


class Violation(BaseModel):
    check: str
    n: DecimalInt
    detail: str = ""

    def sort_key(self):
        return (self.n, self.check, self.detail)


class ChunkResult(BaseModel):
    """一个已完成分块；即检查点中的一行。"""

    start: DecimalInt
    end: DecimalInt
    max_res: Optional[ResidueRecord] = None
    argmax: Optional[DecimalInt] = None
    min_res: Optional[ResidueRecord] = None
    argmin: Optional[DecimalInt] = None
    violations: List[Violation] = Field(default_factory=list)
    count: int

    @model_validator(mode="after")
    def _check_count(self):
        if self.count != self.end - self.start + 1:
            raise ValueError(f"count={self.count} 与区间 [{self.start}, {self.end}] 不符")
        return self


class ScanReport(BaseModel):
    ranges: List[Tuple[DecimalInt, DecimalInt]] = Field(default_factory=list)
    count: int = 0
    max_res: Optional[ResidueRecord] = None
    argmax: Optional[DecimalInt] = None
    max_decimal: Optional[str] = None
    min_res: Optional[ResidueRecord] = None
    argmin: Optional[DecimalInt] = None
    min_decimal: Optional[str] = None
    within_window: bool = Field(True, description="所有残数都落在 [1, 1.26) 内")
    violations: List[Violation] = Field(default_factory=list)
    violation_totals: Dict[str, int] = Field(default_factory=dict)
    duration_seconds: float = 0.0

    @classmethod
    def from_chunk(cls, chunk: ChunkResult) -> "ScanReport":
        return _finish(
            ranges=[(chunk.start, chunk.end)],
            count=chunk.count,
            best=(chunk.max_res, chunk.argmax),
            worst=(chunk.min_res, chunk.argmin),
            violations=list(chunk.violations),
        )


class ScanConfig(BaseModel):
    start: int = Field(..., ge=1, description="区间起点（十进制字符串或整数）")
    end: int = Field(..., ge=1, description="区间终点，≥ start")
    chunk_size: int = Field(DEFAULT_CHUNK_SIZE, ge=1)
    workers: int = Field(1, ge=1)
    checks: FrozenSet[str] = Field(default_factory=lambda: frozenset(CHECK_NAMES))
    step_budget: int = Field(DEFAULT_STEP_BUDGET, ge=1)
    checkpoint_path: Optional[Path] = None
    report_path: Optional[Path] = None
    odd_cache_limit: int = Field(0, ge=0, description="> 0 时缓存小于该值的奇数的步数")

    @field_validator("start", "end", mode="before")
    @classmethod
    def _parse_decimal(cls, value):
        if isinstance(value, str):
            text = value.strip()
            if not text.isdigit():
                raise ValueError(f"不是十进制正整数: {value!r}")
            return int(text)
        return value

    @field_validator("checks", mode="before")
    @classmethod
    def _parse_checks(cls, value):
        if isinstance(value, str):
            value = CHECK_NAMES if value.strip() == "all" else [v.strip() for v in value.split(",") if v.strip()]
        names = frozenset(value)
        unknown = names - set(CHECK_NAMES)
        if unknown:
            raise ValueError(f"未知检查: {sorted(unknown)}，可选 {list(CHECK_NAMES)}")
        return names

    @model_validator(mode="after")
    def _check_range(self):
        if self.end < self.start:
            raise ValueError(f"区间为空：end={self.end} < start={self.start}")
        return self


# -------- 合并 -------- #

def _pick(a, b, sign: int):
    """在 (record, n) 两个候选中取更大（sign=1）或更小（sign=-1）的残数，平手取较小的 N。"""
    ra, na = a
    rb, nb = b
    if ra is None:
        return b
    if rb is None:
        return a
    cmp = residue_compare(ra.to_triple(), rb.to_triple()) * sign
    if cmp > 0 or (cmp == 0 and na <= nb):
        return a
    return b


def _coalesce(ranges: Iterable[Tuple[int, int]]) -> List[Tuple[int, int]]:
    merged: List[Tuple[int, int]] = []
    for lo, hi in sorted(ranges):
        if merged and lo <= merged[-1][1]:
            raise ValueError(f"区间重叠: [{merged[-1][0]}, {merged[-1][1]}] 与 [{lo}, {hi}]")
        if merged and lo == merged[-1][1] + 1:
            merged[-1] = (merged[-1][0], hi)
        else:
            merged.append((lo, hi))
    return merged


def _finish(ranges, count, best, worst, violations) -> ScanReport:
    violations = sorted(violations, key=Violation.sort_key)
    max_res, argmax = best
    min_res, argmin = worst
    within = True
    if max_res is not None:
        within = residue_below(max_res.to_triple(), WINDOW_UPPER) and lower_holds(min_res.to_triple())[0]
    totals = Counter(v.check for v in violations)
    return ScanReport(
        ranges=_coalesce(ranges),
        count=count,
        max_res=max_res,
        argmax=argmax,
        max_decimal=residue_decimal(max_res.to_triple(), REPORT_RESIDUE_DIGITS) if max_res else None,
        min_res=min_res,
        argmin=argmin,
        min_decimal=residue_decimal(min_res.to_triple(), REPORT_RESIDUE_DIGITS) if min_res else None,
        within_window=within,
        violations=violations,
        violation_totals=dict(sorted(totals.items())),
    )


def merge(a: Union[ChunkResult, ScanReport], b: Union[ChunkResult, ScanReport]) -> ScanReport:
    """合并两个不相交区间的结果；与参数顺序无关。"""
    if isinstance(a, ChunkResult):
        a = ScanReport.from_chunk(a)
    if isinstance(b, ChunkResult):
        b = ScanReport.from_chunk(b)
    return _finish(
        ranges=list(a.ranges) + list(b.ranges),
        count=a.count + b.count,
        best=_pick((a.max_res, a.argmax), (b.max_res, b.argmax), 1),
        worst=_pick((a.min_res, a.argmin), (b.min_res, b.argmin), -1),
        violations=list(a.violations) + list(b.violations),
    )


# -------- 分块扫描 -------- #

def partition_range(start: int, end: int, chunk_size: int) -> List[Tuple[int, int]]:
    if start < 1 or end < start:
        raise ValueError(f"无效区间 [{start}, {end}]")
    if chunk_size < 1:
        raise ValueError(f"chunk_size 必须 ≥ 1，收到 {chunk_size}")
    return [(lo, min(lo + chunk_size - 1, end)) for lo in range(start, end + 1, chunk_size)]


def _odd_stats(m: int, step_budget: int, cache_limit: int) -> StepCounts:
    if cache_limit <= 0:
        return trajectory_stats(m, step_budget)
    hit = _ODD_CACHE.get(m)
    if hit is None:
        hit = trajectory_stats(m, step_budget, known=_ODD_CACHE)
        if m < cache_limit:
            _ODD_CACHE[m] = hit
    elif hit.total > step_budget:
        raise BudgetExceededError(m, 1, hit.total, step_budget)
    return hit


def _scan(
    lo: int,
    hi: int,
    checks: FrozenSet[str],
    step_budget: int,
    odd_cache_limit: int = 0,
    collect_rows: bool = False,
) -> Tuple[ChunkResult, Optional[List[ReportRow]]]:
    if not 1 <= lo <= hi:
        raise ValueError(f"无效分块 [{lo}, {hi}]")
    unknown = set(checks) - set(CHECK_NAMES)
    if unknown:
        raise ValueError(f"未知检查: {sorted(unknown)}")

    do_lower = "lower" in checks
    do_wrc = "wrc" in checks
    do_formulas = "formulas" in checks
    do_theorem2 = "theorem2" in checks
    do_product = "product_form" in checks

    violations: List[Violation] = []
    rows: Optional[List[ReportRow]] = [] if collect_rows else None
    best = worst = None
    argmax = argmin = None

    for n in range(lo, hi + 1):
        s, m = odd_part(n)
        try:
            if s > step_budget:
                raise BudgetExceededError(n, m, s, step_budget)
            base = _odd_stats(m, step_budget - s, odd_cache_limit)
        except BudgetExceededError:
            # 明细不含越界时的步数：它随缓存命中与否而变
            detail = f"N={n} 超过步数预算 {step_budget}（偶数前缀 {s} 步，奇部 {m}）"
            violations.append(Violation(check=BUDGET_CHECK, n=n, detail=detail))
            continue

        counts = StepCounts(base.total + s, base.odd, base.even + s)
        r = ResidueTriple(base.even, base.odd, m)
        if best is None or residue_compare(r, best) > 0:
            best, argmax = r, n
        if worst is None or residue_compare(r, worst) < 0:
            worst, argmin = r, n
        detail = f"D={counts.total} O={counts.odd} E={counts.even}"

        if do_lower:
            holds, strict = lower_holds(r)
            if not holds:
                violations.append(Violation(check="lower", n=n, detail=f"Res < 1，{detail}"))
            elif strict != (m != 1):
                violations.append(Violation(check="lower", n=n, detail=f"等号情形与 2 的幂不符，{detail}"))
        if do_wrc and not wrc_holds(r):
            violations.append(Violation(check="wrc", n=n, detail=f"Res > 2，{detail}"))
        if do_formulas:
            try:
                predicted = predict_counts(n, counts)
            except ValueError as e:
                violations.append(Violation(check="formulas", n=n, detail=f"{e}，{detail}"))
            else:
                if predicted != expected_counts(counts):
                    violations.append(Violation(check="formulas", n=n, detail=f"预测 {list(predicted)}，{detail}"))
        if do_theorem2 and theorem2_holds(r) is False:
            violations.append(Violation(check="theorem2", n=n, detail=f"Res^9 ≥ O，{detail}"))
        if do_product and n & 1 and residue_product(m, step_budget) != residue_fraction(r):
            violations.append(Violation(check="product_form", n=n, detail=f"乘积形式不等，{detail}"))
        if rows is not None:
            rows.append((n, counts.total, counts.odd, counts.even, residue_decimal(r, REPORT_RESIDUE_DIGITS)))

    chunk = ChunkResult(
        start=lo,
        end=hi,
        max_res=ResidueRecord.from_triple(best) if best else None,
        argmax=argmax,
        min_res=ResidueRecord.from_triple(worst) if worst else None,
        argmin=argmin,
        violations=violations,
        count=hi - lo + 1,
    )
    return chunk, rows


def scan_chunk(
    lo: int,
    hi: int,
    checks: Iterable[str] = CHECK_NAMES,
    step_budget: int = DEFAULT_STEP_BUDGET,
    odd_cache_limit: int = 0,
) -> ChunkResult:
    """对 [lo, hi] 中每个 N 运行 checks 中的检查。"""
    return _scan(lo, hi, frozenset(checks), step_budget, odd_cache_limit)[0]


def report_rows(lo: int, hi: int, step_budget: int = DEFAULT_STEP_BUDGET) -> List[ReportRow]:
    """报表行 (N, D, O, E, residue)；预算超限的 N 不出现在报表中（已记为违规）。"""
    return _scan(lo, hi, frozenset(), step_budget, collect_rows=True)[1]


def _scan_chunk_task(lo, hi, checks, step_budget, odd_cache_limit, collect_rows):
    return _scan(lo, hi, checks, step_budget, odd_cache_limit, collect_rows)


# -------- 整体调度 -------- #

def _load_done(cfg: ScanConfig, chunks: List[Tuple[int, int]]) -> Dict[Tuple[int, int], ChunkResult]:
    if cfg.checkpoint_path is None:
        return {}
    path = str(cfg.checkpoint_path)
    expected = set(chunks)
    done: Dict[Tuple[int, int], ChunkResult] = {}
    for line_no, record in load_checkpoint(path, ChunkResult):
        key = (record.start, record.end)
        if key not in expected:
            raise CheckpointError(path, line_no, f"分块 [{record.start}, {record.end}] 不属于当前划分")
        done.setdefault(key, record)
    return done


async def _run_pending(
    cfg: ScanConfig,
    pending: List[Tuple[int, int]],
    rehydrated: List[Tuple[int, int]],
) -> Tuple[List[ChunkResult], Dict[int, List[ReportRow]]]:
    loop = asyncio.get_running_loop()
    pool = ProcessPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None
    limit = asyncio.Semaphore(cfg.workers * 2 if pool else 1)
    want_rows = cfg.report_path is not None

    async def run_one(func, *args):
        async with limit:
            if pool is None:
                return await asyncio.to_thread(func, *args)
            return await loop.run_in_executor(pool, partial(func, *args))

    fresh: List[ChunkResult] = []
    rows: Dict[int, List[ReportRow]] = {}
    try:
        tasks = [
            asyncio.ensure_future(run_one(
                _scan_chunk_task, lo, hi, cfg.checks, cfg.step_budget, cfg.odd_cache_limit, want_rows,
            ))
            for lo, hi in pending
        ]
        row_tasks = [asyncio.ensure_future(run_one(report_rows, lo, hi, cfg.step_budget)) for lo, hi in rehydrated]

        total = len(tasks)
        step = max(1, total // 10)
        for finished, fut in enumerate(asyncio.as_completed(tasks), start=1):
            chunk, chunk_rows = await fut
            if cfg.checkpoint_path is not None:
                append_checkpoint(str(cfg.checkpoint_path), chunk)
            fresh.append(chunk)
            if chunk_rows is not None:
                rows[chunk.start] = chunk_rows
            if chunk.violations:
                print(f"⚠️ 分块 [{chunk.start}, {chunk.end}] 发现 {len(chunk.violations)} 条违规", file=sys.stderr)
            if finished % step == 0 or finished == total:
                print(f"🔁 已完成 {finished}/{total} 个分块", file=sys.stderr)

        for (lo, _), fut in zip(rehydrated, row_tasks):
            rows[lo] = await fut
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    return fresh, rows


def run_scan(cfg: ScanConfig) -> ScanReport:
    started = time.perf_counter()
    chunks = partition_range(cfg.start, cfg.end, cfg.chunk_size)
    done = _load_done(cfg, chunks)
    pending = [c for c in chunks if c not in done]
    if done:
        print(f"📂 从检查点恢复 {len(done)} 个分块，剩余 {len(pending)} 个", file=sys.stderr)

    rehydrated = sorted(done) if cfg.report_path is not None else []
    fresh, rows = asyncio.run(_run_pending(cfg, pending, rehydrated))

    report = ScanReport()
    for chunk in sorted(list(done.values()) + fresh, key=lambda c: c.start):
        report = merge(report, chunk)

    if cfg.report_path is not None:
        ordered = [row for lo in sorted(rows) for row in rows[lo]]
        written = write_report(ordered, str(cfg.report_path))
        print(f"💾 报表已保存到 {cfg.report_path}（{written} 行）", file=sys.stderr)

    return report.model_copy(update={"duration_seconds": round(time.perf_counter() - started, 3)})


def find_max_residue(cfg: ScanConfig) -> Tuple[int, ResidueTriple, str]:
    """区间内残数最大的 N（平手取最小的 N）、其三元组与截断小数。"""
    report = run_scan(cfg)
    if report.max_res is None:
        raise RuntimeError(f"区间 [{cfg.start}, {cfg.end}] 内没有任何 N 在预算内到达 1")
    r = report.max_res.to_triple()
    return report.argmax, r, residue_decimal(r, REPORT_RESIDUE_DIGITS)
