"""
main.py
=======
该脚本是残数验证工具 residue_lab 的命令行入口。子命令：
1.  `stats N`        打印 D、O、E 以及六个步数公式的预测值与命中标记。
2.  `residue N`      打印残数三元组 (E, O, N_odd)、截断小数，以及 lower / wrc / theorem2 /
                     product_form / corollary 的逐项判定。
3.  `branch N`       打印 N-奇数分支与每步除 2 次数，并标出 j ≥ 2 时是否被 3 整除。
4.  `verify`         区间扫描（调用 scanner.run_scan），支持并发、检查点、CSV / Excel 报表。
5.  `bounds`         辅助不等式的数值核验表（Lemma 4 / Lemma 5 / Theorem 2 断言与常数 / Corollary 1）。
6.  `max-residue`    区间内残数最大的 N。

N 一律按十进制字符串解析，长度不限。残数输出一律用精确截断小数，不经过浮点格式化。
退出码：0 = 全部通过；1 = 参数或运行错误；2 = 存在违规 / 检查失败。
环境变量 RESIDUE_LAB_BUDGET 覆盖默认步数预算（见 config.py）。

更新条件：
- 当新增子命令或参数时，更新 `build_parser` 与对应的 cmd_* 函数，并同步 README。
- 当 ScanReport 字段变化时，更新 `_print_scan_report` 的表格输出。
"""

import argparse
import json
import os
import sys
from typing import List, Optional

from analysis import (
    PrecisionConfig,
    corollary_bound_check,
    corollary_instance_check,
    exceptional_starts_check,
    lemma4_sweep,
    lemma5_sweep,
    theorem2_claim_sweep,
    theorem2_constant_check,
)
from checkpoint_utils import CheckpointError
from config import (
    CHECK_NAMES,
    DEFAULT_CHUNK_SIZE,
    MARGIN,
    OUTPUT_DIR,
    REPORT_RESIDUE_DIGITS,
    THEOREM2_CLAIM_RANGE,
    WORKING_DIGITS,
    resolve_step_budget,
    resolve_workers,
)
from exact import (
    FORMULA_LABELS,
    CheckOutcome,
    Verdict,
    check_lower,
    check_product_form,
    check_theorem2,
    check_wrc,
    predict_all,
    residue_decimal,
    residue_of,
)
from scanner import ScanConfig, ScanReport, find_max_residue, run_scan
from trajectory import BudgetExceededError, odd_branch, trajectory_stats

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATION = 2

DEFAULT_LEMMA4_MAX = 10 ** 4
DEFAULT_LEMMA5_MAX = 10 ** 3
MARK = {True: "✓", False: "✗"}


class _Parser(argparse.ArgumentParser):
    """参数错误统一返回退出码 1（2 留给“发现违规”）。"""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"❌ 参数错误: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ERROR)


def _decimal(text: str) -> int:
    """十进制正整数，长度不限。"""
    cleaned = text.strip().replace("_", "")
    if not cleaned.isdigit() or int(cleaned) < 1:
        raise argparse.ArgumentTypeError(f"需要十进制正整数，收到 {text!r}")
    return int(cleaned)


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"需要正整数，收到 {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"需要正整数，收到 {text!r}")
    return value


def _emit_json(payload) -> None:
    print(json.dumps(payload, ensure_ascii=False, indent=2))


# -------- 单个 N -------- #

def cmd_stats(n: int, budget: int, as_json: bool = False) -> int:
    fc = predict_all(n, trajectory_stats(n, budget))
    c = fc.counts
    if as_json:
        print(fc.model_dump_json(indent=2))
    else:
        print(f"N={n}")
        print(f"D={c.total} O={c.odd} E={c.even}")
        for label, value, ok in zip(FORMULA_LABELS, fc.predicted, fc.matches):
            print(f"  {label}: {value} {MARK[ok]}")
    return EXIT_OK if fc.all_match else EXIT_VIOLATION


def _outcome_line(o: CheckOutcome) -> str:
    strict = "" if o.strict is None else (" (严格)" if o.strict else " (等号)")
    return f"  {o.check:<14} {o.verdict.value}{strict}"


def cmd_residue(n: int, digits: int, budget: int, as_json: bool = False) -> int:
    r = residue_of(n, budget)
    outcomes = [
        check_lower(n, budget),
        check_wrc(n, budget),
        check_theorem2(n, budget),
        check_product_form(n, budget),
        corollary_instance_check(n, budget),
    ]
    text = residue_decimal(r, digits)
    if as_json:
        _emit_json({
            "n": str(n),
            "e": r.e,
            "o": r.o,
            "n_odd": str(r.n_odd),
            "residue": text,
            "checks": [o.model_dump(mode="json") for o in outcomes],
        })
    else:
        print(f"N={n}  E={r.e} O={r.o} N_odd={r.n_odd}")
        print(f"Res={text}…")
        for o in outcomes:
            print(_outcome_line(o))
    failed = any(o.verdict is Verdict.FAIL for o in outcomes)
    return EXIT_VIOLATION if failed else EXIT_OK


def cmd_branch(n: int, budget: int, as_json: bool = False) -> int:
    branch = odd_branch(n, budget)
    divisible = [j + 1 for j, v in enumerate(branch.values) if j >= 1 and v % 3 == 0]
    if as_json:
        _emit_json({
            "n": str(n),
            "values": [str(v) for v in branch.values],
            "divisions": list(branch.divisions),
            "lemma2_violations": divisible,
        })
    else:
        print(f"N={n} 奇数分支长度 {len(branch)}")
        for j, (v, m) in enumerate(zip(branch.values, branch.divisions), start=1):
            flag = "" if j == 1 else ("  3|N_j ✗" if v % 3 == 0 else "  3∤N_j")
            print(f"  N_{j}={v}  m={m}{flag}")
    return EXIT_VIOLATION if divisible else EXIT_OK


# -------- 区间扫描 -------- #

def _print_scan_report(report: ScanReport, limit: int = 20) -> None:
    ranges = ", ".join(f"[{lo}, {hi}]" for lo, hi in report.ranges)
    print(f"区间: {ranges}  共 {report.count} 个 N  耗时 {report.duration_seconds:.2f} 秒")
    if report.max_res is not None:
        mx, mn = report.max_res, report.min_res
        print(f"最大残数: N={report.argmax}  {report.max_decimal}…  (E={mx.e} O={mx.o} N_odd={mx.n_odd})")
        print(f"最小残数: N={report.argmin}  {report.min_decimal}…  (E={mn.e} O={mn.o} N_odd={mn.n_odd})")
    print(f"全部落在 [1, 1.26): {'是' if report.within_window else '否'}")
    totals = "  ".join(f"{name}={report.violation_totals.get(name, 0)}" for name in (*CHECK_NAMES, "budget"))
    print(f"违规: {totals}")
    for v in report.violations[:limit]:
        print(f"  ❌ {v.check} N={v.n}: {v.detail}")
    if len(report.violations) > limit:
        print(f"  … 另有 {len(report.violations) - limit} 条")


def _in_output_dir(path: Optional[str]) -> Optional[str]:
    """只给了文件名时放到 OUTPUT_DIR 下。"""
    if path and not os.path.dirname(path):
        return os.path.join(OUTPUT_DIR, path)
    return path


def _scan_config(args, checks) -> ScanConfig:
    return ScanConfig(
        start=args.start,
        end=args.end,
        chunk_size=args.chunk_size,
        workers=args.workers,
        checks=checks,
        step_budget=args.budget,
        checkpoint_path=_in_output_dir(args.checkpoint),
        report_path=_in_output_dir(getattr(args, "report", None)),
        odd_cache_limit=args.odd_cache,
    )


def cmd_verify(args) -> int:
    cfg = _scan_config(args, args.checks)
    print(f"📂 扫描 [{cfg.start}, {cfg.end}]，检查 {sorted(cfg.checks)}，{cfg.workers} 个 worker", file=sys.stderr)
    report = run_scan(cfg)
    if args.json:
        print(report.model_dump_json(indent=2))
    else:
        _print_scan_report(report)
    return EXIT_VIOLATION if report.violations else EXIT_OK


def cmd_max_residue(args) -> int:
    cfg = _scan_config(args, [])
    n, r, text = find_max_residue(cfg)
    if args.json:
        _emit_json({"n": str(n), "e": r.e, "o": r.o, "n_odd": str(r.n_odd), "residue": text})
    else:
        print(f"N={n}  Res={text}…  (E={r.e} O={r.o} N_odd={r.n_odd})")
    return EXIT_OK


# -------- 数值界 -------- #

def _tally(name: str, scope: str, outcomes) -> dict:
    counts = {v: 0 for v in Verdict}
    first_bad = None
    for o in outcomes:
        counts[o.verdict] += 1
        if first_bad is None and o.verdict in (Verdict.FAIL, Verdict.INCONCLUSIVE):
            first_bad = f"{o.n}: {o.detail}" if o.n is not None else o.detail
    return {
        "check": name,
        "scope": scope,
        "pass": counts[Verdict.PASS],
        "inconclusive": counts[Verdict.INCONCLUSIVE],
        "fail": counts[Verdict.FAIL],
        "detail": first_bad or "",
    }


def cmd_bounds(args) -> int:
    for flag in ("lemma4_max", "lemma5_max"):
        value = getattr(args, flag)
        if value is not None and value < 1:
            print(f"❌ --{flag.replace('_', '-')} 必须 ≥ 1，收到 {value}", file=sys.stderr)
            return EXIT_ERROR

    prec = PrecisionConfig(working_digits=args.digits, margin=args.margin)
    selected = any([args.lemma4_max, args.lemma5_max, args.theorem2_claim, args.constants])
    lemma4_max = args.lemma4_max or (None if selected else DEFAULT_LEMMA4_MAX)
    lemma5_max = args.lemma5_max or (None if selected else DEFAULT_LEMMA5_MAX)
    run_claim = args.theorem2_claim or not selected
    run_constants = args.constants or not selected

    rows: List[dict] = []
    if lemma4_max:
        rows.append(_tally("lemma4", f"[1, {lemma4_max}]", lemma4_sweep(lemma4_max, prec)))
    if lemma5_max:
        rows.append(_tally("lemma5", f"[1, {lemma5_max}]", lemma5_sweep(lemma5_max, prec)))
    if run_claim:
        lo, hi = THEOREM2_CLAIM_RANGE
        rows.append(_tally("theorem2_claim", f"[{lo}, {hi}]", theorem2_claim_sweep(lo, hi, prec)))
    if run_constants:
        for outcome in (theorem2_constant_check(prec), corollary_bound_check(prec), exceptional_starts_check(args.budget)):
            row = _tally(outcome.check, "-", [outcome])
            row["detail"] = outcome.detail
            rows.append(row)

    if args.json:
        _emit_json(rows)
    else:
        print(f"{'检查':<20}{'范围':<16}{'pass':>8}{'inconclusive':>14}{'fail':>8}")
        for row in rows:
            print(f"{row['check']:<20}{row['scope']:<16}{row['pass']:>8}{row['inconclusive']:>14}{row['fail']:>8}")
            if row["detail"]:
                print(f"    {row['detail']}")

    # 在这些余量下 inconclusive 同样视为未通过
    bad = any(row["fail"] or row["inconclusive"] for row in rows)
    return EXIT_VIOLATION if bad else EXIT_OK


# -------- CLI -------- #

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--budget", type=_positive_int, default=resolve_step_budget(),
                        help="单个 N 的最大迭代步数（默认 10^7，可用 RESIDUE_LAB_BUDGET 覆盖）")
    common.add_argument("--json", action="store_true", help="输出结构化 JSON")

    scan = _Parser(add_help=False)
    scan.add_argument("--from", dest="start", type=_decimal, required=True, help="区间起点（十进制）")
    scan.add_argument("--to", dest="end", type=_decimal, required=True, help="区间终点（十进制）")
    scan.add_argument("--workers", type=_positive_int, default=resolve_workers())
    scan.add_argument("--chunk-size", type=_positive_int, default=DEFAULT_CHUNK_SIZE)
    scan.add_argument("--checkpoint", default=None, help="检查点文件路径（JSON Lines）")
    scan.add_argument("--odd-cache", type=int, default=0, help="> 0 时缓存小于该值的奇数步数")

    parser = _Parser(description="3x+1 残数与步数公式的精确验证工具")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, help_text in (("stats", "步数与六个公式"), ("residue", "残数与逐项判定"), ("branch", "N-奇数分支")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("n", type=_decimal, help="十进制正整数 N")
        if name == "residue":
            p.add_argument("--digits", type=_positive_int, default=REPORT_RESIDUE_DIGITS)

    verify = sub.add_parser("verify", parents=[common, scan], help="区间扫描")
    verify.add_argument("--checks", default="all", help=f"逗号分隔，可选 {','.join(CHECK_NAMES)} 或 all")
    verify.add_argument("--report", default=None, help="逐 N 报表路径（.csv 或 .xlsx）")

    sub.add_parser("max-residue", parents=[common, scan], help="区间内残数最大的 N")

    bounds = sub.add_parser("bounds", parents=[common], help="辅助不等式的数值核验")
    bounds.add_argument("--lemma4-max", type=int, default=None)
    bounds.add_argument("--lemma5-max", type=int, default=None)
    bounds.add_argument("--theorem2-claim", action="store_true")
    bounds.add_argument("--constants", action="store_true")
    bounds.add_argument("--digits", type=int, default=WORKING_DIGITS, help="工作精度（十进制位，≥ 30）")
    bounds.add_argument("--margin", default=str(MARGIN), help="判定余量，例如 1/100000000000000000000")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "stats":
            return cmd_stats(args.n, args.budget, args.json)
        if args.command == "residue":
            return cmd_residue(args.n, args.digits, args.budget, args.json)
        if args.command == "branch":
            return cmd_branch(args.n, args.budget, args.json)
        if args.command == "verify":
            return cmd_verify(args)
        if args.command == "max-residue":
            return cmd_max_residue(args)
        return cmd_bounds(args)
    except BudgetExceededError as e:
        print(f"❌ 预算超限: {e}", file=sys.stderr)
    except CheckpointError as e:
        print(f"❌ {e}", file=sys.stderr)
    except (ValueError, RuntimeError) as e:
        print(f"❌ {e}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    import time

    start_time = time.time()
    try:
        exit_code = main()
    finally:
        end_time = time.time()
        print(f"✅ 程序执行完成，总耗时: {end_time - start_time:.2f} 秒", file=sys.stderr)
    sys.exit(exit_code)
