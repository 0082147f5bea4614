'''
exact.py
========
该文件负责残数（Residue）的精确表示与逐个 N 的精确核验，所有判定都是整数比较，不含浮点。

Res(N) = 2^E(N) / (3^O(N) · N)。由于 Res(2^s·m) = Res(m)，残数统一表示为三元组
ResidueTriple(e, o, n_odd)，比较时交叉相乘：
    a > b  ⇔  2^{a.e} · 3^{b.o} · b.n_odd  >  2^{b.e} · 3^{a.o} · a.n_odd

主要功能：
1. `residue_of` / `residue_compare` / `residue_decimal`（截断而非四舍五入）/ `residue_product`。
2. `check_lower`（Res ≥ 1）、`check_wrc`（Res ≤ 2）、`check_theorem2`（Res^9 < O）、
   `check_product_form`（乘积形式与直接定义完全相等）。
3. `floor_log_ratio` / `ceil_log_ratio`：整数对数，二分 + 快速幂，初始区间由比特长度给出。
4. `predict_all`：六个步数公式的精确求值（见下表），与真实步数对比。

    O ← D : floor_log_ratio(6, 2^D, N)
    E ← D : ceil_log_ratio(6, 3^D·N, 1)
    D ← O : ceil_log_ratio(2, 6^O·N, 1)
    E ← O : ceil_log_ratio(2, 3^O·N, 1)
    D ← E : floor_log_ratio(3, 6^E, N)
    O ← E : floor_log_ratio(3, 2^E, N)

边界说明：Res = 2 要求 3^O·N_odd = 2^{E−1}，O ≥ 1 时奇偶性不允许，O = 0 时 Res = 1；
所以 WRC 成立时除 2 的幂（Res = 1）外都严格落在 (1, 2) 内部。

更新条件：
- 当需要新增精确判定（新的不等式或公式）时，在此增加内核函数与对应的 CheckOutcome 包装。
- 当 CheckOutcome / FormulaCheck 的字段改变时，同步更新 scanner.py 与 main.py 的输出。
'''

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Annotated, Optional, Tuple

from pydantic import BaseModel, Field, PlainSerializer

from config import DEFAULT_STEP_BUDGET, THEOREM2_MIN_ODD
from trajectory import StepCounts, odd_branch, odd_part, trajectory_stats

# JSON 中以十进制字符串保存任意长整数，读回时 pydantic 宽松模式可直接解析
DecimalInt = Annotated[int, PlainSerializer(lambda v: str(v), return_type=str, when_used="json")]

ExactRational = Fraction

FORMULA_LABELS = ("O←D", "E←D", "D←O", "E←O", "D←E", "O←E")


class Verdict(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"
    NOT_APPLICABLE = "not_applicable"


class CheckOutcome(BaseModel):
    """单个检查的判定结果，附带足以复现失败的上下文。"""

    check: str = Field(..., description="检查名称，例如 lower / wrc / lemma4")
    n: Optional[DecimalInt] = Field(None, description="被检查的 N（或 n / m / t 参数）")
    verdict: Verdict
    strict: Optional[bool] = Field(None, description="lower 检查中不等式是否严格成立")
    detail: str = Field("", description="判定依据，整数指数或差值")

    @property
    def ok(self) -> bool:
        return self.verdict in (Verdict.PASS, Verdict.NOT_APPLICABLE)


class FormulaCheck(BaseModel):
    n: DecimalInt
    counts: StepCounts
    predicted: Tuple[int, int, int, int, int, int]
    matches: Tuple[bool, bool, bool, bool, bool, bool]

    @property
    def all_match(self) -> bool:
        return all(self.matches)


@dataclass(frozen=True, slots=True)
class ResidueTriple:
    """规范残数表示 2^e / (3^o · n_odd)，n_odd 必须是正奇数。"""

    e: int
    o: int
    n_odd: int

    def __post_init__(self):
        if self.e < 0 or self.o < 0:
            raise ValueError(f"指数必须非负: e={self.e}, o={self.o}")
        if self.n_odd < 1 or not self.n_odd & 1:
            raise ValueError(f"非规范残数三元组：n_odd={self.n_odd} 不是正奇数")


# ---------- 残数 ---------- #

def residue_of(n: int, step_budget: int = DEFAULT_STEP_BUDGET) -> ResidueTriple:
    _, n_odd = odd_part(n)
    counts = trajectory_stats(n_odd, step_budget)
    return ResidueTriple(counts.even, counts.odd, n_odd)


def residue_compare(a: ResidueTriple, b: ResidueTriple) -> int:
    """返回 -1 / 0 / 1，对应 a < b / a = b / a > b。"""
    left = 3 ** b.o * b.n_odd
    right = 3 ** a.o * a.n_odd
    shift = a.e - b.e
    if shift >= 0:
        left <<= shift
    else:
        right <<= -shift
    return (left > right) - (left < right)


def residue_fraction(r: ResidueTriple) -> ExactRational:
    return Fraction(1 << r.e, 3 ** r.o * r.n_odd)


def residue_below(r: ResidueTriple, bound: Fraction) -> bool:
    """Res < bound，交叉相乘。"""
    return (bound.denominator << r.e) < bound.numerator * 3 ** r.o * r.n_odd


def residue_decimal(r: ResidueTriple, digits: int) -> str:
    """截断（向下取整）到 digits 位小数的十进制字符串。"""
    if digits < 1:
        raise ValueError(f"digits 必须 ≥ 1，收到 {digits}")
    q = (10 ** digits << r.e) // (3 ** r.o * r.n_odd)
    text = str(q).rjust(digits + 1, "0")
    return f"{text[:-digits]}.{text[-digits:]}"


def residue_product(n_odd: int, step_budget: int = DEFAULT_STEP_BUDGET) -> ExactRational:
    """奇数分支上 ∏(1 + 1/(3·N_j)) 的精确约分值；n_odd = 1 时为空积 1。"""
    if n_odd < 1 or not n_odd & 1:
        raise ValueError(f"residue_product 需要正奇数，收到 {n_odd}")
    num = den = 1
    for v in odd_branch(n_odd, step_budget).values:
        num *= 3 * v + 1
        den *= 3 * v
    return Fraction(num, den)


# ---------- 判定内核（扫描器直接调用） ---------- #

def lower_holds(r: ResidueTriple) -> Tuple[bool, bool]:
    """返回 (Res ≥ 1, Res > 1)。"""
    low = 3 ** r.o * r.n_odd
    high = 1 << r.e
    return low <= high, low < high


def wrc_holds(r: ResidueTriple) -> bool:
    return (1 << r.e) <= 2 * 3 ** r.o * r.n_odd


def theorem2_holds(r: ResidueTriple) -> Optional[bool]:
    """Res^9 < O；O < 20 时不适用，返回 None。"""
    if r.o < THEOREM2_MIN_ODD:
        return None
    return (1 << (9 * r.e)) < r.o * 3 ** (9 * r.o) * r.n_odd ** 9


# ---------- 整数对数 ---------- #

def floor_log_ratio(base: int, num: int, den: int) -> int:
    """最大的 k ≥ 0，使 base^k · den ≤ num。"""
    if base < 2:
        raise ValueError(f"base 必须 ≥ 2，收到 {base}")
    if den < 1 or num < den:
        raise ValueError(f"需要 num ≥ den ≥ 1，收到 num={num}, den={den}")
    if base == 2 and den == 1:
        return num.bit_length() - 1

    gap = num.bit_length() - den.bit_length()
    width = base.bit_length()
    lo = max(0, (gap - 1) // width)
    hi = (gap + 1) // (width - 1) + 1
    # base^lo·den ≤ num < base^hi·den
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pow(base, mid) * den <= num:
            lo = mid
        else:
            hi = mid
    return lo


def ceil_log_ratio(base: int, num: int, den: int) -> int:
    """最小的 k ≥ 0，使 base^k · den ≥ num。"""
    k = floor_log_ratio(base, num, den)
    return k if pow(base, k) * den == num else k + 1


# ---------- 六个步数公式 ---------- #

def predict_counts(n: int, counts: StepCounts) -> Tuple[int, int, int, int, int, int]:
    d, o, e = counts.total, counts.odd, counts.even
    if d != o + e:
        raise ValueError(f"步数不一致：D={d} ≠ O+E={o + e}")
    p3o = 3 ** o
    p3e = 3 ** e
    return (
        floor_log_ratio(6, 1 << d, n),
        ceil_log_ratio(6, p3o * p3e * n, 1),
        ceil_log_ratio(2, (p3o << o) * n, 1),
        ceil_log_ratio(2, p3o * n, 1),
        floor_log_ratio(3, p3e << e, n),
        floor_log_ratio(3, 1 << e, n),
    )


def expected_counts(counts: StepCounts) -> Tuple[int, int, int, int, int, int]:
    return (counts.odd, counts.even, counts.total, counts.even, counts.total, counts.odd)


def predict_all(n: int, counts: StepCounts) -> FormulaCheck:
    predicted = predict_counts(n, counts)
    matches = tuple(p == t for p, t in zip(predicted, expected_counts(counts)))
    return FormulaCheck(n=n, counts=counts, predicted=predicted, matches=matches)


def intermediate_bounds(n: int, counts: StepCounts) -> Tuple[bool, bool, bool]:
    """三条中间不等式的整数形式：
    6^O·N ≤ 2^D ≤ 2·6^O·N，3^D·N ≤ 6^E ≤ 2·3^D·N，3^O·N ≤ 2^E ≤ 2·3^O·N。"""
    d, o, e = counts.total, counts.odd, counts.even
    p3o_n = 3 ** o * n
    p6o_n = p3o_n << o
    p3d_n = 3 ** d * n
    p6e = 3 ** e << e
    p2d = 1 << d
    p2e = 1 << e
    return (
        p6o_n <= p2d <= 2 * p6o_n,
        p3d_n <= p6e <= 2 * p3d_n,
        p3o_n <= p2e <= 2 * p3o_n,
    )


# ---------- 逐 N 检查 ---------- #

def _triple_detail(r: ResidueTriple) -> str:
    return f"E={r.e} O={r.o} N_odd={r.n_odd}"


def check_lower(n: int, step_budget: int = DEFAULT_STEP_BUDGET) -> CheckOutcome:
    r = residue_of(n, step_budget)
    holds, strict = lower_holds(r)
    return CheckOutcome(
        check="lower",
        n=n,
        verdict=Verdict.PASS if holds else Verdict.FAIL,
        strict=strict,
        detail=_triple_detail(r),
    )


def check_wrc(n: int, step_budget: int = DEFAULT_STEP_BUDGET) -> CheckOutcome:
    r = residue_of(n, step_budget)
    return CheckOutcome(
        check="wrc",
        n=n,
        verdict=Verdict.PASS if wrc_holds(r) else Verdict.FAIL,
        detail=_triple_detail(r),
    )


def check_theorem2(n: int, step_budget: int = DEFAULT_STEP_BUDGET) -> CheckOutcome:
    r = residue_of(n, step_budget)
    holds = theorem2_holds(r)
    if holds is None:
        verdict = Verdict.NOT_APPLICABLE
    else:
        verdict = Verdict.PASS if holds else Verdict.FAIL
    return CheckOutcome(check="theorem2", n=n, verdict=verdict, detail=_triple_detail(r))


def check_formulas(n: int, step_budget: int = DEFAULT_STEP_BUDGET) -> CheckOutcome:
    fc = predict_all(n, trajectory_stats(n, step_budget))
    misses = [label for label, ok in zip(FORMULA_LABELS, fc.matches) if not ok]
    c = fc.counts
    detail = f"D={c.total} O={c.odd} E={c.even} predicted={list(fc.predicted)}"
    if misses:
        detail += f" miss={misses}"
    return CheckOutcome(
        check="formulas",
        n=n,
        verdict=Verdict.PASS if fc.all_match else Verdict.FAIL,
        detail=detail,
    )


def check_product_form(n: int, step_budget: int = DEFAULT_STEP_BUDGET) -> CheckOutcome:
    r = residue_of(n, step_budget)
    product = residue_product(r.n_odd, step_budget)
    direct = residue_fraction(r)
    return CheckOutcome(
        check="product_form",
        n=n,
        verdict=Verdict.PASS if product == direct else Verdict.FAIL,
        detail=_triple_detail(r),
    )
