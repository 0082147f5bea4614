'''
analysis.py
===========
该文件负责残数相关辅助不等式的数值核验：左边一律用精确有理数（fractions.Fraction），
右边的超越函数（ln、exp、开方、γ）用 mpmath 在 working_digits 位精度下求值。

判定规则（所有 *_check 一致）：
- 每个不等式化成“差值 gap = 右边 − 左边”，gap > margin 视为成立；
- 任一 gap < −margin 判 fail；
- 其余（|gap| ≤ margin）判 inconclusive，不猜测。
缩小 margin 不会把 pass 变成 fail；加倍 working_digits 也不应改变 pass。

覆盖内容：
1. 调和数精确值 `harmonic_exact` 与 Lemma 4 区间 `lemma4_check`。
2. “合格奇数”（奇数、≥5、不被 3 整除）序列及其倒数和 / 乘积，Lemma 5 `lemma5_check`。
3. Theorem 2 的数值断言 `theorem2_numeric_claim`（优先用九次方整数比较）与常数 0.999467…。
4. Corollary 1 的 1.3046… / e^{1.3047/3} < 1.55，以及 Lemma 3 的实例核验。
5. N₁ ∈ {3,9,15,21,27,33} 的特例表。

γ 以 50 位字符串存于 config.py，首次使用时用 Euler–Maclaurin 展开独立计算并对比 30 位。

更新条件：
- 当默认精度或余量变化时，更新 config.py 中的 WORKING_DIGITS / MARGIN，而非此文件。
- 当需要核验新的数值断言时，增加对应的 *_check，并在 main.py 的 bounds 子命令中登记。
'''

from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Optional, Sequence, Tuple

from mpmath import bernoulli, exp, log, mp, mpf, nstr, root
from pydantic import BaseModel, ConfigDict, Field, field_validator

from config import (
    COROLLARY_MAX_ODD,
    COROLLARY_RES_BOUND,
    COROLLARY_SUM_BOUND,
    COROLLARY_TERMS,
    DEFAULT_STEP_BUDGET,
    EULER_GAMMA_50,
    EXCEPTIONAL_FIRST_ODD,
    EXCEPTIONAL_RES27_TEXT,
    EXCEPTIONAL_ROOT41_TEXT,
    GAMMA_CHECK_DIGITS,
    HARMONIC_CAP,
    MARGIN,
    THEOREM2_CLAIM_RANGE,
    THEOREM2_EXTRA_FACTOR,
    THEOREM2_MIN_ODD,
    WORKING_DIGITS,
)
from exact import (
    CheckOutcome,
    Verdict,
    residue_decimal,
    residue_of,
    theorem2_holds,
)
from trajectory import odd_branch, odd_part, trajectory_stats

STORED_GAMMA_DIGITS = len(EULER_GAMMA_50) - 2
LEMMA3_SAMPLES = (3, 7, 9, 27, 97, 871, 993, 6171, 77031)


class PrecisionConfig(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    working_digits: int = Field(WORKING_DIGITS, ge=30, description="超越函数求值的十进制位数")
    margin: Fraction = Field(MARGIN, description="判定所需的最小差值（正有理数）")

    @field_validator("margin", mode="before")
    @classmethod
    def _parse_margin(cls, value):
        margin = Fraction(value)
        if margin <= 0:
            raise ValueError(f"margin 必须为正，收到 {value}")
        return margin


DEFAULT_PRECISION = PrecisionConfig()


# ---------- 内部帮助函数 ---------- #

def _to_mpf(value: Fraction):
    return mpf(value.numerator) / value.denominator


def _gap_verdict(gaps: Iterable, margin: Fraction) -> Verdict:
    m = _to_mpf(margin)
    gaps = list(gaps)
    if any(g < -m for g in gaps):
        return Verdict.FAIL
    if all(g > m for g in gaps):
        return Verdict.PASS
    return Verdict.INCONCLUSIVE


def combine_verdicts(verdicts: Iterable[Verdict]) -> Verdict:
    """fail > inconclusive > pass；全部不适用时为 not_applicable。"""
    seen = set(verdicts)
    for v in (Verdict.FAIL, Verdict.INCONCLUSIVE, Verdict.PASS):
        if v in seen:
            return v
    return Verdict.NOT_APPLICABLE


def _fmt(x) -> str:
    return nstr(x, 15)


# ---------- 调和数与 γ ---------- #

def _harmonic_split(a: int, b: int) -> Tuple[int, int]:
    """Σ_{k=a}^{b-1} 1/k 的未约分 (p, q)，二分递归。"""
    if b - a == 1:
        return 1, a
    mid = (a + b) // 2
    p1, q1 = _harmonic_split(a, mid)
    p2, q2 = _harmonic_split(mid, b)
    return p1 * q2 + p2 * q1, q1 * q2


def harmonic_exact(n: int, cap: int = HARMONIC_CAP) -> Fraction:
    """H_n = Σ_{k=1}^{n} 1/k，精确约分。"""
    if n < 1:
        raise ValueError(f"n 必须 ≥ 1，收到 {n}")
    if n > cap:
        raise ValueError(f"n={n} 超过调和数上限 {cap}")
    p, q = _harmonic_split(1, n + 1)
    return Fraction(p, q)


def harmonic_sweep(cap: int) -> Iterator[Tuple[int, Fraction]]:
    """依次产出 (n, H_n)，n = 1..cap。"""
    h = Fraction(0)
    for n in range(1, cap + 1):
        h += Fraction(1, n)
        yield n, h


def validate_gamma(terms: int = 12, n: int = 1000) -> None:
    """H_n − ln n − 1/(2n) + Σ B_{2k}/(2k·n^{2k}) 与存储的 γ 对比 GAMMA_CHECK_DIGITS 位。"""
    with mp.workdps(GAMMA_CHECK_DIGITS + 20):
        g = _to_mpf(harmonic_exact(n)) - log(n) - mpf(1) / (2 * n)
        for k in range(1, terms + 1):
            g += bernoulli(2 * k) / (2 * k * mpf(n) ** (2 * k))
        if abs(g - mpf(EULER_GAMMA_50)) > mpf(10) ** (-GAMMA_CHECK_DIGITS):
            raise RuntimeError(f"γ 常量校验失败：级数值 {nstr(g, 35)} 与存储值不符")


@lru_cache(maxsize=None)
def _validated_gamma() -> str:
    validate_gamma()
    return EULER_GAMMA_50


def euler_gamma():
    """当前 mp 精度下的 γ；超过存储位数时改用 mpmath 自带的 γ。"""
    stored = _validated_gamma()
    if mp.dps <= STORED_GAMMA_DIGITS:
        return mpf(stored)
    return +mp.euler


# ---------- Lemma 4 ---------- #

def lemma4_check(
    n: int,
    prec: PrecisionConfig = DEFAULT_PRECISION,
    harmonic: Optional[Fraction] = None,
) -> CheckOutcome:
    """ln n + γ < H_n < ln n + γ + 1/(2n)。"""
    h = harmonic if harmonic is not None else harmonic_exact(n)
    with mp.workdps(prec.working_digits):
        hv = _to_mpf(h)
        base = log(n) + euler_gamma()
        low_gap = hv - base
        high_gap = base + mpf(1) / (2 * n) - hv
        verdict = _gap_verdict((low_gap, high_gap), prec.margin)
        detail = f"H_n−(ln n+γ)={_fmt(low_gap)}  (ln n+γ+1/(2n))−H_n={_fmt(high_gap)}"
    return CheckOutcome(check="lemma4", n=n, verdict=verdict, detail=detail)


def lemma4_sweep(cap: int, prec: PrecisionConfig = DEFAULT_PRECISION) -> Iterator[CheckOutcome]:
    for n, h in harmonic_sweep(cap):
        yield lemma4_check(n, prec, h)


# ---------- 合格奇数 ---------- #

def _eligible(i: int) -> int:
    # 第 i 个（从 0 起）：5, 7, 11, 13, 17, 19, …，即 6m−1, 6m+1 交替
    m = i // 2 + 1
    return 6 * m + (1 if i & 1 else -1)


def eligible_sequence(t: int) -> Tuple[int, ...]:
    """前 t 个奇数 k ≥ 5 且 k 不被 3 整除。"""
    if t < 1:
        raise ValueError(f"t 必须 ≥ 1，收到 {t}")
    return tuple(_eligible(i) for i in range(t))


def eligible_reciprocal_sum(t: int) -> Fraction:
    p, q = 0, 1
    for k in eligible_sequence(t):
        p, q = p * k + q, q * k
    return Fraction(p, q)


def eligible_product(t: int) -> Fraction:
    """∏ (1 + 1/(3j))，j 取前 t 个合格奇数。"""
    num = den = 1
    for j in eligible_sequence(t):
        num *= 3 * j + 1
        den *= 3 * j
    return Fraction(num, den)


# ---------- Lemma 5 ---------- #

def _lemma5_rhs(m: int):
    return (
        log(3) / 2
        + 2 * log(2) / 3
        + euler_gamma() / 3
        - 1
        + log(m) / 3
        + mpf(5) / (6 * m)
    )


def lemma5_check(
    m: int,
    prec: PrecisionConfig = DEFAULT_PRECISION,
    lhs: Optional[Fraction] = None,
) -> CheckOutcome:
    """前 2m 个合格奇数的倒数和 < (1/2)ln3 + (2/3)ln2 + γ/3 − 1 + (1/3)ln m + 5/(6m)。"""
    if m < 1:
        raise ValueError(f"m 必须 ≥ 1，收到 {m}")
    total = lhs if lhs is not None else eligible_reciprocal_sum(2 * m)
    with mp.workdps(prec.working_digits):
        gap = _lemma5_rhs(m) - _to_mpf(total)
        verdict = _gap_verdict((gap,), prec.margin)
        detail = f"右边−左边={_fmt(gap)}"
    return CheckOutcome(check="lemma5", n=m, verdict=verdict, detail=detail)


def lemma5_sweep(cap: int, prec: PrecisionConfig = DEFAULT_PRECISION) -> Iterator[CheckOutcome]:
    total = Fraction(0)
    for m in range(1, cap + 1):
        total += Fraction(1, _eligible(2 * m - 2)) + Fraction(1, _eligible(2 * m - 1))
        yield lemma5_check(m, prec, total)


# ---------- Theorem 2 ---------- #

def _check_claim_range(t: int) -> None:
    lo, hi = THEOREM2_CLAIM_RANGE
    if not lo <= t <= hi:
        raise ValueError(f"t={t} 不在 [{lo}, {hi}] 内")


def theorem2_numeric_claim(
    t: int,
    prec: PrecisionConfig = DEFAULT_PRECISION,
    product: Optional[Fraction] = None,
) -> CheckOutcome:
    """(118/117)·eligible_product(t) < t^{1/9}。

    判定以九次方整数比较为准；mpmath 开九次方只作交叉验证，两者矛盾时报 inconclusive。
    """
    _check_claim_range(t)
    p = THEOREM2_EXTRA_FACTOR * (product if product is not None else eligible_product(t))
    exact_ok = p.numerator ** 9 < t * p.denominator ** 9
    with mp.workdps(prec.working_digits):
        gap = root(t, 9) - _to_mpf(p)
        cross = _gap_verdict((gap,), prec.margin)
        detail = f"t^(1/9)−左边={_fmt(gap)}"

    verdict = Verdict.PASS if exact_ok else Verdict.FAIL
    if {verdict, cross} == {Verdict.PASS, Verdict.FAIL}:
        verdict = Verdict.INCONCLUSIVE
        detail += "（整数判定与高精度求值矛盾）"
    return CheckOutcome(check="theorem2_claim", n=t, verdict=verdict, detail=detail)


def theorem2_claim_sweep(
    lo: int = THEOREM2_CLAIM_RANGE[0],
    hi: int = THEOREM2_CLAIM_RANGE[1],
    prec: PrecisionConfig = DEFAULT_PRECISION,
) -> Iterator[CheckOutcome]:
    _check_claim_range(lo)
    _check_claim_range(hi)
    product = Fraction(1)
    for i in range(hi):
        j = _eligible(i)
        product *= Fraction(3 * j + 1, 3 * j)
        t = i + 1
        if t >= lo:
            yield theorem2_numeric_claim(t, prec, product)


def theorem2_constant_check(prec: PrecisionConfig = DEFAULT_PRECISION) -> CheckOutcome:
    """3^{1/6}·2^{1/9}·e^{γ/9−38/117} ∈ [0.999467, 0.999468)，
    乘上 e^{5/(9·1043)} 后 < 0.99999981，乘上 e^{2/(3·1252)} 后 < 0.99999964。"""
    with mp.workdps(prec.working_digits):
        c = root(3, 6) * root(2, 9) * exp(euler_gamma() / 9 - mpf(38) / 117)
        even_case = c * exp(mpf(5) / (9 * 1043))
        odd_case = c * exp(mpf(2) / (3 * (1253 - 1)))
        floor_ = mpf("0.999467")
        gaps = (
            c - floor_,
            mpf("0.999468") - c,
            even_case - floor_,
            mpf("0.99999981") - even_case,
            odd_case - floor_,
            mpf("0.99999964") - odd_case,
        )
        verdict = _gap_verdict(gaps, prec.margin)
        detail = f"常数={_fmt(c)}  O=1043: {_fmt(even_case)}  O=1253: {_fmt(odd_case)}"
    return CheckOutcome(check="theorem2_constant", verdict=verdict, detail=detail)


def root_truncated(value: int, k: int, digits: int) -> str:
    """value^{1/k} 截断到 digits 位小数，整数二分求 ⌊value^{1/k}·10^digits⌋。"""
    if value < 1 or k < 1 or digits < 1:
        raise ValueError(f"需要正整数参数，收到 value={value}, k={k}, digits={digits}")
    scale = 10 ** digits
    target = value * scale ** k
    lo, hi = 0, value * scale + 1
    # lo^k ≤ target < hi^k
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if mid ** k <= target:
            lo = mid
        else:
            hi = mid
    text = str(lo).rjust(digits + 1, "0")
    return f"{text[:-digits]}.{text[-digits:]}"


def exceptional_starts_check(step_budget: int = DEFAULT_STEP_BUDGET) -> CheckOutcome:
    """N₁ ∈ {3,9,15,21,27,33} 的 O(N) 为 2,6,5,1,41,8；仅 27 有 O ≥ 20，且 Res(27) < 41^{1/9}。"""
    found = {n: trajectory_stats(n, step_budget).odd for n in EXCEPTIONAL_FIRST_ODD}
    table_ok = found == EXCEPTIONAL_FIRST_ODD
    large = [n for n, o in found.items() if o >= THEOREM2_MIN_ODD]
    r27 = residue_of(27, step_budget)
    bound_ok = theorem2_holds(r27) is True
    res27 = residue_decimal(r27, 4)
    root41 = root_truncated(found[27], 9, 4)
    digits_ok = res27 == EXCEPTIONAL_RES27_TEXT and root41 == EXCEPTIONAL_ROOT41_TEXT
    ok = table_ok and large == [27] and bound_ok and digits_ok
    detail = (
        f"O={list(found.values())}  Res(27)={res27}…  "
        f"O(27)^(1/9)={root41}…"
    )
    return CheckOutcome(
        check="exceptional_starts",
        verdict=Verdict.PASS if ok else Verdict.FAIL,
        detail=detail,
    )


# ---------- Lemma 3 / Corollary 1 ---------- #

def lemma3_instance_check(
    n: int,
    prec: PrecisionConfig = DEFAULT_PRECISION,
    step_budget: int = DEFAULT_STEP_BUDGET,
) -> CheckOutcome:
    """ln Res(n) < (1/3)·Σ 1/N_j，N_j 取 n 的奇数分支；空分支（2 的幂）不适用。"""
    branch = odd_branch(odd_part(n)[1], step_budget)
    if not branch.values:
        return CheckOutcome(check="lemma3", n=n, verdict=Verdict.NOT_APPLICABLE, detail="空分支")
    num = den = 1
    sp, sq = 0, 1
    for v in branch.values:
        num *= 3 * v + 1
        den *= 3 * v
        sp, sq = sp * v + sq, sq * v
    with mp.workdps(prec.working_digits):
        gap = _to_mpf(Fraction(sp, 3 * sq)) - log(_to_mpf(Fraction(num, den)))
        verdict = _gap_verdict((gap,), prec.margin)
        detail = f"(1/3)Σ1/N_j − ln Res={_fmt(gap)}"
    return CheckOutcome(check="lemma3", n=n, verdict=verdict, detail=detail)


def corollary_instance_check(n: int, step_budget: int = DEFAULT_STEP_BUDGET) -> CheckOutcome:
    """O(n) ≤ 512 ⇒ Res(n) < 2。"""
    r = residue_of(n, step_budget)
    if r.o > COROLLARY_MAX_ODD:
        return CheckOutcome(check="corollary", n=n, verdict=Verdict.NOT_APPLICABLE, detail=f"O={r.o}")
    ok = (1 << r.e) < 2 * 3 ** r.o * r.n_odd
    return CheckOutcome(
        check="corollary",
        n=n,
        verdict=Verdict.PASS if ok else Verdict.FAIL,
        detail=f"O={r.o} Res={residue_decimal(r, 6)}…",
    )


def corollary_bound_check(
    prec: PrecisionConfig = DEFAULT_PRECISION,
    samples: Sequence[int] = LEMMA3_SAMPLES,
    step_budget: int = DEFAULT_STEP_BUDGET,
) -> CheckOutcome:
    """前 19 个合格奇数倒数和 + 1/3 = 1.3046… < 1.3047，且 e^{1.3047/3} < 1.55；
    并在 samples 上复核 Lemma 3 的实例形式。"""
    total = eligible_reciprocal_sum(COROLLARY_TERMS) + Fraction(1, 3)
    sum_ok = total < COROLLARY_SUM_BOUND
    shown = total.numerator * 10 ** 4 // total.denominator
    with mp.workdps(prec.working_digits):
        e_val = exp(_to_mpf(COROLLARY_SUM_BOUND) / 3)
        exp_verdict = _gap_verdict((_to_mpf(COROLLARY_RES_BOUND) - e_val,), prec.margin)
        e_text = _fmt(e_val)

    instances = [lemma3_instance_check(n, prec, step_budget) for n in samples]
    verdicts = [Verdict.PASS if sum_ok else Verdict.FAIL, exp_verdict]
    verdicts += [o.verdict for o in instances]
    bad = [str(o.n) for o in instances if o.verdict not in (Verdict.PASS, Verdict.NOT_APPLICABLE)]
    detail = f"Σ+1/3={shown // 10 ** 4}.{shown % 10 ** 4:04d}…  e^(1.3047/3)={e_text}"
    if bad:
        detail += f"  Lemma 3 未通过: {','.join(bad)}"
    return CheckOutcome(check="corollary_bound", verdict=combine_verdicts(verdicts), detail=detail)
