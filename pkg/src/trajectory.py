'''
trajectory.py
=============
该文件负责 3x+1 迭代本身：单步 Collatz 函数、奇偶分解、步数统计与 N-奇数分支。

全部运算使用 Python 任意精度整数：
1. `collatz_step`：3n+1 / n/2。
2. `odd_part`：n = 2^s · n_odd，用最低位技巧一次剥离所有因子 2。
3. `trajectory_stats`：返回 StepCounts(D, O, E)。偶数前缀按 s 步偶数步一次计入，
   奇数段每次 3m+1 后立即剥离全部因子 2，不逐次减半。
4. `odd_branch`：返回 OddBranch（奇数值序列与每步之后的除 2 次数）。

约定 D(1)=O(1)=E(1)=0。步数超过 step_budget 时抛 BudgetExceededError，
绝不静默截断。

更新条件：
- 当步数约定（例如是否计入最后的 1）或预算语义改变时，更新 `trajectory_stats` 与 `odd_branch`。
- 当扫描器需要新的只读查表方式时，调整 `known` 参数的用法（本模块自身不做缓存）。
'''

from dataclasses import dataclass
from typing import Mapping, Optional, Tuple

from config import DEFAULT_STEP_BUDGET


class BudgetExceededError(RuntimeError):
    """在 step_budget 步内没有到达 1：预算太小，或者是反例候选。"""

    def __init__(self, n: int, last_value: int, steps: int, step_budget: int):
        self.n = n
        self.last_value = last_value
        self.steps = steps
        self.step_budget = step_budget
        super().__init__(
            f"N={n} 超过步数预算 {step_budget}（已走 {steps} 步，当前值 {last_value}）"
        )


@dataclass(frozen=True)
class StepCounts:
    """(D, O, E)：总步数、奇数步数、偶数步数，total = odd + even。"""

    total: int
    odd: int
    even: int


@dataclass(frozen=True, slots=True)
class OddBranch:
    """N-奇数分支：values[j+1] · 2^divisions[j] = 3·values[j] + 1。"""

    values: Tuple[int, ...]
    divisions: Tuple[int, ...]

    def __len__(self) -> int:
        return len(self.values)


def _require_positive(n: int) -> None:
    if n < 1:
        raise ValueError(f"需要正整数，收到 {n}")


def collatz_step(n: int) -> int:
    """C(n)：奇数 → 3n+1，偶数 → n/2。"""
    _require_positive(n)
    return 3 * n + 1 if n & 1 else n >> 1


def odd_part(n: int) -> Tuple[int, int]:
    """返回 (s, n_odd)，满足 n = 2^s · n_odd。"""
    _require_positive(n)
    s = (n & -n).bit_length() - 1
    return s, n >> s


def trajectory_stats(
    n: int,
    step_budget: int = DEFAULT_STEP_BUDGET,
    known: Optional[Mapping[int, StepCounts]] = None,
) -> StepCounts:
    """
    统计 n 迭代到 1 的 (D, O, E)。

    `known` 是可选的只读映射（奇数 → 其 StepCounts），走到其中的值即直接累加结束。
    """
    s, m = odd_part(n)
    odd, even = 0, s
    if even > step_budget:
        raise BudgetExceededError(n, m, even, step_budget)

    while m != 1:
        if known is not None:
            hit = known.get(m)
            if hit is not None:
                odd += hit.odd
                even += hit.even
                if odd + even > step_budget:
                    raise BudgetExceededError(n, 1, odd + even, step_budget)
                break
        m = 3 * m + 1
        k = (m & -m).bit_length() - 1
        m >>= k
        odd += 1
        even += k
        if odd + even > step_budget:
            raise BudgetExceededError(n, m, odd + even, step_budget)

    return StepCounts(odd + even, odd, even)


def odd_branch(n: int, step_budget: int = DEFAULT_STEP_BUDGET) -> OddBranch:
    """按顺序返回轨迹中除 1 以外的所有奇数，以及每个奇数步之后的除 2 次数。"""
    s, m = odd_part(n)
    steps = s
    if steps > step_budget:
        raise BudgetExceededError(n, m, steps, step_budget)

    values = []
    divisions = []
    while m != 1:
        values.append(m)
        m = 3 * m + 1
        k = (m & -m).bit_length() - 1
        m >>= k
        divisions.append(k)
        steps += 1 + k
        if steps > step_budget:
            raise BudgetExceededError(n, m, steps, step_budget)

    return OddBranch(tuple(values), tuple(divisions))
