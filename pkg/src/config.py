'''
config.py
=========
该文件包含残数验证工具（residue_lab）所需的所有配置常量。

定义了输出目录、默认步数预算、扫描分块大小、高精度求值位数与判定余量、
Euler 常数 γ 的存储值，以及扫描器可启用的检查名称。

更新条件：
- 当默认预算、分块大小、精度或余量需要调整时，更新此文件中的相应常量。
- 当新增扫描检查项或环境变量时，同步更新 CHECK_NAMES 与 README 中的环境变量表。
'''

import os
import sys
from fractions import Fraction

from dotenv import load_dotenv

# 加载 .env 文件 (如果预算、并发数等放在此处)
load_dotenv()

# 十进制字符串 ↔ 整数不设位数上限（N 可达 10^200 量级，残数分母更长）
if hasattr(sys, "set_int_max_str_digits"):
    sys.set_int_max_str_digits(0)

# -------- 目录配置 -------- #
OUTPUT_DIR = "output"  # 只给文件名（不含目录）的检查点 / 报表放在这里

# -------- 轨迹配置 -------- #
FALLBACK_STEP_BUDGET = 10 ** 7  # 单个 N 最多迭代步数，超出即报错而不是静默截断
BUDGET_ENV = "RESIDUE_LAB_BUDGET"
WORKERS_ENV = "RESIDUE_LAB_WORKERS"


def _read_positive_int(env_name: str, fallback: int) -> int:
    raw = os.getenv(env_name)
    if raw is None or not raw.strip():
        return fallback
    try:
        value = int(raw.strip())
    except ValueError:
        value = 0
    if value < 1:
        print(f"⚠️ 环境变量 {env_name}={raw!r} 不是正整数，使用默认值 {fallback}", file=sys.stderr)
        return fallback
    return value


def resolve_step_budget() -> int:
    """读取 RESIDUE_LAB_BUDGET，缺省时返回 10^7。"""
    return _read_positive_int(BUDGET_ENV, FALLBACK_STEP_BUDGET)


def resolve_workers() -> int:
    return _read_positive_int(WORKERS_ENV, 1)


DEFAULT_STEP_BUDGET = resolve_step_budget()

# -------- 扫描配置 -------- #
DEFAULT_CHUNK_SIZE = 4096
# 扫描器可启用的检查（verify --checks 的取值）
CHECK_NAMES = ("lower", "wrc", "formulas", "theorem2", "product_form")
BUDGET_CHECK = "budget"  # 预算超限记录使用的检查名
REPORT_RESIDUE_DIGITS = 12  # CSV 报表中残数截断到的小数位
WINDOW_UPPER = Fraction(63, 50)  # 区间实验的上界 1.26
THEOREM2_MIN_ODD = 20  # O(N) ≥ 20 才适用 O^{1/9} 上界

# -------- 高精度配置 -------- #
WORKING_DIGITS = 50
MARGIN = Fraction(1, 10 ** 20)
HARMONIC_CAP = 10 ** 6

# γ 的前 50 位小数；首次使用时与独立级数计算对比 30 位
EULER_GAMMA_50 = "0.57721566490153286060651209008240243104215933593992"
GAMMA_CHECK_DIGITS = 30

# -------- 数值断言中的常量 -------- #
THEOREM2_CLAIM_RANGE = (20, 1252)
THEOREM2_EXTRA_FACTOR = Fraction(118, 117)  # 1 + 1/(3×39)
# N₁ 能被 3 整除且 < 39 的起点 → 已知的 O(N)
EXCEPTIONAL_FIRST_ODD = {3: 2, 9: 6, 15: 5, 21: 1, 27: 41, 33: 8}
EXCEPTIONAL_RES27_TEXT = "1.1988"  # Res(27) 截断到 4 位
EXCEPTIONAL_ROOT41_TEXT = "1.5107"  # 41^{1/9} 截断到 4 位
COROLLARY_TERMS = 19
COROLLARY_SUM_BOUND = Fraction(13047, 10000)
COROLLARY_RES_BOUND = Fraction(155, 100)
COROLLARY_MAX_ODD = 512
