"""test_analysis.py
==================
该脚本位于 utils/ 目录，测试 analysis.py 中的数值核验：调和数、γ、合格奇数序列、
各辅助不等式以及 pass / inconclusive / fail 三态判定。

执行方式：
    pytest utils/test_analysis.py
"""

import sys
from fractions import Fraction
from pathlib import Path

import pytest
from pydantic import ValidationError

ROOT_DIR = Path(__file__).resolve().parent.parent
SRC_DIR = ROOT_DIR / "src"
sys.path.insert(0, str(SRC_DIR))

from analysis import (  # type: ignore
    PrecisionConfig,
    combine_verdicts,
    corollary_bound_check,
    corollary_instance_check,
    eligible_product,
    eligible_reciprocal_sum,
    eligible_sequence,
    exceptional_starts_check,
    harmonic_exact,
    harmonic_sweep,
    lemma3_instance_check,
    lemma4_check,
    lemma4_sweep,
    lemma5_check,
    lemma5_sweep,
    root_truncated,
    theorem2_claim_sweep,
    theorem2_constant_check,
    theorem2_numeric_claim,
    validate_gamma,
)
from exact import Verdict  # type: ignore


# -------- 调和数与 γ -------- #

def test_harmonic_exact_small():
    assert harmonic_exact(1) == 1
    assert harmonic_exact(4) == Fraction(25, 12)


def test_harmonic_sweep_agrees_with_binary_splitting():
    for n, h in harmonic_sweep(300):
        assert h == harmonic_exact(n)


@pytest.mark.parametrize("n, cap", [(0, 10), (11, 10)])
def test_harmonic_exact_limits(n, cap):
    with pytest.raises(ValueError):
        harmonic_exact(n, cap)


def test_stored_gamma_validates():
    validate_gamma()


# -------- 精度配置 -------- #

@pytest.mark.parametrize("kwargs", [{"margin": "0"}, {"margin": "-1/10"}, {"working_digits": 29}])
def test_precision_config_rejects_bad_values(kwargs):
    with pytest.raises(ValidationError):
        PrecisionConfig(**kwargs)


def test_precision_margin_accepts_fraction_text():
    assert PrecisionConfig(margin="1/1000").margin == Fraction(1, 1000)


def test_combine_verdicts_order():
    assert combine_verdicts([Verdict.PASS, Verdict.INCONCLUSIVE]) is Verdict.INCONCLUSIVE
    assert combine_verdicts([Verdict.PASS, Verdict.FAIL, Verdict.INCONCLUSIVE]) is Verdict.FAIL
    assert combine_verdicts([Verdict.NOT_APPLICABLE]) is Verdict.NOT_APPLICABLE
    assert combine_verdicts([Verdict.PASS, Verdict.NOT_APPLICABLE]) is Verdict.PASS


# -------- Lemma 4 -------- #

@pytest.mark.parametrize("n", [1, 2, 10, 1000])
def test_lemma4_passes(n):
    assert lemma4_check(n).verdict is Verdict.PASS


def test_lemma4_sweep_all_pass():
    outcomes = list(lemma4_sweep(2000))
    assert len(outcomes) == 2000
    assert all(o.verdict is Verdict.PASS for o in outcomes)


def test_large_margin_is_inconclusive_not_fail():
    assert lemma4_check(10, PrecisionConfig(margin=1)).verdict is Verdict.INCONCLUSIVE


def test_shrinking_margin_never_turns_pass_into_fail():
    for margin in ("1/10000000000", "1/1000000000000000000000000000000"):
        prec = PrecisionConfig(margin=margin)
        assert lemma4_check(500, prec).verdict is Verdict.PASS
        assert lemma5_check(50, prec).verdict is Verdict.PASS


def test_doubling_precision_keeps_pass():
    prec = PrecisionConfig(working_digits=100)
    assert all(o.verdict is Verdict.PASS for o in lemma4_sweep(200, prec))
    assert all(o.verdict is Verdict.PASS for o in lemma5_sweep(50, prec))


# -------- 合格奇数与 Lemma 5 -------- #

def test_eligible_sequence():
    assert eligible_sequence(6) == (5, 7, 11, 13, 17, 19)
    with pytest.raises(ValueError):
        eligible_sequence(0)


def test_eligible_sum_and_product():
    assert eligible_reciprocal_sum(2) == Fraction(12, 35)
    assert eligible_product(1) == Fraction(16, 15)


def test_lemma5_first_case():
    outcome = lemma5_check(1)
    assert outcome.verdict is Verdict.PASS
    with pytest.raises(ValueError):
        lemma5_check(0)


def test_lemma5_sweep_all_pass():
    assert all(o.verdict is Verdict.PASS for o in lemma5_sweep(1000))


# -------- Theorem 2 -------- #

@pytest.mark.parametrize("t", [20, 21, 100, 1043, 1252])
def test_theorem2_claim_points(t):
    assert theorem2_numeric_claim(t).verdict is Verdict.PASS


@pytest.mark.parametrize("t", [19, 1253])
def test_theorem2_claim_outside_range(t):
    with pytest.raises(ValueError):
        theorem2_numeric_claim(t)


def test_theorem2_claim_sweep_full_range():
    outcomes = list(theorem2_claim_sweep())
    assert [o.n for o in outcomes] == list(range(20, 1253))
    assert all(o.verdict is Verdict.PASS for o in outcomes)


def test_theorem2_sweep_product_matches_direct():
    for o in theorem2_claim_sweep(20, 40):
        assert o.verdict == theorem2_numeric_claim(o.n).verdict


def test_theorem2_constants():
    outcome = theorem2_constant_check()
    assert outcome.verdict is Verdict.PASS
    assert "0.99946" in outcome.detail


def test_exceptional_starts():
    outcome = exceptional_starts_check()
    assert outcome.verdict is Verdict.PASS
    assert "1.1988" in outcome.detail
    assert "1.5107" in outcome.detail


def test_root_truncated():
    assert root_truncated(41, 9, 4) == "1.5107"
    assert root_truncated(2, 2, 6) == "1.414213"
    assert root_truncated(16, 4, 3) == "2.000"
    with pytest.raises(ValueError):
        root_truncated(0, 9, 4)


# -------- Lemma 3 / Corollary 1 -------- #

def test_lemma3_instances():
    assert lemma3_instance_check(27).verdict is Verdict.PASS
    assert lemma3_instance_check(993).verdict is Verdict.PASS
    assert lemma3_instance_check(64).verdict is Verdict.NOT_APPLICABLE


def test_corollary_instance():
    outcome = corollary_instance_check(27)
    assert outcome.verdict is Verdict.PASS
    assert "O=41" in outcome.detail


def test_corollary_bound():
    outcome = corollary_bound_check()
    assert outcome.verdict is Verdict.PASS
    assert "1.3046" in outcome.detail


if __name__ == "__main__":
    pytest.main([__file__])
