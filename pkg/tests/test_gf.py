import numpy as np
import pytest

from dnacodec.gf import (
    EXP, GF_ORDER, GENERATOR, LOG, clmul_reduce, gf16_div, gf16_inv, gf16_mul, gf16_pow, gf2_rank, gf2_rref, mul_arr,
)
from oracles import gf2_rank_slow, gf_mul_slow, gf_pow_slow


def test_mul_identity_and_small_product():
    for a in (0, 1, 2, 0x1234, 0xFFFF):
        assert gf16_mul(a, 1) == a
    assert gf16_mul(2, 3) == 6


def test_generator_order():
    # alpha * alpha^65534 = 1, checked with a table-free square-and-multiply oracle
    a_last = gf_pow_slow(GENERATOR, GF_ORDER - 1)
    assert gf_mul_slow(GENERATOR, a_last) == 1
    assert gf16_mul(GENERATOR, gf16_pow(GENERATOR, GF_ORDER - 1)) == 1
    assert gf16_pow(GENERATOR, GF_ORDER - 1) == a_last


def test_tables_agree_with_slow_multiply():
    rng = np.random.default_rng(0)
    for a, b in rng.integers(0, 65536, size=(2000, 2)):
        assert gf16_mul(int(a), int(b)) == gf_mul_slow(int(a), int(b)) == clmul_reduce(int(a), int(b))


def test_inverse():
    assert gf16_inv(1) == 1
    rng = np.random.default_rng(1)
    for a in rng.integers(1, 65536, size=1000):
        assert gf16_mul(int(a), gf16_inv(int(a))) == 1
    with pytest.raises(ZeroDivisionError):
        gf16_inv(0)
    with pytest.raises(ZeroDivisionError):
        gf16_div(5, 0)


def test_field_axioms_random_triples():
    rng = np.random.default_rng(2)
    a, b, c = rng.integers(0, 65536, size=(3, 10_000))
    assert np.array_equal(mul_arr(a, b), mul_arr(b, a))
    assert np.array_equal(mul_arr(mul_arr(a, b), c), mul_arr(a, mul_arr(b, c)))
    assert np.array_equal(mul_arr(a, b ^ c), mul_arr(a, b) ^ mul_arr(a, c))


def test_log_exp_bijection():
    assert len(np.unique(EXP[:GF_ORDER])) == GF_ORDER
    nz = np.arange(1, 65536)
    assert np.array_equal(EXP[LOG[nz]], nz)


def test_rank_examples():
    assert gf2_rank(np.eye(4, dtype=np.uint8)) == 4
    m = np.array([[1, 0, 1, 1], [0, 1, 1, 0], [1, 0, 1, 1]], dtype=np.uint8)
    assert gf2_rank(m) == 2
    rng = np.random.default_rng(3)
    for _ in range(20):
        m = (rng.random((9, 252)) < 0.05).astype(np.uint8)
        assert gf2_rank(m) == gf2_rank_slow(m)


def test_rref_preserves_row_space():
    rng = np.random.default_rng(4)
    m = rng.integers(0, 2, size=(6, 15), dtype=np.uint8)
    r, piv = gf2_rref(m)
    assert gf2_rank(np.vstack([m, r])) == gf2_rank(m) == len(piv)
    assert gf2_rank(m) == gf2_rank(gf2_rref(r)[0])  # idempotent
