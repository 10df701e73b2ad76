import itertools

import numpy as np
import pytest

from dnacodec.outer_rs import (
    CapacityError, OuterBlock, berlekamp_massey, deinterleave, eval_points, interleave, payloads_to_symbols,
    rs_decode_bm, rs_decode_erasures, rs_encode, symbols_to_payloads,
)
from oracles import poly_eval_slow


def test_encode_matches_polynomial_evaluation():
    rng = np.random.default_rng(0)
    k, n = 5, 11
    coeffs = [int(c) for c in rng.integers(0, 65536, k)]
    xs = [int(x) for x in eval_points(n)]
    full = [poly_eval_slow(coeffs, x) for x in xs]
    assert list(rs_encode(np.array(full[:k]), n)) == full


def test_systematic_and_zero():
    data = np.array([1, 2, 3, 4])
    cw = rs_encode(data, 9)
    assert list(cw[:4]) == [1, 2, 3, 4]
    assert not rs_encode(np.zeros(4, dtype=np.int64), 9).any()


def test_encode_errors():
    with pytest.raises(CapacityError):
        rs_encode(np.zeros(3, dtype=np.int64), 65536)
    with pytest.raises(ValueError):
        rs_encode(np.array([70000]), 4)


def test_erasure_decode_from_any_k_positions():
    rng = np.random.default_rng(1)
    k, n = 6, 10
    data = rng.integers(0, 65536, size=(3, k))
    cw = rs_encode(data, n)
    for keep in itertools.combinations(range(n), k):
        erased = np.ones(n, dtype=bool)
        erased[list(keep)] = False
        out = rs_decode_erasures(OuterBlock(np.where(erased, 0, cw), k, erased))
        assert out.all_ok and np.array_equal(out.data, data)


@pytest.mark.parametrize("n,k", [(12, 8), (16, 10), (15, 7)])
def test_errors_and_erasures_contract(n, k):
    """Every (e, f) with 2e + f <= n - k decodes (several random placements each)."""
    rng = np.random.default_rng(n * 100 + k)
    for e in range((n - k) // 2 + 1):
        for f in range(n - k - 2 * e + 1):
            for _ in range(8):
                data = rng.integers(0, 65536, size=(2, k))
                cw = rs_encode(data, n)
                pos = rng.permutation(n)
                err, ers = pos[:e], pos[e : e + f]
                rx = cw.copy()
                rx[:, err] ^= rng.integers(1, 65536, size=(2, e))
                erased = np.zeros(n, dtype=bool)
                erased[ers] = True
                rx[:, ers] = 0
                out = rs_decode_bm(OuterBlock(rx, k, erased))
                assert out.all_ok, (e, f)
                assert np.array_equal(out.data, data)
                assert out.bm_corrected_positions == sorted(int(p) for p in err)


def test_beyond_capacity_is_not_silently_accepted_for_erasures():
    k, n = 8, 12
    cw = rs_encode(np.arange(1, k + 1), n)
    erased = np.zeros(n, dtype=bool)
    erased[:5] = True
    out = rs_decode_bm(OuterBlock(cw, k, erased))
    assert not out.all_ok


def test_berlekamp_massey_single_error_locator():
    # syndromes of a single error with locator x: s_l = y x^l, connection poly 1 + x z
    from dnacodec.gf import gf16_mul, gf16_pow
    x, y = 0x1234, 0x0BAD
    syn = [gf16_mul(y, gf16_pow(x, l)) for l in range(4)]
    lam = berlekamp_massey(syn)
    assert lam == [1, x]


def test_interleaver_roundtrip_and_single_dropout():
    rng = np.random.default_rng(5)
    u, k, n = 26, 20, 30
    payloads = [rng.integers(0, 256, u, dtype=np.uint8).tobytes() for _ in range(k)]
    block = interleave(payloads, n)
    assert block.num_codewords == u // 2 and block.n == n
    assert deinterleave(block)[:k] == payloads
    # losing one oligo erases exactly one symbol in every codeword
    for lost in (0, 7, k, n - 1):
        erased = np.zeros(n, dtype=bool)
        erased[lost] = True
        sym = block.symbols.copy()
        sym[:, lost] = 0
        assert (sym != block.symbols).sum(axis=1).max() <= 1
        out = rs_decode_bm(OuterBlock(sym, k, erased))
        assert out.all_ok
        assert symbols_to_payloads(out.data) == payloads


def test_payload_symbol_layout():
    sym = payloads_to_symbols([b"\x01\x02\x03\x04", b"\xff\x00\x00\x01"])
    assert sym.tolist() == [[0x0102, 0xFF00], [0x0304, 0x0001]]
