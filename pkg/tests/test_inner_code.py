import numpy as np
import pytest

from dnacodec.gf import gf2_rank
from dnacodec.inner_code import (
    ConstructionError, InnerStatus, LdpcProfile, bits_to_bytes, bytes_to_bits, crc32_append, crc32_bits,
    crc32_verify, encode_payload, ldpc_encode, make_profile, osd_decode, peg_construct, scramble, scramble_stream,
)
from oracles import crc32_bitwise, crc4, ml_decode


@pytest.fixture(scope="module")
def hifi():
    return make_profile("hifi")


@pytest.fixture(scope="module")
def lofi():
    return make_profile("lofi")


def test_peg_dimensions(hifi, lofi):
    assert hifi.H.shape == (9, 252) and lofi.H.shape == (36, 252)
    for p, dc in ((hifi, 84), (lofi, 21)):
        assert (p.H.sum(axis=0) == 3).all()
        assert p.H.sum(axis=1).max() <= dc
        assert p.rank == gf2_rank(p.H)
    h = peg_construct(6, 1, 3)
    assert h.shape == (2, 6) and (h.sum(axis=0) == 1).all()
    with pytest.raises(ConstructionError):
        peg_construct(10, 3, 7)


def test_peg_deterministic():
    assert np.array_equal(peg_construct(252, 3, 21, seed=5), peg_construct(252, 3, 21, seed=5))


def test_payload_budget_chain(hifi, lofi):
    assert (hifi.k_info, hifi.payload_bits, hifi.payload_bytes) == (243, 208, 26)
    assert (lofi.k_info, lofi.payload_bits, lofi.payload_bytes) == (216, 176, 22)


def test_crc_check_value():
    bits = bytes_to_bits(b"123456789")
    assert bits_to_bytes(crc32_bits(bits)) == (0xCBF43926).to_bytes(4, "big")
    assert crc32_bitwise(b"123456789") == 0xCBF43926


def test_crc_roundtrip_and_matches_bitwise_oracle():
    rng = np.random.default_rng(0)
    for _ in range(50):
        x = rng.integers(0, 2, 208, dtype=np.uint8)
        blk = crc32_append(x)
        assert crc32_verify(blk)
        assert int.from_bytes(bits_to_bytes(blk[-32:]), "big") == crc32_bitwise(bits_to_bytes(x))


def test_crc_single_bit_flip_exhaustive():
    x = np.random.default_rng(1).integers(0, 2, 208, dtype=np.uint8)
    blk = crc32_append(x)
    for i in range(len(blk)):
        bad = blk.copy()
        bad[i] ^= 1
        assert not crc32_verify(bad)


def test_ldpc_encode(hifi, lofi):
    for p in (hifi, lofi):
        assert not ldpc_encode(np.zeros(p.k_info, dtype=np.uint8), p).any()
        rng = np.random.default_rng(2)
        seen = set()
        for _ in range(1000):
            info = rng.integers(0, 2, p.k_info, dtype=np.uint8)
            c = ldpc_encode(info, p)
            assert not ((p.H.astype(int) @ c) % 2).any()
            assert np.array_equal(c[p.info_pos], info)
            seen.add(c.tobytes())
        assert len(seen) == 1000


def test_scramble(hifi):
    x = np.random.default_rng(3).integers(0, 2, 252, dtype=np.uint8)
    assert np.array_equal(scramble(scramble(x, 7), 7), x)
    assert (scramble_stream(0) != scramble_stream(1)).any()
    z = np.zeros(252, dtype=np.uint8)
    assert len({scramble(z, i).tobytes() for i in range(100)}) == 100


def _llr_from(c, mag=8.0):
    return mag * (1.0 - 2.0 * c)


def test_osd_clean_input_order0(hifi, lofi):
    for p in (hifi, lofi):
        payload = np.random.default_rng(4).integers(0, 2, p.payload_bits, dtype=np.uint8)
        c = encode_payload(payload, p)
        res = osd_decode(_llr_from(c), p)
        assert res.status is InnerStatus.PASSED and res.osd_order_used == 0
        assert np.array_equal(res.payload, payload)
        assert p.is_codeword(res.hard_codeword)


def test_osd_order1_adversarial(hifi):
    payload = np.random.default_rng(5).integers(0, 2, hifi.payload_bits, dtype=np.uint8)
    c = encode_payload(payload, hifi)
    llr = _llr_from(c)
    # a basis position with a small wrong-sign value stays inside the most reliable set
    pos = int(hifi.info_pos[10])
    llr[pos] = -0.5 * llr[pos]
    llr[hifi.parity_pos] *= 0.01  # keep the parity positions least reliable
    res = osd_decode(llr, hifi, max_order=1)
    assert res.passed and res.osd_order_used == 1
    assert np.array_equal(res.payload, payload)


def test_osd_erases_hopeless_input(hifi):
    llr = np.random.default_rng(6).normal(0, 1, 252)
    res = osd_decode(llr, hifi)
    assert res.status is InnerStatus.ERASED and res.payload is None


def test_osd_corrects_random_errors_with_soft_info(lofi):
    rng = np.random.default_rng(7)
    for _ in range(20):
        payload = rng.integers(0, 2, lofi.payload_bits, dtype=np.uint8)
        c = encode_payload(payload, lofi)
        llr = _llr_from(c, 6.0) + rng.normal(0, 1.0, 252)
        flips = rng.choice(252, 3, replace=False)
        llr[flips] = -llr[flips] * 0.3
        res = osd_decode(llr, lofi, max_order=3)
        assert res.passed and np.array_equal(res.payload, payload)


def toy_profile():
    rng = np.random.default_rng(11)
    while True:
        H = rng.integers(0, 2, size=(4, 12), dtype=np.uint8)
        if gf2_rank(H) == 4:
            break
    return LdpcProfile(H, k_info=8, payload_bits=4, check_bits=4, check_fn=crc4, name="toy")


def toy_codebook(p):
    words = []
    for v in range(16):
        payload = np.array([(v >> (3 - i)) & 1 for i in range(4)], dtype=np.uint8)
        words.append(encode_payload(payload, p))
    return np.array(words)


def osd_vs_ml_agreement(draws: int = 1000, seed: int = 0) -> float:
    """Share of AWGN draws (hard crossover 0.05) where order-2 OSD equals exhaustive ML."""
    p = toy_profile()
    book = toy_codebook(p)
    sigma = 1 / 1.6448536269514722  # Q(1/sigma) = 0.05
    rng = np.random.default_rng(seed)
    agree = 0
    for _ in range(draws):
        c = book[rng.integers(len(book))]
        y = (1.0 - 2.0 * c) + rng.normal(0, sigma, 12)
        llr = 2 * y / sigma**2
        ml = ml_decode(llr, book)
        res = osd_decode(llr, p, max_order=2)
        agree += res.passed and np.array_equal(res.hard_codeword, ml)
    return agree / draws


def test_toy_code_codebook_is_valid():
    p = toy_profile()
    book = toy_codebook(p)
    assert len({w.tobytes() for w in book}) == 16
    for w in book:
        assert p.is_codeword(w) and p.validity_syndrome(w) == 0


def test_osd_matches_exhaustive_ml_on_toy_code():
    assert osd_vs_ml_agreement() >= 0.99


def test_osd_deterministic_under_ties(hifi):
    payload = np.zeros(hifi.payload_bits, dtype=np.uint8)
    c = encode_payload(payload, hifi)
    llr = _llr_from(c, 3.0)
    a = osd_decode(llr, hifi)
    b = osd_decode(llr.copy(), hifi)
    assert np.array_equal(a.hard_codeword, b.hard_codeword)
