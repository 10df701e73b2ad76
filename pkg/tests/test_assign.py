import numpy as np
import pytest

from dnacodec.assign import UNASSIGNED, KmerIndex, ReadAssigner, assign, kmer_codes, shortlist
from dnacodec.dna_map import encode_bases, make_addresses
from dnacodec.idsim import HIFI, corrupt
from dnacodec.phmm import ProfileHmm


@pytest.fixture(scope="module")
def pool():
    addrs = make_addresses(0, 4508)
    rng = np.random.default_rng(0)
    payloads = ["".join("ACGT"[i] for i in rng.integers(0, 4, 126)) for _ in addrs]
    c = HIFI.combined
    return addrs, payloads, ReadAssigner(addrs, 126, c.p_sub, c.p_ins, c.p_del)


def test_kmer_codes():
    assert list(kmer_codes(encode_bases("AAAAAAAAC"))) == [0, 1]
    assert len(kmer_codes(encode_bases("ACG"))) == 0


def test_index_lists_each_reference_once_per_kmer():
    addrs = ["AAAAAAAAAAAAAA", "ACGTACGTACGTAC"]
    idx = KmerIndex(addrs)
    assert list(idx[0]) == [0]  # AAAAAAAA appears 7 times in reference 0 but is listed once
    for code in np.unique(kmer_codes(encode_bases(addrs[1]))):
        assert list(idx[int(code)]) == [1]


def test_shortlist_exact_and_empty(pool):
    addrs, payloads, asg = pool
    assert shortlist(addrs[42] + payloads[42], asg.index, asg.window)[0] == 42
    assert shortlist("ACGTACG", asg.index) == []
    lonely = KmerIndex(["ACGTACGTACGTAC"])
    assert shortlist("TTTTTTTTTTTTTTTTTT", lonely) == []


def test_shortlist_cap_and_tie_order():
    addrs = ["AAAAAAAA" + s for s in ("CCCCCC", "GGGGGG", "TTTTTT")] * 6
    idx = KmerIndex(addrs)
    got = shortlist("AAAAAAAA", idx, cap=15)
    assert got == list(range(15))


def test_noisy_reads_keep_true_reference_in_shortlist(pool):
    addrs, payloads, asg = pool
    rng = np.random.default_rng(1)
    hits = 0
    N = 1000
    for t in rng.integers(0, len(addrs), N):
        read = corrupt(corrupt(addrs[t] + payloads[t], HIFI.synth, rng), HIFI.seq, rng)
        hits += int(t) in shortlist(read, asg.index, asg.window)
    assert hits >= 0.99 * N


def test_clean_read_assigns_to_own_reference(pool):
    addrs, payloads, asg = pool
    for t in (0, 100, 4507):
        assert asg(addrs[t] + payloads[t]) == t


def test_random_reads_are_rejected(pool):
    _, _, asg = pool
    rng = np.random.default_rng(2)
    rejected = sum(asg("".join("ACGT"[i] for i in rng.integers(0, 4, 140))) == UNASSIGNED for _ in range(300))
    assert rejected >= 0.99 * 300


def test_empty_shortlist_is_unassigned(pool):
    assert assign("ACGT" * 35, [], pool[2].hmm) == UNASSIGNED


def test_misassignment_rate_on_labelled_hifi_reads(pool):
    addrs, payloads, asg = pool
    rng = np.random.default_rng(3)
    N = 10_000
    truth = rng.integers(0, len(addrs), N)
    wrong = 0
    for t in truth:
        read = corrupt(corrupt(addrs[t] + payloads[t], HIFI.synth, rng), HIFI.seq, rng)
        got = asg(read)
        wrong += got != UNASSIGNED and got != t
    assert wrong <= 0.01 * N


def test_assignment_is_deterministic(pool):
    addrs, payloads, asg = pool
    rng = np.random.default_rng(4)
    reads = [corrupt(addrs[t] + payloads[t], HIFI.seq, rng) for t in range(50)]
    fresh = ReadAssigner(addrs, 126, *asg.rates)
    assert list(asg.assign_all(reads)) == list(fresh.assign_all(reads))


def test_ties_go_to_lower_index():
    addr = make_addresses(0, 1)[0]
    h = ProfileHmm.build(addr, 126, 1e-3, 1e-3, 1e-3)
    read = addr + "ACGT" * 31 + "AC"
    assert assign(read, [7, 3, 5], {3: h, 5: h, 7: h}) == 3
