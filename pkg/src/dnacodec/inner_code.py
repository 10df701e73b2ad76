"""Per-oligo inner code: PEG-LDPC at n=252, CRC-32 coupling, scrambling, OSD.

Every check a valid codeword must satisfy beyond H c = 0 (CRC over the
payload, zero alignment padding, zero pinned positions) is affine in c, so
each position's contribution is packed into a single uint64 "validity
syndrome" column. OSD then searches error patterns over the most reliable
basis by XOR lookups instead of re-encoding every pattern.
"""

from __future__ import annotations

import zlib
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable

import numba
import numpy as np

from .gf import gf2_rank

N_BITS = 252
CRC_BITS = 32
PIN_LLR = 100.0


class ConstructionError(ValueError):
    pass


# --- CRC-32 -----------------------------------------------------------------


def bits_to_bytes(bits) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()


def bytes_to_bits(data: bytes) -> np.ndarray:
    return np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8))


def int_to_bits(value: int, width: int) -> np.ndarray:
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def bits_to_int(bits) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def crc32_bits(payload_bits) -> np.ndarray:
    """Reflected CRC-32 (poly 0x04C11DB7, init/xorout 0xFFFFFFFF) of a byte-aligned bit string."""
    payload_bits = np.asarray(payload_bits, dtype=np.uint8)
    if len(payload_bits) % 8:
        raise ValueError("CRC input must be a whole number of bytes")
    return int_to_bits(zlib.crc32(bits_to_bytes(payload_bits)), CRC_BITS)


def crc32_append(payload_bits) -> np.ndarray:
    payload_bits = np.asarray(payload_bits, dtype=np.uint8)
    return np.concatenate([payload_bits, crc32_bits(payload_bits)])


def crc32_verify(block_bits) -> bool:
    block_bits = np.asarray(block_bits, dtype=np.uint8)
    return bool(np.array_equal(crc32_bits(block_bits[:-CRC_BITS]), block_bits[-CRC_BITS:]))


# --- PEG construction -------------------------------------------------------


def peg_construct(n: int, d_v: int, d_c: int, seed: int = 0, strict: bool = True) -> np.ndarray:
    """Progressive-edge-growth parity-check matrix with column weight d_v.

    Variable nodes are visited in a seed-determined order. Each new edge goes
    to a check node outside (or deepest in) the current BFS tree, ties broken
    by lowest current check degree and then lowest index. With strict=False a
    non-divisible degree pair uses ceil(n*d_v/d_c) checks of weight <= d_c.
    """
    if (n * d_v) % d_c and strict:
        raise ConstructionError(f"n*d_v={n * d_v} is not divisible by d_c={d_c}")
    m = -(-n * d_v // d_c)
    if d_v > m:
        raise ConstructionError(f"d_v={d_v} exceeds the number of checks m={m}")
    var_adj: list[list[int]] = [[] for _ in range(n)]
    chk_adj: list[list[int]] = [[] for _ in range(m)]
    deg = [0] * m
    order = np.random.default_rng(seed).permutation(n) if seed else np.arange(n)

    def pick(cands, v):
        cands = [c for c in cands if deg[c] < d_c and v not in chk_adj[c]]
        if not cands:
            return None
        return min(cands, key=lambda c: (deg[c], c))

    for v in order:
        v = int(v)
        for e in range(d_v):
            choice = None
            if e > 0:
                # BFS over the Tanner graph from v
                reached = set(var_adj[v])
                frontier = deque(var_adj[v])
                seen_vars = {v}
                while True:
                    nxt = []
                    for c in frontier:
                        for u in chk_adj[c]:
                            if u in seen_vars:
                                continue
                            seen_vars.add(u)
                            for c2 in var_adj[u]:
                                if c2 not in reached:
                                    nxt.append(c2)
                    new = set(nxt) - reached
                    if not new or len(reached | new) == m:
                        # tree stopped growing, or the next level covers every
                        # check: the unreached nodes are the deepest choices
                        choice = pick([c for c in range(m) if c not in reached], v)
                        break
                    reached |= new
                    frontier = deque(sorted(new))
            if choice is None:
                choice = pick(range(m), v)
            if choice is None:
                raise ConstructionError(f"no admissible check node for variable {v}")
            var_adj[v].append(choice)
            chk_adj[choice].append(v)
            deg[choice] += 1
    H = np.zeros((m, n), dtype=np.uint8)
    for v in range(n):
        H[var_adj[v], v] = 1
    return H


# --- profile ----------------------------------------------------------------


@numba.njit(cache=True)
def _rref_cols(H, col_order):
    """Row-reduce H over GF(2), choosing pivots in col_order; returns (R, pivot cols)."""
    a = H.copy()
    m, n = a.shape
    pivots = np.full(m, -1, dtype=np.int64)
    r = 0
    for c in col_order:
        if r == m:
            break
        p = -1
        for i in range(r, m):
            if a[i, c]:
                p = i
                break
        if p < 0:
            continue
        if p != r:
            for j in range(n):
                t = a[r, j]
                a[r, j] = a[p, j]
                a[p, j] = t
        for i in range(m):
            if i != r and a[i, c]:
                for j in range(n):
                    a[i, j] ^= a[r, j]
        pivots[r] = c
        r += 1
    return a[:r], pivots[:r]


CheckFn = Callable[[np.ndarray], np.ndarray]


@dataclass(eq=False)
class LdpcProfile:
    """Parity-check structure plus the payload/check/pad layout of the info bits."""

    H: np.ndarray
    k_info: int
    payload_bits: int
    check_bits: int = CRC_BITS
    check_fn: CheckFn = crc32_bits
    d_v: int = 0
    d_c: int = 0
    seed: int = 0
    name: str = ""
    rank: int = field(init=False)
    info_pos: np.ndarray = field(init=False, repr=False)
    pinned_pos: np.ndarray = field(init=False, repr=False)
    parity_pos: np.ndarray = field(init=False, repr=False)
    vcols: np.ndarray = field(init=False, repr=False)
    v0: int = field(init=False, repr=False)

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=np.uint8)
        m, n = self.H.shape
        if self.payload_bits + self.check_bits > self.k_info:
            raise ConstructionError("payload and check bits exceed the information budget")
        # pivots scanned from the last column so parity sits at the tail
        R, piv = _rref_cols(self.H, np.arange(n - 1, -1, -1, dtype=np.int64))
        self.rank = len(piv)
        free = np.setdiff1d(np.arange(n), piv)
        if len(free) < self.k_info:
            raise ConstructionError(
                f"code dimension {len(free)} below the information budget {self.k_info}"
            )
        self.info_pos = free[: self.k_info]
        self.pinned_pos = free[self.k_info :]
        self.parity_pos = np.asarray(piv, dtype=np.int64)
        self._R_free = R[:, free]
        self._free = free
        self._build_validity()

    @property
    def n(self) -> int:
        return self.H.shape[1]

    @property
    def m(self) -> int:
        return self.H.shape[0]

    @property
    def pad_bits(self) -> int:
        return self.k_info - self.payload_bits - self.check_bits

    @property
    def payload_bytes(self) -> int:
        return self.payload_bits // 8

    def _build_validity(self):
        nv = self.check_bits + self.pad_bits + len(self.pinned_pos)
        if nv > 64:
            raise ConstructionError(f"{nv} validity bits do not fit one uint64 word")
        zero = np.zeros(self.payload_bits, dtype=np.uint8)
        base = bits_to_int(self.check_fn(zero))
        cols = np.zeros(self.n, dtype=np.uint64)
        for i in range(self.payload_bits):
            e = zero.copy()
            e[i] = 1
            cols[self.info_pos[i]] = bits_to_int(self.check_fn(e)) ^ base
        for t in range(self.check_bits):
            cols[self.info_pos[self.payload_bits + t]] = 1 << (self.check_bits - 1 - t)
        for p in range(self.pad_bits):
            cols[self.info_pos[self.payload_bits + self.check_bits + p]] = 1 << (self.check_bits + p)
        off = self.check_bits + self.pad_bits
        for q, pos in enumerate(self.pinned_pos):
            cols[pos] = 1 << (off + q)
        self.vcols = cols
        self.v0 = int(base)

    def validity_syndrome(self, c) -> int:
        c = np.asarray(c, dtype=bool)
        s = np.bitwise_xor.reduce(self.vcols[c]) if c.any() else np.uint64(0)
        return int(s) ^ self.v0

    def is_codeword(self, c) -> bool:
        return not np.any((self.H.astype(np.int64) @ np.asarray(c, dtype=np.int64)) % 2)

    def info_block(self, payload_bits) -> np.ndarray:
        payload_bits = np.asarray(payload_bits, dtype=np.uint8)
        if len(payload_bits) != self.payload_bits:
            raise ValueError(f"payload must be {self.payload_bits} bits, got {len(payload_bits)}")
        return np.concatenate(
            [payload_bits, self.check_fn(payload_bits), np.zeros(self.pad_bits, dtype=np.uint8)]
        )

    def extract_payload(self, c) -> np.ndarray:
        return np.asarray(c, dtype=np.uint8)[self.info_pos[: self.payload_bits]]


def payload_budget(k_info: int) -> int:
    """Largest multiple of 16 bits that fits after the CRC."""
    return ((k_info - CRC_BITS) // 16) * 16


PROFILE_PARAMS = {"hifi": (3, 84), "lofi": (3, 21)}


@lru_cache(maxsize=None)
def make_profile(name: str = "hifi", n: int = N_BITS, seed: int = 0) -> LdpcProfile:
    d_v, d_c = PROFILE_PARAMS[name]
    # non-canonical strand lengths may not divide evenly; allow ragged check degrees
    H = peg_construct(n, d_v, d_c, seed, strict=(n * d_v) % d_c == 0)
    m = H.shape[0]
    k_info = n - m
    return LdpcProfile(
        H, k_info=k_info, payload_bits=payload_budget(k_info), d_v=d_v, d_c=d_c, seed=seed, name=name
    )


def measured_rank(profile: LdpcProfile) -> int:
    return gf2_rank(profile.H)


# --- encode / scramble ------------------------------------------------------


def ldpc_encode(info_bits, profile: LdpcProfile) -> np.ndarray:
    """Systematic encode: info bits at profile.info_pos, pinned bits zero."""
    info_bits = np.asarray(info_bits, dtype=np.uint8)
    if len(info_bits) != profile.k_info:
        raise ValueError(f"expected {profile.k_info} info bits, got {len(info_bits)}")
    c = np.zeros(profile.n, dtype=np.uint8)
    c[profile.info_pos] = info_bits
    c[profile.parity_pos] = (profile._R_free.astype(np.int64) @ c[profile._free]) % 2
    return c


def encode_payload(payload_bits, profile: LdpcProfile) -> np.ndarray:
    return ldpc_encode(profile.info_block(payload_bits), profile)


def scramble_stream(index: int, n: int = N_BITS, seed: int = 0) -> np.ndarray:
    """Pseudo-random bits from a Philox stream keyed by (seed, index)."""
    key = np.array([seed & (2**64 - 1), index & (2**64 - 1)], dtype=np.uint64)
    words = np.random.Philox(key=key).random_raw((n + 63) // 64)
    return np.unpackbits(words.astype("<u8").view(np.uint8), bitorder="little")[:n]


def scramble(bits, index: int, seed: int = 0) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    return bits ^ scramble_stream(index, len(bits), seed)


# --- OSD --------------------------------------------------------------------


class InnerStatus(str, Enum):
    PASSED = "passed"
    ERASED = "erased"


@dataclass
class InnerDecodeResult:
    payload: np.ndarray | None
    status: InnerStatus
    osd_order_used: int
    hard_codeword: np.ndarray

    @property
    def passed(self) -> bool:
        return self.status is InnerStatus.PASSED


def reliability_order(llr: np.ndarray) -> np.ndarray:
    """Positions by |llr| descending; equal magnitudes keep the lower index first."""
    return np.lexsort((np.arange(len(llr)), -np.abs(llr)))


def _pairs_matching(s: np.ndarray, target: int, lo: int = 0):
    """All index pairs i < j (both >= lo) with s[i] ^ s[j] == target."""
    idx = np.argsort(s, kind="stable")
    ss = s[idx]
    want = s ^ np.uint64(target)
    left = np.searchsorted(ss, want, "left")
    right = np.searchsorted(ss, want, "right")
    out = []
    for i in np.nonzero(right > left)[0]:
        for j in idx[left[i] : right[i]]:
            if j > i and i >= lo:
                out.append((int(i), int(j)))
    return out


def osd_decode(llr, profile: LdpcProfile, max_order: int = 2) -> InnerDecodeResult:
    """Ordered-statistics decoding with check-verified candidate selection.

    Orders 0..min(2, max_order) are searched together; order 3 runs only
    when nothing passed at order <= 2. Among passing candidates the one
    with the largest soft correlation sum((1 - 2c) * llr) wins.
    """
    llr = np.asarray(llr, dtype=np.float64)
    n = profile.n
    if len(llr) != n:
        raise ValueError(f"expected {n} LLRs, got {len(llr)}")
    desc = reliability_order(llr)
    R, piv = _rref_cols(profile.H, desc[::-1].copy())
    is_piv = np.zeros(n, dtype=bool)
    is_piv[piv] = True
    mrb = desc[~is_piv[desc]]  # most reliable basis, most reliable first
    A = R[:, mrb].astype(bool)  # parity bits as a function of MRB bits
    y = (llr < 0).astype(np.uint8)
    c0 = np.zeros(n, dtype=np.uint8)
    c0[mrb] = y[mrb]
    if len(piv):
        c0[piv] = (A.astype(np.int64) @ y[mrb].astype(np.int64)) % 2
    s0 = np.uint64(profile.validity_syndrome(c0))
    vp = profile.vcols[piv]
    s = profile.vcols[mrb].copy()
    if len(piv):
        s ^= np.bitwise_xor.reduce(np.where(A, vp[:, None], np.uint64(0)), axis=0)

    patterns: list[tuple[int, ...]] = []
    if s0 == 0:
        patterns.append(())
    if max_order >= 1:
        patterns.extend((int(i),) for i in np.nonzero(s == s0)[0])
    if max_order >= 2:
        patterns.extend(_pairs_matching(s, int(s0)))
    if not patterns and max_order >= 3:
        K = len(s)
        iu, ju = np.triu_indices(K, 1)
        t = s[iu] ^ s[ju] ^ s0
        idx = np.argsort(s, kind="stable")
        ss = s[idx]
        left = np.searchsorted(ss, t, "left")
        right = np.searchsorted(ss, t, "right")
        for p in np.nonzero(right > left)[0]:
            i, j = int(iu[p]), int(ju[p])
            for q in idx[left[p] : right[p]]:
                if q > j:
                    patterns.append((i, j, int(q)))

    sign = 1.0 - 2.0 * c0
    base_corr = float(sign @ llr)
    best = None
    for pat in patterns:
        c = c0.copy()
        for i in pat:
            c[mrb[i]] ^= 1
            if len(piv):
                c[piv[A[:, i]]] ^= 1
        corr = float((1.0 - 2.0 * c) @ llr) if pat else base_corr
        if best is None or corr > best[0]:
            best = (corr, pat, c)
    if best is None:
        return InnerDecodeResult(None, InnerStatus.ERASED, max_order, c0)
    _, pat, c = best
    return InnerDecodeResult(profile.extract_payload(c), InnerStatus.PASSED, len(pat), c)
