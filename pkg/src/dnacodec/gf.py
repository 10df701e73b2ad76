"""GF(2^16) arithmetic for the outer code and GF(2) linear algebra for the inner code."""

from __future__ import annotations

import numpy as np

GF_POLY = 0x1100B  # x^16 + x^12 + x^3 + x + 1
GF_ORDER = 65535  # multiplicative group order
GENERATOR = 2


def _build_tables(poly: int = GF_POLY) -> tuple[np.ndarray, np.ndarray]:
    exp = np.zeros(2 * GF_ORDER, dtype=np.int64)
    log = np.zeros(GF_ORDER + 1, dtype=np.int64)
    x = 1
    for i in range(GF_ORDER):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & 0x10000:
            x ^= poly
    if x != 1:
        raise ValueError(f"polynomial {poly:#x} is not primitive")
    exp[GF_ORDER:] = exp[:GF_ORDER]
    return exp, log


EXP, LOG = _build_tables()


def gf16_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return int(EXP[LOG[a] + LOG[b]])


def gf16_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("zero has no inverse in GF(2^16)")
    return int(EXP[GF_ORDER - LOG[a]])


def gf16_div(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError("division by zero in GF(2^16)")
    if a == 0:
        return 0
    return int(EXP[(LOG[a] - LOG[b]) % GF_ORDER])


def gf16_pow(a: int, e: int) -> int:
    if a == 0:
        return 0 if e else 1
    return int(EXP[(LOG[a] * e) % GF_ORDER])


def clmul_reduce(a: int, b: int, poly: int = GF_POLY) -> int:
    """Carry-less multiply followed by reduction; table-free reference path."""
    acc = 0
    while b:
        if b & 1:
            acc ^= a
        b >>= 1
        a <<= 1
        if a & 0x10000:
            a ^= poly
    return acc


def mul_arr(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise product of GF(2^16) arrays (broadcasting)."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    out = EXP[LOG[a] + LOG[b]]
    return np.where((a == 0) | (b == 0), 0, out)


def alpha_pow(i) -> np.ndarray:
    return EXP[np.asarray(i, dtype=np.int64) % GF_ORDER]


# --- GF(2) -----------------------------------------------------------------


def gf2_rref(m: np.ndarray, col_order=None) -> tuple[np.ndarray, list[int]]:
    """Row-reduce a binary matrix; returns (reduced matrix, pivot columns).

    Pivot columns are searched in ``col_order`` (default: natural order), so
    passing a reliability ordering yields the greedy independent set.
    """
    a = (np.asarray(m, dtype=np.uint8) & 1).copy()
    rows, cols = a.shape
    order = range(cols) if col_order is None else col_order
    pivots: list[int] = []
    r = 0
    for c in order:
        if r == rows:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        p = r + nz[0]
        if p != r:
            a[[r, p]] = a[[p, r]]
        hits = np.nonzero(a[:, c])[0]
        hits = hits[hits != r]
        if hits.size:
            a[hits] ^= a[r]
        pivots.append(int(c))
        r += 1
    return a, pivots


def gf2_rank(m: np.ndarray) -> int:
    m = np.asarray(m)
    if m.size == 0:
        return 0
    return len(gf2_rref(m)[1])
