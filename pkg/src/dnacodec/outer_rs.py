"""Interleaved Reed-Solomon outer code over GF(2^16).

Codewords are evaluations of a polynomial of degree < k at the points
alpha^0 .. alpha^(n-1). Encoding is systematic: the first k positions carry
the data and parity positions are filled by Lagrange interpolation. Each
oligo holds one 16-bit symbol of every interleaved codeword, so losing one
oligo erases exactly one position per codeword.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gf import EXP, GF_ORDER, LOG, gf16_inv, gf16_mul

MAX_N = GF_ORDER
_CHUNK_CELLS = 1 << 21


class CapacityError(ValueError):
    pass


@dataclass
class OuterBlock:
    """Symbol grid of shape (num_codewords, n) plus per-oligo erasure flags."""

    symbols: np.ndarray
    k: int
    erased: np.ndarray = None

    def __post_init__(self):
        self.symbols = np.asarray(self.symbols, dtype=np.int64)
        if self.symbols.ndim == 1:
            self.symbols = self.symbols[None, :]
        if self.erased is None:
            self.erased = np.zeros(self.n, dtype=bool)
        self.erased = np.asarray(self.erased, dtype=bool)
        if not 0 < self.k <= self.n <= MAX_N:
            raise CapacityError(f"need 0 < k <= n <= {MAX_N}, got k={self.k}, n={self.n}")

    @property
    def n(self) -> int:
        return self.symbols.shape[1]

    @property
    def num_codewords(self) -> int:
        return self.symbols.shape[0]


@dataclass
class RsDecodeOutcome:
    data: np.ndarray  # (num_codewords, k); rows of failed codewords are zero
    success: np.ndarray  # (num_codewords,) bool
    bm_corrected: list[list[int]] = field(default_factory=list)  # per codeword
    codewords: np.ndarray = None  # (num_codewords, n) full re-encoded codewords

    @property
    def bm_corrected_positions(self) -> list[int]:
        return sorted({p for ps in self.bm_corrected for p in ps})

    @property
    def all_ok(self) -> bool:
        return bool(np.all(self.success))


def eval_points(n: int) -> np.ndarray:
    return EXP[np.arange(n, dtype=np.int64)]


def _log_sums(xa: np.ndarray, xb: np.ndarray) -> np.ndarray:
    """For each a in xa: sum of LOG[a ^ b] over b in xb with b != a (mod order)."""
    out = np.zeros(len(xa), dtype=np.int64)
    step = max(1, _CHUNK_CELLS // max(1, len(xb)))
    for s in range(0, len(xa), step):
        d = xa[s : s + step, None] ^ xb[None, :]
        lg = np.where(d == 0, 0, LOG[d])
        out[s : s + step] = lg.sum(axis=1) % GF_ORDER
    return out


def interpolate(xs: np.ndarray, ys: np.ndarray, xt: np.ndarray) -> np.ndarray:
    """Evaluate the degree < len(xs) interpolant through (xs, ys) at xt.

    ``ys`` has shape (C, len(xs)); returns shape (C, len(xt)).
    """
    xs = np.asarray(xs, dtype=np.int64)
    xt = np.asarray(xt, dtype=np.int64)
    ys = np.atleast_2d(np.asarray(ys, dtype=np.int64))
    C, k = ys.shape
    out = np.zeros((C, len(xt)), dtype=np.int64)
    if len(xt) == 0:
        return out
    # barycentric weights: log w_i = -sum_{j != i} log(x_i - x_j)
    logw = (-_log_sums(xs, xs)) % GF_ORDER
    logy = LOG[ys]
    ynz = ys != 0
    hit = {int(x): i for i, x in enumerate(xs)}
    step = max(1, _CHUNK_CELLS // max(1, k * C))
    for s in range(0, len(xt), step):
        t = xt[s : s + step]
        d = t[:, None] ^ xs[None, :]
        coinc = d == 0
        lgd = np.where(coinc, 0, LOG[d])
        logl = lgd.sum(axis=1) % GF_ORDER  # log prod_i (x_t - x_i), valid when no coincidence
        logm = (logl[:, None] + logw[None, :] - lgd) % GF_ORDER  # (T, k)
        terms = EXP[logm[None, :, :] + logy[:, None, :]]
        terms = np.where(ynz[:, None, :], terms, 0)
        out[:, s : s + step] = np.bitwise_xor.reduce(terms, axis=2)
        rows = np.nonzero(coinc.any(axis=1))[0]
        for r in rows:
            out[:, s + r] = ys[:, hit[int(t[r])]]
    return out


def rs_encode(data: np.ndarray, n: int) -> np.ndarray:
    """Systematic encode of k data symbols (or a (C, k) batch) to length n."""
    data = np.asarray(data, dtype=np.int64)
    single = data.ndim == 1
    data2 = np.atleast_2d(data)
    k = data2.shape[1]
    if n > MAX_N:
        raise CapacityError(f"n={n} exceeds the GF(2^16) code length {MAX_N}")
    if not 0 < k <= n:
        raise ValueError(f"need 0 < k <= n, got k={k}, n={n}")
    if np.any((data2 < 0) | (data2 > 0xFFFF)):
        raise ValueError("symbols must lie in [0, 65535]")
    x = eval_points(n)
    parity = interpolate(x[:k], data2, x[k:])
    cw = np.concatenate([data2, parity], axis=1)
    return cw[0] if single else cw


def _erasure_decode(symbols: np.ndarray, keep: np.ndarray, k: int, n: int):
    """Interpolate from the first k kept positions; returns (data, full codewords)."""
    x = eval_points(n)
    src = np.nonzero(keep)[0][:k]
    full = interpolate(x[src], symbols[:, src], x)
    return full[:, :k], full


def rs_decode_erasures(block: OuterBlock) -> RsDecodeOutcome:
    """Erasure-only decode: interpolation from any k received positions."""
    C, n, k = block.num_codewords, block.n, block.k
    keep = ~block.erased
    if keep.sum() < k:
        return RsDecodeOutcome(
            np.zeros((C, k), dtype=np.int64), np.zeros(C, dtype=bool), [[] for _ in range(C)],
            np.zeros((C, n), dtype=np.int64),
        )
    data, full = _erasure_decode(block.symbols, keep, k, n)
    return RsDecodeOutcome(data, np.ones(C, dtype=bool), [[] for _ in range(C)], full)


def _syndromes(symbols: np.ndarray, pos: np.ndarray, nsyn: int) -> np.ndarray:
    """Syndromes of the punctured GRS code on positions ``pos`` (shape (C, nsyn))."""
    x = eval_points(MAX_N)[pos] if len(pos) else np.zeros(0, dtype=np.int64)
    logv = (-_log_sums(x, x)) % GF_ORDER  # dual column multipliers
    logx = LOG[x]
    r = symbols[:, pos]
    logr = LOG[r]
    rnz = r != 0
    C = symbols.shape[0]
    out = np.zeros((C, nsyn), dtype=np.int64)
    step = max(1, _CHUNK_CELLS // max(1, len(pos) * C))
    for s in range(0, nsyn, step):
        ls = np.arange(s, min(nsyn, s + step), dtype=np.int64)
        logcol = (logv[None, :] + ls[:, None] * logx[None, :]) % GF_ORDER  # (L, n')
        terms = EXP[logcol[None, :, :] + logr[:, None, :]]
        terms = np.where(rnz[:, None, :], terms, 0)
        out[:, s : s + len(ls)] = np.bitwise_xor.reduce(terms, axis=2)
    return out


def berlekamp_massey(syn) -> list[int]:
    """Shortest LFSR (connection polynomial, low degree first) generating ``syn``."""
    lam = [1]
    prev = [1]
    L = 0
    m = 1
    b = 1
    for r, s in enumerate(syn):
        d = int(s)
        for i in range(1, L + 1):
            if i < len(lam) and lam[i]:
                d ^= gf16_mul(lam[i], int(syn[r - i]))
        if d == 0:
            m += 1
            continue
        coef = gf16_mul(d, gf16_inv(b))
        shifted = [0] * m + [gf16_mul(coef, p) for p in prev]
        new = lam + [0] * max(0, len(shifted) - len(lam))
        for i, p in enumerate(shifted):
            new[i] ^= p
        if 2 * L <= r:
            prev, L, b, m = lam, r + 1 - L, d, 1
        else:
            m += 1
        lam = new
    while len(lam) > 1 and lam[-1] == 0:
        lam.pop()
    return lam[: L + 1] + [0] * max(0, L + 1 - len(lam))


def _poly_eval_many(poly: list[int], xs: np.ndarray) -> np.ndarray:
    acc = np.zeros(len(xs), dtype=np.int64)
    lx = LOG[xs]
    for c in reversed(poly):
        acc = np.where(acc == 0, 0, EXP[LOG[acc] + lx]) ^ c
    return acc


def rs_decode_bm(block: OuterBlock) -> RsDecodeOutcome:
    """Errors-and-erasures decode.

    Syndromes of the code punctured to the received positions feed
    Berlekamp-Massey; located errors join the erasure list and the data is
    re-interpolated. Succeeds whenever 2e + f <= n - k.
    """
    C, n, k = block.num_codewords, block.n, block.k
    recv = np.nonzero(~block.erased)[0]
    red = len(recv) - k
    data = np.zeros((C, k), dtype=np.int64)
    full = np.zeros((C, n), dtype=np.int64)
    success = np.zeros(C, dtype=bool)
    corrected: list[list[int]] = [[] for _ in range(C)]
    if red < 0:
        return RsDecodeOutcome(data, success, corrected, full)
    syn = _syndromes(block.symbols, recv, red) if red > 0 else np.zeros((C, 0), dtype=np.int64)
    clean = ~syn.any(axis=1)
    if clean.any():
        d, f = _erasure_decode(block.symbols[clean], ~block.erased, k, n)
        data[clean], full[clean], success[clean] = d, f, True
    x = eval_points(n)
    for c in np.nonzero(~clean)[0]:
        lam = berlekamp_massey(syn[c])
        nerr = len(lam) - 1
        if nerr == 0 or 2 * nerr > red:
            continue
        inv_x = EXP[(GF_ORDER - LOG[x[recv]]) % GF_ORDER]
        roots = recv[_poly_eval_many(lam, inv_x) == 0]
        if len(roots) != nerr:
            continue
        keep = ~block.erased.copy()
        keep[roots] = False
        d, f = _erasure_decode(block.symbols[c : c + 1], keep, k, n)
        # the corrected codeword must agree with every remaining received symbol
        if np.any(f[0, keep] != block.symbols[c, keep]):
            continue
        data[c], full[c], success[c] = d[0], f[0], True
        corrected[c] = [int(p) for p in roots]
    return RsDecodeOutcome(data, success, corrected, full)


# --- interleaving -----------------------------------------------------------


def payloads_to_symbols(payloads: list[bytes]) -> np.ndarray:
    """Oligo i's j-th big-endian byte pair becomes symbol (j, i)."""
    if not payloads:
        return np.zeros((0, 0), dtype=np.int64)
    u = len(payloads[0])
    if u % 2 or any(len(p) != u for p in payloads):
        raise ValueError("payloads must share one even byte length")
    raw = np.frombuffer(b"".join(payloads), dtype=">u2").reshape(len(payloads), u // 2)
    return raw.T.astype(np.int64)


def symbols_to_payloads(symbols: np.ndarray) -> list[bytes]:
    arr = np.asarray(symbols, dtype=np.int64).T.astype(">u2")
    return [row.tobytes() for row in arr]


def interleave(payloads: list[bytes], n: int) -> OuterBlock:
    """Interleave k data payloads and generate parity up to n oligos."""
    data = payloads_to_symbols(payloads)
    return OuterBlock(rs_encode(data, n), k=len(payloads))


def deinterleave(block_or_symbols) -> list[bytes]:
    sym = block_or_symbols.symbols if isinstance(block_or_symbols, OuterBlock) else block_or_symbols
    return symbols_to_payloads(sym)
