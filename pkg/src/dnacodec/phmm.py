"""Profile HMM scoring, forward-backward posteriors and multi-read fusion.

A reference model spans the known address region followed by a payload
region whose bases are unknown at decode time: address match states emit
the known base with substitution probability p_sub, payload match states
and all insert states emit uniformly. Dynamic programming runs in log space
inside a diagonal band |i - j| <= band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .dna_map import BASE_BITS, encode_bases

UNKNOWN = 4
NEG_INF = -np.inf
LLR_CLAMP = 30.0


def default_band(ref_length: int, p_ins: float, p_del: float) -> int:
    return max(8, math.ceil(5.0 * math.sqrt(ref_length * (p_ins + p_del))))


def _log(p: float) -> float:
    return math.log(p) if p > 0 else -math.inf


@dataclass(frozen=True)
class ProfileHmm:
    ref: np.ndarray  # uint8 codes, UNKNOWN for payload positions
    p_sub: float
    p_ins: float
    p_del: float
    band: int
    address_len: int = 0

    @classmethod
    def build(cls, address: str, payload_len: int, p_sub: float, p_ins: float, p_del: float,
              band: int | None = None) -> "ProfileHmm":
        ref = np.concatenate([encode_bases(address), np.full(payload_len, UNKNOWN, dtype=np.uint8)])
        if band is None:
            band = default_band(len(ref), p_ins, p_del)
        return cls(ref, p_sub, p_ins, p_del, band, len(address))

    @property
    def ref_length(self) -> int:
        return len(self.ref)

    @property
    def payload_len(self) -> int:
        return len(self.ref) - self.address_len

    def with_payload_len(self, payload_len: int) -> "ProfileHmm":
        ref = np.concatenate([self.ref[: self.address_len], np.full(payload_len, UNKNOWN, dtype=np.uint8)])
        return ProfileHmm(ref, self.p_sub, self.p_ins, self.p_del, self.band, self.address_len)

    def log_params(self) -> np.ndarray:
        ps, pi, pd = self.p_sub, self.p_ins, self.p_del
        return np.array([
            _log(1.0 - ps), _log(ps / 3.0), math.log(0.25),
            _log(1.0 - pi - pd), _log(pi), _log(pd),  # M->M, M->I, M->D
            _log(pi), _log(1.0 - pi),  # I->I, I->M
            _log(pd), _log(1.0 - pd),  # D->D, D->M
        ])


# indices into log_params
_EM, _EX, _EQ, _MM, _MI, _MD, _II, _IM, _DD, _DM = range(10)


@numba.njit(cache=True, inline="always")
def _lae(a, b):
    if a == -np.inf:
        return b
    if b == -np.inf:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


@numba.njit(cache=True, inline="always")
def _emit(lp, rb, qb):
    if rb == 4:
        return lp[2]
    if rb == qb:
        return lp[0]
    return lp[1]


@numba.njit(cache=True)
def _forward(read, ref, lp, w, ncols):
    """Forward matrices over ref columns 0..ncols (inclusive)."""
    Lq = read.shape[0]
    fM = np.full((Lq + 1, ncols + 1), -np.inf)
    fI = np.full((Lq + 1, ncols + 1), -np.inf)
    fD = np.full((Lq + 1, ncols + 1), -np.inf)
    fM[0, 0] = 0.0
    for i in range(Lq + 1):
        jlo = max(0, i - w)
        jhi = min(ncols, i + w)
        for j in range(jlo, jhi + 1):
            if i > 0 and j > 0:
                s = _lae(_lae(fM[i - 1, j - 1] + lp[3], fI[i - 1, j - 1] + lp[7]), fD[i - 1, j - 1] + lp[9])
                if s != -np.inf:
                    fM[i, j] = s + _emit(lp, ref[j - 1], read[i - 1])
            if i > 0:
                s = _lae(fM[i - 1, j] + lp[4], fI[i - 1, j] + lp[6])
                if s != -np.inf:
                    fI[i, j] = s + lp[2]
            if j > 0:
                fD[i, j] = _lae(fM[i, j - 1] + lp[5], fD[i, j - 1] + lp[8])
    return fM, fI, fD


@numba.njit(cache=True)
def _total_from_forward(fM, fI, fD, lp, Lq, Lr):
    # any forward move out of the last column ends the path
    endM = _lae(lp[3], lp[5])
    endI = lp[7]
    endD = 0.0
    return _lae(_lae(fM[Lq, Lr] + endM, fI[Lq, Lr] + endI), fD[Lq, Lr] + endD)


@numba.njit(cache=True)
def _forward_total(read, ref, lp, w):
    Lq = read.shape[0]
    Lr = ref.shape[0]
    if abs(Lq - Lr) > w:
        return -np.inf
    fM, fI, fD = _forward(read, ref, lp, w, Lr)
    return _total_from_forward(fM, fI, fD, lp, Lq, Lr)


@numba.njit(cache=True)
def _backward(read, ref, lp, w, jstart):
    """Backward matrices for ref columns jstart..Lr (columns below jstart left at -inf)."""
    Lq = read.shape[0]
    Lr = ref.shape[0]
    bM = np.full((Lq + 1, Lr + 1), -np.inf)
    bI = np.full((Lq + 1, Lr + 1), -np.inf)
    bD = np.full((Lq + 1, Lr + 1), -np.inf)
    for i in range(Lq, -1, -1):
        jlo = max(jstart, i - w)
        jhi = min(Lr, i + w)
        for j in range(jhi, jlo - 1, -1):
            if i == Lq and j == Lr:
                bM[i, j] = _lae(lp[3], lp[5])
                bI[i, j] = lp[7]
                bD[i, j] = 0.0
                continue
            nm = -np.inf  # next-step match (i+1, j+1)
            if i < Lq and j < Lr:
                nm = _emit(lp, ref[j], read[i]) + bM[i + 1, j + 1]
            ni = -np.inf  # insert (i+1, j)
            if i < Lq:
                ni = lp[2] + bI[i + 1, j]
            nd = -np.inf  # delete (i, j+1)
            if j < Lr:
                nd = bD[i, j + 1]
            bM[i, j] = _lae(_lae(lp[3] + nm, lp[4] + ni), lp[5] + nd)
            bI[i, j] = _lae(lp[7] + nm, lp[6] + ni)
            bD[i, j] = _lae(lp[9] + nm, lp[8] + nd)
    return bM, bI, bD


@numba.njit(cache=True)
def _posterior_rows(read, ref, lp, w, p_sub, col0):
    """Forward-backward base posteriors for ref columns col0+1..Lr.

    Row for column j: sum_i gamma(i, j) P(b | read_i) + P(j deleted) / 4.
    Returns (log-likelihood, rows).
    """
    Lq = read.shape[0]
    Lr = ref.shape[0]
    rows = np.zeros((Lr - col0, 4))
    if abs(Lq - Lr) > w:
        return -np.inf, rows
    fM, fI, fD = _forward(read, ref, lp, w, Lr)
    total = _total_from_forward(fM, fI, fD, lp, Lq, Lr)
    if total == -np.inf:
        return total, rows
    bM, bI, bD = _backward(read, ref, lp, w, 0)
    hit = 1.0 - p_sub
    miss = p_sub / 3.0
    for j in range(col0 + 1, Lr + 1):
        r = j - col0 - 1
        ilo = max(0, j - w)
        ihi = min(Lq, j + w)
        pdel = 0.0
        for i in range(ilo, ihi + 1):
            g = fD[i, j] + bD[i, j] - total
            if g > -700.0:
                pdel += math.exp(g)
            if i > 0:
                g = fM[i, j] + bM[i, j] - total
                if g > -700.0:
                    gm = math.exp(g)
                    qb = read[i - 1]
                    for b in range(4):
                        rows[r, b] += gm * (hit if b == qb else miss)
        for b in range(4):
            rows[r, b] += 0.25 * pdel
    return total, rows


@numba.njit(cache=True)
def _score_addresses(read, refs, lp, w, A):
    """Banded log-likelihood of one read against references differing only in
    their first A columns, sharing one backward pass over the common suffix."""
    Lq = read.shape[0]
    C, Lr = refs.shape
    out = np.full(C, -np.inf)
    if abs(Lq - Lr) > w:
        return out
    bM, bI, bD = _backward(read, refs[0], lp, w, A)
    for c in range(C):
        fM, fI, fD = _forward(read, refs[c], lp, w, A)
        acc = -np.inf
        ilo = max(0, A - w)
        ihi = min(Lq, A + w)
        for i in range(ilo, ihi + 1):
            # transitions crossing from column A into column A+1
            if i < Lq:
                into_m = _lae(_lae(fM[i, A] + lp[3], fI[i, A] + lp[7]), fD[i, A] + lp[9])
                acc = _lae(acc, into_m + _emit(lp, refs[c, A], read[i]) + bM[i + 1, A + 1])
            into_d = _lae(fM[i, A] + lp[5], fD[i, A] + lp[8])
            acc = _lae(acc, into_d + bD[i, A + 1])
        out[c] = acc
    return out


def _read_codes(read) -> np.ndarray:
    return read if isinstance(read, np.ndarray) else encode_bases(read)


def forward_loglik(read, hmm: ProfileHmm) -> float:
    """Natural-log likelihood of ``read`` under ``hmm`` within the band."""
    q = _read_codes(read)
    if len(q) == 0:
        raise ValueError("read must be non-empty")
    return float(_forward_total(q, hmm.ref, hmm.log_params(), hmm.band))


def score_candidates(read, hmms: list[ProfileHmm]) -> np.ndarray:
    """forward_loglik against several references that share one payload model."""
    q = _read_codes(read)
    if not hmms:
        return np.zeros(0)
    h0 = hmms[0]
    A = h0.address_len
    if A == 0 or A >= h0.ref_length:
        return np.array([forward_loglik(q, h) for h in hmms])
    refs = np.stack([h.ref for h in hmms])
    return _score_addresses(q, refs, h0.log_params(), h0.band, A)


# --- posteriors -------------------------------------------------------------


@dataclass
class PosteriorMatrix:
    """Per payload position distribution over A, C, G, T (rows sum to one)."""

    probs: np.ndarray
    coverage: int = 0

    @classmethod
    def uniform(cls, length: int) -> "PosteriorMatrix":
        return cls(np.full((length, 4), 0.25), 0)

    @property
    def min_max_mass(self) -> float:
        return float(self.probs.max(axis=1).min()) if len(self.probs) else 1.0

    def log(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.probs)


def posteriors_single_read(read, hmm: ProfileHmm) -> PosteriorMatrix:
    q = _read_codes(read)
    ll, rows = _posterior_rows(q, hmm.ref, hmm.log_params(), hmm.band, hmm.p_sub, hmm.address_len)
    if ll == -np.inf:
        return PosteriorMatrix.uniform(hmm.payload_len)
    rows = rows / rows.sum(axis=1, keepdims=True)
    return PosteriorMatrix(rows, 1)


def posteriors_with_loglik(read, hmm: ProfileHmm) -> tuple[float, PosteriorMatrix]:
    q = _read_codes(read)
    ll, rows = _posterior_rows(q, hmm.ref, hmm.log_params(), hmm.band, hmm.p_sub, hmm.address_len)
    if ll == -np.inf:
        return float(ll), PosteriorMatrix(np.full((hmm.payload_len, 4), 0.25), 0)
    return float(ll), PosteriorMatrix(rows / rows.sum(axis=1, keepdims=True), 1)


def _normalize_log(logp: np.ndarray) -> np.ndarray:
    mx = logp.max(axis=1, keepdims=True)
    p = np.exp(logp - mx)
    return p / p.sum(axis=1, keepdims=True)


def fuse(posteriors: list[PosteriorMatrix], length: int | None = None) -> PosteriorMatrix:
    """Log-product fusion of independent per-read posteriors."""
    if not posteriors:
        if length is None:
            raise ValueError("fusing nothing needs an explicit length")
        return PosteriorMatrix.uniform(length)
    logp = np.sum([p.log() for p in posteriors], axis=0)
    return PosteriorMatrix(_normalize_log(logp), sum(p.coverage for p in posteriors))


@dataclass
class FusionResult:
    posterior: PosteriorMatrix
    processed: int
    logliks: list[float]
    reads: list


def fuse_adaptive(reads, hmm: ProfileHmm, threshold: float = 0.999, batch: int = 4) -> FusionResult:
    """Fuse reads batch by batch until every position's top base mass reaches
    ``threshold``. Reads are sorted by sequence first so the result does not
    depend on arrival order."""
    ordered = sorted(reads, key=lambda r: r if isinstance(r, str) else r.tobytes())
    logp = np.zeros((hmm.payload_len, 4))
    processed = 0
    cov = 0
    logliks: list[float] = []
    post = PosteriorMatrix.uniform(hmm.payload_len)
    while processed < len(ordered):
        for r in ordered[processed : processed + batch]:
            ll, pm = posteriors_with_loglik(r, hmm)
            logliks.append(ll)
            if pm.coverage:
                logp += pm.log()
                cov += 1
        processed = min(len(ordered), processed + batch)
        post = PosteriorMatrix(_normalize_log(logp), cov)
        if post.min_max_mass >= threshold:
            break
    return FusionResult(post, processed, logliks, ordered[:processed])


def posteriors_to_llrs(p: PosteriorMatrix, clamp: float = LLR_CLAMP) -> np.ndarray:
    """Two LLRs per base, ln P(bit=0)/P(bit=1), marginalised over the Gray table."""
    probs = np.asarray(p.probs if isinstance(p, PosteriorMatrix) else p, dtype=np.float64)
    out = np.empty((len(probs), 2))
    tiny = 1e-300
    for k in range(2):
        zero = probs[:, BASE_BITS[:, k] == 0].sum(axis=1)
        one = probs[:, BASE_BITS[:, k] == 1].sum(axis=1)
        out[:, k] = np.log(np.maximum(zero, tiny)) - np.log(np.maximum(one, tiny))
    return np.clip(out.reshape(-1), -clamp, clamp)
