"""Read-to-reference assignment: 8-mer shortlist, then banded-forward argmax."""

from __future__ import annotations

import math
from collections import defaultdict

import numpy as np

from .dna_map import encode_bases
from .phmm import ProfileHmm, forward_loglik, score_candidates

K = 8
MAX_CANDIDATES = 15
UNASSIGNED = -1
# margin over the uniform null; covers picking the best of up to 15 candidates
MIN_LOG_ODDS = 4.0
LOG_QUARTER = math.log(0.25)


def kmer_codes(codes: np.ndarray, k: int = K) -> np.ndarray:
    """Integer codes (2 bits per base) of every k-mer in a base-code array."""
    codes = np.asarray(codes, dtype=np.int64)
    if len(codes) < k:
        return np.zeros(0, dtype=np.int64)
    win = np.lib.stride_tricks.sliding_window_view(codes, k)
    return win @ (4 ** np.arange(k - 1, -1, -1, dtype=np.int64))


class KmerIndex:
    """8-mer -> reference indices over the known address regions."""

    def __init__(self, addresses: list[str], k: int = K):
        self.k = k
        self.size = len(addresses)
        buckets: dict[int, list[int]] = defaultdict(list)
        for idx, a in enumerate(addresses):
            for code in np.unique(kmer_codes(encode_bases(a), k)):
                buckets[int(code)].append(idx)
        self._map = {c: np.array(v, dtype=np.int64) for c, v in buckets.items()}

    def __getitem__(self, code: int) -> np.ndarray:
        return self._map.get(code, np.zeros(0, dtype=np.int64))

    def __len__(self) -> int:
        return len(self._map)


def shortlist(read, index: KmerIndex, window: int | None = None, cap: int = MAX_CANDIDATES) -> list[int]:
    """Candidates ranked by shared 8-mer count, ties to the lower index.

    ``window`` limits the query to the read's leading bases (the address sits
    at the front of every strand).
    """
    codes = encode_bases(read) if isinstance(read, str) else np.asarray(read)
    if window is not None:
        codes = codes[:window]
    if len(codes) < index.k:
        return []
    hits = [index[int(c)] for c in np.unique(kmer_codes(codes, index.k))]
    hits = [h for h in hits if len(h)]
    if not hits:
        return []
    refs, counts = np.unique(np.concatenate(hits), return_counts=True)
    order = np.lexsort((refs, -counts))[:cap]
    return [int(r) for r in refs[order]]


def log_odds(loglik: float, read_len: int) -> float:
    """Log-likelihood relative to an i.i.d. uniform-base explanation of the read."""
    return loglik - read_len * LOG_QUARTER


def assign(read, candidates: list[int], hmms, min_log_odds: float = MIN_LOG_ODDS) -> int:
    """Best-scoring candidate, or UNASSIGNED.

    ``hmms`` maps reference index -> ProfileHmm (list, dict or callable).
    A read is rejected when its best score does not beat the uniform-base
    null by ``min_log_odds`` nats.
    """
    if not candidates:
        return UNASSIGNED
    get = hmms if callable(hmms) else hmms.__getitem__
    models = [get(c) for c in candidates]
    if all(m.ref_length == models[0].ref_length and m.address_len == models[0].address_len for m in models):
        scores = score_candidates(read, models)
    else:
        scores = np.array([forward_loglik(read, m) for m in models])
    best = int(np.argmax(scores))  # first max = lower rank = lower index among ties
    if not np.isfinite(scores[best]) or log_odds(scores[best], len(read)) < min_log_odds:
        return UNASSIGNED
    # exact ties go to the lower reference index
    tied = [candidates[i] for i in np.nonzero(scores == scores[best])[0]]
    return min(tied)


class ReadAssigner:
    """Pool-level assignment with models built on demand from addresses."""

    def __init__(self, addresses: list[str], payload_len: int, p_sub: float, p_ins: float, p_del: float,
                 min_log_odds: float = MIN_LOG_ODDS):
        self.addresses = addresses
        self.index = KmerIndex(addresses)
        self.window = len(addresses[0]) + K if addresses else None
        self.payload_len = payload_len
        self.rates = (p_sub, p_ins, p_del)
        self.min_log_odds = min_log_odds
        self._cache: dict[int, ProfileHmm] = {}

    def hmm(self, idx: int) -> ProfileHmm:
        m = self._cache.get(idx)
        if m is None:
            m = ProfileHmm.build(self.addresses[idx], self.payload_len, *self.rates)
            self._cache[idx] = m
        return m

    def __call__(self, read: str) -> int:
        cands = shortlist(read, self.index, self.window)
        return assign(read, cands, self.hmm, self.min_log_odds)

    def assign_all(self, reads: list[str]) -> np.ndarray:
        return np.array([self(r) for r in reads], dtype=np.int64)
