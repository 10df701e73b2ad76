"""End-to-end file encoder and soft-information decoder."""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from itertools import combinations

import numpy as np

from .assign import MIN_LOG_ODDS, UNASSIGNED, ReadAssigner
from .dna_map import ADDRESS_NT, Strand, assemble_strand, make_addresses, read_fasta, write_pool
from .gf import GF_POLY
from .idsim import get_profile
from .inner_code import (
    PIN_LLR, InnerDecodeResult, InnerStatus, LdpcProfile, bytes_to_bits, bits_to_bytes,
    encode_payload, make_profile, osd_decode, scramble, scramble_stream,
)
from .outer_rs import (
    MAX_N, CapacityError, OuterBlock, RsDecodeOutcome, interleave, payloads_to_symbols,
    rs_decode_bm, symbols_to_payloads,
)
from .phmm import ProfileHmm, fuse, fuse_adaptive, posteriors_single_read, posteriors_to_llrs, score_candidates

PI_DEFAULTS = {"hifi": 0.99, "lofi": 0.797}
MIN_PARITY = 4
TURBO_MAX_DISAGREE = 5
HEADER_VERSION = 1
CRC_PARAMS = "crc32:poly=0x04C11DB7:reflected:init=0xFFFFFFFF:xorout=0xFFFFFFFF"


@dataclass
class CodecConfig:
    profile: str = "hifi"
    strand_payload_nt: int = 126
    r: float = 1.0
    pi: float | None = None
    safety: float = 1.08
    osd_order: int | None = None  # 2 on hifi; 3 enables the order-3 cascade (lofi)
    turbo: bool | None = None  # defaults to on for lofi only
    pool_seed: int = 0
    parity_fraction: float | None = None  # overrides the pi/safety sizing rule
    channel: str | None = None  # rate profile the decoder's HMM assumes
    fusion_threshold: float = 0.999
    fusion_batch: int = 4
    indel_search: bool = True
    indel_hypotheses: int | None = None
    min_log_odds: float = MIN_LOG_ODDS

    def __post_init__(self):
        if self.profile not in PI_DEFAULTS:
            raise ValueError(f"unknown profile {self.profile!r}")
        if self.pi is None:
            self.pi = PI_DEFAULTS[self.profile]
        if self.osd_order is None:
            self.osd_order = 2 if self.profile == "hifi" else 3
        if self.turbo is None:
            self.turbo = self.profile == "lofi"
        if self.indel_hypotheses is None:
            self.indel_hypotheses = 128 if self.profile == "hifi" else 32
        if not 0 < self.pi <= 1:
            raise ValueError("pi must lie in (0, 1]")
        if self.safety < 1:
            raise ValueError("safety factor must be >= 1")
        if self.r <= 0:
            raise ValueError("physical redundancy must be positive")
        if self.parity_fraction is not None and not 0 <= self.parity_fraction < 1:
            raise ValueError("parity fraction must lie in [0, 1)")
        if self.strand_payload_nt < 8:
            raise ValueError("strand payload too short")

    @property
    def ldpc(self) -> LdpcProfile:
        return make_profile(self.profile, 2 * self.strand_payload_nt)

    @property
    def payload_bytes(self) -> int:
        return self.ldpc.payload_bytes

    def hmm_rates(self) -> tuple[float, float, float]:
        c = get_profile(self.channel or self.profile).combined
        return c.p_sub, c.p_ins, c.p_del


def pool_size(L: int, cfg: CodecConfig) -> tuple[int, int]:
    """(k_rs, n): data oligos and total oligos for an L-byte file."""
    if L <= 0:
        raise ValueError("file must be non-empty")
    k = math.ceil(L / cfg.payload_bytes)
    if cfg.parity_fraction is not None:
        n = math.ceil(k / (1.0 - cfg.parity_fraction))
    else:
        n = math.ceil(cfg.safety * k / ((1.0 - math.exp(-cfg.r)) * cfg.pi))
        n = max(n, k + MIN_PARITY)
    if n > MAX_N:
        raise CapacityError(f"pool of {n} oligos exceeds the GF(2^16) code length {MAX_N}")
    return k, n


# --- pool header ------------------------------------------------------------


@dataclass
class PoolHeader:
    L: int
    n: int
    k_rs: int
    profile: str
    pool_seed: int
    strand_payload_nt: int = 126
    version: int = HEADER_VERSION
    crc_params: str = CRC_PARAMS
    gf_poly: str = f"{GF_POLY:#x}"

    def to_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in asdict(self).items())

    @classmethod
    def from_text(cls, text: str) -> "PoolHeader":
        kv = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            kv[key.strip()] = val.strip()
        ints = {"L", "n", "k_rs", "pool_seed", "strand_payload_nt", "version"}
        try:
            return cls(**{k: int(v) if k in ints else v for k, v in kv.items() if k in cls.__dataclass_fields__})
        except TypeError as e:
            raise ValueError(f"incomplete pool header: {e}") from None

    def config(self, **overrides) -> CodecConfig:
        return CodecConfig(profile=self.profile, strand_payload_nt=self.strand_payload_nt,
                           pool_seed=self.pool_seed, **overrides)


@dataclass
class EncodedPool:
    strands: list[Strand]
    header: PoolHeader

    @property
    def sequences(self) -> list[str]:
        return [s.sequence for s in self.strands]

    def write(self, path) -> None:
        with open(path, "w") as fh:
            write_pool(fh, self.strands)
        with open(header_path(path), "w") as fh:
            fh.write(self.header.to_text())


def header_path(pool_path) -> str:
    return f"{pool_path}.header"


def read_pool(path) -> list[str]:
    with open(path) as fh:
        return [seq for _, seq in read_fasta(fh)]


def read_header(path) -> PoolHeader:
    with open(path) as fh:
        return PoolHeader.from_text(fh.read())


# --- encode -----------------------------------------------------------------


def encode_file(data: bytes, cfg: CodecConfig) -> EncodedPool:
    """chunk -> RS interleave -> CRC -> LDPC -> scramble -> Gray map -> address."""
    prof = cfg.ldpc
    u = prof.payload_bytes
    k, n = pool_size(len(data), cfg)
    padded = bytes(data) + bytes(k * u - len(data))
    block = interleave([padded[i * u : (i + 1) * u] for i in range(k)], n)
    addresses = make_addresses(cfg.pool_seed, n)
    strands = []
    for i, payload in enumerate(symbols_to_payloads(block.symbols)):
        cw = encode_payload(bytes_to_bits(payload), prof)
        strands.append(assemble_strand(i, scramble(cw, i, cfg.pool_seed), addresses[i]))
    header = PoolHeader(len(data), n, k, cfg.profile, cfg.pool_seed, cfg.strand_payload_nt)
    return EncodedPool(strands, header)


# --- decode -----------------------------------------------------------------


@dataclass
class OligoDecode:
    index: int
    status: InnerStatus
    payload: bytes | None = None
    llr: np.ndarray | None = None  # descrambled codeword-domain LLRs
    hard: np.ndarray | None = None  # initial OSD hard output
    reads: int = 0
    reads_processed: int = 0
    osd_order: int = -1
    via: str = ""  # "", "nominal", "indel", "turbo"

    @property
    def passed(self) -> bool:
        return self.status is InnerStatus.PASSED


@dataclass
class DecodeReport:
    success: bool
    md5_hex: str
    counts: dict
    codeword_success: list
    reads_processed: int
    reads_total: int = 0
    reads_assigned: int = 0
    recovered_bytes: int = 0
    L: int = 0
    osd_orders: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DecodeReport":
        return cls(**json.loads(text))


@dataclass
class DecodeResult:
    data: bytes
    report: DecodeReport
    oligos: list[OligoDecode] = field(repr=False, default_factory=list)
    outcome: RsDecodeOutcome | None = field(repr=False, default=None)


def _descramble_llr(llr: np.ndarray, index: int, seed: int) -> np.ndarray:
    return llr * (1.0 - 2.0 * scramble_stream(index, len(llr), seed))


def _finish(res: InnerDecodeResult, prof: LdpcProfile) -> bytes | None:
    return bits_to_bytes(res.payload) if res.passed else None


def _informative_fraction(llrs: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Share of unsatisfied parity checks among checks that touch no zero-LLR bit."""
    Ht = H.T.astype(np.float32)
    syn = ((llrs < 0).astype(np.float32) @ Ht).astype(np.int64) % 2
    blind = ((llrs == 0).astype(np.float32) @ Ht) > 0
    informative = (~blind).sum(axis=1)
    bad = (syn.astype(bool) & ~blind).sum(axis=1)
    return np.where(informative > 0, bad / np.maximum(informative, 1), 1.0)


@lru_cache(maxsize=16)
def _hypothesis_sources(length: int, target: int) -> np.ndarray:
    """Row maps from a posterior of ``length`` rows to ``target`` rows.

    Each output row either copies a source row or is -1 (uninformative). For
    a shorter posterior, uniform rows are inserted; for a longer one, rows are
    dropped. Up to two edits.
    """
    d = target - length
    hyps = []
    if d > 0:
        for pos in combinations(range(target), d):
            src = np.full(target, -1, dtype=np.int64)
            keep = np.setdiff1d(np.arange(target), pos)
            src[keep] = np.arange(length)
            hyps.append(src)
    elif d < 0:
        for pos in combinations(range(length), -d):
            hyps.append(np.setdiff1d(np.arange(length), pos))
    out = np.array(hyps, dtype=np.int64).reshape(-1, target)
    out.setflags(write=False)
    return out


class _PoolDecoder:
    def __init__(self, cfg: CodecConfig, header: PoolHeader):
        self.cfg = cfg
        self.header = header
        self.prof = cfg.ldpc
        self.addresses = make_addresses(header.pool_seed, header.n)
        self.assigner = ReadAssigner(self.addresses, cfg.strand_payload_nt, *cfg.hmm_rates(),
                                     min_log_odds=cfg.min_log_odds)

    def _osd(self, llr):
        return osd_decode(llr, self.prof, max_order=self.cfg.osd_order)

    def decode_oligo(self, idx: int, reads: list[str]) -> OligoDecode:
        cfg = self.cfg
        if not reads:
            return OligoDecode(idx, InnerStatus.ERASED)
        hmm = self.assigner.hmm(idx)
        fr = fuse_adaptive(reads, hmm, cfg.fusion_threshold, cfg.fusion_batch)
        llr = _descramble_llr(posteriors_to_llrs(fr.posterior), idx, self.header.pool_seed)
        res = self._osd(llr)
        out = OligoDecode(idx, res.status, _finish(res, self.prof), llr, res.hard_codeword,
                          len(reads), fr.processed, res.osd_order_used, "nominal" if res.passed else "")
        if res.passed or not cfg.indel_search:
            return out
        hit = self._indel_search(idx, hmm, reads)
        if hit is not None:
            out.status, out.payload, out.osd_order, out.via = InnerStatus.PASSED, _finish(hit, self.prof), hit.osd_order_used, "indel"
            out.reads_processed = len(reads)
        return out

    def _indel_search(self, idx: int, hmm: ProfileHmm, reads: list[str]) -> InnerDecodeResult | None:
        """Recover templates that carry a persistent payload insertion or deletion.

        The payload length offset is picked by summed read likelihood; reads
        are then fused against a payload model of that length and every way of
        restoring the nominal length (uniform rows in, rows out) is ranked by
        how many informative parity checks its hard decision violates.
        """
        B = hmm.payload_len
        offsets = [d for d in (-2, -1, 0, 1, 2) if B + d > 0]
        models = {d: hmm.with_payload_len(B + d) for d in offsets}
        ordered = sorted(reads)
        total = {d: sum(score_candidates(r, [models[d]])[0] for r in ordered) for d in offsets}
        d = max(offsets, key=lambda o: (total[o], -abs(o)))
        if d == 0:
            return None
        post = fuse([posteriors_single_read(r, models[d]) for r in ordered], B + d)
        base = posteriors_to_llrs(post).reshape(-1, 2)
        src = _hypothesis_sources(B + d, B)
        rows = np.where(src[..., None] >= 0, base[np.maximum(src, 0)], 0.0)
        sign = 1.0 - 2.0 * scramble_stream(idx, 2 * B, self.header.pool_seed)
        llrs = rows.reshape(len(src), 2 * B) * sign
        score = _informative_fraction(llrs, self.prof.H)
        for h in np.lexsort((np.arange(len(score)), score))[: self.cfg.indel_hypotheses]:
            res = self._osd(llrs[h])
            if res.passed:
                return res
        return None

    def turbo_pass(self, oligos: list[OligoDecode], outcome: RsDecodeOutcome) -> list[int]:
        return turbo_pass(oligos, outcome, self.prof, self.cfg.osd_order)


def turbo_pass(oligos: list[OligoDecode], outcome: RsDecodeOutcome, prof: LdpcProfile,
               osd_order: int = 3, max_disagree: int = TURBO_MAX_DISAGREE) -> list[int]:
    """One re-seeding iteration for CRC-failed oligos.

    Payload bits of codewords the outer decoder recovered are pinned to their
    known values. An oligo is re-decoded only when its initial hard output
    disagrees with the pinned bits in at most ``max_disagree`` places.
    Returns the indices of oligos that now pass.
    """
    ok = np.asarray(outcome.success, dtype=bool)
    if ok.all() or not ok.any():
        return []
    promoted = []
    sym_bits = 16
    for o in oligos:
        if o.passed or o.llr is None or o.hard is None:
            continue
        known = outcome.codewords[ok, o.index]  # this oligo's symbols in recovered codewords
        bits = np.unpackbits(known.astype(">u2").view(np.uint8)).reshape(len(known), sym_bits)
        rows = np.nonzero(ok)[0]
        pos = np.concatenate([prof.info_pos[r * sym_bits : (r + 1) * sym_bits] for r in rows])
        val = bits.reshape(-1)
        if np.count_nonzero(o.hard[pos] != val) > max_disagree:
            continue
        llr = o.llr.copy()
        llr[pos] = np.where(val == 0, PIN_LLR, -PIN_LLR)
        res = osd_decode(llr, prof, max_order=osd_order)
        if res.passed:
            o.status, o.payload, o.osd_order, o.via = InnerStatus.PASSED, bits_to_bytes(res.payload), res.osd_order_used, "turbo"
            promoted.append(o.index)
    return promoted


def _outer_block(oligos: list[OligoDecode], header: PoolHeader, u: int) -> OuterBlock:
    zero = bytes(u)
    payloads = [o.payload if o.passed else zero for o in oligos]
    erased = np.array([not o.passed for o in oligos], dtype=bool)
    return OuterBlock(payloads_to_symbols(payloads), header.k_rs, erased)


def decode_reads(reads: list[str], cfg: CodecConfig, header: PoolHeader) -> DecodeResult:
    """Assign, fuse, inner-decode, outer-decode. Never raises on bad data."""
    dec = _PoolDecoder(cfg, header)
    u = dec.prof.payload_bytes
    groups: dict[int, list[str]] = defaultdict(list)
    assigned = 0
    for r in reads:
        idx = dec.assigner(r) if len(r) else UNASSIGNED
        if idx != UNASSIGNED:
            groups[idx].append(r)
            assigned += 1
    oligos = [dec.decode_oligo(i, groups.get(i, [])) for i in range(header.n)]
    outcome = rs_decode_bm(_outer_block(oligos, header, u))
    promoted: list[int] = []
    if cfg.turbo and not outcome.all_ok:
        promoted = dec.turbo_pass(oligos, outcome)
        if promoted:
            outcome = rs_decode_bm(_outer_block(oligos, header, u))
    data = b"".join(symbols_to_payloads(outcome.data))[: header.L]
    success = bool(outcome.all_ok and len(data) == header.L)
    received = sum(o.passed for o in oligos)
    report = DecodeReport(
        success=success,
        md5_hex=hashlib.md5(data).hexdigest(),
        counts={"received": received, "erased": header.n - received,
                "bm_promoted": len(outcome.bm_corrected_positions), "turbo_recovered": len(promoted),
                "indel_recovered": sum(o.via == "indel" for o in oligos)},
        codeword_success=[bool(s) for s in outcome.success],
        reads_processed=sum(o.reads_processed for o in oligos),
        reads_total=len(reads),
        reads_assigned=assigned,
        recovered_bytes=len(data),
        L=header.L,
        osd_orders={str(k): v for k, v in sorted(Counter(o.osd_order for o in oligos if o.passed).items())},
    )
    return DecodeResult(data, report, oligos, outcome)


def decode_pool_reads(reads: list[str], header: PoolHeader, **overrides) -> DecodeResult:
    return decode_reads(reads, header.config(**overrides), header)


def with_parity_fraction(cfg: CodecConfig, fraction: float) -> CodecConfig:
    return replace(cfg, parity_fraction=fraction)
