"""Bit/nucleotide mapping, strand assembly and address generation."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, TextIO

import numpy as np

BASES = "ACGT"
# Gray table: 00->A, 01->C, 11->G, 10->T
PAIR_TO_BASE = {(0, 0): "A", (0, 1): "C", (1, 1): "G", (1, 0): "T"}
BASE_TO_PAIR = {b: p for p, b in PAIR_TO_BASE.items()}
# bit pair of each base index in BASES order
BASE_BITS = np.array([BASE_TO_PAIR[b] for b in BASES], dtype=np.uint8)

ADDRESS_NT = 14
MIN_ADDRESS_DISTANCE = 4

_CODE = np.full(256, 255, dtype=np.uint8)
for _i, _b in enumerate(BASES):
    _CODE[ord(_b)] = _i
_PAIR_INDEX = np.array([BASES.index(PAIR_TO_BASE[(a, b)]) for a in (0, 1) for b in (0, 1)], dtype=np.uint8)


def encode_bases(seq: str) -> np.ndarray:
    """Base string to uint8 codes 0..3 (A, C, G, T)."""
    codes = _CODE[np.frombuffer(seq.encode("ascii"), dtype=np.uint8)]
    if np.any(codes == 255):
        raise ValueError("sequence contains characters outside ACGT")
    return codes


def decode_bases(codes) -> str:
    return np.asarray(np.frombuffer(b"ACGT", dtype=np.uint8)[np.asarray(codes)]).tobytes().decode()


def bits_to_bases(bits) -> str:
    bits = np.asarray(bits, dtype=np.uint8)
    if len(bits) % 2:
        raise ValueError("bit string length must be even")
    pairs = bits.reshape(-1, 2)
    return decode_bases(_PAIR_INDEX[pairs[:, 0] * 2 + pairs[:, 1]])


def bases_to_bits(seq: str) -> np.ndarray:
    return BASE_BITS[encode_bases(seq)].reshape(-1)


# --- addresses --------------------------------------------------------------


def _blocks(length: int, parts: int) -> list[tuple[int, int]]:
    edges = np.linspace(0, length, parts + 1).round().astype(int)
    return list(zip(edges[:-1], edges[1:]))


@lru_cache(maxsize=8)
def _address_table(pool_seed: int, count: int) -> np.ndarray:
    """First ``count`` addresses of the pool, as a (count, 14) code array.

    Draws are sequential from a seed-keyed stream and rejected when within
    Hamming distance < 4 of an earlier address. By pigeonhole, two 14-mers at
    distance <= 3 agree exactly on at least one of four blocks, so candidate
    neighbours come from per-block hash buckets.
    """
    if count > 65536:
        raise ValueError("address space request exceeds 65536 strands")
    rng = np.random.Generator(np.random.Philox(key=[pool_seed & (2**64 - 1), 0xADD2]))
    blocks = _blocks(ADDRESS_NT, MIN_ADDRESS_DISTANCE)
    buckets: list[dict[bytes, list[int]]] = [{} for _ in blocks]
    out = np.zeros((count, ADDRESS_NT), dtype=np.uint8)
    i = 0
    tries = 0
    while i < count:
        batch = rng.integers(0, 4, size=(256, ADDRESS_NT), dtype=np.uint8)
        for cand in batch:
            tries += 1
            if tries > 1000 * (count + 10):
                raise RuntimeError("address space exhausted")
            keys = [cand[a:b].tobytes() for a, b in blocks]
            near = {j for bk, key in zip(buckets, keys) for j in bk.get(key, ())}
            if near and (np.count_nonzero(out[list(near)] != cand, axis=1) < MIN_ADDRESS_DISTANCE).any():
                continue
            out[i] = cand
            for bk, key in zip(buckets, keys):
                bk.setdefault(key, []).append(i)
            i += 1
            if i == count:
                break
    return out


def make_addresses(pool_seed: int, count: int) -> list[str]:
    # round the table size up so nearby pool sizes share one cached table
    size = max(count, 1)
    size = 1 << (size - 1).bit_length()
    table = _address_table(pool_seed, min(size, 65536))
    return [decode_bases(row) for row in table[:count]]


def make_address(pool_seed: int, index: int) -> str:
    return make_addresses(pool_seed, index + 1)[index]


# --- strands ----------------------------------------------------------------


@dataclass(frozen=True)
class Strand:
    index: int
    address: str
    payload: str

    @property
    def sequence(self) -> str:
        return self.address + self.payload

    def __len__(self) -> int:
        return len(self.address) + len(self.payload)


def assemble_strand(index: int, codeword_bits, address: str) -> Strand:
    bits = np.asarray(codeword_bits, dtype=np.uint8)
    if len(bits) % 2:
        raise ValueError("codeword length must be even")
    return Strand(index, address, bits_to_bases(bits))


def disassemble_strand(seq: str, payload_nt: int, address_nt: int = ADDRESS_NT) -> np.ndarray:
    if len(seq) != address_nt + payload_nt:
        raise ValueError(f"strand length {len(seq)} != {address_nt + payload_nt}")
    return bases_to_bits(seq[address_nt:])


# --- FASTA-like I/O -----------------------------------------------------------


def write_fasta(fh: TextIO, records: Iterable[tuple[str, str]]) -> None:
    for header, seq in records:
        fh.write(f">{header}\n{seq}\n")


def read_fasta(fh: TextIO) -> list[tuple[str, str]]:
    out: list[tuple[str, str]] = []
    header = None
    chunks: list[str] = []
    for line in fh:
        line = line.strip()
        if not line:
            continue
        if line.startswith(">"):
            if header is not None:
                out.append((header, "".join(chunks)))
            header, chunks = line[1:], []
        else:
            chunks.append(line)
    if header is not None:
        out.append((header, "".join(chunks)))
    return out


def write_pool(fh: TextIO, strands: Iterable[Strand]) -> None:
    write_fasta(fh, ((f"idx={s.index}", s.sequence) for s in strands))


def write_reads(fh: TextIO, reads: Iterable[str]) -> None:
    write_fasta(fh, ((f"read={j}", r) for j, r in enumerate(reads)))
