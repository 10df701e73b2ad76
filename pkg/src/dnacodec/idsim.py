"""Three-stage storage channel simulator.

Stage 1 corrupts each reference once into a persistent template (synthesis),
stage 2 draws lognormal-weighted Poisson copy numbers (dropout when zero),
stage 3 samples reads from the surviving molecules and corrupts each read
independently (sequencing).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .dna_map import decode_bases, encode_bases

STAGE_SYNTH = 1
STAGE_COPIES = 2
STAGE_PICK = 3
STAGE_READ = 4


@dataclass(frozen=True)
class Rates:
    p_sub: float = 0.0
    p_del: float = 0.0
    p_ins: float = 0.0

    def __post_init__(self):
        for v in (self.p_sub, self.p_del, self.p_ins):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"rate {v} outside [0, 1]")


@dataclass(frozen=True)
class ChannelProfile:
    name: str
    synth: Rates
    seq: Rates
    sigma: float = 0.3
    mu: float = 0.0

    @property
    def combined(self) -> Rates:
        """Per-base rates seen by a read (synthesis plus sequencing)."""
        return Rates(self.synth.p_sub + self.seq.p_sub, self.synth.p_del + self.seq.p_del,
                     self.synth.p_ins + self.seq.p_ins)


HIFI = ChannelProfile("hifi", Rates(5e-4, 2e-4, 1e-4), Rates(8e-4, 1e-4, 5e-5))
LOFI = ChannelProfile("lofi", Rates(5e-3, 5e-3, 1e-3), Rates(3e-3, 5e-4, 2e-4))
NOISELESS = ChannelProfile("noiseless", Rates(), Rates(), sigma=0.0)
PROFILES = {p.name: p for p in (HIFI, LOFI, NOISELESS)}


def get_profile(name: str) -> ChannelProfile:
    try:
        return PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown channel profile {name!r}") from None


def stream(seed: int, stage: int, item: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by (seed, stage, item)."""
    return np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), (stage << 48) | item]))


def corrupt_codes(codes: np.ndarray, rates: Rates, rng: np.random.Generator) -> np.ndarray:
    n = len(codes)
    u = rng.random((3, n))
    keep = u[0] >= rates.p_del
    sub = u[1] < rates.p_sub
    out = codes.astype(np.uint8).copy()
    if sub.any():
        out[sub] = (out[sub] + rng.integers(1, 4, size=int(sub.sum()))) % 4
    ins = rng.random(n + 1) < rates.p_ins
    if not ins.any():
        return out[keep]
    ins_bases = rng.integers(0, 4, size=int(ins.sum()), dtype=np.uint8)
    parts = []
    k = 0
    for i in range(n + 1):
        if ins[i]:
            parts.append(ins_bases[k : k + 1])
            k += 1
        if i < n and keep[i]:
            parts.append(out[i : i + 1])
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.uint8)


def corrupt(seq: str, rates: Rates, rng: np.random.Generator) -> str:
    """Per base: delete w.p. p_del, else substitute w.p. p_sub; a uniform base is
    inserted before each position and at the end w.p. p_ins."""
    if not seq:
        codes = np.zeros(0, dtype=np.uint8)
    else:
        codes = encode_bases(seq)
    return decode_bases(corrupt_codes(codes, rates, rng))


def synthesize(pool: list[str], profile: ChannelProfile, seed: int) -> list[str]:
    """One persistent template per reference."""
    return [corrupt(s, profile.synth, stream(seed, STAGE_SYNTH, i)) for i, s in enumerate(pool)]


def sample_copies(n_templates: int, r: float, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Copy counts c_i ~ Poisson(r w_i / mean(w)), w_i ~ LogNormal(0, sigma)."""
    if r <= 0:
        raise ValueError("physical redundancy must be positive")
    if n_templates == 0:
        return np.zeros(0, dtype=np.int64)
    w = rng.lognormal(0.0, sigma, n_templates) if sigma > 0 else np.ones(n_templates)
    return rng.poisson(r * w / w.mean()).astype(np.int64)


def sequence(templates: list[str], copies: np.ndarray, n_references: int, sd: float,
             profile: ChannelProfile, seed: int) -> tuple[list[str], np.ndarray]:
    """round(sd * n_references) reads drawn with replacement, weighted by copy count.

    Returns (reads, source template index per read), ordered by source.
    """
    if sd <= 0:
        raise ValueError("sequencing depth must be positive")
    total = int(copies.sum())
    n_reads = int(round(sd * n_references))
    if total == 0 or n_reads == 0:
        return [], np.zeros(0, dtype=np.int64)
    pick = stream(seed, STAGE_PICK)
    counts = pick.multinomial(n_reads, copies / total)
    src = np.repeat(np.arange(len(copies)), counts)
    reads = [corrupt(templates[t], profile.seq, stream(seed, STAGE_READ, j)) for j, t in enumerate(src)]
    return reads, src


@dataclass
class ChannelRun:
    profile: str
    r: float
    sd: float
    seed: int
    n_references: int
    survivors: int
    reads: list[str] = field(repr=False)
    sources: np.ndarray = field(repr=False)
    copies: np.ndarray = field(repr=False)

    @property
    def reads_emitted(self) -> int:
        return len(self.reads)

    def sidecar(self) -> dict:
        return {"profile": self.profile, "r": self.r, "sd": self.sd, "seed": self.seed,
                "n_references": self.n_references, "survivors": self.survivors,
                "reads": self.reads_emitted}

    def write_sidecar(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.sidecar(), fh, indent=2, sort_keys=True)


def simulate(pool: list[str], profile: ChannelProfile, r: float, sd: float, seed: int) -> ChannelRun:
    templates = synthesize(pool, profile, seed)
    copies = sample_copies(len(pool), r, profile.sigma, stream(seed, STAGE_COPIES))
    reads, src = sequence(templates, copies, len(pool), sd, profile, seed)
    return ChannelRun(profile.name, r, sd, seed, len(pool), int(np.count_nonzero(copies)), reads, src, copies)


def profile_dict(profile: ChannelProfile) -> dict:
    return asdict(profile)
