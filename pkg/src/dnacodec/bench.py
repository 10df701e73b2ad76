"""Seeded benchmark campaigns, decoding-cliff search and report emission."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .analytics import alphabet_ceiling, density, longevity_years, DEFAULT_LONGEVITY
from .codec import CodecConfig, EncodedPool, decode_reads, encode_file, pool_size
from .dna_map import ADDRESS_NT
from .idsim import get_profile, simulate, stream

log = logging.getLogger(__name__)

CANONICAL_L = 19456
CLIFF_FRACTION = 29 / 30
KINDS = ("native", "matched_parity", "longevity", "length_scaling")
KIND_ALIASES = {"matched": "matched_parity", "length": "length_scaling"}
DEFAULT_SD = {"hifi": 2.0, "lofi": 10.0}
LONGEVITY_SD = 10.0
LONGEVITY_GRID = (5.0, 4.0, 3.5, 3.25, 3.0, 2.75)


def make_input(L: int = CANONICAL_L, seed: int = 0) -> bytes:
    """Deterministic pseudo-random file contents."""
    return stream(seed, 0xF11E).integers(0, 256, L, dtype=np.uint8).tobytes()


def md5_hex(data: bytes) -> str:
    return hashlib.md5(data).hexdigest()


@dataclass(frozen=True)
class Cell:
    profile: str = "hifi"
    r: float = 1.0  # encode-time redundancy (r_initial for longevity)
    sd: float = 2.0
    strand_nt: int = ADDRESS_NT + 126
    parity_fraction: float | None = None
    channel_r: float | None = None  # channel redundancy if different from r
    channel: str | None = None  # simulator profile if different from profile
    withheld_fraction: float = 0.0  # share of references whose reads are dropped

    @property
    def r_channel(self) -> float:
        return self.r if self.channel_r is None else self.channel_r

    def config(self, pool_seed: int = 0) -> CodecConfig:
        return CodecConfig(profile=self.profile, strand_payload_nt=self.strand_nt - ADDRESS_NT, r=self.r,
                           parity_fraction=self.parity_fraction, pool_seed=pool_seed)


@dataclass
class Campaign:
    kind: str
    cells: list[Cell]
    trials: int = 30
    seed_base: int = 0
    L: int = CANONICAL_L
    input_seed: int = 0

    def __post_init__(self):
        self.kind = KIND_ALIASES.get(self.kind, self.kind)
        if self.kind not in KINDS:
            raise ValueError(f"unknown campaign kind {self.kind!r}")

    def trial_seed(self, t: int) -> int:
        return self.seed_base + t

    @property
    def min_successes(self) -> int:
        return math.ceil(CLIFF_FRACTION * self.trials - 1e-9)


@dataclass
class CellResult:
    cell: Cell
    successes: int
    trials: int
    n: int
    k_rs: int
    density: float | None
    mean_runtime: float
    outcomes: list[bool] = field(default_factory=list)
    input_md5: str = ""

    def to_dict(self) -> dict:
        # runtime is kept out of the report so reruns are byte-identical
        return {"params": asdict(self.cell), "successes": self.successes, "trials": self.trials,
                "n": self.n, "k_rs": self.k_rs, "density": self.density, "outcomes": self.outcomes,
                "input_md5": self.input_md5}


def _withheld(n: int, fraction: float, seed: int) -> np.ndarray:
    count = int(round(fraction * n))
    return stream(seed, 0x57E1).permutation(n)[:count]


def run_trial(pool: EncodedPool, cfg: CodecConfig, cell: Cell, data: bytes, seed: int) -> bool:
    """Simulate one channel realisation and decode; any exception is a failure."""
    try:
        channel = get_profile(cell.channel or cell.profile)
        run = simulate(pool.sequences, channel, cell.r_channel, cell.sd, seed)
        reads = run.reads
        if cell.withheld_fraction > 0:
            drop = np.zeros(pool.header.n, dtype=bool)
            drop[_withheld(pool.header.n, cell.withheld_fraction, seed)] = True
            reads = [r for r, s in zip(reads, run.sources) if not drop[s]]
        res = decode_reads(reads, cfg, pool.header)
        return bool(res.report.success and res.data == data)
    except Exception:  # a crashed trial counts as a failed trial
        log.exception("trial failed with an exception (seed %d)", seed)
        return False


def run_cell(cell: Cell, campaign: Campaign, data: bytes | None = None) -> CellResult:
    """Encode once, then run every seeded trial through channel and decoder.

    Encoding is a pure function of (input, config), so a single encode per cell
    is equivalent to re-encoding per trial.
    """
    data = make_input(campaign.L, campaign.input_seed) if data is None else data
    cfg = cell.config()
    pool = encode_file(data, cfg)
    outcomes, times = [], []
    for t in range(campaign.trials):
        t0 = time.perf_counter()
        outcomes.append(run_trial(pool, cfg, cell, data, campaign.trial_seed(t)))
        times.append(time.perf_counter() - t0)
    successes = sum(outcomes)
    dens = None
    if campaign.kind != "longevity" and successes == campaign.trials:
        dens = density(len(data), pool.header.n, cfg.strand_payload_nt, cell.r_channel)
    return CellResult(cell, successes, campaign.trials, pool.header.n, pool.header.k_rs, dens,
                      float(np.mean(times)) if times else 0.0, outcomes, md5_hex(data))


@dataclass
class CliffResult:
    r_initial: float
    profile: str
    r_cliff: float | None
    cells: list[CellResult]

    @property
    def years(self) -> float | None:
        if self.r_cliff is None or self.r_cliff >= self.r_initial:
            return None
        return longevity_years(self.r_initial, self.r_cliff, DEFAULT_LONGEVITY)


def find_cliff(r_initial: float, profile: str, grid=LONGEVITY_GRID, trials: int = 30, seed_base: int = 0,
               sd: float = LONGEVITY_SD, L: int = CANONICAL_L, channel: str | None = None,
               stop_at_failure: bool = True) -> CliffResult:
    """Sweep channel redundancy downward over one pool encoded at r_initial.

    The cliff is the lowest grid value reached before the first cell that
    misses the 29-of-30 criterion (scaled to the trial count).
    """
    grid = list(grid)
    if any(a < b for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be sorted in descending order")
    campaign = Campaign("longevity", [], trials, seed_base, L)
    data = make_input(L, campaign.input_seed)
    cells: list[CellResult] = []
    cliff = None
    for rc in grid:
        cell = Cell(profile, r_initial, sd, channel_r=rc, channel=channel)
        res = run_cell(cell, campaign, data)
        cells.append(res)
        if res.successes >= campaign.min_successes:
            cliff = rc
        elif stop_at_failure:
            break
    return CliffResult(r_initial, profile, cliff, cells)


def parity_override(cfg: CodecConfig, parity_fraction: float) -> CodecConfig:
    """Size the pool as n = ceil(k_rs / (1 - fraction)) instead of the pi/safety rule."""
    if not 0 <= parity_fraction < 1:
        raise ValueError("parity fraction must lie in [0, 1)")
    return replace(cfg, parity_fraction=parity_fraction)


def auto_parity_fraction(cfg: CodecConfig, L: int = CANONICAL_L) -> float:
    k, n = pool_size(L, replace(cfg, parity_fraction=None))
    return (n - k) / n


# --- campaign grids -----------------------------------------------------------


def default_cells(kind: str, full: bool = False) -> list[Cell]:
    kind = KIND_ALIASES.get(kind, kind)
    if kind == "native":
        hifi_r = (0.2, 0.3, 0.5, 1.0, 2.0, 5.0) if full else (0.5,)
        lofi_r = (2.0, 3.0, 5.0, 10.0) if full else (5.0,)
        return ([Cell("hifi", r, DEFAULT_SD["hifi"]) for r in hifi_r]
                + [Cell("lofi", r, DEFAULT_SD["lofi"]) for r in lofi_r])
    if kind == "matched_parity":
        cells = []
        for r in ((0.5, 1.0, 2.0) if full else (1.0,)):
            auto = auto_parity_fraction(CodecConfig("hifi", r=r))
            for f in (auto - 0.05, auto, auto + 0.05):
                cells.append(Cell("hifi", r, DEFAULT_SD["hifi"], parity_fraction=round(f, 4)))
        return cells
    if kind == "length_scaling":
        lengths = (100, 140, 200, 300) if full else (100, 140, 200)
        return [Cell("hifi", 1.0, DEFAULT_SD["hifi"], strand_nt=L) for L in lengths]
    if kind == "longevity":
        return [Cell("hifi", 5.0, LONGEVITY_SD, channel_r=rc) for rc in LONGEVITY_GRID]
    raise ValueError(f"unknown campaign kind {kind!r}")


def run_campaign(campaign: Campaign, progress=None) -> tuple[list[CellResult], list[CliffResult]]:
    data = make_input(campaign.L, campaign.input_seed)
    if campaign.kind == "longevity":
        by_init: dict[tuple, list[float]] = {}
        for c in campaign.cells:
            by_init.setdefault((c.profile, c.r, c.sd), []).append(c.r_channel)
        cliffs = []
        for (profile, r0, sd), grid in by_init.items():
            cliffs.append(find_cliff(r0, profile, sorted(grid, reverse=True), campaign.trials,
                                     campaign.seed_base, sd, campaign.L, stop_at_failure=False))
        return [c for cl in cliffs for c in cl.cells], cliffs
    results = []
    for cell in campaign.cells:
        res = run_cell(cell, campaign, data)
        if progress:
            progress(res)
        results.append(res)
    return results, []


# --- reports ------------------------------------------------------------------

CSV_FIELDS = ["campaign", "profile", "r", "channel_r", "sd", "strand_nt", "parity_fraction", "n", "k_rs",
              "successes", "trials", "density", "ceiling", "fraction"]


def _csv_rows(kind: str, cells: list[dict]) -> list[dict]:
    rows = []
    for c in cells:
        p = c["params"]
        rc = p["channel_r"] if p.get("channel_r") is not None else p["r"]
        ceil_ = alphabet_ceiling(rc)
        d = c.get("density")
        rows.append({
            "campaign": kind, "profile": p["profile"], "r": p["r"], "channel_r": rc, "sd": p["sd"],
            "strand_nt": p["strand_nt"], "parity_fraction": "" if p.get("parity_fraction") is None else p["parity_fraction"],
            "n": c["n"], "k_rs": c["k_rs"], "successes": c["successes"], "trials": c["trials"],
            "density": "" if d is None else f"{d:.4f}", "ceiling": f"{ceil_:.4f}",
            "fraction": "" if d is None else f"{d / ceil_:.4f}",
        })
    return rows


def write_csv(path, rows: list[dict]) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    except OSError as e:
        raise OSError(f"cannot write CSV report {path}: {e}") from e


def emit_reports(campaign: Campaign, results: list[CellResult], out_dir, cliffs: list[CliffResult] = ()) -> dict:
    """Write <kind>.json, <kind>.csv and a separate timing file; returns the JSON document."""
    doc = {"campaign": campaign.kind, "trials": campaign.trials, "seed_base": campaign.seed_base,
           "L": campaign.L, "cells": [r.to_dict() for r in results]}
    if campaign.kind == "longevity":
        doc["longevity"] = [
            {"profile": c.profile, "r_initial": c.r_initial, "r_cliff": c.r_cliff, "years": c.years,
             "lambda_per_year": DEFAULT_LONGEVITY.lambda_strand}
            for c in cliffs
        ]
    os.makedirs(out_dir, exist_ok=True)
    base = os.path.join(out_dir, campaign.kind)
    try:
        with open(base + ".json", "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        with open(base + ".timing.json", "w") as fh:
            json.dump([{"params": asdict(r.cell), "mean_runtime_s": r.mean_runtime} for r in results], fh, indent=2)
    except OSError as e:
        raise OSError(f"cannot write report under {out_dir}: {e}") from e
    write_csv(base + ".csv", _csv_rows(campaign.kind, doc["cells"]))
    return doc


def collect_reports(in_dir) -> list[dict]:
    docs = []
    for name in sorted(os.listdir(in_dir)):
        if name.endswith(".json") and not name.endswith(".timing.json"):
            with open(os.path.join(in_dir, name)) as fh:
                doc = json.load(fh)
            if isinstance(doc, dict) and "campaign" in doc and "cells" in doc:
                docs.append(doc)
    return docs


def report_csv(in_dir, csv_path) -> int:
    rows = [row for doc in collect_reports(in_dir) for row in _csv_rows(doc["campaign"], doc["cells"])]
    write_csv(csv_path, rows)
    return len(rows)
