"""Command-line entry point: encode, simulate, decode, bench, report."""

from __future__ import annotations

import argparse
import logging
import sys

from . import bench
from .codec import CodecConfig, decode_reads, encode_file, header_path, read_header, read_pool
from .dna_map import ADDRESS_NT, read_fasta, write_reads
from .idsim import get_profile, simulate


def _cmd_encode(a) -> int:
    with open(a.in_path, "rb") as fh:
        data = fh.read()
    cfg = CodecConfig(profile=a.profile, r=a.r, pi=a.pi, safety=a.safety, pool_seed=a.seed,
                      strand_payload_nt=a.strand_nt - ADDRESS_NT, parity_fraction=a.parity_fraction)
    pool = encode_file(data, cfg)
    pool.write(a.out)
    h = pool.header
    print(f"encoded {h.L} bytes into {h.n} strands (k_rs={h.k_rs}); header at {header_path(a.out)}")
    return 0


def _cmd_simulate(a) -> int:
    pool = read_pool(a.pool)
    run = simulate(pool, get_profile(a.profile), a.r, a.sd, a.seed)
    with open(a.out, "w") as fh:
        write_reads(fh, run.reads)
    run.write_sidecar(f"{a.out}.json")
    print(f"{run.reads_emitted} reads from {run.survivors}/{len(pool)} surviving templates")
    return 0


def _cmd_decode(a) -> int:
    header = read_header(a.header)
    with open(a.reads) as fh:
        reads = [seq for _, seq in read_fasta(fh)]
    res = decode_reads(reads, header.config(), header)
    with open(a.out, "wb") as fh:
        fh.write(res.data)
    if a.report:
        with open(a.report, "w") as fh:
            fh.write(res.report.to_json() + "\n")
    c = res.report.counts
    print(f"success={res.report.success} md5={res.report.md5_hex} received={c['received']} erased={c['erased']}")
    return 0 if res.report.success else 1


def _cmd_bench(a) -> int:
    kind = bench.KIND_ALIASES.get(a.campaign, a.campaign)
    campaign = bench.Campaign(kind, bench.default_cells(kind, a.full), a.trials, a.seed_base)

    def progress(res):
        print(f"{res.cell.profile} r={res.cell.r_channel} sd={res.cell.sd} L={res.cell.strand_nt}: "
              f"{res.successes}/{res.trials}", flush=True)

    results, cliffs = bench.run_campaign(campaign, progress)
    bench.emit_reports(campaign, results, a.out, cliffs)
    if kind == "longevity":
        for c in cliffs:
            for r in c.cells:
                progress(r)
            print(f"r_initial={c.r_initial} cliff={c.r_cliff} years={c.years}")
    return 0


def _cmd_report(a) -> int:
    rows = bench.report_csv(a.in_dir, a.csv)
    print(f"wrote {rows} rows to {a.csv}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dnacodec", description="Soft-decision DNA storage codec")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("encode", help="encode a file into a strand pool")
    e.add_argument("--in", dest="in_path", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--profile", choices=["hifi", "lofi"], required=True)
    e.add_argument("--r", type=float, required=True)
    e.add_argument("--pi", type=float)
    e.add_argument("--safety", type=float, default=1.08)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--strand-nt", type=int, default=ADDRESS_NT + 126)
    e.add_argument("--parity-fraction", type=float)
    e.set_defaults(func=_cmd_encode)

    s = sub.add_parser("simulate", help="pass a pool through the channel simulator")
    s.add_argument("--pool", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--profile", choices=["hifi", "lofi"], required=True)
    s.add_argument("--r", type=float, required=True)
    s.add_argument("--sd", type=float, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.set_defaults(func=_cmd_simulate)

    d = sub.add_parser("decode", help="decode reads back into the file")
    d.add_argument("--reads", required=True)
    d.add_argument("--header", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--report")
    d.set_defaults(func=_cmd_decode)

    b = sub.add_parser("bench", help="run a benchmark campaign")
    b.add_argument("--campaign", choices=["native", "matched", "longevity", "length"], required=True)
    b.add_argument("--trials", type=int, default=30)
    b.add_argument("--seed-base", type=int, default=0)
    b.add_argument("--out", required=True)
    b.add_argument("--full", action="store_true", help="run the full grid instead of the acceptance subset")
    b.set_defaults(func=_cmd_bench)

    r = sub.add_parser("report", help="flatten campaign reports into one CSV")
    r.add_argument("--in", dest="in_dir", required=True)
    r.add_argument("--csv", required=True)
    r.set_defaults(func=_cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
