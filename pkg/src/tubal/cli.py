"""Command-line entry point: ``tubal gen | approx | bench | compress | complete``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench
from .completion import (CompletionConfig, complete_iterations, gaussian_blur,
                         psnr, rel_err, tsvd_operator, upsample_mask)
from .errors import IdenticalInputs, TubalError
from .io import (RunRecord, dump_records, read_image, read_tt3d, write_image, write_records,
                 write_tt3d)
from .linalg import t_svd_truncated
from .single_pass import SketchParams, alg5_qb
from .synthetic import KINDS, SyntheticSpec, generate

log = logging.getLogger("tubal")


def _global_flags(parser, suppress):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=default(0), help="base random seed")
    parser.add_argument("--output", "-o", default=default(None),
                        help="output file (tensor, CSV or image depending on the command)")
    parser.add_argument("--trials", type=int, default=default(1), help="repetitions per setting")
    parser.add_argument("--desk", action="store_true", default=default(False),
                        help="shrink experiment sizes to desk scale")
    parser.add_argument("-v", "--verbose", action="count", default=default(0))


def _sketch_flags(p, L, K, H, rank):
    p.add_argument("--L", type=int, default=L, help="co-range sketch size")
    p.add_argument("--K", type=int, default=K, help="range sketch size")
    p.add_argument("--H", type=int, default=H, help="truncation surplus")
    p.add_argument("--rank", type=int, default=rank, help="target tubal rank R")


def build_parser():
    parser = argparse.ArgumentParser(prog="tubal", description=__doc__)
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="write a synthetic tensor as TT3D")
    p.add_argument("--kind", choices=KINDS, default="lowrank")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--rank", type=int, default=50)
    p.add_argument("--delta", type=float, default=1e-3)
    p.add_argument("--noise-ref", choices=("clean", "unit"), default="clean",
                   help="noise scaled by ||X_clean||_F (clean) or of absolute norm delta (unit)")

    p = sub.add_parser("approx", parents=[common], help="approximate a TT3D tensor")
    p.add_argument("--alg", choices=bench.ALGORITHMS, required=True)
    p.add_argument("--input", required=True)
    _sketch_flags(p, 50, 50, 45, 40)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--block", type=int, default=25)
    p.add_argument("--passes", type=int, default=None,
                   help="power iterations (alg9, alg11) or passes per block (alg10, default 4)")
    p.add_argument("--absolute", action="store_true", help="treat eps as an absolute bound")
    p.add_argument("--factors", default=None, help="prefix for factor files")

    p = sub.add_parser("bench", parents=[common], help="rerun an experiment table")
    p.add_argument("--table", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--size", type=int, action="append", default=None,
                   help="tensor size; repeat for several (overrides the defaults)")
    p.add_argument("--block", type=int, default=None, help="block size for table 1")

    p = sub.add_parser("compress", parents=[common], help="low-rank compress a PGM/PPM image")
    p.add_argument("--input", required=True)
    p.add_argument("--alg", choices=("alg5", "alg6", "alg7", "alg8", "tsvd"), default="alg7")
    _sketch_flags(p, 350, 350, 100, 30)
    p.add_argument("--csv", default=None, help="append a run record here")

    p = sub.add_parser("complete", parents=[common], help="super-resolve a PGM/PPM image")
    p.add_argument("--input", required=True)
    p.add_argument("--factor", type=int, default=4)
    p.add_argument("--alg", choices=("tsvd", "alg6", "alg7", "alg8"), default="tsvd")
    _sketch_flags(p, 80, 80, 70, 60)
    p.add_argument("--iters", type=int, default=80)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--sigma", type=float, default=0.5, help="post-filter std, 0 disables")
    p.add_argument("--init", choices=("zero", "smooth"), default="zero",
                   help="hole fill before iterating; zero-filled grid masks are a fixed point "
                        "of every low-rank operator, so only the post-filter acts on them")
    p.add_argument("--low-res", action="store_true",
                   help="input is already low resolution; otherwise it is decimated first "
                        "and used as the reference")
    p.add_argument("--csv", default=None, help="append a run record here")
    return parser


def cmd_gen(args):
    if args.output is None:
        raise ValueError("gen needs --output")
    spec = SyntheticSpec(args.kind, args.n, args.rank, args.delta, args.seed, args.noise_ref)
    write_tt3d(args.output, generate(spec))
    print(f"wrote {args.output}")


def cmd_approx(args):
    x = read_tt3d(args.input)
    passes = args.passes if args.passes is not None else (4 if args.alg == "alg10" else 1)
    s = bench.Settings(args.L, args.K, args.H, args.rank, args.eps, args.block, passes,
                       not args.absolute, args.seed)
    f, _, rec = bench.run(args.alg, x, s)
    prefix = args.factors or str(Path(args.input).with_suffix("")) + f".{args.alg}"
    for name in ("C", "U", "R", "Q", "B", "S", "V"):
        part = getattr(f, name, None)
        if isinstance(part, np.ndarray):
            write_tt3d(f"{prefix}.{name}.tt3d", part)
    out = args.output or "runs.csv"
    write_records(out, [rec], append=True)
    print(f"{rec.algorithm}: rel_err={rec.rel_err:.3e} rank={rec.est_rank} "
          f"passes={rec.pass_count} time={rec.time_s:.3f}s")
    return rec


def cmd_bench(args):
    if args.trials < 1:
        raise ValueError("--trials must be at least 1")
    if args.table == 1:
        sizes = args.size or (bench.TABLE1_DESK_SIZES if args.desk else bench.TABLE1_SIZES)
        block = args.block or (25 if args.desk else 100)
        recs = bench.table1(sizes, args.trials, args.seed, block)
    else:
        n = args.size[0] if args.size else (bench.TABLE23_DESK_SIZE if args.desk
                                            else bench.TABLE23_SIZE)
        run = bench.table2 if args.table == 2 else bench.table3
        recs = run(n, args.trials, args.seed)
    if args.output:
        write_records(args.output, recs)
    else:
        dump_records(sys.stdout, recs)
    for name, (err, t, count) in bench.summarize(recs).items():
        print(f"{name:>14}  median rel_err {err:.3e}  median time {t:.2f}s  ({count} runs)",
              file=sys.stderr)
    return recs


def _psnr_or_inf(x, y):
    try:
        return psnr(x, y)
    except IdenticalInputs:
        return float("inf")


def _sketch_operator(name, args, shape):
    n1, n2 = shape[:2]
    R = min(args.rank, n1, n2)
    L = min(args.L, n1)
    K = min(args.K, n2, L)
    p = SketchParams(L, K, min(args.H, K), R, args.seed)
    return lambda x: bench.SKETCHED[name](x, p).reconstruct(), p


def cmd_compress(args):
    img = read_image(args.input)
    n1, n2, _ = img.shape
    if args.alg == "tsvd":
        approx = t_svd_truncated(img, min(args.rank, n1, n2)).reconstruct()
        rec = RunRecord("tsvd", n1, rank=min(args.rank, n1, n2), seed=args.seed)
    elif args.alg == "alg5":
        L, K = min(args.L, n1), min(args.K, n2)
        approx = alg5_qb(img, L, K, args.seed).reconstruct()
        rec = RunRecord("alg5", n1, L=L, K=K, seed=args.seed)
    else:
        op, p = _sketch_operator(args.alg, args, img.shape)
        approx = op(img)
        rec = RunRecord(args.alg, n1, L=p.L, K=p.K, H=p.H, rank=p.R, seed=args.seed)
    approx = np.clip(approx, 0, 255)
    rec.rel_err = rel_err(img, approx)
    rec.pass_count = 1
    print(f"{args.alg}: PSNR {_psnr_or_inf(img, approx):.2f} dB, rel_err {rec.rel_err:.3e}")
    if args.output:
        write_image(args.output, approx)
    if args.csv:
        write_records(args.csv, [rec], append=True)
    return rec


def cmd_complete(args):
    img = read_image(args.input)
    f = args.factor
    if f < 1:
        raise ValueError("--factor must be at least 1")
    if args.low_res:
        reference, low = None, img
    else:
        h, w = (img.shape[0] // f) * f, (img.shape[1] // f) * f
        reference = img[:h, :w, :]
        low = reference[::f, ::f, :]
    m = upsample_mask(low, f)
    if args.alg == "tsvd":
        op = tsvd_operator(args.rank)
    else:
        op, _ = _sketch_operator(args.alg, args, m.data.shape)
    cfg = CompletionConfig(op, args.iters, args.tol, args.sigma, args.init, float(f))
    raw, iters = complete_iterations(m, cfg)
    raw = np.clip(raw, 0, 255)
    out = np.clip(gaussian_blur(raw, args.sigma), 0, 255)
    rec = RunRecord(f"complete-{args.alg}", m.data.shape[0], rank=args.rank, seed=args.seed)
    msg = f"{iters} iterations"
    if reference is not None:
        rec.rel_err = rel_err(reference, out)
        msg += (f", PSNR {_psnr_or_inf(reference, raw):.2f} dB before filter, "
                f"{_psnr_or_inf(reference, out):.2f} dB after")
    print(msg)
    if args.output:
        write_image(args.output, out)
    if args.csv:
        write_records(args.csv, [rec], append=True)
    return rec


COMMANDS = {"gen": cmd_gen, "approx": cmd_approx, "bench": cmd_bench,
            "compress": cmd_compress, "complete": cmd_complete}


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (TubalError, ValueError, OSError) as exc:
        print(f"tubal {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
