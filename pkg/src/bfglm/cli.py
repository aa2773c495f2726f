"""Command-line interface: solve, solve-split, gen, verify, bench."""

from __future__ import annotations

import argparse
import sys
import time

from .errors import BfglmError, FormatError, UnluckyRandomness
from .field import Field, Rng
from .param import Instance, SolveStats, ZeroDimParam, solve
from .splitting import solve_split
from .toolkit import (
    generate_instance,
    parse_points_file,
    read_instance,
    read_param,
    verify_solution,
    write_instance,
    write_param,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_UNLUCKY = 3
EXIT_VERIFY = 4


def _print_stats(stats: SolveStats) -> None:
    frac = stats.krylov_seconds / stats.total_seconds if stats.total_seconds else 0.0
    print(f"retries: {stats.retries}")
    print(f"time: {stats.total_seconds:.3f}s (krylov fraction {frac:.2f})")
    for k, v in stats.extras.items():
        print(f"{k}: {v}")


def _reorder_instance(inst: Instance, x1_index: int):
    order = [x1_index] + [i for i in range(inst.n) if i != x1_index]
    mats = [inst.mats[i] for i in order]
    return Instance(field=inst.field, n=inst.n, D=inst.D, mats=mats), order


def _restore_order(param: ZeroDimParam, order) -> ZeroDimParam:
    n = len(order)
    V = [None] * n
    t = [0] * n
    for j, orig in enumerate(order):
        V[orig] = param.V[j]
        t[orig] = param.t[j]
    return ZeroDimParam(Q=param.Q, V=V, t=t)


def cmd_solve(args, split: bool) -> int:
    inst, _ = read_instance(args.infile)
    rng = Rng(args.seed)
    stats = SolveStats()
    try:
        if split:
            order = None
            work = inst
            if args.x1_index:
                if not 0 <= args.x1_index < inst.n:
                    print("x1-index out of range", file=sys.stderr)
                    return EXIT_USAGE
                work, order = _reorder_instance(inst, args.x1_index)
            param = solve_split(work, args.m, rng, workers=args.workers, retries=args.retries, stats=stats)
            if order:
                param = _restore_order(param, order)
        else:
            param = solve(inst, args.m, rng, workers=args.workers, retries=args.retries, stats=stats)
    except UnluckyRandomness as exc:
        print(f"no generic draw found: {exc}", file=sys.stderr)
        return EXIT_UNLUCKY
    if args.out:
        write_param(param, inst.field, args.out)
        print(f"wrote {args.out} (deg Q = {param.Q.degree})")
    else:
        write_param(param, inst.field, "/dev/stdout")
    _print_stats(stats)
    return EXIT_OK


def cmd_gen(args) -> int:
    field = Field(args.p)
    specs = parse_points_file(args.points, args.n, field)
    rng = Rng(args.seed)
    inst, truth = generate_instance(field, args.n, specs, rng, mix=args.mix)
    write_instance(inst, args.out, truth if args.truth else None)
    print(f"wrote {args.out}: p={field.p} n={inst.n} D={inst.D} "
          f"nnz={[M.nnz for M in inst.mats]}")
    return EXIT_OK


def cmd_verify(args) -> int:
    inst, truth = read_instance(args.infile)
    param, pfield = read_param(args.param)
    if pfield.p != inst.field.p:
        print("modulus mismatch between instance and parametrization", file=sys.stderr)
        return EXIT_VERIFY
    report = verify_solution(inst, param, truth if args.truth else None)
    for c in report["checks"]:
        mark = "ok" if c["ok"] else "FAIL"
        detail = f" ({c['detail']})" if c["detail"] else ""
        print(f"[{mark}] {c['name']}{detail}")
    print(f"status: {report['status']}")
    return EXIT_OK if report["pass"] else EXIT_VERIFY


def cmd_bench(args) -> int:
    field = Field(args.p)
    rng = Rng(args.seed)
    from .toolkit import PointSpec

    pts = set()
    while len(pts) < args.D:
        pts.add(tuple(rng.element(field) for _ in range(args.n)))
    specs = [PointSpec(coords=c) for c in sorted(pts)]
    inst, _ = generate_instance(field, args.n, specs, rng.child(), mix=args.mix)
    from .sparse import combine_matrices

    t_probe = [rng.nonzero_element(field) for _ in range(args.n)]
    M = combine_matrices(t_probe, inst.mats)
    print(f"D={inst.D} n={args.n} density(M_1)={inst.mats[0].density:.4f} "
          f"density(M)={M.density:.4f}")
    print(f"{'algo':12s} {'m':>3s} {'time(s)':>9s} {'krylov':>7s}")
    rows = {}
    for m in args.m:
        stats = SolveStats()
        t0 = time.perf_counter()
        solve(inst, m, Rng(args.seed + m), workers=args.workers, stats=stats)
        wall = time.perf_counter() - t0
        frac = stats.krylov_seconds / stats.total_seconds if stats.total_seconds else 0
        rows[("plain", m)] = wall
        print(f"{'plain':12s} {m:3d} {wall:9.3f} {frac:7.2f}")
        stats = SolveStats()
        t0 = time.perf_counter()
        solve_split(inst, m, Rng(args.seed + m), workers=args.workers, stats=stats)
        wall = time.perf_counter() - t0
        frac = stats.krylov_seconds / stats.total_seconds if stats.total_seconds else 0
        rows[("split", m)] = wall
        da = stats.extras.get("D_A", "?")
        print(f"{'split':12s} {m:3d} {wall:9.3f} {frac:7.2f}  D_A={da}")
        ratio = rows[("split", m)] / rows[("plain", m)]
        print(f"{'ratio':12s} {m:3d} {ratio:9.3f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bfglm")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(s):
        s.add_argument("--in", dest="infile", required=True)
        s.add_argument("--out", default=None)
        s.add_argument("--m", type=int, default=1)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--workers", type=int, default=1)
        s.add_argument("--retries", type=int, default=3)

    s = sub.add_parser("solve", help="block parametrization")
    common(s)
    s = sub.add_parser("solve-split", help="splitting variant")
    common(s)
    s.add_argument("--x1-index", type=int, default=0,
                   help="variable treated as the sparse splitting axis")

    s = sub.add_parser("gen", help="generate an instance from a point list")
    s.add_argument("--points", required=True)
    s.add_argument("--p", type=int, default=65537)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--mix", type=int, default=2,
                   help="extra mixing entries per row in the basis change")
    s.add_argument("--truth", action="store_true",
                   help="embed the ground truth in the instance file")

    s = sub.add_parser("verify", help="check a parametrization against an instance")
    s.add_argument("--in", dest="infile", required=True)
    s.add_argument("--param", required=True)
    s.add_argument("--truth", action="store_true",
                   help="also compare against the embedded ground truth")

    s = sub.add_parser("bench", help="informational timing run")
    s.add_argument("--D", type=int, default=2000)
    s.add_argument("--n", type=int, default=3)
    # large enough that a random combination separates thousands of random
    # points, small enough for the int64 kernels
    s.add_argument("--p", type=int, default=67108859)
    s.add_argument("--m", type=int, nargs="+", default=[2])
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--mix", type=int, default=2)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.cmd == "solve":
            return cmd_solve(args, split=False)
        if args.cmd == "solve-split":
            return cmd_solve(args, split=True)
        if args.cmd == "gen":
            return cmd_gen(args)
        if args.cmd == "verify":
            return cmd_verify(args)
        if args.cmd == "bench":
            return cmd_bench(args)
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BfglmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
