"""Command-line harness: deterministic experiments, CSV/JSON outputs, manifests.

Every command is a pure function of its configuration (flags, optionally
overridden by a JSON config file); randomized commands require a seed.  A run
manifest records the configuration echo, tool version, per-instance statuses,
wall time and digests of the primary outputs, so re-running a manifest's
configuration reproduces the outputs byte for byte (timing aside).

Exit codes: 0 ok, 2 domain error (bad input, undecidable induction),
3 resource guard tripped.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import random
import sys
import time
from fractions import Fraction

from mpmath import mp, mpf

from . import __version__
from .affine import AIET, aiet_orbit, local_dimension_estimates
from .analysis import (check_criterion, default_schedule,
                       generic_condition_scan)
from .circle import (DEFAULT_PRECISION, PLCircleMap, continued_fraction,
                     dynamical_partition, rigid_rotation, rotation_number)
from .errors import AietdimError, PrecisionExhausted, ResourceGuardExceeded
from .iet import IET
from .perms import Perm, canonical_rotation_perm, rauzy_class
from .renorm import orbit, rotation_path
from .spectral import _random_simplex_rationals, lyapunov_top

ENV_PRECISION = "AIETDIM_PRECISION"

SCHEDULES = {"log2": default_schedule, "constant1": lambda n: 1}


def env_default_precision() -> int:
    return int(os.environ.get(ENV_PRECISION, DEFAULT_PRECISION))


def frac_str(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def dec_str(x, precision_bits: int) -> str:
    with mp.workprec(precision_bits):
        return mp.nstr(mpf(x), int(precision_bits / 3.32) + 2)


def parse_fractions(s: str):
    return [Fraction(tok.strip()) for tok in s.split(",") if tok.strip()]


def parse_ints(s: str):
    return [int(tok) for tok in s.split(",") if tok.strip()]


def _perm_from_args(args) -> Perm:
    if getattr(args, "perm", None):
        return Perm.from_json(json.loads(args.perm))
    return canonical_rotation_perm(args.d)


# ---------------------------------------------------------------------------
# command implementations: each returns (primary_output_text, instances)
# ---------------------------------------------------------------------------


def cmd_rauzy_class(args):
    if getattr(args, "perm", None):
        perm = Perm.from_json(json.loads(args.perm))
    elif args.rotation:
        perm = canonical_rotation_perm(args.d)
    else:
        raise ValueError("need --rotation or --perm")
    cls = rauzy_class(perm, max_size=args.max_size)
    out = {"d": perm.d, "size": len(cls), "class": cls.to_json()}
    return json.dumps(out, indent=2, sort_keys=True) + "\n", [
        {"id": 0, "status": "ok"}
    ]


def cmd_orbit(args):
    lengths = parse_fractions(getattr(args, "lam"))
    perm = _perm_from_args_or_size(args, len(lengths))
    T = IET(lengths, perm)
    rec = orbit(T, args.blocks, max_entry_bits=args.max_entry_bits)
    lines = ["# exact rationals p/q; heights and lengths in top-row order",
             "n,z,kind,tiling,heights,lam,ell"]
    for n in range(rec.n_blocks + 1):
        z = rec.blocks[n - 1].z if n else 0
        kind = rec.blocks[n - 1].kind if n else ""
        ell = rec.ell[n]
        h = rec.heights[n]
        tiling = sum(l * k for l, k in zip(ell, h))
        lines.append(",".join([
            str(n), str(z), kind, frac_str(tiling),
            ";".join(str(x) for x in h),
            ";".join(frac_str(x) for x in rec.lam[n]),
            ";".join(frac_str(x) for x in ell),
        ]))
    return "\n".join(lines) + "\n", [{"id": 0, "status": "ok"}]


def cmd_path(args):
    lengths = parse_fractions(getattr(args, "lam"))
    perm = _perm_from_args_or_size(args, len(lengths))
    T = IET(lengths, perm)
    path = rotation_path(T, args.blocks, max_entry_bits=args.max_entry_bits)
    lines = ["index,top,bottom,kind,winner"]
    for i, (p, kind) in enumerate(path):
        winner = p.last_top if kind == "top" else p.last_bottom
        lines.append(",".join([
            str(i), "".join(map(str, p.top)), "".join(map(str, p.bottom)),
            kind, str(winner),
        ]))
    return "\n".join(lines) + "\n", [{"id": 0, "status": "ok"}]


def _perm_from_args_or_size(args, d_from_lengths):
    if getattr(args, "perm", None):
        return Perm.from_json(json.loads(args.perm))
    d = getattr(args, "d", None) or d_from_lengths
    return canonical_rotation_perm(d)


def _lyapunov_sample(task):
    """One Monte Carlo sample of the top-exponent estimate (worker-safe)."""
    d, seed, k, blocks, bits = task
    rng = random.Random(f"{seed}:{k}")
    lam = _random_simplex_rationals(rng, d, bits)
    T = IET(lam, canonical_rotation_perm(d))
    try:
        rec = orbit(T, blocks, max_entry_bits=64 * bits)
    except AietdimError:
        return k, None
    from .spectral import _log_big

    steps = rec.rv_steps_consumed()
    log_h = _log_big(max(rec.heights[-1]))
    return k, (log_h / steps if steps else 0.0,
               log_h / blocks if blocks else 0.0)


def cmd_lyapunov(args):
    if args.jobs > 1:
        tasks = [(args.d, args.seed, k, args.blocks, args.bits)
                 for k in range(args.samples)]
        results = _run_parallel(_lyapunov_sample, tasks, args.jobs, args.out)
        pairs = [v for _, v in sorted(results) if v is not None]
        skipped = sum(1 for _, v in results if v is None)
        steps = [p[0] for p in pairs]
        blocks = [p[1] for p in pairs]
        mean_block = sum(blocks) / len(blocks) if blocks else 0.0
        est = {
            "theta_top": mean_block,
            "per_rv_step": sum(steps) / len(steps) if steps else 0.0,
            "per_block": mean_block,
            "n_blocks": args.blocks, "samples": args.samples,
            "skipped": skipped, "normalization": "per-Zorich-block",
            "per_sample": blocks,
        }
    else:
        e = lyapunov_top(canonical_rotation_perm(args.d), args.blocks,
                         args.samples, args.seed,
                         precision_bits=args.bits)
        est = {
            "theta_top": e.theta_top, "per_rv_step": e.per_rv_step,
            "per_block": e.per_block,
            "n_blocks": e.n_blocks, "samples": e.samples,
            "skipped": e.skipped, "normalization": e.normalization,
            "per_sample": e.per_sample,
        }
    instances = [{"id": k, "status": "ok"} for k in range(args.samples)]
    return json.dumps(est, indent=2, sort_keys=True) + "\n", instances


def _scan_sample(task):
    d, seed, k, bits, c0, schedule_id, blocks = task
    rng = random.Random(f"{seed}:{k}")
    lam = _random_simplex_rationals(rng, d, bits)
    T = IET(lam, canonical_rotation_perm(d))
    try:
        rep = generic_condition_scan(T, Fraction(c0), C=SCHEDULES[schedule_id],
                                     max_blocks=blocks)
        return k, {"id": k, "status": "ok", "hits": rep.hit_levels,
                   "pi_star_visits": len(rep.pi_star_visits)}
    except AietdimError as exc:
        return k, {"id": k, "status": f"skipped: {exc}", "hits": [],
                   "pi_star_visits": 0}


def cmd_scan(args):
    tasks = [(args.d, args.seed, k, args.bits, str(Fraction(args.c0)),
              args.schedule, args.blocks) for k in range(args.samples)]
    if args.jobs > 1:
        results = _run_parallel(_scan_sample, tasks, args.jobs, args.out)
    else:
        results = [_scan_sample(t) for t in tasks]
    samples = [r for _, r in sorted(results)]
    with_hit = sum(1 for s in samples if s["hits"])
    out = {
        "d": args.d, "c0": str(Fraction(args.c0)), "schedule": args.schedule,
        "blocks": args.blocks, "seed": args.seed,
        "samples": samples,
        "fraction_with_hit": with_hit / len(samples) if samples else 0.0,
    }
    return (json.dumps(out, indent=2, sort_keys=True) + "\n",
            [{"id": s["id"], "status": s["status"]} for s in samples])


def _run_parallel(fn, tasks, jobs, out_path):
    """Run tasks over a process pool; each result is written atomically to a
    per-instance temp file, then the temp files are read back and merged in
    task order (deterministic regardless of completion order)."""
    import multiprocessing as mp_proc

    base = (out_path or "aietdim-run") + ".instance"
    ctx = mp_proc.get_context("spawn" if sys.platform == "win32" else "fork")
    with ctx.Pool(jobs) as pool:
        for k, result in pool.imap_unordered(fn, tasks):
            tmp = f"{base}-{k}.tmp"
            with open(tmp + ".partial", "w") as fh:
                json.dump([k, result], fh)
            os.replace(tmp + ".partial", tmp)
    results = []
    for k in range(len(tasks)):
        tmp = f"{base}-{k}.tmp"
        with open(tmp) as fh:
            pair = json.load(fh)
        results.append((pair[0], pair[1]))
        os.remove(tmp)
    return results


def _load_aiet(args) -> AIET:
    with open(args.aiet) as fh:
        return AIET.from_json(json.load(fh))


def cmd_dimension(args):
    f = _load_aiet(args)
    rec = aiet_orbit(f, args.blocks, allow_partial=True)
    status = "ok"
    if rec.terminated:
        status = ("precision_exhausted"
                  if "precision" in rec.terminated else rec.terminated)
    lines = [f"# precision_bits={f.precision_bits}",
             "level,interval_length," +
             ",".join(f"ratio_{a}" for a in f.letters)]
    if rec.n_blocks:
        trace = local_dimension_estimates(f, rec.n_blocks, tol=args.cone_tol,
                                          record=rec)
        for lvl, ratios, length in zip(trace.levels, trace.ratios,
                                       trace.interval_lengths):
            lines.append(",".join(
                [str(lvl), repr(length)] +
                [repr(ratios[a]) for a in f.letters]))
    return "\n".join(lines) + "\n", [{"id": 0, "status": status}]


def cmd_criterion(args):
    f = _load_aiet(args)
    levels = parse_ints(args.levels)
    rep = check_criterion(f, levels, m_cap=args.m_cap, cone_tol=args.cone_tol)
    out = {
        "levels": rep.levels, "designated": list(rep.designated),
        "cond1": rep.cond1, "cond2": rep.cond2,
        "cond3": rep.cond3, "cond3_min_measure": rep.cond3_min_measure,
        "cond4": rep.cond4, "cond4_min_gap": rep.cond4_min_gap,
        "cond5_ratios": rep.cond5_ratios,
        "entries": [
            {"level": e.level, "letter": e.letter,
             "tower_measure": e.tower_measure, "slope_gap": e.slope_gap,
             "rigidity_count": e.rigidity_count,
             "rigidity_capped": e.rigidity_capped,
             "log_height": e.log_height, "ratio": e.ratio}
            for e in rep.entries
        ],
    }
    return json.dumps(out, indent=2, sort_keys=True) + "\n", [
        {"id": 0, "status": "ok"}
    ]


def _pl_map_from_args(args) -> PLCircleMap:
    if getattr(args, "alpha", None):
        alpha = args.alpha
        if "/" in alpha:
            fr = Fraction(alpha)
            with mp.workprec(args.precision_bits):
                alpha = mpf(fr.numerator) / mpf(fr.denominator)
        return rigid_rotation(alpha, args.precision_bits)
    if getattr(args, "breaks", None) is None:
        raise ValueError("need --alpha or --breaks/--slopes/--offset")
    with mp.workprec(args.precision_bits):
        breaks = [_to_mpf(tok, args.precision_bits)
                  for tok in args.breaks.split(",")]
        slopes = [_to_mpf(tok, args.precision_bits)
                  for tok in args.slopes.split(",")]
        off = _to_mpf(args.offset, args.precision_bits)
    return PLCircleMap(breaks, slopes, off, args.precision_bits)


def _to_mpf(token, bits):
    token = token.strip()
    with mp.workprec(bits):
        if "/" in token:
            fr = Fraction(token)
            return mpf(fr.numerator) / mpf(fr.denominator)
        return mpf(token)


def cmd_partition(args):
    f = _pl_map_from_args(args)
    part = dynamical_partition(f, _to_mpf(args.x0, f.precision_bits),
                               args.level, max_time=args.max_iter)
    bits = f.precision_bits
    lines = [f"# precision_bits={bits}",
             f"# q={';'.join(map(str, part.q))}",
             "kind,index,start,end,length"]
    for kind, arcs in (("long", part.long_arcs), ("short", part.short_arcs)):
        for i, a in enumerate(arcs):
            lines.append(",".join([
                kind, str(i), dec_str(a.start, bits), dec_str(a.end % 1, bits),
                dec_str(a.length(), bits)]))
    return "\n".join(lines) + "\n", [{"id": 0, "status": "ok"}]


def cmd_rotation_number(args):
    f = _pl_map_from_args(args)
    est, bound = rotation_number(f, args.n_iter)
    out = {
        "estimate": dec_str(est, f.precision_bits),
        "error_bound": dec_str(bound, f.precision_bits),
        "n_iter": args.n_iter, "precision_bits": f.precision_bits,
    }
    return json.dumps(out, indent=2, sort_keys=True) + "\n", [
        {"id": 0, "status": "ok"}
    ]


def cmd_cf(args):
    alpha = args.alpha
    if "/" in alpha:
        alpha = Fraction(alpha)
    else:
        with mp.workprec(args.precision_bits):
            alpha = mpf(alpha)
    exp = continued_fraction(alpha, args.n, precision_bits=args.precision_bits)
    out = {
        "quotients": exp.quotients,
        "convergents": [f"{p}/{q}" for p, q in exp.convergents],
        "exact": exp.exact,
        "precision_bits": args.precision_bits,
    }
    return json.dumps(out, indent=2, sort_keys=True) + "\n", [
        {"id": 0, "status": "ok"}
    ]


COMMANDS = {
    "rauzy-class": cmd_rauzy_class,
    "orbit": cmd_orbit,
    "path": cmd_path,
    "lyapunov": cmd_lyapunov,
    "scan": cmd_scan,
    "criterion": cmd_criterion,
    "dimension": cmd_dimension,
    "partition": cmd_partition,
    "rotation-number": cmd_rotation_number,
    "cf": cmd_cf,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aietdim",
        description="Renormalization experiments for interval exchanges, "
                    "affine exchanges and PL circle maps.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file whose entries override flags")
        p.add_argument("--out", help="output file (default: stdout, no manifest)")
        p.add_argument("--precision-bits", type=int,
                       default=env_default_precision())
        p.add_argument("--jobs", type=int, default=1,
                       help="instance-level parallelism")

    p = sub.add_parser("rauzy-class", help="BFS closure of a combinatorial datum")
    common(p)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--rotation", action="store_true",
                   help="start from the canonical rotation datum")
    p.add_argument("--perm", help='JSON {"top": [...], "bottom": [...]}')
    p.add_argument("--max-size", type=int, default=100_000)

    for name, help_txt in (("orbit", "Zorich orbit of an exact IET"),
                           ("path", "induction path of an exact IET")):
        p = sub.add_parser(name, help=help_txt)
        common(p)
        p.add_argument("--lambda", dest="lam", required=True,
                       help='comma-separated rational lengths, e.g. "1/3,2/3"')
        p.add_argument("--perm")
        p.add_argument("--d", type=int)
        p.add_argument("--blocks", type=int, default=20)
        p.add_argument("--max-entry-bits", type=int, default=1_000_000)

    p = sub.add_parser("lyapunov", help="Monte Carlo top-exponent estimate")
    common(p)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--blocks", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--bits", type=int, default=8192,
                   help="dyadic resolution of the sampled rational lengths")

    p = sub.add_parser("scan", help="generic-condition scanner over samples")
    common(p)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--c0", default="1/64")
    p.add_argument("--schedule", choices=sorted(SCHEDULES), default="log2")
    p.add_argument("--blocks", type=int, default=2000)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--bits", type=int, default=4200,
                   help="dyadic resolution of the sampled rational lengths")

    p = sub.add_parser("criterion", help="tower-condition report for an AIET")
    common(p)
    p.add_argument("--aiet", required=True, help="AIET descriptor JSON file")
    p.add_argument("--levels", required=True, help="comma-separated levels")
    p.add_argument("--m-cap", type=int, default=1_000_000)
    p.add_argument("--cone-tol", type=float, default=1e-12)

    p = sub.add_parser("dimension", help="local-dimension trace of an AIET")
    common(p)
    p.add_argument("--aiet", required=True, help="AIET descriptor JSON file")
    p.add_argument("--blocks", type=int, required=True)
    p.add_argument("--cone-tol", type=float, default=1e-12)

    p = sub.add_parser("partition", help="dynamical partition of a circle map")
    common(p)
    p.add_argument("--alpha", help="rigid rotation angle (p/q or decimal)")
    p.add_argument("--breaks")
    p.add_argument("--slopes")
    p.add_argument("--offset")
    p.add_argument("--x0", default="0")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--max-iter", type=int, default=1_000_000)

    p = sub.add_parser("rotation-number", help="rotation-number estimate")
    common(p)
    p.add_argument("--alpha")
    p.add_argument("--breaks")
    p.add_argument("--slopes")
    p.add_argument("--offset")
    p.add_argument("--n-iter", type=int, required=True)

    p = sub.add_parser("cf", help="continued-fraction expansion")
    common(p)
    p.add_argument("--alpha", required=True)
    p.add_argument("--n", type=int, required=True)
    return parser


def apply_config_file(args):
    if not getattr(args, "config", None):
        return args
    with open(args.config) as fh:
        overrides = json.load(fh)
    for key, value in overrides.items():
        setattr(args, key.replace("-", "_"), value)
    return args


def config_echo(args) -> dict:
    skip = {"config", "out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def write_manifest(args, text, instances, wall):
    digest = hashlib.sha256(text.encode()).hexdigest()
    manifest = {
        "version": __version__,
        "config": config_echo(args),
        "instances": instances,
        "wall_time_s": wall,
        "outputs": {os.path.basename(args.out): digest},
    }
    path = args.out + ".manifest.json"
    with open(path + ".partial", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(path + ".partial", path)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args = apply_config_file(args)
    started = time.monotonic()
    try:
        text, instances = COMMANDS[args.command](args)
    except ResourceGuardExceeded as exc:
        print(f"error: resource guard: {exc}", file=sys.stderr)
        return 3
    except PrecisionExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (AietdimError, ValueError, KeyError, OSError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    wall = time.monotonic() - started
    if getattr(args, "out", None):
        with open(args.out + ".partial", "w") as fh:
            fh.write(text)
        os.replace(args.out + ".partial", args.out)
        write_manifest(args, text, instances, wall)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
