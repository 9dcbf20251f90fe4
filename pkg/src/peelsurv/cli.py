"""Command-line front end: ``peelsurv <command> [options]``.

Every command writes one versioned JSON report (``peel`` can write its curve
as CSV instead).  Reports hold the resolved configuration minus the worker
count and output path, so equal inputs give byte-identical reports whatever
the degree of parallelism.

Exit codes: 0 success, 2 invalid input, 3 solver or convergence failure,
4 Monte Carlo budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path


from . import __version__
from .errors import PeelsurvError
from .exponent import (
    LN2,
    JumpFunctional,
    beta_integral,
    derived_exponents,
    psi_gamma,
    psi_lk,
    solve_cF_result,
    solve_cu_result,
    tail_integral,
)
from .levy import MODES, build_approx, verify_lemma2
from .peeling import (
    PeelAlgorithm,
    default_checkpoints,
    fit_exponent,
    harmonic_function,
    load_nu,
    make_simple_nu,
    make_synthetic_nu,
    nu_to_dict,
    scale_block_estimate,
    survival_curve,
)

REPORT_SCHEMA = "peelsurv.report/1"
_NOT_IN_REPORT = {"workers", "out", "func", "format"}


def _positive_int(text):
    try:
        value = int(float(text)) if "e" in text.lower() else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a count >= 1, got {value}")
    return value


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _int_list(text):
    try:
        out = [int(float(t)) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _config(args):
    cfg = {}
    for k, v in sorted(vars(args).items()):
        if k in _NOT_IN_REPORT:
            continue
        cfg[k] = str(v) if isinstance(v, Path) else v
    return cfg


def _report(args, result):
    return {
        "schema": REPORT_SCHEMA,
        "version": __version__,
        "command": args.command,
        "config": _config(args),
        "result": result,
    }


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=True) + "\n"


def _step_law(args):
    if getattr(args, "nu", None):
        return load_nu(args.nu)
    if getattr(args, "simple", False):
        return make_simple_nu()
    return make_synthetic_nu(args.A)


# -- commands ----------------------------------------------------------------


def cmd_solve_c(args):
    rows = []
    for u in args.u:
        r = solve_cu_result(u)
        residual = beta_integral(r.root) * tail_integral(r.root, u) - 2.0 * math.pi / (3.0 * (1.0 - u))
        jf = solve_cF_result(JumpFunctional.from_u(u, -LN2))
        rows.append(
            {
                "u": u,
                "c_u": r.root,
                "residual": residual,
                "bracket_width": r.bracket_width,
                "iterations": r.iterations,
                "c_F_weight_u_threshold_ln2": jf.root,
            }
        )
    c = solve_cu_result(0.5).root
    return {"rows": rows, "derived": derived_exponents(c).as_dict()}


def cmd_verify_psi(args):
    rows = []
    for lam in args.lam:
        g = psi_gamma(lam)
        lk = psi_lk(lam)
        gap = abs(lk - g) / g if g else abs(lk - g)
        asym = 4.0 * math.sqrt(math.pi) / 3.0 * lam**1.5
        rows.append(
            {"lambda": lam, "psi_gamma": g, "psi_lk": lk, "relative_gap": gap,
             "ratio_to_asymptote": g / asym if lam > 0 else None}
        )
    return {"rows": rows}


def cmd_levy(args):
    approx = build_approx(args.eps, args.mode)
    fn = JumpFunctional.from_u(args.u, args.threshold)
    rows = []
    for z in args.z:
        est = verify_lemma2(approx, z, fn, args.samples, args.seed, args.workers, args.max_time)
        d = {"z": z, **est.as_dict()}
        d["z_score"] = (est.estimate - est.prediction) / est.std_error if est.std_error > 0 else 0.0
        rows.append(d)
    return {
        "approximation": {
            "cutoff_eps": approx.cutoff_eps,
            "jump_rate": approx.jump_rate,
            "compensated_drift": approx.compensated_drift,
            "small_jump_stddev_per_time": approx.small_jump_stddev_per_time,
            "mode": approx.mode,
        },
        "rows": rows,
    }


def cmd_peel(args):
    nu = _step_law(args)
    h = harmonic_function(nu, args.M)
    cps = default_checkpoints(min(args.n_lo, args.n_max), args.n_max) if args.checkpoints is None else args.checkpoints
    alg = PeelAlgorithm(args.alg, args.offset)
    curve = survival_curve(alg, nu, h, args.ell, args.n_max, args.samples, cps, args.seed, args.workers)
    try:
        fit = fit_exponent(curve, args.n_lo, args.n_hi).as_dict()
    except PeelsurvError as exc:
        fit = {"error": str(exc)}
    result = {
        "curve": [dict(zip(("n", "survivors", "samples", "p_hat", "std_err"), row)) for row in curve.rows()],
        "fit": fit,
        "harmonic": {"M": h.M, "far_field_kappa": h.far_field_kappa, "residual": h.residual},
    }
    return result, curve


def cmd_scale_blocks(args):
    nu = _step_law(args)
    h = harmonic_function(nu, args.M)
    rows = [scale_block_estimate(nu, h, i, args.samples, args.seed, args.workers).as_dict() for i in args.i]
    target = 2.0 ** -solve_cu_result(0.5).root
    for r in rows:
        r["gap_to_limit"] = r["estimate"] - target
    return {"limit_2_pow_minus_c": target, "rows": rows}


def cmd_nu_make(args):
    nu = make_simple_nu() if args.simple else make_synthetic_nu(args.A, args.table_cut)
    return nu_to_dict(nu)


def cmd_nu_check(args):
    nu = load_nu(args.path, args.tol)
    return {
        "valid": True,
        "max_up": int(nu.max_up),
        "total_mass": nu.total_mass(),
        "mean": nu.mean(),
        "tail_amplitude": nu.tail_amplitude,
    }


# -- parser ------------------------------------------------------------------


def _global_flags(p, suppress):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=_seed, default=d(0), help="base seed of the per-sample streams")
    p.add_argument("--workers", type=_positive_int, default=d(1), help="worker processes (never changes results)")
    p.add_argument("--out", type=Path, default=d(None), help="output file (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default=d("json"))


def build_parser():
    parser = argparse.ArgumentParser(prog="peelsurv", description="Root-survival exponents of planar-map peeling.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-c", parents=[common], help="solve for c_u and the derived exponents")
    p.add_argument("--u", type=float, action="append", help="threshold u in (0,1); repeatable (default 0.5)")
    p.set_defaults(func=cmd_solve_c)

    p = sub.add_parser("verify-psi", parents=[common], help="compare the two Laplace-exponent formulas")
    p.add_argument("--lambda", dest="lam", type=float, action="append", help="lambda >= 0; repeatable")
    p.set_defaults(func=cmd_verify_psi)

    p = sub.add_parser("levy", parents=[common], help="Monte Carlo of the jump functional up to first passage")
    p.add_argument("--z", type=float, action="append", help="passage level; repeatable (default ln 2)")
    p.add_argument("--u", type=float, default=0.5, help="weight per counted jump, in (0, 1]")
    p.add_argument("--threshold", type=float, default=-LN2, help="jumps below this are counted")
    p.add_argument("--eps", type=float, default=0.01, help="small-jump cutoff")
    p.add_argument("--mode", choices=MODES, default="drop_small")
    p.add_argument("--samples", type=_positive_int, default=100_000)
    p.add_argument("--max-time", dest="max_time", type=float, default=1e4)
    p.set_defaults(func=cmd_levy)

    def law_flags(p):
        p.add_argument("--A", type=float, default=0.2, help="tail amplitude of the synthetic law")
        p.add_argument("--nu", type=Path, default=None, help="step-distribution file (overrides --A)")
        p.add_argument("--simple", action="store_true", help="use the simple symmetric walk")
        p.add_argument("--M", type=int, default=None, help="harmonic table size")

    p = sub.add_parser("peel", parents=[common], help="survival curve of the root edge")
    p.add_argument("--alg", choices=("opposite", "uniform", "fixed_offset"), default="opposite")
    p.add_argument("--offset", type=int, default=1, help="offset for fixed_offset")
    law_flags(p)
    p.add_argument("--ell", type=int, default=2, help="start perimeter (>= 2)")
    p.add_argument("--n-max", dest="n_max", type=_positive_int, default=100_000)
    p.add_argument("--checkpoints", type=_int_list, default=None, help="comma-separated step counts")
    p.add_argument("--samples", type=_positive_int, default=30_000)
    p.add_argument("--n-lo", dest="n_lo", type=float, default=100)
    p.add_argument("--n-hi", dest="n_hi", type=float, default=100_000)
    p.set_defaults(func=cmd_peel)

    p = sub.add_parser("scale-blocks", parents=[common], help="per-scale mean of 2^-(big drops)")
    law_flags(p)
    p.add_argument("--i", type=int, action="append", help="block index; repeatable (default 10)")
    p.add_argument("--samples", type=_positive_int, default=10_000)
    p.set_defaults(func=cmd_scale_blocks)

    p = sub.add_parser("nu-make", parents=[common], help="write a step-distribution file")
    p.add_argument("--A", type=float, default=0.2)
    p.add_argument("--simple", action="store_true")
    p.add_argument("--table-cut", dest="table_cut", type=_positive_int, default=10**6)
    p.set_defaults(func=cmd_nu_make)

    p = sub.add_parser("nu-check", parents=[common], help="validate a step-distribution file")
    p.add_argument("path", type=Path)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_nu_check)
    return parser


_LIST_DEFAULTS = {"u": [0.5], "lam": [0.0, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0], "z": [LN2], "i": [10]}


def _validate(parser, args):
    for key, default in _LIST_DEFAULTS.items():
        if getattr(args, key, "absent") is None:
            setattr(args, key, list(default))
    if args.command == "solve-c" and any(not 0.0 < u < 1.0 for u in args.u):
        parser.error("--u must lie in (0, 1)")
    if args.command == "verify-psi" and any(not lam >= 0.0 for lam in args.lam):
        parser.error("--lambda must be >= 0")
    if args.command == "levy":
        if not 0.0 < args.u <= 1.0:
            parser.error("--u must lie in (0, 1]")
        if not 0.0 < args.eps < LN2:
            parser.error("--eps must lie in (0, ln 2)")
        if args.threshold > -args.eps:
            parser.error("--threshold must be <= -eps")
        if any(not z > 0.0 for z in args.z):
            parser.error("--z must be > 0")
        if args.samples < 100:
            parser.error("levy needs --samples >= 100")
    if args.command in ("peel", "scale-blocks"):
        if args.nu is not None and args.simple:
            parser.error("--nu and --simple are exclusive")
        if args.M is not None and args.M < 1000:
            parser.error("--M must be >= 1000")
    if args.command == "peel":
        if args.ell < 2:
            parser.error("--ell must be >= 2")
        if args.checkpoints is not None and any(not 0 <= c <= args.n_max for c in args.checkpoints):
            parser.error("--checkpoints must lie in [0, n_max]")
        if args.samples < 1:
            parser.error("--samples must be >= 1")
    if args.command == "scale-blocks":
        if any(i < 1 for i in args.i):
            parser.error("--i must be >= 1")
        if args.samples < 2:
            parser.error("scale-blocks needs --samples >= 2")
    if args.format == "csv" and args.command != "peel":
        parser.error("--format csv is only available for peel")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _validate(parser, args)
    try:
        out = args.func(args)
    except PeelsurvError as exc:
        print(f"peelsurv {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    if args.command == "peel":
        result, curve = out
        if args.format == "csv":
            _emit(curve.to_csv(), args.out)
            sidecar = _dump(_report(args, {k: v for k, v in result.items() if k != "curve"}))
            if args.out is None:
                sys.stderr.write(sidecar)
            else:
                Path(str(args.out) + ".json").write_text(sidecar)
            return 0
        out = result
    if args.command == "nu-make":
        _emit(_dump(out), args.out)
        return 0
    _emit(_dump(_report(args, out)), args.out)
    return 0


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
