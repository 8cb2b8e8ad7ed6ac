"""shortgap <module> <verb> [flags].

Exit codes: 0 success, 2 invalid config or input, 3 numeric-check failure.
The thread count for sieving and grid points comes from SHORTGAP_THREADS.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .. import oracles, sums
from ..decomposition.buchstab import buchstab_omega, identity_failures, richardson_error
from ..decomposition.ledger import ledger_build_and_check
from ..decomposition.regions import regions_table
from ..primes import Interval, count_primes, scan_gap_pairs
from ..tuples import (
    AdmissibleTuple, SieveContext, as_fraction, as_integer, is_admissible, make_context, make_prime_tuple,
)
from ..variational import optimize_Mk, rho_threshold
from ..weights import SupportTooLarge, WeightTable, build_lambda, build_y
from .config import ConfigError, load_config, parse_F
from .experiments import DENSITY_COLUMNS, PNT_COLUMNS, experiment_density, experiment_short_interval_pnt
from .report import NumericCheckError, ReportError, run_full_report
from .serialization import NumericOutputError, csv_text, dumps_json, write_csv

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3
ORACLE_RTOL = 1e-9

log = logging.getLogger("shortgap")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _int(s: str) -> int:
    try:
        return as_integer(s)
    except (ValueError, TypeError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected an integer, got {s!r}") from None


def _num(s: str):
    try:
        return as_fraction(s)
    except (ValueError, TypeError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a number, got {s!r}") from None


def _int_list(s: str) -> list[int]:
    return [_int(v) for v in s.split(",") if v.strip()]


def _num_list(s: str) -> list:
    return [_num(v) for v in s.split(",") if v.strip()]


def _emit_json(obj, out: str | None) -> None:
    text = dumps_json(obj)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_csv(rows, columns, out: str | None) -> None:
    if out:
        write_csv(out, rows, columns)
    else:
        sys.stdout.write(csv_text(rows, columns))


def _interval(args) -> Interval:
    return Interval(args.lo, args.hi)


def _load_context(path) -> SieveContext:
    try:
        return SieveContext.load(path)
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load context {path}: {exc}") from exc


def _load_weights(path) -> WeightTable:
    try:
        return WeightTable.load(path)
    except OSError as exc:
        raise ConfigError(f"cannot load weights {path}: {exc}") from exc


# -- primes -------------------------------------------------------------


def cmd_primes_count(args):
    iv = _interval(args)
    _emit_json({"lo": iv.lo, "hi": iv.hi, "count": count_primes(iv)}, args.out)


def cmd_primes_gaps(args):
    pairs = scan_gap_pairs(_interval(args), args.max_gap)
    rows = [{"p": p, "p_next": q, "gap": q - p} for p, q in pairs]
    _emit_csv(rows, ["p", "p_next", "gap"], args.out)


# -- tuples -------------------------------------------------------------


def _forms(args) -> AdmissibleTuple:
    if getattr(args, "offsets", None):
        slopes = _int_list(args.slopes) if getattr(args, "slopes", None) else None
        return AdmissibleTuple.from_offsets(_int_list(args.offsets), slopes)
    return make_prime_tuple(args.k if getattr(args, "k", None) else 2)


def cmd_tuple_check(args):
    t = _forms(args)
    ok, cert = is_admissible(t)
    _emit_json({"tuple": t.to_dict(), "admissible": ok, "witnesses": {str(p): r for p, r in cert.witnesses.items()},
                "blocking_prime": cert.blocking_prime}, args.out)


def cmd_tuple_make(args):
    t = make_prime_tuple(args.k)
    _emit_json({"tuple": t.to_dict(), "admissible": is_admissible(t)[0]}, args.out)


def cmd_tuple_context(args):
    ctx = make_context(
        args.x, args.delta, args.theta, args.eps, forms=_forms(args), d0_floor=args.d0_floor,
        eps0=args.eps0, beta=args.beta, h=args.h, R=args.R,
    )
    _emit_json(ctx.to_dict(), args.out)


# -- variational ------------------------------------------------------------


def cmd_mk_optimize(args):
    res = optimize_Mk(args.k, args.degree, rank=args.rank)
    _emit_json(res.to_dict(), args.out)


def cmd_mk_threshold(args):
    th = rho_threshold(args.delta, args.eps0, args.beta, args.mk)
    _emit_json({"m": th.m, "value": th.value, "conclusive": th.conclusive}, args.out)


# -- weights ------------------------------------------------------------


def cmd_weights_build(args):
    ctx = _load_context(args.context)
    F = parse_F(args.F, ctx.k)
    lam = build_lambda(build_y(F, ctx, r_cap=args.r_cap))
    lam.save(args.out)
    _emit_json({"k": lam.k, "W": lam.W, "R": lam.R, "entries": len(lam), "lambda_max": lam.lambda_max,
                "out": args.out}, None)


# -- sums ---------------------------------------------------------------


def _compare(name: str, got: float, ref: float) -> dict:
    ok = abs(got - ref) <= ORACLE_RTOL * max(1.0, abs(ref))
    if not ok:
        raise NumericCheckError(f"{name}: table value {got!r} != oracle {ref!r}")
    return {"oracle": ref, "oracle_agrees": True}


def _sum_inputs(args):
    ctx = _load_context(args.context)
    lam = _load_weights(args.weights)
    iv = Interval(args.lo, args.hi) if args.lo is not None else ctx.interval
    return ctx, lam, iv


def cmd_sums(args):
    which = args.verb
    if which == "error-scan":
        rep = sums.error_scan(args.x, args.z, args.Q, mode=args.mode)
        d = rep.to_dict()
        d["normalized"] = rep.normalized
        _emit_json(d, args.out)
        return
    if which == "count-sh":
        ctx = _load_context(args.context)
        iv = Interval(args.lo, args.hi) if args.lo is not None else ctx.interval
        n = sums.count_S_H(iv, ctx.forms, ctx, args.m)
        out = {"count": n, "lo": iv.lo, "hi": iv.hi, "m": args.m}
        if args.oracle:
            ref = oracles.count_S_H(iv, ctx, args.m)
            if ref != n:
                raise NumericCheckError(f"count-sh: {n} != oracle {ref}")
            out.update(oracle=ref, oracle_agrees=True)
        _emit_json(out, args.out)
        return
    ctx, lam, iv = _sum_inputs(args)
    if which == "s1":
        out = sums.S1(iv, ctx, lam).to_dict()
        ref = (lambda: oracles.S1(iv, ctx, lam))
    elif which == "s2":
        if args.m:
            out = sums.S2_m(iv, ctx, lam, args.m, restrict_dm=args.restrict_dm).to_dict()
            if args.restrict_dm:
                ref = None
            else:
                ref = (lambda: oracles.S2_m(iv, ctx, lam, args.m))
        else:
            out = sums.S2(iv, ctx, lam).to_dict()
            ref = (lambda: oracles.S2(iv, ctx, lam))
    elif which == "s1p":
        out = {"value": sums.S1_p_j(iv, ctx, lam, args.p, args.j), "p": args.p, "j": args.j}
        ref = (lambda: oracles.S1_p_j(iv, ctx, lam, args.p, args.j))
    elif which == "sminus":
        out = {"value": sums.S_minus(iv, ctx, lam, args.which), "which": args.which}
        ref = (lambda: oracles.S_minus(iv, ctx, lam, args.which))
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown sum {which}")
    if args.oracle:
        if ref is None:
            raise ConfigError("--oracle is not available with --restrict-dm")
        out.update(_compare(which, out["value"], ref()))
    _emit_json(out, args.out)


# -- decomposition --------------------------------------------------------


def cmd_buchstab_omega(args):
    u = float(args.u)
    _emit_json({"u": u, "omega": buchstab_omega(u), "richardson_error": richardson_error(u) if u > 2 else 0.0},
               args.out)


def cmd_buchstab_identity(args):
    fails = identity_failures(args.lo, args.hi, float(args.w1), float(args.w2), printed=args.printed)
    _emit_json({"lo": args.lo, "hi": args.hi, "w1": float(args.w1), "w2": float(args.w2),
                "failures": len(fails), "first_failures": fails[:20]}, args.out)
    if fails and not args.printed:
        raise NumericCheckError(f"{len(fails)} identity failures")


def cmd_regions_table(args):
    rows = regions_table(args.delta)
    _emit_csv(rows, ["region", "nonempty", "loss", "paper_budget"], args.out)


def cmd_ledger_check(args):
    ctx = _load_context(args.context)
    rep = ledger_build_and_check(ctx, Interval(args.sample_from, args.sample_to))
    d = rep.to_dict()
    for key in ("expansion_failures", "negativity_failures", "property2_failures"):
        d[key] = d[key][:50]
    _emit_json(d, args.out)
    if not rep.ok:
        raise NumericCheckError("ledger check failed")


# -- experiments ------------------------------------------------------------


def cmd_experiment_pnt(args):
    grid = [(x, d) for x in args.x for d in args.delta]
    _emit_csv(experiment_short_interval_pnt(grid), PNT_COLUMNS, args.out)


def cmd_experiment_density(args):
    grid = [(x, d, g) for x in args.x for d in args.delta for g in args.d]
    _emit_csv(experiment_density(grid), DENSITY_COLUMNS, args.out)


def cmd_report(args):
    cfg = load_config(args.config)
    man, _ = run_full_report(cfg, args.out)
    _emit_json(man, None)


# -- parser -------------------------------------------------------------


def _add_range(p, required=True):
    p.add_argument("--from", dest="lo", type=_int, required=required)
    p.add_argument("--to", dest="hi", type=_int, required=required)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="shortgap", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    mods = ap.add_subparsers(dest="module", required=True, parser_class=_Parser)

    def verb(mod, name, fn, **kw):
        p = mod.add_parser(name, **kw)
        p.add_argument("--out")
        p.set_defaults(fn=fn)
        return p

    pr = mods.add_parser("primes").add_subparsers(dest="verb", required=True, parser_class=_Parser)
    _add_range(verb(pr, "count", cmd_primes_count))
    p = verb(pr, "gaps", cmd_primes_gaps)
    _add_range(p)
    p.add_argument("--max-gap", type=_int, required=True)

    tu = mods.add_parser("tuple").add_subparsers(dest="verb", required=True, parser_class=_Parser)
    p = verb(tu, "check", cmd_tuple_check)
    p.add_argument("--offsets", required=True)
    p.add_argument("--slopes")
    verb(tu, "make", cmd_tuple_make).add_argument("--k", type=_int, required=True)
    p = verb(tu, "context", cmd_tuple_context)
    p.add_argument("--x", type=_int, required=True)
    p.add_argument("--delta", type=_num, required=True)
    p.add_argument("--theta", type=_num)
    p.add_argument("--eps", type=_num, default=_num("1e-3"))
    p.add_argument("--eps0", type=_num, default=_num("1e-3"))
    p.add_argument("--beta", type=_num, default=_num("0.94"))
    p.add_argument("--d0-floor", type=_int)
    p.add_argument("--k", type=_int)
    p.add_argument("--offsets")
    p.add_argument("--slopes")
    p.add_argument("--h", type=_int)
    p.add_argument("--R", type=float)

    mk = mods.add_parser("mk").add_subparsers(dest="verb", required=True, parser_class=_Parser)
    p = verb(mk, "optimize", cmd_mk_optimize)
    p.add_argument("--k", type=_int, required=True)
    p.add_argument("--degree", type=_int, required=True)
    p.add_argument("--rank", type=_int, default=1)
    p = verb(mk, "threshold", cmd_mk_threshold)
    p.add_argument("--delta", type=_num, required=True)
    p.add_argument("--beta", type=_num, default=_num("0.94"))
    p.add_argument("--eps0", type=_num, default=_num("1e-3"))
    p.add_argument("--mk", type=_num, required=True)

    we = mods.add_parser("weights").add_subparsers(dest="verb", required=True, parser_class=_Parser)
    p = we.add_parser("build")
    p.set_defaults(fn=cmd_weights_build)
    p.add_argument("--context", required=True)
    p.add_argument("--F", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--r-cap", type=float)

    su = mods.add_parser("sums").add_subparsers(dest="verb", required=True, parser_class=_Parser)
    for name in ("s1", "s2", "s1p", "sminus"):
        p = verb(su, name, cmd_sums)
        p.add_argument("--context", required=True)
        p.add_argument("--weights", required=True)
        _add_range(p, required=False)
        p.add_argument("--oracle", action="store_true")
        if name == "s2":
            p.add_argument("--m", type=_int)
            p.add_argument("--restrict-dm", action="store_true")
        if name == "s1p":
            p.add_argument("--p", type=_int, required=True)
            p.add_argument("--j", type=_int, required=True)
        if name == "sminus":
            p.add_argument("--which", choices=["S1-", "S2-"], required=True)
    p = verb(su, "count-sh", cmd_sums)
    p.add_argument("--context", required=True)
    _add_range(p, required=False)
    p.add_argument("--m", type=_int, required=True)
    p.add_argument("--oracle", action="store_true")
    p = verb(su, "error-scan", cmd_sums)
    p.add_argument("--x", type=_int, required=True)
    p.add_argument("--z", type=_int, required=True)
    p.add_argument("--Q", type=_int, required=True)
    p.add_argument("--mode", choices=["prime", "zero"], default="prime")

    bu = mods.add_parser("buchstab").add_subparsers(dest="verb", required=True, parser_class=_Parser)
    verb(bu, "omega", cmd_buchstab_omega).add_argument("--u", type=float, required=True)
    p = verb(bu, "identity", cmd_buchstab_identity)
    _add_range(p)
    p.add_argument("--w1", type=_num, required=True)
    p.add_argument("--w2", type=_num, required=True)
    p.add_argument("--printed", action="store_true", help="use the open-threshold variant (for comparison)")

    rg = mods.add_parser("regions").add_subparsers(dest="verb", required=True, parser_class=_Parser)
    verb(rg, "table", cmd_regions_table).add_argument("--delta", type=_num, required=True)

    le = mods.add_parser("ledger").add_subparsers(dest="verb", required=True, parser_class=_Parser)
    p = verb(le, "check", cmd_ledger_check)
    p.add_argument("--context", required=True)
    p.add_argument("--sample-from", type=_int, required=True)
    p.add_argument("--sample-to", type=_int, required=True)

    ex = mods.add_parser("experiment").add_subparsers(dest="verb", required=True, parser_class=_Parser)
    p = verb(ex, "pnt", cmd_experiment_pnt)
    p.add_argument("--x", type=_int_list, required=True)
    p.add_argument("--delta", type=_num_list, required=True)
    p = verb(ex, "density", cmd_experiment_density)
    p.add_argument("--x", type=_int_list, required=True)
    p.add_argument("--delta", type=_num_list, required=True)
    p.add_argument("--d", type=_int_list, required=True)

    p = mods.add_parser("report")
    p.set_defaults(fn=cmd_report)
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.fn(args)
    except ReportError as exc:
        print(f"shortgap: {exc}", file=sys.stderr)
        numeric = isinstance(exc.cause, (NumericCheckError, NumericOutputError, ArithmeticError))
        return EXIT_NUMERIC if numeric else EXIT_INVALID
    except (NumericCheckError, NumericOutputError) as exc:
        print(f"shortgap: numeric check failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError, TypeError, OSError, SupportTooLarge, OverflowError) as exc:
        print(f"shortgap: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
