"""Command-line front end.

    gsek eval --quantity S --dim 1 --potential const:1 --t 0.5 --x 0 --y 0
    gsek verify --suite normalization --report out.json
    gsek counterexample-d3 --n 10,100,1000
    gsek compare --potential ball:1,1 --dim 3 --T 1

Exit codes: 0 pass, 1 fail (or an error raised by the numerics),
2 inconclusive (non-converged quadrature or search), 64 usage or parse error.
"""

from __future__ import annotations

import argparse
import inspect
import itertools
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from . import kernels as kern
from . import quantities as q
from . import report
from .bridge_mc import BridgeConfig, MCEstimate, feynman_kac_ratio
from .dsl import parse_potential
from .errors import GsekError, ParseError, UsageError
from .quadrature import Estimate, QuadConfig
from .search import SearchConfig, SupResult
from .suites import SUITES, SuiteContext, SuiteReport, counterexample_rows, run_suite

EXIT_PASS, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 64
EXIT_CODES = {"pass": EXIT_PASS, "fail": EXIT_FAIL, "inconclusive": EXIT_INCONCLUSIVE}

QUANTITIES = ("g", "p_alpha", "K", "S", "N", "A", "bracket", "r_star", "e_star", "delta_inv", "fk_ratio")


class _Parser(argparse.ArgumentParser):
    """argparse with exit code 64 on usage errors."""

    def __init__(self, *a, **kw):
        kw.setdefault("allow_abbrev", False)
        super().__init__(*a, **kw)

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_flags(parser, suppress: bool):
    # the subcommand copies use SUPPRESS so that values given before the verb survive
    def d(value):
        return argparse.SUPPRESS if suppress else value

    g = parser.add_argument_group("global options")
    g.add_argument("--dim", type=int, default=d(None), help="space dimension d")
    g.add_argument("--format", choices=("json", "csv"), default=d("json"))
    g.add_argument("--tol-abs", type=float, default=d(None), help="quadrature absolute tolerance")
    g.add_argument("--tol-rel", type=float, default=d(None), help="quadrature relative tolerance")
    g.add_argument("--seed", type=int, default=d(None), help="RNG seed (overrides GSEK_SEED, default 0)")
    g.add_argument("--jobs", type=int, default=d(1), help="worker processes")
    g.add_argument("--report", default=d(None), help="also write the output to this path")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gsek", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"gsek {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="evaluate one quantity")
    _global_flags(p, suppress=True)
    p.add_argument("--quantity", required=True, choices=QUANTITIES)
    p.add_argument("--potential", default="zero", help="potential in the DSL, e.g. ball:1,1")
    p.add_argument("--t", type=float, help="time t (or s for p_alpha)")
    p.add_argument("--lam", type=float, help="resolvent parameter lambda (e_star)")
    p.add_argument("--x", help="comma-separated point")
    p.add_argument("--y", help="comma-separated point")
    p.add_argument("--alpha", help="comma-separated drift vector (p_alpha)")
    p.add_argument("--paths", type=int, default=100_000, help="Monte Carlo paths (fk_ratio)")
    p.add_argument("--steps", type=int, default=1024, help="bridge time steps (fk_ratio)")

    p = sub.add_parser("verify", help="run a verification suite")
    _global_flags(p, suppress=True)
    p.add_argument("--suite", required=True, choices=tuple(SUITES) + ("all",))
    p.add_argument("--mc-paths", type=int, default=1_000_000, help="paths for Monte Carlo checks")

    p = sub.add_parser("counterexample-d3", help="L(n) against the analytic lower bound B(n)")
    _global_flags(p, suppress=True)
    p.add_argument("--n", default="10,100,1000", help="comma-separated list of n")

    p = sub.add_parser("compare", help="the six equivalent norms of one potential")
    _global_flags(p, suppress=True)
    p.add_argument("--potential", required=True)
    p.add_argument("--T", type=float, default=1.0)
    return parser


# --------------------------------------------------------------------------
# helpers


def _seed(args) -> int:
    if args.seed is not None:
        return int(args.seed)
    env = os.environ.get("GSEK_SEED")
    if env is None or env.strip() == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"GSEK_SEED must be an integer, got {env!r}")


def _quad(args) -> QuadConfig:
    changes = {}
    if args.tol_abs is not None:
        changes["abs_tol"] = args.tol_abs
    if args.tol_rel is not None:
        changes["rel_tol"] = args.tol_rel
    return QuadConfig().replace(**changes)


def _vector(text, dim, name):
    if text is None:
        return None
    try:
        vals = [float(v) for v in text.replace(" ", "").split(",") if v != ""]
    except ValueError:
        raise UsageError(f"--{name} must be a comma-separated list of numbers, got {text!r}")
    if len(vals) != dim:
        raise UsageError(f"--{name} has {len(vals)} components, expected {dim}")
    return np.array(vals)


def _need(value, flag, quantity):
    if value is None:
        raise UsageError(f"--quantity {quantity} needs --{flag}")
    return value


def _emit(text: str, args):
    sys.stdout.write(text if text.endswith("\n") else text + "\n")
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


def result_dict(res) -> dict:
    """Common fields of Estimate / SupResult / MCEstimate / plain floats."""
    if isinstance(res, SupResult):
        out = res.as_dict()
        out["kind"] = "sup"
        out["status"] = "pass" if res.converged else "inconclusive"
        return out
    if isinstance(res, Estimate):
        out = res.as_dict()
        out["kind"] = "estimate"
        out["status"] = "pass" if res.converged else "inconclusive"
        return out
    if isinstance(res, MCEstimate):
        out = res.as_dict()
        out["value"] = res.mean
        out["kind"] = "monte_carlo"
        out["err_bound"] = res.stderr
        out["status"] = "pass"
        return out
    return {"kind": "exact", "value": float(res), "err_bound": 0.0, "status": "pass"}


# --------------------------------------------------------------------------
# eval


def evaluate_quantity(args):
    dim = args.dim
    if dim is None:
        raise UsageError("eval needs --dim")
    quantity = args.quantity
    V = parse_potential(args.potential, dim)
    cfg = _quad(args)
    search = SearchConfig()
    x = _vector(args.x, dim, "x")
    y = _vector(args.y, dim, "y")

    if quantity == "g":
        return kern.gauss_weierstrass(_need(args.t, "t", quantity), _need(x, "x", quantity), _need(y, "y", quantity))
    if quantity == "p_alpha":
        alpha = _need(_vector(args.alpha, dim, "alpha"), "alpha", quantity)
        return kern.drifted_kernel(alpha, _need(args.t, "t", quantity), _need(x, "x", quantity),
                                   _need(y, "y", quantity))
    if quantity == "delta_inv":
        return q.delta_inverse(V, x, cfg) if x is not None else q.delta_inverse_norm(V, cfg, search)
    if quantity == "e_star":
        return q.e_star(V, _need(args.lam, "lam", quantity), cfg, search)
    t = _need(args.t, "t", quantity)
    if quantity in ("S", "N", "K"):
        pointwise = {"S": q.S_value, "N": q.N_value, "K": q.K_potential_value}[quantity]
        norm = {"S": q.sup_S, "N": q.sup_N, "K": q.K_norm}[quantity]
        if (x is None) != (y is None):
            raise UsageError(f"--quantity {quantity} needs both --x and --y, or neither for the sup norm")
        return pointwise(V, t, x, y, cfg) if x is not None else norm(V, t, cfg, search)
    if quantity == "A":
        return q.heat_mass_value(V, t, x, cfg) if x is not None else q.A_value(V, t, cfg, search)
    if quantity == "bracket":
        return q.bracket_value(V, t, x, cfg) if x is not None else q.kato_bracket(V, t, cfg, search)
    if quantity == "r_star":
        return q.r_star(V, t, cfg, search)
    if quantity == "fk_ratio":
        bc = BridgeConfig(paths=args.paths, steps=args.steps, seed=_seed(args))
        return feynman_kac_ratio(V, t, _need(x, "x", quantity), _need(y, "y", quantity), bc, jobs=args.jobs)
    raise UsageError(f"unknown quantity {quantity!r}")


def cmd_eval(args) -> int:
    res = evaluate_quantity(args)
    out = result_dict(res)
    params = {k: getattr(args, k) for k in ("t", "lam", "x", "y", "alpha") if getattr(args, k) is not None}
    doc = {"quantity": args.quantity, "dim": args.dim, "potential": args.potential, "params": params,
           "seed": _seed(args), "version": __version__, **out}
    if args.format == "csv":
        cols = ["quantity", "dim", "potential", "value", "err_bound", "status", "kind"]
        _emit(report.rows_csv([doc], cols), args)
    else:
        _emit(report.dumps(doc), args)
    return EXIT_CODES[out["status"]]


# --------------------------------------------------------------------------
# verify


def _suite_job(job):
    name, ctx, dim = job
    kwargs = {}
    if dim is not None and "dims" in inspect.signature(SUITES[name]).parameters:
        kwargs["dims"] = (dim,)
    if kwargs:
        t0 = time.perf_counter()
        checks = SUITES[name](ctx, **kwargs)
        return SuiteReport(name, checks, ctx.seed, ctx.as_dict(), time.perf_counter() - t0)
    return run_suite(name, ctx)


def cmd_verify(args) -> int:
    seed = _seed(args)
    ctx = SuiteContext(quad=_quad(args), search=SearchConfig(), seed=seed, mc_paths=args.mc_paths,
                       jobs=max(1, args.jobs))
    names = list(SUITES) if args.suite == "all" else [args.suite]
    jobs = [(n, ctx, args.dim) for n in names]
    if args.jobs > 1 and len(jobs) > 1:
        # suites run in separate processes; the MC inside each stays single-process
        inner = [(n, SuiteContext(ctx.quad, ctx.search, seed, ctx.mc_paths, 1), d) for n, _, d in jobs]
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            reports = list(ex.map(_suite_job, inner))
    else:
        reports = [_suite_job(j) for j in jobs]
    doc = report.suite_document(reports, __version__, seed, ctx.as_dict())
    text = report.checks_csv(doc) if args.format == "csv" else report.dumps(doc)
    _emit(text, args)
    for s in doc["meta"]["suites"]:
        print(f"{s['name']}: {s['status']} ({s['checks']} checks, {s['wall_time']:.1f}s)", file=sys.stderr)
    return EXIT_CODES[doc["meta"]["status"]]


# --------------------------------------------------------------------------
# counterexample-d3


COUNTEREXAMPLE_COLUMNS = ("n", "L", "L_err", "B", "B_quadrature", "L_ge_B", "B_increasing", "status")


def cmd_counterexample(args) -> int:
    try:
        ns = [int(v) for v in args.n.replace(" ", "").split(",") if v]
    except ValueError:
        raise UsageError(f"--n must be a comma-separated list of integers, got {args.n!r}")
    if not ns or any(n < 1 for n in ns):
        raise UsageError("--n entries must be positive integers")
    rows = counterexample_rows(ns, _quad(args))
    status = report.overall_status(r["status"] for r in rows)
    if args.format == "csv":
        _emit(report.rows_csv(rows, COUNTEREXAMPLE_COLUMNS), args)
    else:
        meta = {"schema_version": report.SCHEMA_VERSION, "version": __version__, "seed": _seed(args),
                "config": _quad(args).as_dict(), "status": status}
        _emit(report.dumps({"meta": meta, "rows": rows}), args)
    return EXIT_CODES[status]


# --------------------------------------------------------------------------
# compare


COMPARE_NAMES = ("S", "N", "K", "r_star", "e_star", "A")


def compare_quantities(V, T: float, cfg: QuadConfig, search: SearchConfig = SearchConfig()) -> dict:
    """The six norms at time T (e_* at lambda = 1/T)."""
    return {
        "S": q.sup_S(V, T, cfg, search),
        "N": q.sup_N(V, T, cfg, search),
        "K": q.K_norm(V, T, cfg, search),
        "r_star": q.r_star(V, T, cfg, search),
        "e_star": q.e_star(V, 1.0 / T, cfg, search),
        "A": q.A_value(V, T, cfg, search),
    }


def ratio_matrix(values: dict) -> dict:
    out = {}
    for a, b in itertools.product(values, values):
        va, vb = values[a], values[b]
        out[f"{a}/{b}"] = va / vb if vb != 0 else (math.nan if va == 0 else math.inf)
    return out


def cmd_compare(args) -> int:
    if args.dim is None:
        raise UsageError("compare needs --dim")
    if not args.T > 0:
        raise UsageError("--T must be positive")
    V = parse_potential(args.potential, args.dim)
    res = compare_quantities(V, args.T, _quad(args))
    values = {k: r.value for k, r in res.items()}
    ratios = ratio_matrix(values)
    status = "pass" if all(r.converged for r in res.values()) else "inconclusive"
    if args.format == "csv":
        rows = [{"quantity": k, "value": r.value, "err_bound": r.total_err, "converged": r.converged}
                for k, r in res.items()]
        rows += [{"quantity": k, "value": v} for k, v in ratios.items()]
        _emit(report.rows_csv(rows, ("quantity", "value", "err_bound", "converged")), args)
    else:
        doc = {"meta": {"schema_version": report.SCHEMA_VERSION, "version": __version__, "potential": args.potential,
                        "dim": args.dim, "T": args.T, "lambda": 1.0 / args.T, "status": status},
               "quantities": {k: result_dict(r) for k, r in res.items()}, "ratios": ratios}
        _emit(report.dumps(doc), args)
    return EXIT_CODES[status]


COMMANDS = {"eval": cmd_eval, "verify": cmd_verify, "counterexample-d3": cmd_counterexample,
            "compare": cmd_compare}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.verb](args)
    except (ParseError, UsageError) as exc:
        print(f"gsek: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GsekError as exc:
        print(f"gsek: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
