"""Command-line entry point.

Exit codes: 0 success, 2 certified negative (separation certificate, failed
condition or failed check), 1 error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .body import SymmetricBody, Tolerance, in_circum
from .decomposition import AderDecomposition, find_ader, john_residual, reduce_support, verify_ader
from .distance import SearchOptions, bm_planar, bm_to_ball, bm_to_parallelogram
from .ellipsoid import john, loewner_body
from .fixtures import FIXTURE_NAMES, body_from_file, export_fixtures, load_fixture, verify_fixture
from .onesym import equality_condition_check, is_rotation_invariant, mirrored_arc_body, one_sym_pair_distance
from .stability import (CSV_HEADER, cover_experiment, poly_positive_on, spot_values, stability_scan,
                        verify_factorization, F_POLY, G_POLY, random_polygon)

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 1, 2


class CliError(Exception):
    pass


@dataclass
class RunConfig:
    seed: int = 0
    trials: int = 1
    tol: Tolerance = Tolerance()
    out: str | None = None
    svg: str | None = None


def generate_random_body(config: RunConfig, index: int) -> SymmetricBody:
    return random_polygon(config.seed, index)


def _emit(obj) -> None:
    print(json.dumps(obj, indent=1, default=_json_default))


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o).__name__)


def _body(path: str) -> SymmetricBody:
    try:
        return body_from_file(path)
    except FileNotFoundError:
        raise CliError(f"no such file: {path}") from None
    except json.JSONDecodeError as e:
        raise CliError(f"malformed JSON in {path}: {e}") from None
    except (KeyError, TypeError, ValueError) as e:
        raise CliError(f"invalid body in {path}: {e}") from None


def _opts(args) -> SearchOptions:
    tol = Tolerance() if args.tol is None else Tolerance(optimizer=args.tol)
    return SearchOptions(restarts=args.restarts, seed=args.seed, tol=tol)


# ---------------------------------------------------------------- handlers

def cmd_john(args) -> int:
    K = _body(args.body)
    E = john(K, args.eps)
    res, D = john_residual(K, E)
    _emit({"Q": E.Q, "decomposition_residual": res,
           "contacts": None if D is None else D.contacts, "weights": None if D is None else D.weights})
    return EXIT_OK


def cmd_loewner(args) -> int:
    K = _body(args.body)
    E = loewner_body(K, args.eps)
    _emit({"Q": E.Q})
    return EXIT_OK


def cmd_ader(args) -> int:
    K = _body(args.body)
    r0, R0 = in_circum(K)
    r = r0 if args.r is None else args.r
    R = R0 if args.R is None else args.R
    out = find_ader(K, r, R)
    if isinstance(out, AderDecomposition):
        red = reduce_support(out)
        _emit({"status": "certified", "verified": verify_ader(red, 1e-8, K),
               "ratio": R / r, "decomposition": red.to_dict()})
        return EXIT_OK
    _emit({"status": "separated", "certificate": out.to_dict()})
    return EXIT_NEGATIVE


def cmd_bm(args) -> int:
    opts = _opts(args)
    if args.target == "ball":
        res = bm_to_ball(_body(args.body), opts)
    elif args.target == "pgram":
        res = bm_to_parallelogram(_body(args.body), opts)
    else:
        res = bm_planar(_body(args.a), _body(args.b), opts)
    _emit(res.to_dict())
    return EXIT_OK


def cmd_onesym(args) -> int:
    if args.action == "check":
        rep = equality_condition_check(_body(args.body), samples=args.samples)
        _emit(rep.to_dict())
        return EXIT_OK if rep.condition_holds else EXIT_NEGATIVE
    if args.action == "arc-body":
        try:
            v = [float(t) for t in args.v.split(",")]
        except ValueError:
            raise CliError("--v expects two comma-separated numbers") from None
        if len(v) != 2:
            raise CliError("--v expects two comma-separated numbers")
        K = mirrored_arc_body(v, args.arc_samples)
        rep = equality_condition_check(K)
        d = rep.to_dict()
        d["rot45_invariant"] = is_rotation_invariant(K)
        d["body"] = K.to_dict()
        if args.out:
            Path(args.out).write_text(json.dumps(K.to_dict()) + "\n")
        _emit(d)
        return EXIT_OK
    res = one_sym_pair_distance(_body(args.a), _body(args.b), _opts(args))
    _emit(res.to_dict())
    return EXIT_OK


def _csv_text(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _svg_scatter(records, path: str) -> None:
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise CliError("SVG output needs matplotlib (install the 'plot' extra)") from None
    matplotlib.rcParams["svg.hashsalt"] = "bmlab"
    eps = np.array([r.epsilon for r in records])
    dp = np.array([r.dist_pgram for r in records])
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.scatter(eps, dp, s=6)
    xs = np.linspace(0, max(eps.max(), 1e-3), 100)
    ax.plot(xs, np.minimum(1 + 5 * math.sqrt(2) * xs, 1.5), "r-", lw=1)
    ax.set_xlabel("sqrt(2) - d(K, disc)")
    ax.set_ylabel("d(K, square)")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_stability(args) -> int:
    if args.action == "verify-poly":
        fac = verify_factorization()
        lo = "95/100"
        pos = {"f": poly_positive_on(F_POLY, lo, 1), "g": poly_positive_on(G_POLY, lo, 1)}
        spots = spot_values()
        ok = fac.identity_holds and fac.norm_identity and fac.radicand_identity and all(pos.values()) \
            and all(spots.values())
        _emit({"factorization": fac.to_dict(), "positive_on_interval": pos, "spot_values": spots, "ok": ok})
        return EXIT_OK if ok else EXIT_NEGATIVE
    recs = stability_scan(args.trials, args.seed, args.workers)
    text = _csv_text([r.csv_row() for r in recs], CSV_HEADER)
    if args.out:
        Path(args.out).write_text(text)
    if args.svg:
        _svg_scatter(recs, args.svg)
    ok = all(r.passed and r.floor_ok for r in recs)
    summary = {"trials": len(recs), "all_pass": ok, "min_slack": min(r.slack for r in recs),
               "max_epsilon": max(r.epsilon for r in recs)}
    replays = [r.replay for r in recs if r.replay]
    summary["replays"] = len(replays)
    summary["replays_ok"] = all(all(v for k, v in rp.items() if k.endswith("_ok") or k.endswith("_in_K"))
                                for rp in replays)
    _emit(summary)
    return EXIT_OK if ok else EXIT_NEGATIVE


def cmd_cover(args) -> int:
    rep = cover_experiment(args.trials, args.seed, args.workers)
    if args.out:
        rows = [[i, f"{db:.12g}", f"{dp:.12g}", f"{min(db, dp):.12g}"] for i, db, dp in rep.values]
        Path(args.out).write_text(_csv_text(rows, ["id", "dist_ball", "dist_pgram", "min"]))
    _emit(rep.to_dict())
    return EXIT_OK if rep.all_below else EXIT_NEGATIVE


def cmd_fixtures(args) -> int:
    if args.action == "list":
        for n in FIXTURE_NAMES:
            print(n)
        return EXIT_OK
    if args.action == "export":
        for p in export_fixtures(args.dir):
            print(p)
        return EXIT_OK
    if args.action == "random":
        K = generate_random_body(RunConfig(seed=args.seed), args.index)
        print(K.to_json())
        return EXIT_OK
    names = args.names or list(FIXTURE_NAMES)
    ok = True
    for n in names:
        try:
            fx = load_fixture(n)
        except KeyError as e:
            raise CliError(str(e.args[0])) from None
        for c in verify_fixture(fx):
            ok &= c.ok
            print(f"{'PASS' if c.ok else 'FAIL'} {c.fixture:16s} {c.quantity:18s} "
                  f"expected={c.expected:.10g} got={c.got:.10g} tol={c.tol:g}")
    return EXIT_OK if ok else EXIT_NEGATIVE


# ---------------------------------------------------------------- parser

def _search_flags(p) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--tol", type=float, default=None, help="optimizer tolerance")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bmlab", description="Certified Banach-Mazur distance computations.")
    ap.add_argument("--version", action="version", version=f"bmlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("john", help="maximal-volume inscribed ellipsoid")
    p.add_argument("--body", required=True)
    p.add_argument("--eps", type=float, default=1e-8)
    p.set_defaults(func=cmd_john)

    p = sub.add_parser("loewner", help="minimal-volume circumscribed ellipsoid")
    p.add_argument("--body", required=True)
    p.add_argument("--eps", type=float, default=1e-8)
    p.set_defaults(func=cmd_loewner)

    p = sub.add_parser("ader-certify", help="contact decomposition or separation certificate")
    p.add_argument("--body", required=True)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--R", type=float, default=None)
    p.set_defaults(func=cmd_ader)

    p = sub.add_parser("bm", help="Banach-Mazur distance searches")
    bs = p.add_subparsers(dest="target", required=True)
    for name, two in (("ball", False), ("pgram", False), ("planar", True)):
        q = bs.add_parser(name)
        if two:
            q.add_argument("--a", required=True)
            q.add_argument("--b", required=True)
        else:
            q.add_argument("--body", required=True)
        _search_flags(q)
        q.set_defaults(func=cmd_bm)

    p = sub.add_parser("onesym", help="1-symmetric planar bodies")
    os_ = p.add_subparsers(dest="action", required=True)
    q = os_.add_parser("check")
    q.add_argument("--body", required=True)
    q.add_argument("--samples", type=int, default=512)
    q.set_defaults(func=cmd_onesym)
    q = os_.add_parser("arc-body", help="body through a chosen point v with a mirrored middle arc")
    q.add_argument("--v", default="0.9,0.28")
    q.add_argument("--arc-samples", type=int, default=64)
    q.add_argument("--out", default=None)
    q.set_defaults(func=cmd_onesym)
    q = os_.add_parser("pair")
    q.add_argument("--a", required=True)
    q.add_argument("--b", required=True)
    _search_flags(q)
    q.set_defaults(func=cmd_onesym)

    p = sub.add_parser("stability", help="stability sweep and exact polynomial checks")
    ss = p.add_subparsers(dest="action", required=True)
    q = ss.add_parser("scan")
    q.add_argument("--trials", type=int, default=100)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", default=None, help="CSV path")
    q.add_argument("--svg", default=None, help="optional scatter plot")
    q.add_argument("--workers", type=int, default=None, help="defaults to BM_LAB_THREADS or 1")
    q.set_defaults(func=cmd_stability)
    q = ss.add_parser("verify-poly")
    q.set_defaults(func=cmd_stability)

    p = sub.add_parser("cover", help="two-ball cover sweep")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_cover)

    p = sub.add_parser("fixtures", help="fixture corpus")
    fs = p.add_subparsers(dest="action", required=True)
    fs.add_parser("list").set_defaults(func=cmd_fixtures)
    q = fs.add_parser("verify")
    q.add_argument("names", nargs="*")
    q.set_defaults(func=cmd_fixtures)
    q = fs.add_parser("export")
    q.add_argument("--dir", default="fixtures")
    q.set_defaults(func=cmd_fixtures)
    q = fs.add_parser("random", help="print the random body for (seed, index)")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--index", type=int, default=0)
    q.set_defaults(func=cmd_fixtures)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors; map to the error code
        code = e.code if isinstance(e.code, int) else 1
        return EXIT_OK if code == 0 else EXIT_ERROR
    try:
        return int(args.func(args))
    except CliError as e:
        print(f"bmlab: {e}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, RuntimeError, KeyError, np.linalg.LinAlgError) as e:
        print(f"bmlab: error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
