"""Command-line interface: ``pointgames <command> ...``.

Exit codes: 0 success, 1 input error, 2 numerical or precondition failure,
3 I/O error.  Games are given as a file path or ``builtin:NAME`` (``penTIPG1``,
``penTIPG2``, ``penTIPG3``, ``toy``).  Set ``POINTGAMES_THREADS`` to evaluate
trade-off rows and expansion checks in parallel.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
import time

import numpy as np

from . import baselines, convert, gamefile
from .core import l1_norm, transpose
from .search import SearchError, run_search
from .validity import DENSE_LAMBDAS, GOLDEN_TOL, SELF_TOL, check_h_valid, check_v_valid

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("POINTGAMES_THREADS", "1")))
    except ValueError:
        return 1


def _load(spec: str) -> gamefile.GameFile:
    try:
        return gamefile.load_game(spec)
    except gamefile.GameFileError as exc:
        raise CliError(EXIT_INPUT, f"{spec}: {exc}") from exc
    except OSError as exc:
        raise CliError(EXIT_IO, f"{spec}: {exc.strerror or exc}") from exc


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        gamefile.atomic_write(path, text)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc.strerror or exc}") from exc


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def _fmt(x) -> str:
    if isinstance(x, bool) or x is None:
        return str(x)
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        return repr(x)
    return str(x)


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise CliError(EXIT_INPUT, f"not a list of numbers: {text!r}") from exc


def _c1(text: str):
    if text == "auto":
        return None
    try:
        return float(text)
    except ValueError as exc:
        raise CliError(EXIT_INPUT, f"--c1 must be 'auto' or a number, got {text!r}") from exc


# ---------------------------------------------------------------------------


def cmd_search(args) -> int:
    try:
        cfg = gamefile.load_search_config(args.config)
    except gamefile.GameFileError as exc:
        raise CliError(EXIT_INPUT, f"{args.config}: {exc}") from exc
    except OSError as exc:
        raise CliError(EXIT_IO, f"{args.config}: {exc.strerror or exc}") from exc
    if args.ridge is not None:
        cfg = dataclasses.replace(cfg, ridge=args.ridge)
    t0 = time.perf_counter()
    try:
        game = run_search(cfg)
    except SearchError as exc:
        raise CliError(EXIT_NUMERIC, f"search failed: {exc}") from exc
    elapsed = time.perf_counter() - t0
    d = game.diagnostics
    prov = {"source": "search", "eps_approx": game.eps_approx, "norm": game.norm,
            "point_count": game.point_count, "validity": d["validity"], "rank": d["rank"],
            "ridge": cfg.ridge, "qp_method": cfg.qp.method, "refine_rounds": d["refine_rounds"],
            "cuts": d["cuts"]}
    gf = gamefile.GameFile.from_game(game, cfg.grid, prov)
    _write(args.out, gamefile.dumps(gf))
    print(f"eps_approx {game.eps_approx:.6e}", file=sys.stderr)
    print(f"norm {game.norm:.6f}", file=sys.stderr)
    print(f"points {game.point_count}", file=sys.stderr)
    print(f"validity {d['validity']} (T-valid {d['t_valid']}, dense-valid {d['dense_valid']})",
          file=sys.stderr)
    print(f"time {elapsed:.3f}s", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    gf = _load(args.game)
    tol = args.tol if args.tol is not None else (GOLDEN_TOL if gf.is_golden else SELF_TOL)
    tier = "golden" if gf.is_golden else "self"
    v = gf.v_move()
    if not len(v):
        print("warning: empty game, nothing to check")
        return EXIT_OK
    h = gf.h_move()
    game = gf.game()
    checks = [("grid", gf.T)]
    if args.dense is not None:
        lams = DENSE_LAMBDAS if args.dense == len(DENSE_LAMBDAS) else np.logspace(-6, 6, args.dense)
        checks.append(("dense", lams))
    ok = True
    print(f"tier {tier} tol {tol:g}")
    for mode, lams in checks:
        for name, lines in (("h rows", check_h_valid(h, mode, lams, tol)),
                            ("v columns", check_v_valid(v, mode, lams, tol))):
            print(f"[{mode}] {name}:")
            for c, r in lines.lines.items():
                flag = "ok" if r.is_valid else "FAIL"
                print(f"  line {c:<10.6g} worst {r.worst_value: .3e} at lambda {r.worst_lambda:<9.4g} "
                      f"sum {r.sum_residual: .3e} {flag}")
            for r in lines.failures():
                print(f"  failure: {name[0]} {r.failure()}")
            ok &= lines.is_valid
    sym = l1_norm(h - transpose(v))
    print(f"eps_approx {game.eps_approx:.6e}")
    print(f"symmetry residual {sym:.3e}")
    if game.eps_approx > tol:
        print(f"failure: eps_approx {game.eps_approx:.3e} exceeds {tol:g}")
        ok = False
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_NUMERIC


def _params(game, args, *, expansion=False):
    decomp = convert.decompose_boundary(game)
    c1 = _c1(args.c1)
    if c1 is None and expansion:
        c1 = convert.expansion_c1(decomp, convert.select_m1(decomp, args.m1_rule))
    kw = {"m1_rule": args.m1_rule, "m2_rule": args.m2_rule}
    if expansion:
        kw["integral"] = not args.no_integral
    if args.delta is not None:
        return convert.conversion_params(decomp, c1, args.delta, **kw)
    return convert.conversion_params(decomp, c1, delta_offset=args.delta_offset, **kw)


def cmd_convert(args) -> int:
    game = _load(args.game).game()
    params = _params(game, args)
    report = convert.conversion_report(game, params)
    out = {"params": {k: getattr(params, k) for k in params.__dataclass_fields__},
           "report": report.as_dict()}
    out["params"]["review"] = list(params.review)
    out = _jsonable(out)
    for key in ("c1", "m1", "m2", "delta_min", "delta", "eta2"):
        print(f"{key} {getattr(params, key)!r}", file=sys.stderr)
    for key in ("err", "rc", "mu", "sc", "protocol_bias"):
        print(f"{key} {getattr(report, key)!r}", file=sys.stderr)
    for note in params.review:
        print(f"review: {note}", file=sys.stderr)
    _write(args.out, json.dumps(out, sort_keys=True, indent=1) + "\n")
    return EXIT_OK


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def cmd_tradeoff(args) -> int:
    game = _load(args.game).game()
    decomp = convert.decompose_boundary(game)
    c1 = _c1(args.c1)
    if args.deltas:
        deltas = _floats(args.deltas)
    else:
        if c1 is None:
            c1 = convert.default_c1(convert.select_m1(decomp, args.m1_rule), game.lam)
        dmin = convert.delta_min(decomp.eps1, decomp.eps2, c1)
        deltas = [dmin + o for o in _floats(args.offsets)]
    rows = convert.tradeoff_curve(game, c1, deltas, m1_rule=args.m1_rule, m2_rule=args.m2_rule,
                                  workers=_workers())
    _write(args.out, _csv(("delta", "err", "rc", "bias"),
                          [(r.delta, r.err, r.rc, r.bias) for r in rows]))
    return EXIT_OK


def cmd_expand(args) -> int:
    game = _load(args.game).game()
    params = _params(game, args, expansion=True)
    sample = []
    for tok in args.sample.split(","):
        tok = tok.strip()
        if tok:
            try:
                sample.append(tok if tok == "last" else int(tok))
            except ValueError as exc:
                raise CliError(EXIT_INPUT, f"bad --sample entry {tok!r}") from exc
    t0 = time.perf_counter()
    exp = convert.expand_tdpg(game, params, "all" if args.all else "sampled", sample, cap=args.cap,
                              workers=_workers())
    elapsed = time.perf_counter() - t0
    print(f"c1 {params.c1!r} m1 {params.m1!r} m2 {params.m2!r} delta {params.delta!r}")
    print(f"loop iterations {exp.loop.iterations} (gamma {exp.loop.gamma:.6e}), "
          f"sampled {list(exp.sampled) if not args.all else 'all'}")
    print(f"transitions checked {len(exp.transitions)} of {exp.n_transitions}")
    print(f"max frame support {exp.max_support} (bound {exp.support_bound})")
    print(f"max mass error {exp.max_mass_error:.3e}")
    (pt, _), = exp.final_frame.items()
    print(f"final point ({pt[0]!r}, {pt[1]!r}), expected ({exp.expected_final[0]!r}, "
          f"{exp.expected_final[1]!r}), err {exp.err!r}")
    print(f"time {elapsed:.3f}s")
    ok = exp.all_valid and exp.max_support <= exp.support_bound and exp.final_offset() <= 1e-10
    if exp.max_support > exp.support_bound:
        print("warning: frame support exceeds the point-count bound")
    print("all transitions valid" if exp.all_valid else "invalid transitions found")
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_baseline(args) -> int:
    lam = args.lam
    if args.protocol == "sr":
        r = baselines.sr_solve(lam)
        print(f"SR lambda {lam!r}: bias {r.bias!r} reward {r.reward!r} rounds {r.rounds} qubits {r.qubits}")
        print("  " + " ".join(f"{k} {v!r}" for k, v in r.aux.items()))
    elif args.protocol == "ddb":
        r = baselines.ddb_result(lam)
        print(f"DDB lambda {lam!r} ({r.convention}): root {r.reward!r} bias {r.bias!r}")
        if lam > 1:
            s1 = baselines.ddb_asymptotic(lam, 1)
            s2 = baselines.ddb_asymptotic(lam, 2)
            print(f"  order-2 series {s2!r} (diff {r.reward - s2:.3e})")
            print(f"  order-1 series {s1!r} (diff {r.reward - s1:.3e})")
    else:
        r = baselines.abdr_reward(lam)
        print(f"ABDR lambda {lam!r}: bias {r.bias!r} reward {r.reward!r} rounds {r.rounds} qubits {r.qubits}")
    return EXIT_OK


def cmd_compare(args) -> int:
    games = []
    for spec in args.game or ():
        gf = _load(spec)
        game = gf.game()
        params = _params(game, args)
        games.append((gf.provenance.get("name", os.path.basename(spec)), game,
                      convert.conversion_report(game, params)))
    rows = baselines.compare_table(args.lam or [6.0], games)
    _write(args.out, _csv(("protocol", "lambda", "bias", "rc", "sc"), [r.as_tuple() for r in rows]))
    return EXIT_OK


# ---------------------------------------------------------------------------


def _conversion_flags(p: argparse.ArgumentParser, m1="lemma", m2="closed-form") -> None:
    p.add_argument("--c1", default="auto", help="'auto' or a value in the admissible interval")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--delta-offset", type=float, default=1e-5, help="delta = delta_min + offset")
    g.add_argument("--delta", type=float, help="absolute delta")
    p.add_argument("--m1-rule", choices=convert.M1_RULES, default=m1)
    p.add_argument("--m2-rule", choices=convert.M2_RULES, default=m2)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pointgames", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("search", help="run the four-step search")
    p.add_argument("config", help="JSON search config or builtin:NAME")
    p.add_argument("-o", "--out", required=True, help="output game file")
    p.add_argument("--ridge", type=float, help="override the step-2 ridge weight")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("verify", help="check validity of a game")
    p.add_argument("game")
    p.add_argument("--dense", type=int, nargs="?", const=len(DENSE_LAMBDAS), metavar="N",
                   help="also sweep N log-spaced parameters in [1e-6, 1e6] (default 601)")
    p.add_argument("--tol", type=float, help="override the tolerance tier")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("convert", help="conversion parameters and resources")
    p.add_argument("game")
    _conversion_flags(p)
    p.add_argument("-o", "--out", help="write the report as JSON")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("tradeoff", help="CSV of err/rounds against delta")
    p.add_argument("game")
    p.add_argument("--c1", default="auto")
    p.add_argument("--m1-rule", choices=convert.M1_RULES, default="lemma")
    p.add_argument("--m2-rule", choices=convert.M2_RULES, default="closed-form")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--offsets", default="1e-3,1e-4,1e-5,1e-6,1e-7", help="offsets above delta_min")
    g.add_argument("--deltas", help="absolute deltas")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("expand", help="build and check the time-dependent game")
    p.add_argument("game")
    _conversion_flags(p, m1="dominating", m2="split")
    p.add_argument("--sample", default="0,1,last", help="loop iterations to check")
    p.add_argument("--all", action="store_true", help="check every loop iteration")
    p.add_argument("--cap", type=int, default=100_000)
    p.add_argument("--no-integral", action="store_true", help="keep delta even if 1/eta2 is fractional")
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("baseline", help="reference protocol values")
    p.add_argument("protocol", choices=("sr", "ddb", "abdr"))
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("compare", help="CSV comparison of baselines and games")
    p.add_argument("--lambda", dest="lam", type=float, action="append")
    p.add_argument("--game", action="append", help="game file or builtin:NAME (repeatable)")
    _conversion_flags(p)
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except convert.DeltaOutOfRange as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"delta_min {exc.delta_min!r}", file=sys.stderr)
        return EXIT_NUMERIC
    except (convert.ConversionError, convert.ExpansionError, baselines.BaselineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except gamefile.GameFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
