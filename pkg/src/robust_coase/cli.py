"""Command-line front end.

Every command prints JSON (numbers at 12 significant digits) unless
``--csv`` is given for tabular output or the command is inherently a
series (``compare``).  Exit status: 0 success, 2 invalid input, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Sequence

import numpy as np

from .coase import GameConfig, solve_known_values
from .dist import from_json, press
from .errors import ConsistencyError, NonConvergenceError, ProfileError, RobustCoaseError

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class _InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # one-line diagnostic instead of usage text
        raise _InputError(message)


def _round(x: Any) -> Any:
    if isinstance(x, (bool, np.bool_)) or x is None or isinstance(x, str):
        return x.item() if isinstance(x, np.bool_) else x
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if not math.isfinite(x) else float(f"{x:.12g}")
    if isinstance(x, dict):
        return {str(k): _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_round(v) for v in x]
    return x


def _fmt(x: Any) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def _csv_text(rows: Sequence[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(rows[0]))
    for r in rows:
        w.writerow([_fmt(v) for v in r.values()])
    return buf.getvalue()


def _emit(args, payload: dict | None = None, rows: Sequence[dict] | None = None, force_csv: bool = False) -> None:
    if rows is not None and (args.csv or force_csv or payload is None):
        text = _csv_text(rows)
    else:
        text = json.dumps(_round(payload), indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_json_arg(text: str, what: str) -> Any:
    if os.path.isfile(text):
        with open(text, encoding="utf-8") as fh:
            text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise _InputError(f"malformed {what} JSON: {exc.msg} at position {exc.pos}") from None


def _dist(args):
    return from_json(_load_json_arg(args.dist, "distribution"))


def _horizon(text: str) -> int | None:
    if text.lower() in ("inf", "infinite", "none"):
        return None
    try:
        return int(text)
    except ValueError:
        raise _InputError(f"horizon must be a positive integer or 'inf', got {text!r}") from None


def _cfg(args, dist=None, delta=None, horizon="unset") -> GameConfig:
    return GameConfig(
        dist if dist is not None else _dist(args),
        args.delta if delta is None else delta,
        _horizon(args.horizon) if horizon == "unset" else horizon,
        root_tol=args.tol_root,
        integral_tol=args.tol_int,
        grid_n=args.grid_n,
        allow_no_gap=getattr(args, "allow_no_gap", False),
    )


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise _InputError(f"{what} must be a comma-separated list of numbers") from None


def _delta_grid(text: str) -> list[float]:
    try:
        a, b, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise _InputError("--delta-grid must look like start:stop:step") from None
    if step <= 0 or b < a:
        raise _InputError("--delta-grid needs step > 0 and stop >= start")
    n = int(math.floor((b - a) / step + 1e-9)) + 1
    return [round(a + k * step, 12) for k in range(n)]


def _jobs(args) -> int:
    if args.jobs is not None:
        return max(1, args.jobs)
    env = os.environ.get("ROBUST_COASE_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise _InputError(f"ROBUST_COASE_JOBS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# commands


def cmd_press(args) -> None:
    F = _dist(args)
    G = press(F)
    payload = {"dist": F.to_json(), "support": [G.lo, G.hi]}
    rows = []
    for x in _floats(args.eval, "--eval") if args.eval else []:
        rows.append({"x": x, "G": float(G.cdf(x)), "L_inv": float(G.L_inv(min(max(x, G.lo), G.hi)))})
    payload["eval"] = rows
    _emit(args, payload, rows if rows else None)


def cmd_solve(args) -> None:
    dist = press(_dist(args)) if args.pressed else None
    eq = solve_known_values(_cfg(args, dist=dist))
    rows = [{"t": k + 1, "price": p, "cutoff": w, "mass_after": m}
            for k, (p, w, m) in enumerate(zip(eq.prices, eq.cutoffs, eq.masses[1:]))]
    _emit(args, eq.to_json(), rows)


def cmd_robust(args) -> None:
    from .robust import solve_robust

    cfg = _cfg(args)
    eq = solve_robust(cfg)
    if args.profile_out:
        from .sim import profile_table, robust_profile

        table = profile_table(robust_profile(cfg, eq), cfg)
        with open(args.profile_out, "w", encoding="utf-8") as fh:
            json.dump(_round(table), fh, indent=2)
    _emit(args, eq.to_json(), eq.rows())


def cmd_worst_case(args) -> None:
    from .nature import worst_case_partitional
    from .robust import solve_robust

    F = _dist(args)
    if args.prices:
        prices = _floats(args.prices, "--prices")
    else:
        prices = solve_robust(_cfg(args, dist=F)).prices
    res = worst_case_partitional(F, prices, args.delta, grid_n=args.search_grid)
    payload = res.to_json()
    payload["prices"] = prices
    _emit(args, payload)


def _compare_one(item):
    dist_spec, delta, horizon, grid_n = item
    from .nature import nature_commitment_profit
    from .robust import solve_robust

    F = from_json(dist_spec)
    base = solve_robust(GameConfig(F, delta, horizon, grid_n=grid_n)).profit
    com = nature_commitment_profit(F, delta).profit
    return {"delta": delta, "baseline_profit": base, "commitment_profit": com}


def cmd_compare(args) -> None:
    F = _dist(args)
    deltas = _delta_grid(args.delta_grid)
    if any(not (0 < d < 1) for d in deltas):
        raise _InputError("every discount factor in --delta-grid must lie in (0, 1)")
    horizon = _horizon(args.horizon)
    items = [(F.to_json(), d, horizon, args.grid_n) for d in deltas]
    jobs = min(_jobs(args), len(items))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_compare_one, items))
    else:
        rows = [_compare_one(it) for it in items]
    if args.plot:
        from .plotting import plot_compare

        plot_compare(rows, args.plot)
    if args.json:
        _emit(args, {"rows": rows})
    else:
        _emit(args, None, rows, force_csv=True)


def cmd_check(args) -> None:
    from .dist import check_ad_regularity, check_lipschitz
    from .nature import check_prm, prm_neighborhood

    F = _dist(args)
    out: dict = {"dist": F.to_json()}
    run_all = not (args.prm or args.lipschitz or args.ad is not None)
    if args.prm or run_all:
        rep = check_prm(F)
        out["prm"] = {"holds": rep.holds, "max_increase": rep.max_increase,
                      "first_violation": rep.violations[0] if rep.violations else None}
        if F.has_gap:
            nb = prm_neighborhood(F)
            out["prm"]["neighborhood"] = {"y_star": nb.y_star, "whole_support": nb.whole_support, "ok": nb.ok}
    if args.lipschitz or run_all:
        rep = check_lipschitz(F)
        out["lipschitz"] = {"holds": rep.holds, "constant": rep.constant, "note": rep.note}
    if args.ad is not None or run_all:
        alpha = 1.0 if args.ad is None else args.ad
        reports = {}
        for name, d in (("value", F), ("pressed", press(F))):
            rep = check_ad_regularity(d, alpha)
            reports[name] = {"holds": rep.holds, "upper": rep.constant, "lower": rep.lower, "note": rep.note}
        out["ad_regularity"] = {"alpha": alpha, **reports}
    _emit(args, out)


def cmd_benchmarks(args) -> None:
    from . import benchmarks as bm

    which = args.which
    if which == "naive":
        if args.boundary:
            _emit(args, {"boundary": bm.naive_boundary()})
            return
        r = bm.naive_maxmin_uniform(args.delta)
        _emit(args, {"v_star": r.v_star, "p1": r.p1, "profit": r.profit, "objective": r.objective,
                     "binds": r.binds, "sells": r.sells, "note": r.note,
                     "coefficient": bm.uniform_profit_coefficient(args.delta)})
    elif which == "discrete":
        r = bm.sophisticated_discrete_two_period(args.q, args.delta)
        p, s = bm.static_discrete_profit(args.q)
        _emit(args, {"p1": r.p1, "w": r.w, "p2": r.p2, "profit": r.profit, "corner": r.corner,
                     "reinforcing_fails": r.reinforcing_fails, "static_price": p, "static_profit": s})
    elif which == "constant-price":
        from .robust import solve_robust

        F = _dist(args)
        horizon = _horizon(args.horizon)
        if horizon is None:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                punish: Any = solve_robust(_cfg(args, dist=F, horizon=None)).profit
        else:
            punish = bm.finite_horizon_punishments(F, args.delta, horizon, grid_n=args.grid_n)
        r = bm.constant_price_equilibrium(F, args.delta, args.v_star, punish, horizon)
        payload = {"rho": r.rho, "valid": r.valid, "price": r.price, "violated": r.violated,
                   "last_period_rho": r.last_period_rho, "punishment": punish}
        rows = [{"K": k, "survival": r.survival(k)} for k in range(args.periods + 1)]
        payload["survival"] = rows
        _emit(args, payload, rows)
    elif which == "nogap":
        F = _dist(args)
        _emit(args, bm.no_gap_folk_support(F, args.delta, v_star=args.v_star).to_json())


def cmd_simulate(args) -> None:
    from .sim import audit_buyer, audit_nature, audit_seller, profile_from_json, simulate

    cfg = _cfg(args)
    spec = _load_json_arg(args.profile, "profile")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        profile = profile_from_json(spec, cfg)
    jobs = _jobs(args)
    rep = simulate(profile, cfg, args.paths, seed=args.seed, jobs=jobs)
    payload = rep.to_json()
    if args.audit:
        # a profile without off-path rules (a table) cannot be audited against
        # deviations that leave the table; report that instead of guessing
        runners = {
            "seller": lambda: audit_seller(profile, cfg, jobs=jobs),
            "nature": lambda: audit_nature(profile, cfg, jobs=jobs),
            "buyer": lambda: audit_buyer(profile, cfg),
        }
        audits = {}
        for name, run in runners.items():
            try:
                audits[name] = run().to_json()
            except ProfileError as exc:
                audits[name] = {"value": None, "error": str(exc)}
        rep.max_seller_deviation_gain = audits["seller"]["value"]
        rep.max_nature_deviation_drop = audits["nature"]["value"]
        rep.max_buyer_violation = audits["buyer"]["value"]
        payload = rep.to_json()
        payload["audits"] = audits
    rows = [{"t": t, "count": c} for t, c in sorted(rep.sale_time_histogram.items())]
    if args.hist_csv:
        with open(args.hist_csv, "w", encoding="utf-8") as fh:
            fh.write(_csv_text(rows))
    _emit(args, payload, rows)


# ---------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser, game: bool = True) -> None:
    p.add_argument("--out", help="write output to this file instead of standard output")
    p.add_argument("--csv", action="store_true", help="tabular output as CSV")
    p.add_argument("--tol-root", type=float, default=1e-10)
    p.add_argument("--tol-int", type=float, default=1e-10)
    p.add_argument("--grid-n", type=int, default=513)
    p.add_argument("--jobs", type=int, default=None, help="worker count (default: ROBUST_COASE_JOBS or all cores)")
    if game:
        p.add_argument("--dist", required=True, help="distribution JSON (inline or a file path)")
        p.add_argument("--delta", type=float, default=0.5)
        p.add_argument("--horizon", default="2", help="number of periods, or 'inf'")
        p.add_argument("--allow-no-gap", action="store_true", help="permit infinite horizons with lo = 0")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="robust-coase", description="Durable-goods pricing against worst-case information.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("press", help="pressed distribution of a prior")
    _common(p, game=False)
    p.add_argument("--dist", required=True)
    p.add_argument("--eval", help="comma-separated points at which to evaluate G")
    p.set_defaults(func=cmd_press)

    p = sub.add_parser("solve", help="known-values equilibrium")
    _common(p)
    p.add_argument("--pressed", action="store_true", help="press the distribution before solving")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("robust", help="robust equilibrium with worst-case thresholds")
    _common(p)
    p.add_argument("--profile-out", help="also write the equilibrium strategy table (JSON) here")
    p.set_defaults(func=cmd_robust)

    p = sub.add_parser("worst-case", help="worst partitional process against fixed prices")
    _common(p)
    p.add_argument("--prices", help="comma-separated price path (default: the robust equilibrium's)")
    p.add_argument("--search-grid", type=int, default=64, help="points per threshold coordinate")
    p.set_defaults(func=cmd_worst_case)

    p = sub.add_parser("compare", help="baseline versus commitment profit over a delta grid")
    _common(p)
    p.add_argument("--delta-grid", required=True, help="start:stop:step")
    p.add_argument("--plot", help="also render the series to this image file")
    p.add_argument("--json", action="store_true", help="JSON instead of CSV")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("check", help="regularity conditions of a prior")
    _common(p, game=False)
    p.add_argument("--dist", required=True)
    p.add_argument("--prm", action="store_true", help="pressed-ratio monotonicity")
    p.add_argument("--lipschitz", action="store_true")
    p.add_argument("--ad", type=float, default=None, metavar="ALPHA", help="quantile envelope with exponent ALPHA")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("benchmarks", help="alternative benchmarks")
    _common(p, game=False)
    p.add_argument("which", choices=["naive", "discrete", "constant-price", "nogap"])
    p.add_argument("--dist", default='{"kind": "uniform", "lo": 0, "hi": 2}')
    p.add_argument("--delta", type=float, default=0.75)
    p.add_argument("--horizon", default="inf")
    p.add_argument("--q", type=float, default=0.5, help="prior probability of the high value (discrete)")
    p.add_argument("--v-star", "--vstar", dest="v_star", type=float, default=None, help="on-path seller value")
    p.add_argument("--periods", type=int, default=10, help="survival table length (constant-price)")
    p.add_argument("--boundary", action="store_true", help="locate the naive never-sell boundary")
    p.set_defaults(func=cmd_benchmarks, allow_no_gap=True)

    p = sub.add_parser("simulate", help="Monte Carlo play and deviation audits of a profile")
    _common(p)
    p.add_argument("--profile", required=True, help="profile JSON (inline or a file path)")
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--audit", action="store_true")
    p.add_argument("--hist-csv", help="write the sale-time histogram here as CSV")
    p.set_defaults(func=cmd_simulate)
    return parser


def _validate(args) -> None:
    if args.tol_root <= 0 or args.tol_int <= 0:
        raise _InputError("tolerances must be positive")
    if args.tol_root > 1e-2 or args.tol_int > 1e-2:
        raise _InputError("tolerances above 1e-2 are not meaningful")
    if args.grid_n < 16:
        raise _InputError("--grid-n must be at least 16")
    if getattr(args, "which", None) == "constant-price" and args.v_star is None:
        raise _InputError("constant-price needs --v-star")
    if getattr(args, "paths", 1) < 1:
        raise _InputError("--paths must be at least 1")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _validate(args)
        args.func(args)
    except (_InputError, ValueError, ProfileError) as exc:
        print(f"error: {exc}".splitlines()[0], file=sys.stderr)
        return EXIT_INPUT
    except (NonConvergenceError, ConsistencyError) as exc:
        print(f"numerical failure: {exc}".splitlines()[0], file=sys.stderr)
        return EXIT_NUMERIC
    except RobustCoaseError as exc:
        print(f"error: {exc}".splitlines()[0], file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}".splitlines()[0], file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
