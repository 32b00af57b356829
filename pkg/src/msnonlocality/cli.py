"""Command-line interface: ``msnl <command> ...`` (or ``python -m msnonlocality``).

Every command writes JSON or CSV to stdout or ``--output``.  Failures print a
JSON record ``{"command", "stage", "message"}`` to stderr and exit with
status 2.  ``reproduce-figures`` writes into ``--out``, defaulting to
``$MSNL_OUTPUT_DIR`` or the current directory.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import algebra, optimize, quantum, strategies
from .classify import classify as classify_values

OUTPUT_DIR_ENV = "MSNL_OUTPUT_DIR"

FIG2_COLUMNS = ["n", "kind", "theta", "quantum_value", "value", "conjecture", "residual", "converged"]
FIG3_COLUMNS = ["n", "kind", "identical", "general", "difference"]
ASYMPTOTE_COLUMNS = ["kind", "c0", "c1", "value_at_n", "n", "limit", "converged"]


class CLIError(Exception):
    def __init__(self, stage: str, message: str):
        super().__init__(message)
        self.stage = stage


def _poly(kind: str, n: int, m: int | None) -> algebra.MSPolynomial:
    if kind == "S":
        if m is None:
            raise CLIError("validate", "--kind S requires --m")
        return algebra.build_S(n, m)
    return algebra.ms_polynomial(kind, n)


def _exact(x) -> dict:
    return {"exact": str(x), "value": float(x)}


def _state(args) -> quantum.StateSpec:
    if args.state == "ghz":
        return quantum.StateSpec.ghz(args.n, args.theta)
    return quantum.StateSpec.w(args.n)


def _settings(args) -> quantum.MeasurementSettings | None:
    if getattr(args, "settings", None):
        text = args.settings
        if os.path.exists(text):
            text = Path(text).read_text()
        return quantum.MeasurementSettings.from_pairs(json.loads(text))
    if getattr(args, "identical_settings", None):
        t0, p0, t1, p1 = (float(v) for v in args.identical_settings.split(","))
        return quantum.MeasurementSettings.identical(args.n, (t0, p0), (t1, p1))
    return None


def _csv_text(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if row.get(k) is None else _fmt(row.get(k))) for k in columns})
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


# -- commands -----------------------------------------------------------------

def cmd_poly(args):
    return _poly(args.kind, args.n, args.m).to_dict()


def cmd_bounds(args):
    rows = []
    for m in range(1, args.n + 1):
        b = algebra.model_bound(args.n, m)
        rows.append({"m": m, "k": args.n - m, "polynomial": "M" if (args.n - m) % 2 == 0 else "M+",
                     "bound": float(b), "exact": str(b)})
    if args.format == "csv":
        return _csv_text(rows, ["m", "k", "polynomial", "bound", "exact"])
    return {"n": args.n, "local": {"M": 1.0, "M+": math.sqrt(2)},
            "algebraic": {"M": float(algebra.algebraic_bound("M", args.n)),
                          "M+": float(algebra.algebraic_bound("M+", args.n))},
            "model": rows}


def cmd_lhv_max(args):
    p = _poly(args.kind, args.n, args.m)
    value, witness = strategies.local_max(p, limit=args.limit)
    return {"n": args.n, "kind": args.kind, "local_max": _exact(value), "witness": [list(w) for w in witness]}


def cmd_model_max(args):
    p = _poly(args.kind, args.n, args.m)
    out = {"n": args.n, "kind": args.kind}
    if args.partition:
        part = strategies.Partition.parse(args.partition, args.n)
        value, witness = strategies.grouping_max(p, part)
        out.update(model="grouping", partition=str(part), value=_exact(value),
                   witness=[g.to_dict() for g in witness])
    elif args.broadcast is not None:
        B = strategies.BroadcastSet.parse(args.broadcast, args.n)
        value, witness = strategies.conditional_max(p, B, limit=args.limit)
        out.update(model="broadcasting", broadcasters=sorted(B.broadcasters), value=_exact(value),
                   witness={k: [list(w) for w in v] for k, v in witness.items()})
        if args.naive:
            out["naive"] = _exact(strategies.broadcast_max_naive(p, B))
    elif args.restrained:
        subset = [int(x) for x in args.restrained.split(",") if x.strip()]
        assignment = {}
        for item in (args.assign or "").split(","):
            if item.strip():
                src, dst = item.split(":")
                assignment[int(src)] = int(dst)
        cfg = strategies.RestrainedConfig(subset, assignment, args.n)
        outside = cfg.outside()
        value, _ = strategies.conditional_max(p, strategies.BroadcastSet(outside, args.n), limit=args.limit)
        out.update(model="restrained", subset=sorted(cfg.subset), value=_exact(value))
        if args.naive:
            out["naive"] = _exact(strategies.restrained_max_naive(p, cfg))
    else:
        raise CLIError("validate", "give one of --partition, --broadcast, --restrained")
    return out


def cmd_tight(args):
    part = strategies.Partition.parse(args.partition, args.n)
    strats = strategies.tight_strategy(args.n, part)
    p = algebra.build_S(args.n, part.m)
    value = algebra.evaluate_exact(p, strategies.strategy_table(args.n, strats))
    return {"n": args.n, "m": part.m, "partition": str(part), "polynomial": p.label,
            "value": _exact(value), "bound": _exact(algebra.model_bound(args.n, part.m)),
            "strategies": [g.to_dict() for g in strats]}


def cmd_quantum_corr(args):
    state = _state(args)
    settings = _settings(args)
    if settings is None:
        raise CLIError("validate", "give --settings or --identical-settings")
    if args.engine == "statevector":
        table = quantum.correlation_table_statevector(state, settings)
    elif state.kind == "GHZ":
        table = quantum.correlation_ghz_closed(state.theta, settings)
    else:
        table = quantum.correlation_w_closed(settings)
    rows = [{"assignment": a, "E": e} for a, e in table.to_csv_rows()]
    if args.format == "csv":
        return _csv_text(rows, ["assignment", "E"])
    return {"state": state.describe(), "engine": args.engine, "table": rows}


def cmd_optimize(args):
    state = _state(args)
    res = optimize.maximize(state, _poly(args.kind, args.n, args.m), budget=args.budget,
                            seed=args.seed, identical=args.identical, reference=_settings(args))
    out = res.to_dict()
    out.update(state=state.describe(), kind=args.kind)
    return out


def _theta_grid(points: int) -> np.ndarray:
    return np.linspace(math.pi / 4 / points, math.pi / 4, points)


def cmd_sweep_ghz(args):
    rows = []
    for n in args.n:
        for kind in args.kind:
            rows += optimize.sweep_ghz(n, _theta_grid(args.points), kind, budget=args.budget, seed=args.seed)
    if args.format == "json":
        return rows
    return _csv_text(rows, FIG2_COLUMNS)


def cmd_sweep_w(args):
    rows = []
    for kind in args.kind:
        rows += optimize.sweep_w(range(args.n_min, args.n_max + 1), kind, budget=args.budget,
                                 seed=args.seed, general_limit=args.general_limit)
    if args.format == "json":
        return rows
    return _csv_text(rows, FIG3_COLUMNS)


def cmd_asymptote(args):
    rows = [optimize.w_asymptote(kind, n=args.large_n, seed=args.seed).to_dict() for kind in args.kind]
    for row in rows:
        if row["kind"] == "M+":
            row["reference"] = 2 * math.sqrt(2 / math.e)
    if args.format == "csv":
        return _csv_text(rows, ASYMPTOTE_COLUMNS)
    return rows


def cmd_classify(args):
    cert = classify_values(args.n, args.m_value, args.mplus_value, margin=args.margin)
    return cert.to_dict()


def cmd_reproduce_figures(args):
    out_dir = Path(args.out or os.environ.get(OUTPUT_DIR_ENV, "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    fig2 = []
    for n in range(3, 7):
        for kind in ("M", "M+"):
            fig2 += optimize.sweep_ghz(n, _theta_grid(args.points), kind, budget=args.budget, seed=args.seed)
    fig3 = []
    for kind in ("M", "M+"):
        fig3 += optimize.sweep_w(range(3, 20), kind, budget=args.budget, seed=args.seed, general_limit=9)
    asym = [optimize.w_asymptote(kind, seed=args.seed).to_dict() for kind in ("M", "M+")]
    paths = {"fig2": out_dir / "fig2_ghz.csv", "fig3": out_dir / "fig3_w.csv",
             "fig3_asymptote": out_dir / "fig3_w_asymptote.csv"}
    paths["fig2"].write_text(_csv_text(fig2, FIG2_COLUMNS))
    paths["fig3"].write_text(_csv_text(fig3, FIG3_COLUMNS))
    paths["fig3_asymptote"].write_text(_csv_text(asym, ASYMPTOTE_COLUMNS))
    return {k: str(v) for k, v in paths.items()}


# -- parser -------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """Reports usage errors as JSON error records."""

    def error(self, message):
        command = self.prog.split()[-1] if " " in self.prog else None
        _fail(command, "parse", message)
        self.exit(2)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="msnl", description="Mermin-Svetlichny multipartite nonlocality toolkit")
    parser.add_argument("--output", "-o", help="write the result to this file instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        return p

    kinds = ["M", "M'", "M+", "M-", "S"]

    p = add("poly", cmd_poly, "print a polynomial as JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--kind", choices=kinds, default="M")
    p.add_argument("--m", type=int)

    p = add("bounds", cmd_bounds, "local, algebraic and model bounds")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--format", choices=["json", "csv"], default="json")

    p = add("lhv-max", cmd_lhv_max, "exact local maximum by enumeration")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--kind", choices=kinds, default="M")
    p.add_argument("--m", type=int)
    p.add_argument("--limit", type=int, default=strategies.LOCAL_LIMIT)

    p = add("model-max", cmd_model_max, "exact maximum under a communication model")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--kind", choices=kinds, default="S")
    p.add_argument("--m", type=int)
    p.add_argument("--partition", help='groups, e.g. "1,2;3,4"')
    p.add_argument("--broadcast", help='broadcasting parties, e.g. "3,4" ("" for none)')
    p.add_argument("--restrained", help='restrained subset, e.g. "1,2"')
    p.add_argument("--assign", help='outside party -> subset member, e.g. "3:1,4:2"')
    p.add_argument("--naive", action="store_true", help="also run the brute-force oracle (n <= 4)")
    p.add_argument("--limit", type=int, default=strategies.LOCAL_LIMIT)

    p = add("tight", cmd_tight, "strategy reaching the model bound for a partition")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--partition", required=True)

    def add_state(p):
        p.add_argument("--state", choices=["ghz", "w"], required=True)
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--theta", type=float, default=math.pi / 4, help="GHZ angle")
        p.add_argument("--settings", help="JSON list (or file) of [[theta0, phi0], [theta1, phi1]] per party")
        p.add_argument("--identical-settings", help="theta0,phi0,theta1,phi1 shared by all parties")

    p = add("quantum-corr", cmd_quantum_corr, "correlation table of a GHZ or W state")
    add_state(p)
    p.add_argument("--engine", choices=["statevector", "closed"], default="closed")
    p.add_argument("--format", choices=["json", "csv"], default="csv")

    p = add("optimize", cmd_optimize, "maximize an MS value over measurement settings")
    add_state(p)
    p.add_argument("--kind", choices=kinds, default="M")
    p.add_argument("--m", type=int)
    p.add_argument("--budget", type=int, default=50)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--identical", action="store_true")

    p = add("sweep-ghz", cmd_sweep_ghz, "GHZ maxima over a grid of state angles (CSV)")
    p.add_argument("--n", type=int, nargs="+", default=[3, 4, 5, 6])
    p.add_argument("--kind", nargs="+", choices=["M", "M+"], default=["M", "M+"])
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--budget", type=int, default=8)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--format", choices=["json", "csv"], default="csv")

    p = add("sweep-w", cmd_sweep_w, "W-state maxima over n (CSV)")
    p.add_argument("--n-min", type=int, default=3)
    p.add_argument("--n-max", type=int, default=19)
    p.add_argument("--kind", nargs="+", choices=["M", "M+"], default=["M", "M+"])
    p.add_argument("--budget", type=int, default=8)
    p.add_argument("--general-limit", type=int, default=9)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--format", choices=["json", "csv"], default="csv")

    p = add("asymptote", cmd_asymptote, "large-n limit of W-state maxima")
    p.add_argument("--kind", nargs="+", choices=["M", "M+"], default=["M", "M+"])
    p.add_argument("--large-n", type=int, default=10**5)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--format", choices=["json", "csv"], default="json")

    p = add("classify", cmd_classify, "certify multipartite nonlocal content")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m-value", type=float)
    p.add_argument("--mplus-value", type=float)
    p.add_argument("--margin", type=float, default=0.0)

    p = add("reproduce-figures", cmd_reproduce_figures, "write the GHZ and W datasets as CSV")
    p.add_argument("--out", help=f"output directory (default ${OUTPUT_DIR_ENV} or .)")
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--budget", type=int, default=8)
    p.add_argument("--seed", type=int, required=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.func(args)
    except CLIError as exc:
        return _fail(args.command, exc.stage, str(exc))
    except (ValueError, IndexError, TypeError, KeyError, json.JSONDecodeError) as exc:
        return _fail(args.command, "validate", str(exc))
    except Exception as exc:  # surfaced verbatim, never swallowed
        return _fail(args.command, "compute", f"{type(exc).__name__}: {exc}")
    text = result if isinstance(result, str) else json.dumps(result, indent=2) + "\n"
    try:
        if args.output:
            Path(args.output).write_text(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        return _fail(args.command, "write", str(exc))
    return 0


def _fail(command: str, stage: str, message: str) -> int:
    sys.stderr.write(json.dumps({"command": command, "stage": stage, "message": message}) + "\n")
    return 2


if __name__ == "__main__":
    sys.exit(main())
