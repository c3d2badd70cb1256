"""Command-line entry point ``qesdwp``.

Exit codes: 0 success, 1 usage or parameter error, 2 method disagreement,
3 oracle mismatch. Errors go to stderr as ``error: <code>: <message>``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import warnings
from typing import List, Optional

import numpy as np

from . import bethe, oracle, spectra
from .errors import InvalidQesParameters, MethodDisagreement, QesError
from .models import ManningParams, QesState, RazavyParams, ShifmanParams, potential_eval

SCHEMA_VERSION = "1"
SEED_ENV = "QESDWP_SEED"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DISAGREE = 2
EXIT_MISMATCH = 3


class UsageError(Exception):
    code = "usage"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def fmt(x) -> str:
    return "%.12g" % x


def rnd(x):
    """Round to 12 significant digits for JSON; shortest repr of that value is emitted."""
    if x is None:
        return None
    return float(fmt(x))


def _root_json(roots):
    if all(isinstance(r, float) for r in roots):
        return [rnd(r) for r in roots]
    return [[rnd(complex(r).real), rnd(complex(r).imag)] for r in roots]


def _root_cell(r) -> str:
    if isinstance(r, float):
        return fmt(r)
    r = complex(r)
    im = float(fmt(r.imag))
    return f"{fmt(r.real)}{'+' if im >= 0 else '-'}{fmt(abs(im))}j"


# ---------------------------------------------------------------------------
# document assembly
# ---------------------------------------------------------------------------


def _state_json(state: QesState, node=None, residual=None) -> dict:
    out = {
        "level_index": state.level_index,
        "energy": rnd(state.energy),
        "roots": _root_json(state.roots),
        "coeffs": [rnd(c) for c in state.coeffs],
        "method": state.method,
    }
    if state.manning_v3 is not None:
        out["v3"] = rnd(state.manning_v3)
    if node is not None:
        out["node_count"] = node
    if residual is not None:
        out["residual"] = rnd(residual)
    return out


def _document(command: dict, model, params: dict, states: list, diagnostics: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "model": model,
        "params": {k: rnd(v) if isinstance(v, float) else v for k, v in params.items()},
        "states": states,
        "diagnostics": diagnostics,
    }


def _dump_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False, default=str) + "\n"


def _dump_csv(header: List[str], rows: List[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(c) if isinstance(c, float) else ("" if c is None else c) for c in row])
    return buf.getvalue()


def _dump_table(header: List[str], rows: List[list]) -> str:
    cells = [header] + [[fmt(c) if isinstance(c, float) else ("" if c is None else str(c)) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


STATE_HEADER = ["level", "energy", "v3", "method", "roots", "coeffs"]


def _state_rows(states) -> List[list]:
    return [
        [
            s.level_index,
            float(s.energy),
            None if s.manning_v3 is None else float(s.manning_v3),
            s.method,
            ";".join(_root_cell(r) for r in s.roots),
            ";".join(fmt(c) for c in s.coeffs),
        ]
        for s in states
    ]


def _emit(fmt_name: str, doc: dict, header: List[str], rows: List[list]) -> str:
    if fmt_name == "json":
        return _dump_json(doc)
    if fmt_name == "csv":
        return _dump_csv(header, rows)
    return _dump_table(header, rows)


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


def _add_model_flags(p: argparse.ArgumentParser):
    p.add_argument("model", choices=["manning", "razavy", "shifman"])
    p.add_argument("--v1", type=float)
    p.add_argument("--v2", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--xi", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--a", type=float)


def _params(args):
    need = {"manning": ("v1", "v2", "n"), "razavy": ("xi", "m"), "shifman": ("a", "n")}[args.model]
    missing = [f"--{k}" for k in need if getattr(args, k) is None]
    if missing:
        raise UsageError(f"{args.model} requires {' '.join(missing)}")
    if args.model == "manning":
        return ManningParams(args.v1, args.v2, args.n)
    if args.model == "razavy":
        return RazavyParams(args.xi, args.m)
    return ShifmanParams(args.a, args.n)


def _solver_options() -> bethe.SolverOptions:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return bethe.SolverOptions()
    try:
        seed = int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None
    return bethe.SolverOptions(rng_seed=seed)


def _command_echo(args) -> dict:
    return {k: (rnd(v) if isinstance(v, float) else v) for k, v in sorted(vars(args).items()) if k != "func"}


def _diagnostics(spec: spectra.Spectrum) -> dict:
    def clean(v):
        return None if v != v else rnd(v)

    return {
        "agreement": clean(spec.method_agreement),
        "root_agreement": clean(spec.root_agreement),
        "warnings": list(spec.flags),
    }


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_solve(args) -> tuple:
    params = _params(args)
    spec = spectra.assemble_spectrum(params, _solver_options(), method=args.method)
    doc = _document(
        _command_echo(args), params.model, params.as_dict(), [_state_json(s) for s in spec.states], _diagnostics(spec)
    )
    return _emit(args.format, doc, STATE_HEADER, _state_rows(spec.states)), EXIT_OK


def _table_rows(args, opts):
    name = args.name
    if name == "manning-t1":
        header = ["v1", "v2", "n", "level", "energy", "v3"]
        rows = []
        for n, v2 in enumerate((-6.0, -12.0, -18.0)):
            spec = spectra.assemble_spectrum(ManningParams(1.0, v2, n), opts)
            rows += [[1.0, v2, n, s.level_index, float(s.energy), float(s.manning_v3)] for s in spec.states]
        return header, rows
    if name == "razavy-t2":
        header = ["xi", "M", "level", "energy"]
        rows = []
        for M in range(1, 4):
            spec = spectra.assemble_spectrum(RazavyParams(args.xi, M), opts)
            rows += [[float(args.xi), M, s.level_index, float(s.energy)] for s in spec.states]
        return header, rows
    if name == "razavy-splitting":
        if args.m_max < 1:
            raise UsageError("--m-max must be >= 1")
        table = spectra.splitting_table(args.xi, args.m_max, opts)
        header = ["M", "level", "energy", "delta"]
        rows = []
        for row in table.rows:
            for i, e in enumerate(row.energies):
                delta = row.deltas[i // 2] if i % 2 == 1 else None
                rows.append([row.M, i, float(e), None if delta is None else float(delta)])
        return header, rows
    header = ["a", "n", "level", "energy", "roots"]
    rows = []
    for n in range(3):
        spec = spectra.assemble_spectrum(ShifmanParams(args.a, n), opts)
        rows += [
            [float(args.a), n, s.level_index, float(s.energy), ";".join(_root_cell(r) for r in s.roots)]
            for s in spec.states
        ]
    return header, rows


def cmd_table(args) -> tuple:
    header, rows = _table_rows(args, _solver_options())
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": _command_echo(args),
        "columns": header,
        "rows": [[rnd(c) if isinstance(c, float) else (c if c != "" else None) for c in r] for r in rows],
    }
    return _emit(args.format, doc, header, rows), EXIT_OK


def cmd_verify(args) -> tuple:
    params = _params(args)
    spec = spectra.assemble_spectrum(params, _solver_options())
    base = oracle.default_grid(params)
    try:
        grid = oracle.GridSpec(args.x_max or base.x_max, args.points or base.n_points)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    tol = args.tol if args.tol is not None else (1e-4 if args.richardson else 1e-3)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = oracle.verify_states(params, spec.states, grid, use_richardson=args.richardson)
    ok = report.all_matched(tol)
    states = [
        _state_json(s, node=report.node_counts[i], residual=report.residuals[i]) for i, s in enumerate(spec.states)
    ]
    matches = [
        None
        if m is None
        else {"qes_energy": rnd(m.qes_energy), "grid_energy": rnd(m.grid_energy), "abs_err": rnd(m.abs_err), "grid_index": m.grid_index}
        for m in report.matches
    ]
    diag = _diagnostics(spec)
    diag["warnings"] += [str(w.message) for w in caught]
    diag["grid"] = {
        "x_max": rnd(grid.x_max),
        "n_points": grid.n_points,
        "richardson": bool(args.richardson),
        "tol": rnd(tol),
        "matched": report.matched(tol),
        "total": len(report.matches),
        "max_error": None if report.max_error != report.max_error else rnd(report.max_error),
        "matches": matches,
        "residuals_refined": [rnd(r) for r in report.residuals_refined],
        "margin_ok": bool(report.margin_ok),
    }
    doc = _document(_command_echo(args), params.model, params.as_dict(), states, diag)
    header = ["level", "qes_energy", "grid_energy", "abs_err", "grid_index", "node_count", "residual"]
    rows = [
        [
            i,
            float(s.energy) if params.model != "manning" else float(s.manning_v3),
            None if m is None else m.grid_energy,
            None if m is None else m.abs_err,
            None if m is None else m.grid_index,
            report.node_counts[i],
            float(report.residuals[i]),
        ]
        for i, (s, m) in enumerate(zip(spec.states, report.matches))
    ]
    if params.model == "manning":
        header[1] = "v3"
        for r, m in zip(rows, report.matches):
            r.insert(2, float(params.energy))
        header.insert(2, "qes_energy")
    return _emit(args.format, doc, header, rows), (EXIT_OK if ok else EXIT_MISMATCH)


FIGURES = {
    "fig1": {"range": 4.0},
    "fig2": {"range": 2.5},
    "fig3": {"range": 6.0},
}


def cmd_plot_data(args) -> tuple:
    if args.samples < 2:
        raise UsageError("--samples must be >= 2")
    fig = args.figure
    span = args.x_range or FIGURES[fig]["range"]
    xs = np.linspace(-span, span, args.samples)
    rows = []
    if fig == "fig1":
        v = _manning_potential(args.v1, args.v2, args.v3, xs)
    elif fig == "fig2":
        params = RazavyParams(args.xi, args.m)
        v = potential_eval(params, xs)
    else:
        v = potential_eval(ShifmanParams(args.a, args.n), xs)
    rows += [["potential", i, float(x), float(val)] for i, (x, val) in enumerate(zip(xs, v))]
    if fig == "fig2":
        spec = spectra.assemble_spectrum(params, _solver_options())
        rows += [["energy", s.level_index, None, float(s.energy)] for s in spec.states]
    header = ["series", "index", "x", "value"]
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": _command_echo(args),
        "columns": header,
        "rows": [[rnd(c) if isinstance(c, float) else c for c in r] for r in rows],
    }
    return _emit(args.format, doc, header, rows), EXIT_OK


def _manning_potential(v1, v2, v3, xs):
    # the figure fixes v3 directly, so evaluate the closed form without a level constraint
    sech2 = 1.0 / np.cosh(xs) ** 2
    return -(v1 * sech2**3 + v2 * sech2**2 + v3 * sech2)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qesdwp", description="Quasi-exact levels of three double-well potentials.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("solve", help="solve one parameter set")
    _add_model_flags(s)
    s.add_argument("--method", choices=["bethe", "determinant", "both"], default="both")
    s.add_argument("--format", choices=["json", "csv", "table"], default="json")
    s.set_defaults(func=cmd_solve)

    t = sub.add_parser("table", help="reproduce a reference table")
    t.add_argument("name", choices=["manning-t1", "razavy-t2", "razavy-splitting", "shifman-t4"])
    t.add_argument("--xi", type=float, default=2.0)
    t.add_argument("--m-max", type=int, default=12)
    t.add_argument("--a", type=float, default=0.1)
    t.add_argument("--format", choices=["json", "csv", "table"], default="csv")
    t.set_defaults(func=cmd_table)

    v = sub.add_parser("verify", help="check levels against a finite-difference solve")
    _add_model_flags(v)
    v.add_argument("--x-max", type=float)
    v.add_argument("--points", type=int)
    v.add_argument("--richardson", action="store_true")
    v.add_argument("--tol", type=float)
    v.add_argument("--format", choices=["json", "csv", "table"], default="json")
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("plot-data", help="sample a potential for replotting")
    d.add_argument("figure", choices=sorted(FIGURES))
    d.add_argument("--samples", type=int, default=401)
    d.add_argument("--x-range", type=float)
    d.add_argument("--v1", type=float, default=1.0)
    d.add_argument("--v2", type=float, default=-12.0)
    d.add_argument("--v3", type=float, default=15.255)
    d.add_argument("--xi", type=float, default=2.0)
    d.add_argument("--m", type=int, default=12)
    d.add_argument("--a", type=float, default=0.1)
    d.add_argument("--n", type=int, default=1)
    d.add_argument("--format", choices=["json", "csv", "table"], default="csv")
    d.set_defaults(func=cmd_plot_data)
    return p


def _fail(code: str, message: str, status: int) -> int:
    sys.stderr.write(f"error: {code}: {message}\n")
    return status


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        out, status = args.func(args)
    except UsageError as exc:
        return _fail(UsageError.code, str(exc), EXIT_USAGE)
    except MethodDisagreement as exc:
        return _fail(exc.code, str(exc), EXIT_DISAGREE)
    except (InvalidQesParameters, QesError) as exc:
        return _fail(exc.code, str(exc), EXIT_USAGE)
    sys.stdout.write(out)
    return status


if __name__ == "__main__":
    sys.exit(main())
