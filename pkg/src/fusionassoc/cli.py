"""Command line entry point ``fusionassoc``.

Exit codes: 0 all checks passed, 1 a check failed, 2 bad configuration,
3 a sample point outside its domain.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .fuchsian import FuchsianError, MatrixSeries, fuchsian_solve, residual
from .heisenberg import FockModule, Momenta, Quadruple
from .logseries import BranchCutError, LogPowerSeries, SeriesError
from .pipeline import RegionError, check_associativity, check_pentagon, sample_points
from .rewriter import (
    FLAVOR_XMY,
    FLAVOR_Y,
    ReductionContext,
    ReductionError,
    connection_matrix,
    constant_term,
    index_set,
    reduce_to_basis,
)

EXIT_OK = 0
EXIT_CHECK = 1
EXIT_CONFIG = 2
EXIT_REGION = 3

log = logging.getLogger("fusionassoc")


class ConfigError(ValueError):
    pass


def load_schema() -> dict:
    text = resources.files("fusionassoc").joinpath("schemas/report.schema.json").read_text()
    return json.loads(text)


# ---------------------------------------------------------------------------
# parsing helpers


def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc


def _complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ConfigError(f"complex numbers are [re, im] pairs, got {v!r}")
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, str):
        return complex(v.replace(" ", "").replace("i", "j"))
    return complex(float(v))


def _fractions(text: str, n: int) -> list:
    try:
        vals = [Fraction(t.strip()) for t in str(text).split(",") if t.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"cannot parse momenta {text!r}") from exc
    if len(vals) != n:
        raise ConfigError(f"expected {n} momenta, got {len(vals)}")
    return vals


def _points(doc) -> list:
    if isinstance(doc, dict):
        doc = doc.get("points", [])
    if not isinstance(doc, list):
        raise ConfigError("points must be a list of [x, y] pairs")
    out = []
    for p in doc:
        if isinstance(p, dict):
            out.append((_complex(p["x"]), _complex(p["y"])))
        elif isinstance(p, (list, tuple)) and len(p) == 2:
            out.append((_complex(p[0]), _complex(p[1])))
        else:
            raise ConfigError(f"bad point {p!r}")
    return out


def _modules(doc) -> list:
    if isinstance(doc, dict) and "modules" in doc:
        doc = doc["modules"]
    if isinstance(doc, dict):
        doc = [doc, doc, doc]
    if not isinstance(doc, list) or len(doc) != 3:
        raise ConfigError("module config must describe three Fock modules")
    try:
        return [FockModule.from_json(d) for d in doc]
    except (KeyError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad module config: {exc}") from exc


def _context(mods: list, N: int) -> tuple:
    a, b, c = (m.momentum for m in mods)
    M = Momenta.of(a, b, c)
    ctx = ReductionContext.fock(M, max(m.grade_cutoff for m in mods), N,
                                mods[0].enlarged_cap,
                                tuple(m.complement_scale for m in mods))
    return ctx, M


def _dump(doc, path: str | None) -> None:
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _envelope(args, result: dict, passed: bool) -> dict:
    return {
        "command": args.command if not getattr(args, "sub", None) else f"{args.command} {args.sub}",
        "version": __version__,
        "seed": args.seed,
        "mode": args.mode,
        "passed": bool(passed),
        "result": result,
    }


def _write_csv(path: str, header: list, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


# ---------------------------------------------------------------------------
# commands


def cmd_series_eval(args) -> int:
    doc = _read_json(args.input)
    try:
        s = LogPowerSeries.from_json_dict(doc)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad series JSON: {exc}") from exc
    if args.at is None:
        raise ConfigError("series eval needs --at")
    z = _complex(args.at)
    val, tail = s.eval(z)
    ok = args.tol is None or tail <= args.tol
    result = {"at": [z.real, z.imag], "value": [val.real, val.imag], "tail": tail,
              "series": s.to_json_dict()}
    _dump(_envelope(args, result, ok), args.out)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_fuchsian_solve(args) -> int:
    doc = _read_json(args.input)
    exact = args.mode == "exact"
    try:
        A = MatrixSeries.from_json_dict(doc, exact=exact)
    except (FuchsianError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    order = args.order if args.order is not None else A.order
    Y = fuchsian_solve(A, order)
    res = residual(A.truncate(max(order, A.order)) if A.order < order else A.truncate(order), Y)
    tol = args.tol if args.tol is not None else 1e-10
    ok = res <= tol
    result = {"residual": res, "order": order, "solution": Y.to_json_dict()}
    if args.out:
        _dump(Y.to_json_dict(), args.out)
    if args.report or not args.out:
        _dump(_envelope(args, result, ok), args.report)
    return EXIT_OK if ok else EXIT_CHECK


def cmd_reduce(args) -> int:
    mods = _modules(_read_json(args.module_config))
    ctx, _ = _context(mods, args.N)
    qdoc = _read_json(args.quadruple)
    try:
        q = Quadruple.from_json(qdoc)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad quadruple JSON: {exc}") from exc
    flavor = FLAVOR_Y if args.flavor == "y" else FLAVOR_XMY
    try:
        lc = reduce_to_basis(ctx, q, flavor)
        lc.check_ring()
    except ReductionError as exc:
        log.error("%s", exc)
        return EXIT_CHECK
    _dump(_envelope(args, lc.to_json_dict(), True), args.out)
    return EXIT_OK


def cmd_connection_matrix(args) -> int:
    mods = _modules(_read_json(args.module_config))
    ctx, _ = _context(mods, args.N)
    flavor = FLAVOR_Y if args.flavor == "y" else FLAVOR_XMY
    if args.basepoint is None:
        raise ConfigError("connection-matrix needs --basepoint")
    bp = args.basepoint
    try:
        base = Fraction(bp) if args.mode == "exact" else _complex(bp)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad basepoint {bp!r}") from exc
    order = args.order if args.order is not None else 8
    try:
        Lam = connection_matrix(ctx, flavor, base, order, complement_scale=mods[2].complement_scale)
    except ValueError as exc:
        if "branch cut" in str(exc) or "nonzero" in str(exc):
            log.error("%s", exc)
            return EXIT_REGION
        raise
    _dump(Lam.to_json_dict(), args.out)
    if args.csv:
        lam0 = constant_term(Lam)
        labels = [f"{a}|h{h}k{k}" for a, h, k in index_set(ctx)]
        _write_csv(args.csv, ["row"] + labels,
                   [[labels[i]] + [f"{lam0[i, j].real:.12g}" for j in range(Lam.r)] for i in range(Lam.r)])
    return EXIT_OK


def cmd_assoc(args) -> int:
    a, b, c = _fractions(args.momenta, 3)
    if args.points:
        pts = _points(_read_json(args.points))
    else:
        pts = sample_points(np.random.default_rng(args.seed), args.n_points)
    if not pts:
        raise ConfigError("points list is empty")
    tol = args.tol if args.tol is not None else 1e-6
    try:
        rep = check_associativity(Momenta.of(a, b, c), pts, tol=tol, G_max=args.G_max,
                                  order=args.order if args.order is not None else 24)
    except RegionError as exc:
        log.error("%s", exc)
        return EXIT_REGION
    _dump(_envelope(args, rep, rep["passed"]), args.report or args.out)
    if args.csv:
        _write_csv(args.csv, ["x_re", "x_im", "y_re", "y_im", "pipeline_re", "pipeline_im", "modes_re",
                              "modes_im", "relative_deviation", "passed"],
                   [p["x"] + p["y"] + p["abc_pipeline"] + p["abc_modes"] + [p["relative_deviation"], p["passed"]]
                    for p in rep["points"]])
    return EXIT_OK if rep["passed"] else EXIT_CHECK


def cmd_pentagon(args) -> int:
    mom = _fractions(args.momenta, 4)
    try:
        pt = [_complex(t) for t in str(args.point).split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad point {args.point!r}") from exc
    if len(pt) != 3:
        raise ConfigError("pentagon-check needs three coordinates")
    tol = args.tol if args.tol is not None else 1e-5
    try:
        rep = check_pentagon(mom, pt, tol=tol, G=args.G)
    except RegionError as exc:
        log.error("%s", exc)
        return EXIT_REGION
    _dump(_envelope(args, rep, rep["passed"]), args.report or args.out)
    if args.csv:
        _write_csv(args.csv, ["bracketing", "re", "im", "relative_deviation"],
                   [[k, v[0], v[1], rep["closed_form_relative_deviation"][k]] for k, v in rep["values"].items()])
    return EXIT_OK if rep["passed"] else EXIT_CHECK


# ---------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file whose keys set defaults for any flag")
    p.add_argument("--order", type=int, help="series truncation order")
    p.add_argument("--tol", type=float, help="check tolerance")
    p.add_argument("--mode", choices=("exact", "float"), default="float")
    p.add_argument("--out", help="output JSON path (stdout if omitted)")
    p.add_argument("--csv", help="also write a CSV table here")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fusionassoc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    series = sub.add_parser("series", help="log-power series utilities")
    ssub = series.add_subparsers(dest="sub", required=True)
    ev = ssub.add_parser("eval", help="evaluate a series JSON at a point")
    _common(ev)
    ev.add_argument("--input", required=True)
    ev.add_argument("--at", help="evaluation point, e.g. 0.5 or 0.5+0.1i")
    ev.set_defaults(func=cmd_series_eval)

    fu = sub.add_parser("fuchsian", help="Fuchsian system solver")
    fsub = fu.add_subparsers(dest="sub", required=True)
    so = fsub.add_parser("solve", help="fundamental solution of a system JSON")
    _common(so)
    so.add_argument("--input", required=True)
    so.add_argument("--report", help="path for the check report")
    so.set_defaults(func=cmd_fuchsian_solve)

    red = sub.add_parser("reduce", help="reduce a quadruple to the finite basis")
    _common(red)
    red.add_argument("--module-config", required=True)
    red.add_argument("--quadruple", required=True)
    red.add_argument("--flavor", choices=("y", "xmy"), default="xmy")
    red.add_argument("--N", type=int, default=4)
    red.set_defaults(func=cmd_reduce)

    cm = sub.add_parser("connection-matrix", help="emit the connection matrix as a system JSON")
    _common(cm)
    cm.add_argument("--module-config", required=True)
    cm.add_argument("--flavor", choices=("y", "xmy"), default="xmy")
    cm.add_argument("--N", type=int, default=0)
    cm.add_argument("--basepoint")
    cm.set_defaults(func=cmd_connection_matrix)

    ac = sub.add_parser("assoc-check", help="associativity at sample points")
    _common(ac)
    ac.add_argument("--momenta", default="1,1,1")
    ac.add_argument("--points", help="JSON list of [x, y] points")
    ac.add_argument("--n-points", type=int, default=20, dest="n_points")
    ac.add_argument("--G-max", type=int, default=12, dest="G_max")
    ac.add_argument("--report")
    ac.set_defaults(func=cmd_assoc)

    pc = sub.add_parser("pentagon-check", help="five bracketings at a point")
    _common(pc)
    pc.add_argument("--momenta", default="1,1,1,1")
    pc.add_argument("--point", default="7,6,4")
    pc.add_argument("--G", type=int, default=8)
    pc.add_argument("--report")
    pc.set_defaults(func=cmd_pentagon)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list) -> argparse.Namespace:
    """Config keys act as flags; flags given on the command line win."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    cfg = _read_json(args.config)
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    extra = []
    for key, val in sorted(cfg.items()):
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ConfigError(f"unknown config key {key!r}")
        flag = "--" + key.replace("_", "-")
        if attr in ("G_max", "n_points", "N", "G"):
            flag = {"G_max": "--G-max", "n_points": "--n-points", "N": "--N", "G": "--G"}[attr]
        if any(a == flag or a.startswith(flag + "=") for a in argv):
            continue
        if isinstance(val, list):
            val = ",".join(str(v) for v in val)
        extra += [flag, str(val)]
    return parser.parse_args(argv + extra)


def main(argv: list | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
        return int(args.func(args))
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except (RegionError, BranchCutError) as exc:
        log.error("%s", exc)
        return EXIT_REGION
    except (SeriesError, FuchsianError, ReductionError) as exc:
        log.error("%s", exc)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
