"""Command-line front end.

Exit status: 0 success, 2 usage error, 3 invalid model, 4 failed check.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .bmodes import KINDS, assemble, semidefinite_cholesky
from .correlation import n_functions
from .coupling import coupling_table
from .model import (VOIGT_PAIRS, ModelError, ScalarModel, VectorModel, atomic_write_text,
                    load_model, model_from_dict, model_to_dict, tensor_to_voigt, validate)
from .simulate import GridSpec, resolve_threads, sample
from .verify import OracleFailure, closed_form, isotropy_report, mc_report, oracle_report

log = logging.getLogger("isofield")

EXIT_USAGE, EXIT_INVALID, EXIT_CHECK = 2, 3, 4
LABELS = (-1, 0, 1)


class _Invalid(Exception):
    pass


# ---------------------------------------------------------------------------
# output helpers

def _header(args) -> str:
    if getattr(args, "deterministic", False):
        return ""
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return f"# isofield {__version__} {stamp}\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def _emit(args, text: str) -> None:
    out = getattr(args, "out", None)
    if out:
        atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


def _load(path):
    model = load_model(path, check=False)
    bad = validate(model)
    if bad:
        for v in bad:
            log.error("%s", v)
        raise _Invalid(path)
    return model


def _value_columns(model):
    if isinstance(model, ScalarModel):
        return ["value"]
    if isinstance(model, VectorModel):
        return [f"u[{i}]" for i in LABELS]
    return [f"t[{LABELS[i]},{LABELS[j]}]" for i, j in VOIGT_PAIRS]


def _corr_columns(model):
    if isinstance(model, ScalarModel):
        return ["R"]
    if isinstance(model, VectorModel):
        return [f"R[{a},{b}]" for a in LABELS for b in LABELS]
    pairs = [f"{LABELS[i]}{LABELS[j]}" for i, j in VOIGT_PAIRS]
    return [f"R[{p},{q}]" for p in pairs for q in pairs]


def _corr_values(model, xi):
    R = closed_form(model, xi)
    if isinstance(model, ScalarModel):
        return [R]
    if isinstance(model, VectorModel):
        return list(np.asarray(R).ravel())
    return list(tensor_to_voigt(R).ravel())


def _vector_arg(text, n=3):
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers")
    if len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers")
    return np.array(vals)


# ---------------------------------------------------------------------------
# subcommands

def cmd_tables(args):
    if args.table == "coupling":
        rows = coupling_table(args.lmax, args.tol)
        text = _csv_text(["l", "m", "l1", "m1", "l2", "m2", "value"], rows)
    elif args.table == "bmatrix":
        c = assemble(args.kind, args.lmax, args.v1, args.v2)
        L = semidefinite_cholesky(c.matrix)
        modes = c.modes
        rows = []
        for name, M in (("b", c.matrix), ("L", L)):
            for i, j in zip(*np.nonzero(np.abs(M) > args.tol)):
                rows.append([name, i, j, " ".join(map(str, modes[i])),
                             " ".join(map(str, modes[j])), M[i, j]])
        text = _csv_text(["matrix", "row", "col", "row_mode", "col_mode", "value"], rows)
    else:
        N = n_functions(args.lambda_rho, args.v1, args.v2)
        rows = [[n + 1, q + 1, N[n, q]] for n in range(3) for q in range(5)]
        text = _csv_text(["n", "q", "value"], rows)
    _emit(args, _header(args) + text)
    return 0


def cmd_eval(args):
    model = _load(args.model)
    if args.curve is not None:
        rho_max, npts = args.curve
        d = np.asarray(args.direction, float)
        d = d / np.linalg.norm(d)
        xis = [d * t for t in np.linspace(0.0, rho_max, int(npts))]
    else:
        xis = [args.xi]
    rows = [list(xi) + _corr_values(model, xi) for xi in xis]
    _emit(args, _header(args) + _csv_text(["x", "y", "z"] + _corr_columns(model), rows))
    return 0


def _read_grid(path) -> GridSpec:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(t) for t in rec[:3]])
            except ValueError:
                if rows:
                    raise
                continue  # header line
    return GridSpec(np.array(rows, float).reshape(-1, 3))


def cmd_simulate(args):
    model = _load(args.model)
    grid = _read_grid(args.grid)
    real = sample(model, grid, args.seed, args.lmax, args.n_realizations, args.threads)
    log.info("truncation tail %.3e", real.tail)
    vals = real.values
    rows = []
    for r in range(real.n_realizations):
        for p, (rad, th, ph) in enumerate(grid.points):
            v = vals[r, p]
            if v.ndim == 0:
                vv = [v]
            elif v.ndim == 1:
                vv = list(v)
            else:
                vv = [v[i, j] for i, j in VOIGT_PAIRS]
            rows.append([r, rad, th, ph] + vv)
    head = _header(args) + f"# seed={args.seed} lmax={args.lmax} tail={real.tail:.3e}\n"
    _emit(args, head + _csv_text(["realization", "r", "theta", "phi"] + _value_columns(model), rows))
    return 0


def cmd_verify(args):
    model = _load(args.model)
    if not (args.oracle or args.isotropy or args.mc):
        args.oracle = True
    reports = {}
    try:
        if args.oracle:
            reports["oracle"] = oracle_report(model, seed=args.seed)
        if args.isotropy:
            reports["isotropy"] = isotropy_report(lambda x: closed_form(model, x), seed=args.seed)
        if args.mc:
            reports["monte_carlo"] = mc_report(model, args.mc, seed=args.seed, lmax=args.lmax,
                                               threads=args.threads)
    except OracleFailure as exc:
        log.error("oracle failure: %s", exc)
        return EXIT_CHECK
    ok = all(r.passed for r in reports.values())
    out = {"passed": ok, "reports": {k: r.to_dict() for k, r in reports.items()}}
    _emit(args, json.dumps(out, indent=2) + "\n")
    return 0 if ok else EXIT_CHECK


def cmd_validate(args):
    with open(args.model) as fh:
        model = model_from_dict(json.load(fh))
    bad = validate(model)
    for v in bad:
        log.error("%s", v)
    if bad:
        return EXIT_INVALID
    if args.out:
        atomic_write_text(args.out, json.dumps(model_to_dict(model), indent=2) + "\n")
    else:
        print("ok")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (written atomically); default stdout")
    common.add_argument("--deterministic", action="store_true",
                        help="omit the timestamp header")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $ISOFIELD_THREADS or 1)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="isofield", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("tables", help="coefficient tables")
    tsub = t.add_subparsers(dest="table", required=True)
    tc = tsub.add_parser("coupling", parents=[common])
    tc.add_argument("--lmax", type=int, required=True)
    tc.add_argument("--tol", type=float, default=1e-14)
    tb = tsub.add_parser("bmatrix", parents=[common])
    tb.add_argument("--kind", choices=KINDS, required=True)
    tb.add_argument("--lmax", type=int, required=True)
    tb.add_argument("--v1", type=float, default=0.5)
    tb.add_argument("--v2", type=float, default=0.0)
    tb.add_argument("--tol", type=float, default=1e-14)
    tn = tsub.add_parser("nfunctions", parents=[common])
    tn.add_argument("--lambda-rho", type=float, required=True)
    tn.add_argument("--v1", type=float, default=0.5)
    tn.add_argument("--v2", type=float, default=0.0)

    e = sub.add_parser("eval", parents=[common], help="closed-form correlation")
    e.add_argument("--model", required=True)
    g = e.add_mutually_exclusive_group(required=True)
    g.add_argument("--xi", type=_vector_arg)
    g.add_argument("--curve", type=lambda s: _vector_arg(s, 2), metavar="RHO_MAX,N")
    e.add_argument("--direction", type=_vector_arg, default=np.array([0.0, 1.0, 0.0]))

    s = sub.add_parser("simulate", parents=[common], help="sample realizations on a grid")
    s.add_argument("--model", required=True)
    s.add_argument("--grid", required=True, help="CSV with columns r, theta, phi")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--lmax", type=int, default=12)
    s.add_argument("--n-realizations", type=int, default=1)

    vf = sub.add_parser("verify", parents=[common], help="oracle, isotropy and MC checks")
    vf.add_argument("--model", required=True)
    vf.add_argument("--oracle", action="store_true")
    vf.add_argument("--isotropy", action="store_true")
    vf.add_argument("--mc", type=int, default=0, metavar="N")
    vf.add_argument("--seed", type=int, default=0)
    vf.add_argument("--lmax", type=int, default=12)

    va = sub.add_parser("validate", parents=[common], help="check a model file")
    va.add_argument("--model", required=True)
    return p


_COMMANDS = {"tables": cmd_tables, "eval": cmd_eval, "simulate": cmd_simulate,
             "verify": cmd_verify, "validate": cmd_validate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    if args.threads is None and os.environ.get("ISOFIELD_THREADS"):
        args.threads = resolve_threads()
    for name in ("lmax", "n_realizations", "mc"):
        if getattr(args, name, 0) is not None and getattr(args, name, 0) < 0:
            parser.print_usage(sys.stderr)
            log.error("--%s must be nonnegative", name.replace("_", "-"))
            return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except _Invalid:
        return EXIT_INVALID
    except ModelError as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    except (OSError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
