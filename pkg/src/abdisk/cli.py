"""Command-line front end.

Exit codes: 0 success, 1 computational or criterion failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import contextmanager

import numpy as np

from . import __version__, acceptance, specfun, spectra
from .eigensolve import DEFAULT_SEED, EigenSolveError
from .fem import DISK_TAGS, assemble, build_dofmap, double_cover_weight, write_matrix
from .mesh import MeshError, build_full_disk_mesh, build_half_disk_mesh, write_mesh

log = logging.getLogger("abdisk")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

SPECTRUM_COLUMNS = ("j", "lambda_extrapolated", "provenance", "residual", "double")


class UsageError(Exception):
    pass


# -- argument types ---------------------------------------------------------------------------

def parse_levels(text: str) -> tuple:
    """``"4:6,5:8,6:10"`` -> ((4, 6), (5, 8), (6, 10))."""
    try:
        out = tuple(tuple(int(v) for v in item.split(":")) for item in text.split(",") if item.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad levels {text!r}; expected base:grade pairs like 4:6,5:8") from None
    if len(out) < 2 or any(len(lv) != 2 or lv[0] < 1 or lv[1] < 0 for lv in out):
        raise argparse.ArgumentTypeError(f"bad levels {text!r}; need >= 2 base:grade pairs")
    return out


def parse_grid(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None


def parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _seed(text):
    v = int(text, 0)
    if v < 0:
        raise argparse.ArgumentTypeError("seed must be nonnegative")
    return v


# -- config file ----------------------------------------------------------------------------------

def load_config(path: str) -> dict:
    """Plain ``key = value`` lines; ``#`` starts a comment; dashes in keys
    are read as underscores."""
    out = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    with fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


# -- output --------------------------------------------------------------------------------------

def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    if v is None:
        return ""
    return str(v)


def _jsonable(v):
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


@contextmanager
def _sink(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def emit_table(columns, rows, fmt, path, extra=None):
    with _sink(path) as fh:
        if fmt == "json":
            doc = {"columns": list(columns), "rows": [{c: _jsonable(r[c]) for c in columns} for r in rows]}
            if extra:
                doc.update(extra)
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        else:
            fh.write(",".join(columns) + "\n")
            for r in rows:
                fh.write(",".join(_cell(r[c]) for c in columns) + "\n")


# -- commands --------------------------------------------------------------------------------------

def _levels_from(args) -> tuple:
    if args.levels:
        return args.levels
    return tuple((args.base_level + i, args.grade_rounds + 2 * i) for i in range(args.n_levels))


def cmd_bessel_zeros(args) -> int:
    if not 0 <= args.twice_order <= specfun.MAX_TWICE_ORDER:
        raise UsageError(f"--twice-order must lie in [0, {specfun.MAX_TWICE_ORDER}]")
    table = specfun.bessel_zeros(specfun.BesselOrder(args.twice_order), args.count)
    rows = [{"k": k + 1, "zero": z, "lambda": z * z} for k, z in enumerate(table.zeros)]
    emit_table(("k", "zero", "lambda"), rows, args.format, args.output)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    levels = _levels_from(args)
    if args.merged:
        if not abs(args.t) < 1:
            raise UsageError("--merged needs |t| < 1")
        ab = spectra.ab_spectrum(args.t, args.k, levels, args.seed)
        per_level = {}
        for var, seq in (("DN", ab.dn), ("ND", ab.nd)):
            for j, v in enumerate(seq.extrapolated):
                per_level[(var, float(v))] = seq.per_level[:, j]
        rows = []
        for j, (v, prov, res) in enumerate(zip(ab.values, ab.provenance, ab.residual)):
            row = {"j": j + 1, "lambda_extrapolated": float(v), "provenance": prov,
                   "residual": float(res), "double": ab.is_double(j)}
            for i, lv in enumerate(per_level[(prov, float(v))]):
                row[f"level_{i + 1}"] = float(lv)
            rows.append(row)
    else:
        variant = args.variant.upper()
        seq = spectra.mixed_spectrum(spectra.MixedProblemSpec(args.t, variant, args.k, levels, args.seed))
        rows = []
        for j in range(args.k):
            row = {"j": j + 1, "lambda_extrapolated": float(seq.extrapolated[j]), "provenance": variant,
                   "residual": float(seq.residual[j]), "double": False}
            for i in range(len(levels)):
                row[f"level_{i + 1}"] = float(seq.per_level[i, j])
            rows.append(row)
    columns = SPECTRUM_COLUMNS + tuple(f"level_{i + 1}" for i in range(len(levels)))
    emit_table(columns, rows, args.format, args.output)
    return EXIT_OK


def sweep_grid(args) -> tuple:
    if args.t_grid:
        return args.t_grid
    n = int(round((args.t_stop - args.t_start) / args.t_step)) + 1
    return tuple(round(args.t_start + i * args.t_step, 12) for i in range(n))


def cmd_sweep(args) -> int:
    levels = _levels_from(args)
    result = spectra.sweep(sweep_grid(args), args.k, levels, workers=args.workers,
                           with_slopes=not args.no_slopes, seed=args.seed)
    verdict = {k: _jsonable(v) for k, v in result.verdict().items()}
    rows = list(result.rows())
    emit_table(spectra.SWEEP_COLUMNS, rows, args.format, args.output,
               extra={"verdict": verdict} if args.format == "json" else None)
    if args.format == "csv":
        text = json.dumps({"verdict": verdict}, indent=2) + "\n"
        if args.verdict:
            with open(args.verdict, "w", encoding="utf-8") as fh:
                fh.write(text)
        elif args.output in (None, "-"):
            sys.stderr.write(text)
        else:
            sys.stdout.write(text)
    ok = verdict["monotone_nd"] and verdict["monotone_dn"] and verdict["simple_for_positive_t"] and verdict["tags_consistent"]
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(args) -> int:
    settings = acceptance.COARSE if args.coarse else acceptance.FULL
    with _sink(args.output) as fh:
        fh.write(f"suite {args.suite}, settings {settings.label}, tolerances x{settings.widen:g}, levels {list(settings.levels)}\n")

        def report(rec):
            fh.write(rec.line() + "\n")
            fh.flush()

        records = acceptance.run_suite(args.suite, settings, report)
        failed = [r.number for r in records if not r.passed]
        fh.write(f"{len(records) - len(failed)}/{len(records)} criteria passed\n")
    return EXIT_FAIL if failed else EXIT_OK


def _debug_mesh(args):
    if args.full_disk:
        return build_full_disk_mesh(args.base_level)
    return build_half_disk_mesh(args.t, args.base_level, args.grade_rounds)


def cmd_dump_mesh(args) -> int:
    mesh = _debug_mesh(args)
    with _sink(args.output) as fh:
        write_mesh(mesh, fh)
    return EXIT_OK


def cmd_dump_matrix(args) -> int:
    mesh = _debug_mesh(args)
    if args.full_disk:
        tags, weight = DISK_TAGS, double_cover_weight if args.weighted else None
    else:
        tags, weight = spectra._dirichlet_tags(args.variant.upper()), None
    dofmap = build_dofmap(mesh, tags)
    K, M = assemble(mesh, dofmap, weight)
    with _sink(args.output) as fh:
        write_matrix(K if args.which == "K" else M, fh)
    return EXIT_OK


# -- parser --------------------------------------------------------------------------------------------

def _add_output(p):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", "-o", default=None, help="output file (default stdout)")


def _add_mesh_args(p):
    p.add_argument("--base-level", type=_positive_int, default=4)
    p.add_argument("--grade-rounds", type=int, default=6)
    p.add_argument("--n-levels", type=int, default=3, help="levels derived as (L+i, G+2i)")
    p.add_argument("--levels", type=parse_levels, default=None, help="explicit base:grade list, e.g. 4:6,5:8,6:10")
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abdisk", description="Half-flux Aharonov-Bohm eigenvalues on the unit disk.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="key = value file; command-line flags override it")
    parser.add_argument("--log-level", default="WARNING", choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bessel-zeros", help="zeros of J_nu, nu = twice_order / 2")
    p.add_argument("--twice-order", type=int, required=True)
    p.add_argument("--count", type=_positive_int, default=5)
    _add_output(p)
    p.set_defaults(func=cmd_bessel_zeros)

    p = sub.add_parser("spectrum", help="eigenvalues at one pole position")
    p.add_argument("--t", type=float, required=True)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--variant", choices=("dn", "nd", "DN", "ND"), default="nd")
    mode.add_argument("--merged", action="store_true", help="merged DN/ND (Aharonov-Bohm) spectrum")
    p.add_argument("--k", type=_positive_int, default=2)
    _add_mesh_args(p)
    _add_output(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("sweep", help="branch diagram over a t grid")
    p.add_argument("--t-start", type=float, default=0.0)
    p.add_argument("--t-stop", type=float, default=0.9)
    p.add_argument("--t-step", type=float, default=0.1)
    p.add_argument("--t-grid", type=parse_grid, default=None, help="explicit comma-separated grid")
    p.add_argument("--k", type=_positive_int, default=2)
    p.add_argument("--workers", type=_positive_int, default=None, help="default: AB_DISK_THREADS or 1")
    p.add_argument("--no-slopes", action="store_true")
    p.add_argument("--verdict", default=None, help="write the verdict JSON here (csv format)")
    _add_mesh_args(p)
    _add_output(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the acceptance criteria")
    p.add_argument("--suite", choices=tuple(acceptance.SUITES), default="all")
    p.add_argument("--coarse", action="store_true", help="coarser meshes with doubled tolerances")
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=cmd_verify)

    for name, fn in (("dump-mesh", cmd_dump_mesh), ("dump-matrix", cmd_dump_matrix)):
        p = sub.add_parser(name, help="debug dump")
        p.add_argument("--t", type=float, default=0.0)
        p.add_argument("--base-level", type=_positive_int, default=3)
        p.add_argument("--grade-rounds", type=int, default=0)
        p.add_argument("--full-disk", action="store_true")
        p.add_argument("--output", "-o", default=None)
        if name == "dump-matrix":
            p.add_argument("--which", choices=("K", "M"), default="K")
            p.add_argument("--variant", choices=("dn", "nd", "DN", "ND"), default="nd")
            p.add_argument("--weighted", action="store_true", help="double-cover weight (full disk)")
        p.set_defaults(func=fn)
    return parser


def _apply_config(parser, argv, cfg):
    """Install config values as subcommand defaults so explicit flags win."""
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    command = next((tok for tok in argv if tok in sub_action.choices), None)
    if command is None:
        return
    sp = sub_action.choices[command]
    actions = {a.dest: a for a in sp._actions}
    defaults = {}
    for key, value in cfg.items():
        if key not in actions or key in ("help", "func"):
            raise UsageError(f"config key {key!r} is not an option of {command}")
        act = actions[key]
        if isinstance(act, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            try:
                defaults[key] = parse_bool(value)
            except argparse.ArgumentTypeError as exc:
                raise UsageError(f"config {key}: {exc}") from None
        else:
            # argparse runs string defaults through the option's type
            defaults[key] = value
            act.required = False
    sp.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    try:
        if known.config:
            _apply_config(parser, argv, load_config(known.config))
    except UsageError as exc:
        print(f"abdisk: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ValueError, MeshError) as exc:
        # MeshError and bad preconditions are argument problems
        print(f"abdisk: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EigenSolveError, RuntimeError, ArithmeticError) as exc:
        print(f"abdisk: computation failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
