"""``qpfc`` command line.

Exit codes: 0 success, 1 fidelity below threshold, 2 bad arguments,
3 comb amplitude not found, 4 geometry or dimension mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .compiler import (
    compile_bond_comb,
    compile_bond_naive,
    compile_grid_bond,
    compile_grid_single,
    compile_readout,
    compile_single,
    focus_depth,
)
from .dimer import DimerSystem, trotter_error_scan
from .dioph import AnNotFoundError, solve_an
from .engine import (
    MatrixCapError,
    StateVector,
    apply_schedule,
    compare_fidelity,
    dump_state,
    load_state,
)
from .lattice import GeometryError
from .patterns import CA_KINDS, AnglePattern, SynthesisError, compile_ca_pattern, compile_interval, synthesize
from .schedule_io import ScheduleFormatError, dumps, format_pulse, load
from .targets import TargetSpecError, is_readout, parse_target, readout_fidelity

EXIT_OK, EXIT_FIDELITY, EXIT_ARGS, EXIT_SOLVER, EXIT_MISMATCH = 0, 1, 2, 3, 4
DEFAULT_THRESHOLD = 1 - 1e-8
COMPILE_KINDS = ("single-x", "single-z", "bond-zz-naive", "bond-zz-comb", "grid-single",
                 "grid-bond", "readout", "interval", "ca-pattern")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _grid_site(text: str) -> tuple[int, int]:
    try:
        i, j = text.replace(".", ",").split(",")
        return int(i), int(j)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a grid site i,j, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _require(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise CliError(EXIT_ARGS, f"compile {args.kind} needs {', '.join(missing)}")


def _amplitudes(depth: int, tol: float, bound: int) -> list:
    """Solved amplitudes for comb levels 2..depth (level 1 is exact)."""
    out = []
    for level in range(2, depth + 1):
        try:
            out.append(solve_an(level, tol, bound))
        except AnNotFoundError as exc:
            raise CliError(EXIT_SOLVER, f"{exc}\nBEST {exc.best}") from None
    return out


# -- commands -----------------------------------------------------------------


def cmd_compile(args) -> str:
    kind = args.kind
    if kind in ("single-x", "single-z"):
        _require(args, "n", "site", "angle")
        res = compile_single(args.site, kind[-1], args.angle, args.n)
    elif kind == "bond-zz-naive":
        _require(args, "n", "bond", "angle")
        res = compile_bond_naive(args.bond, args.angle, args.n)
    elif kind == "bond-zz-comb":
        _require(args, "n", "bond", "angle")
        if not 1 <= args.bond < args.n:
            raise GeometryError(f"bond {args.bond} outside chain of {args.n}")
        sols = _amplitudes(focus_depth(args.n, args.bond, 3, bond=True), args.an_tol, args.an_bound)
        res = compile_bond_comb(args.bond, args.angle, args.n, sols)
    elif kind == "grid-single":
        _require(args, "n", "grid_site", "angle")
        res = compile_grid_single(args.grid_site, args.axis, args.angle, args.n)
    elif kind == "grid-bond":
        _require(args, "n", "grid_site", "angle")
        sols = None
        if args.method == "twoOp":
            depth = focus_depth(args.n, args.grid_site[1], 3, bond=True)
            sols = _amplitudes(depth, args.an_tol, args.an_bound)
        res = compile_grid_bond(args.grid_site, args.angle, args.n, args.method, sols, args.conjugator)
    elif kind == "readout":
        _require(args, "n", "levels", "anchor")
        res = compile_readout(args.levels, args.n, args.anchor)
    elif kind == "interval":
        _require(args, "n", "angle")
        res = compile_interval(args.n, args.angle)
    else:
        _require(args, "n", "angle")
        res = compile_ca_pattern(args.pattern_kind, args.n, args.angle, args.axis)
    sidecar = res.sidecar()
    if args.output:
        path = Path(args.output)
        path.write_text(dumps(res.schedule))
        Path(f"{path}.sidecar").write_text(sidecar + "\n")
        args._outputs += [str(path), f"{path}.sidecar"]
        return sidecar + "\n"
    print(sidecar, file=sys.stderr)
    return dumps(res.schedule)


def _load_schedule(path: str):
    try:
        return load(path)
    except OSError as exc:
        raise CliError(EXIT_ARGS, f"cannot read {path}: {exc.strerror}") from None


def cmd_verify(args) -> str:
    schedule = _load_schedule(args.schedule)
    if is_readout(args.target):
        report = readout_fidelity(schedule, args.target)
    else:
        target = parse_target(args.target, schedule.geometry, schedule.dim)
        report = compare_fidelity(schedule, target, seed=args.seed, n_samples=args.samples,
                                  mode=args.mode)
    text = f"{report}\n"
    if report.value < args.threshold:
        args._exit = EXIT_FIDELITY
    return text


def cmd_solve_an(args) -> str:
    try:
        return f"{solve_an(args.level, args.tol, args.bound)}\n"
    except AnNotFoundError as exc:
        raise CliError(EXIT_SOLVER, f"{exc}\nBEST {exc.best}") from None


def cmd_trotter(args) -> str:
    sys_ = DimerSystem(args.rows, args.cols, args.J, args.lam, args.t)
    if any(k < 1 for k in args.K):
        raise CliError(EXIT_ARGS, "every K must be >= 1")
    return trotter_error_scan(sys_, args.K, args.order, args.h2_mode).table()


def cmd_simulate(args) -> str:
    schedule = _load_schedule(args.schedule)
    g, d = schedule.geometry, schedule.dim
    if args.init == "all-zero":
        state = StateVector.all_zero(g, d)
    elif args.init == "all-one":
        state = StateVector.all_one(g, d)
    else:
        try:
            text = Path(args.init).read_text()
        except OSError as exc:
            raise CliError(EXIT_ARGS, f"cannot read {args.init}: {exc.strerror}") from None
        args._inputs.append(args.init)
        state = load_state(text, g, d)
    out = apply_schedule(state, schedule)
    if args.populations:
        rows = out.populations()
        return "".join(f"{site} " + " ".join(f"{p:.15g}" for p in row) + "\n"
                       for site, row in zip(g.sites(), rows))
    return dump_state(out)


def cmd_synth(args) -> str:
    pattern = AnglePattern.parse(args.pattern)
    pulses = synthesize(pattern, args.max_pulses, args.window)
    return "".join(format_pulse(p) + "\n" for p in pulses)


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qpfc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qpfc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("-o", "--output", help="write output here and a manifest next to it")
        return p

    c = add("compile", cmd_compile, "emit a pulse schedule")
    c.add_argument("kind", choices=COMPILE_KINDS)
    c.add_argument("--n", type=int, help="chain length or grid side")
    c.add_argument("--site", type=int, help="chain site (single-x/single-z)")
    c.add_argument("--grid-site", "--at", dest="grid_site", type=_grid_site,
                   help="grid site i,j (grid-single; left end of the bond for grid-bond)")
    c.add_argument("--bond", type=int, help="chain bond k couples k and k+1")
    c.add_argument("--angle", type=float)
    c.add_argument("--axis", default="x", choices=("x", "y", "z"))
    c.add_argument("--method", default="naive8", choices=("naive8", "twoOp"))
    c.add_argument("--conjugator", default="x", choices=("x", "z"),
                   help="twoOp flip axis; z reproduces the commuting variant")
    c.add_argument("--an-tol", type=float, default=1e-4)
    c.add_argument("--an-bound", type=int, default=10_000)
    c.add_argument("--levels", type=int, help="auxiliary levels for readout")
    c.add_argument("--anchor", type=int)
    c.add_argument("--pattern-kind", default="even-right", choices=CA_KINDS)

    v = add("verify", cmd_verify, "compare a schedule with a target descriptor")
    v.add_argument("schedule")
    v.add_argument("--target", required=True)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--samples", type=int, default=20)
    v.add_argument("--mode", choices=("fullUnitary", "randomStateSampling"))
    v.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)

    s = add("solve-an", cmd_solve_an, "search a comb amplitude")
    s.add_argument("--level", type=int, required=True)
    s.add_argument("--tol", type=float, required=True)
    s.add_argument("--bound", type=int, required=True)

    t = add("trotter-report", cmd_trotter, "Trotter error table for the coupled-dimer model")
    t.add_argument("--rows", type=int, default=2)
    t.add_argument("--cols", type=int, default=2)
    t.add_argument("--lambda", dest="lam", type=float, default=0.5)
    t.add_argument("--t", type=float, default=1.0)
    t.add_argument("--J", type=float, default=1.0)
    t.add_argument("--K", type=_int_list, default=[4, 8, 16, 32])
    t.add_argument("--order", default="first", choices=("first", "symmetric"))
    t.add_argument("--h2-mode", default="oracle", choices=("oracle", "global"))

    m = add("simulate", cmd_simulate, "apply a schedule to a state and dump it")
    m.add_argument("schedule")
    m.add_argument("--init", default="all-zero", help="all-zero, all-one or a dump file")
    m.add_argument("--populations", action="store_true", help="print per-site level populations")

    p = add("synth", cmd_synth, "synthesize periodic pulses for an angle pattern")
    p.add_argument("--pattern", required=True, help='e.g. "PATTERN period=4 axis=x values=0,0,1.57,1.57"')
    p.add_argument("--max-pulses", type=int, default=2)
    p.add_argument("--window", type=int, default=2)

    r = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    r.add_argument("manifest")
    r.set_defaults(func=None)
    return parser


def _manifest(args, argv: list[str]) -> str:
    params = {k: v for k, v in sorted(vars(args).items())
              if not k.startswith("_") and k not in ("func",)}
    lines = [
        f"COMMAND={args.command}",
        f"VERSION={__version__}",
        f"SEED={getattr(args, 'seed', 'none')}",
        f"ARGV={json.dumps(argv)}",
        f"INPUTS={','.join(args._inputs)}",
        f"OUTPUTS={','.join(args._outputs)}",
    ]
    lines += [f"PARAM {k}={v}" for k, v in params.items()]
    return "\n".join(lines) + "\n"


def _replay_argv(path: str) -> list[str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(EXIT_ARGS, f"cannot read {path}: {exc.strerror}") from None
    for line in text.splitlines():
        if line.startswith("ARGV="):
            return json.loads(line[len("ARGV="):])
    raise CliError(EXIT_ARGS, f"{path} has no ARGV line")


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "replay":
            return main(_replay_argv(args.manifest))
        args._exit, args._outputs = EXIT_OK, []
        args._inputs = [args.schedule] if hasattr(args, "schedule") else []
        text = args.func(args)
        if args.output and args.command != "compile":
            Path(args.output).write_text(text)
            args._outputs.append(args.output)
        if args.output:
            Path(f"{args.output}.manifest").write_text(_manifest(args, argv))
        sys.stdout.write(text)
        return args._exit
    except CliError as exc:
        print(f"qpfc: {exc}", file=sys.stderr)
        return exc.code
    except GeometryError as exc:
        print(f"qpfc: {exc}", file=sys.stderr)
        return EXIT_ARGS if args.command == "compile" else EXIT_MISMATCH
    except (MatrixCapError, ScheduleFormatError, TargetSpecError, SynthesisError, ValueError) as exc:
        print(f"qpfc: {exc}", file=sys.stderr)
        return EXIT_ARGS


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
