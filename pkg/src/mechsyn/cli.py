"""Command-line entry point: ``mechsyn {run,eval,curve,list}``.

Exit codes: 0 success, 1 configuration error, 2 I/O error.
The default output directory comes from ``MECHSYN_OUT`` (else ``mechsyn-out``).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from mechsyn import __version__, kernels
from mechsyn.campaign import build_config, config_from_file, final_records, run_campaign
from mechsyn.errors import ConfigurationError
from mechsyn.export import export_curve, load_result
from mechsyn.problems import builtin_names, builtin_problem, resolve_problem

OUT_ENV = "MECHSYN_OUT"
DEFAULT_OUT = "mechsyn-out"

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2


def default_output_dir() -> Path:
    return Path(os.environ.get(OUT_ENV) or DEFAULT_OUT)


def _problem_args(p: argparse.ArgumentParser, required: bool = True):
    p.add_argument("--problem", required=required, help="built-in name or task file")
    p.add_argument("--fc2", type=float, help="hybrid motion/path weight f_c^2 (default 1/d_r^2)")
    p.add_argument("--include-function-xy", action="store_true",
                   help="hybrid: also score function-point coordinates in the path term")


def _vector_args(p: argparse.ArgumentParser):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--x", help="design vector, comma or space separated")
    g.add_argument("--reference", help="name of a stored reference vector")
    g.add_argument("--result", help="JSON result file written by 'run'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mechsyn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a seeded DE campaign")
    run.add_argument("--problem", help="built-in name or task file")
    run.add_argument("--config", help="INI campaign file")
    run.add_argument("--seed", type=int)
    run.add_argument("--runs", type=int)
    run.add_argument("--pop", type=int, help="population size m")
    run.add_argument("--gens", type=int, help="generations of the last stage")
    run.add_argument("--stage1-gens", type=int, help="generation cap of the first stage")
    run.add_argument("--cr", type=float, help="crossover constant")
    fgroup = run.add_mutually_exclusive_group()
    fgroup.add_argument("--dither", dest="f", action="store_const", const="dither",
                        help="draw F ~ U[0,1) per donor (default)")
    fgroup.add_argument("--f", dest="f", help="fixed scale factor F")
    run.add_argument("--out", help=f"output directory (default ${OUT_ENV} or {DEFAULT_OUT})")
    run.add_argument("--stage2-auto", action="store_true",
                     help="derive the second-stage box from the first-stage best")
    run.add_argument("--workers", type=int,
                     help="threads for objective evaluation (results are unchanged)")
    run.add_argument("--fc2", type=float)
    run.add_argument("--include-function-xy", action="store_true", default=None)

    ev = sub.add_parser("eval", help="evaluate fob at a design vector")
    _problem_args(ev)
    _vector_args(ev)

    cv = sub.add_parser("curve", help="export coupler curve / steering sweep and plot")
    _problem_args(cv)
    _vector_args(cv)
    cv.add_argument("--out", help="output directory")
    cv.add_argument("--samples", type=int, default=720)

    sub.add_parser("list", help="list built-in problems")
    return parser


def _problem_options(args) -> dict:
    opts = {}
    if getattr(args, "fc2", None) is not None:
        opts["fc2"] = args.fc2
    if getattr(args, "include_function_xy", None):
        opts["include_function_xy"] = True
    return opts


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.replace(",", " ").split()])
    except ValueError:
        raise ConfigurationError(f"cannot parse design vector {text!r}") from None


def _vectors(args, problem) -> list[tuple[str, np.ndarray, float | None]]:
    if args.x:
        return [("x", _parse_vector(args.x), None)]
    if args.result:
        doc = load_result(args.result)
        return [(Path(args.result).stem, np.asarray(doc["x"], dtype=np.float64), doc.get("fob"))]
    refs = problem.references
    if args.reference:
        if args.reference not in refs:
            raise ConfigurationError(f"{problem.name} has no reference {args.reference!r}; "
                                     f"available: {', '.join(refs) or 'none'}")
        refs = {args.reference: refs[args.reference]}
    if not refs:
        raise ConfigurationError("give --x, --reference or --result")
    return [(k, r.x, r.fob) for k, r in refs.items()]


def cmd_run(args) -> int:
    overrides = {
        "problem": args.problem, "seed": args.seed, "runs": args.runs, "pop": args.pop,
        "gens": args.gens, "stage1_gens": args.stage1_gens, "cr": args.cr, "f": args.f,
        "out": args.out, "workers": args.workers, "fc2": args.fc2,
        "include_function_xy": args.include_function_xy,
        "stage2_auto": True if args.stage2_auto else None,
    }
    if args.config:
        config = config_from_file(args.config, overrides)
    else:
        config = build_config({k: v for k, v in overrides.items() if v is not None})
    if config.output_dir is None:
        config.output_dir = default_output_dir()
    records = run_campaign(config)
    for r in final_records(records):
        print(f"seed {r.seed}\tstage {r.stage}\tfob {r.best_fob:.6e}\t"
              f"generations {r.generations}\t{r.wall_time:.1f} s")
    print(f"results in {config.output_dir}")
    return EXIT_OK


def cmd_eval(args) -> int:
    problem = resolve_problem(args.problem, **_problem_options(args))
    for name, x, ref in _vectors(args, problem):
        fob = problem.evaluate(x)
        line = f"{name}\t{fob:.6e}"
        if ref is not None:
            line += f"\tstored {ref:.6e}\tratio {fob / ref:.4f}" if ref else f"\tstored {ref}"
        print(line)
    return EXIT_OK


def cmd_curve(args) -> int:
    problem = resolve_problem(args.problem, **_problem_options(args))
    vectors = _vectors(args, problem)
    out = Path(args.out) if args.out else default_output_dir()
    for name, x, _ in vectors:
        target = out if len(vectors) == 1 else out / name
        for p in export_curve(problem, x, target, args.samples):
            print(p)
    return EXIT_OK


def cmd_list(args) -> int:
    for name in builtin_names():
        p = builtin_problem(name)
        refs = ", ".join(p.references) or "-"
        print(f"{name}\t{p.layout.dim} variables\t{p.description}\treferences: {refs}")
    print(f"kernel backend: {kernels.BACKEND}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "eval": cmd_eval, "curve": cmd_curve, "list": cmd_list}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigurationError, LookupError, ValueError) as exc:
        print(f"mechsyn: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"mechsyn: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
