"""``bitgas`` command line: source, ensemble, theory, sweep, figure.

Exit codes: 0 success, 2 invalid arguments or domain errors, 3 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

from .bitcore import read_header
from .ensemble import histogram_csv
from .errors import BitgasError
from .experiment import (
    DEFAULT_FIGURE_BITS,
    DEFAULT_FIGURE_TEMPERATURES,
    DEFAULT_SWEEP_BITS,
    ExperimentConfig,
    SweepSpec,
    curve_csv,
    ensemble_from_file,
    rows_csv,
    run_ensemble,
    run_figure,
    run_source,
    run_sweep,
    run_theory,
    sweep_rows,
)

EXIT_USAGE = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, bits_default=None, multi_bits=False) -> None:
    p.add_argument("--model", choices=["c", "b"], help="default: c (sweep: both)")
    if multi_bits:
        p.add_argument("--bits", type=int, nargs="+", default=list(bits_default), metavar="M")
    else:
        p.add_argument("--bits", type=int, default=bits_default, metavar="M")
    p.add_argument("--count", type=int, metavar="N")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--temperature", type=float, metavar="T")
    g.add_argument("--prob", type=float, metavar="P")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", type=int, default=1, metavar="K", help="run seeds S, S+1, ..., S+K-1")
    p.add_argument("--include-zero-shift", action="store_true")
    p.add_argument("--out", type=Path, metavar="DIR")
    p.add_argument("--plot-script", action="store_true")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bitgas", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("source", help="generate a Bernoulli(p) source string")
    _common(p)

    p = sub.add_parser("ensemble", help="build ensembles; write histogram CSV and summary JSON")
    _common(p)
    p.add_argument("--source", type=Path, metavar="FILE", help="use a stored source instead of generating one")

    p = sub.add_parser("theory", help="tabulate a population formula")
    _common(p)
    p.add_argument("--formula", choices=["adjusted", "normal", "binomial"])
    p.add_argument("--range", type=int, nargs=2, metavar=("LO", "HI"))

    p = sub.add_parser("sweep", help="ground-state fraction versus temperature (Figure 1)")
    _common(p, bits_default=DEFAULT_SWEEP_BITS, multi_bits=True)
    _sweep_args(p)

    p = sub.add_parser("figure", help="write a figure bundle (CSVs + gnuplot script)")
    p.add_argument("which", type=int, choices=[1, 2, 3])
    _common(p, bits_default=DEFAULT_FIGURE_BITS)
    p.add_argument("--temperatures", type=float, nargs="+", metavar="T", default=list(DEFAULT_FIGURE_TEMPERATURES))
    _sweep_args(p)
    return parser


def _sweep_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--t-min", type=float, default=1e-6)
    p.add_argument("--t-max", type=float, default=0.25)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--linear", action="store_true", help="linear instead of log-spaced grid")
    p.add_argument("--sample", action="store_true", help="add empirical ground-state columns")
    p.add_argument("--sweep-bits", type=int, nargs="+", default=list(DEFAULT_SWEEP_BITS), metavar="M")


def _config(args, temperature=None, p=None) -> ExperimentConfig:
    if temperature is None and p is None:
        temperature, p = args.temperature, args.prob
    if args.bits is None:
        raise BitgasError("--bits is required")
    return ExperimentConfig(
        model=args.model or "c",
        M=args.bits,
        N=args.count,
        temperature=temperature,
        p=p,
        seed=args.seed,
        seeds_count=args.seeds,
        include_zero_shift=args.include_zero_shift,
        out=args.out or Path("."),
        plot_script=args.plot_script,
    )


def _sweep_spec(args, bits) -> SweepSpec:
    models = [args.model] if args.model else ["c", "b"]
    return SweepSpec(
        M_values=bits,
        t_min=args.t_min,
        t_max=args.t_max,
        count=args.points,
        log_spaced=not args.linear,
        models=models,
        analytic_only=not args.sample,
        seed=args.seed,
        seeds_count=args.seeds,
    )


def _emit(text: str) -> None:
    sys.stdout.write(text)


def _cmd_source(args) -> None:
    for path in run_source(_config(args)):
        print(path)


def _cmd_ensemble(args) -> None:
    if args.source is not None:
        temperature, p = args.temperature, args.prob
        if temperature is None and p is None:
            p = float(read_header(args.source).get("p", "nan"))
            if p != p:
                raise BitgasError(f"{args.source}: header has no p; pass --prob or --temperature")
        if args.bits is None and (args.model or "c") == "c":
            args.bits = int(read_header(args.source)["length_bits"])
        cfg = _config(args, temperature, p)
        run = ensemble_from_file(cfg, args.source, write=args.out is not None)
    else:
        cfg = _config(args)
        run = run_ensemble(cfg, write=args.out is not None)
    if args.format == "json":
        payload = [s.to_dict() for s in run.summaries]
        _emit(json.dumps(payload[0] if len(payload) == 1 else payload, indent=2) + "\n")
    else:
        for h in run.histograms:
            _emit(histogram_csv(h))


def _cmd_theory(args) -> None:
    cfg = _config(args)
    curve = run_theory(cfg, args.formula, args.range, write=args.out is not None)
    if args.format == "json":
        _emit(json.dumps({"model": curve.model.value, "formula": curve.formula.value,
                          "points": [list(pt) for pt in curve.points]}) + "\n")
    else:
        _emit(curve_csv(curve))


def _cmd_sweep(args) -> None:
    spec = _sweep_spec(args, args.bits)
    rows = run_sweep(spec, args.out, args.plot_script) if args.out else sweep_rows(spec)
    if args.format == "json":
        _emit(json.dumps(rows) + "\n")
    elif not args.out:
        _emit(rows_csv(rows))


def _cmd_figure(args) -> None:
    args.out = args.out or Path(f"figure{args.which}")
    if args.which == 1:
        args.model = None
        cfg = _config(args, temperature=0.25) if args.temperature is None and args.prob is None else _config(args)
        script = run_figure(1, cfg, sweep=_sweep_spec(args, args.sweep_bits))
    else:
        args.model = "c" if args.which == 2 else "b"
        cfg = _config(args, temperature=args.temperatures[0])
        script = run_figure(args.which, cfg, temperatures=args.temperatures)
    print(script)


COMMANDS = {
    "source": _cmd_source,
    "ensemble": _cmd_ensemble,
    "theory": _cmd_theory,
    "sweep": _cmd_sweep,
    "figure": _cmd_figure,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    # numba falls back to another threading layer when the system TBB is too old
    warnings.filterwarnings("ignore", message="The TBB threading layer")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except BitgasError as exc:
        print(f"bitgas: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"bitgas: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
