#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
externality_cli.py
Command line over scenario files.

  python externality_cli.py solve    presets/pollution_worked.scn [--regime both]
  python externality_cli.py compare  presets/pollution_worked.scn --mode paper [--recommend]
  python externality_cli.py sweep    presets/pollution_worked.scn --param c --from 2.5 --to 5 --steps 6
  python externality_cli.py sweep    presets/pollution_worked.scn --draws 1000 --seed 7
  python externality_cli.py plot     presets/pollution_worked.scn --svg-out fig.svg --csv-out pts.csv
  python externality_cli.py validate presets/agriculture.scn

Exit codes: 0 ok, 1 usage, 2 file/parse/schema, 3 constraint violation.
Documents go to stdout (or -o); diagnostics go to stderr only.
"""

from __future__ import annotations
import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from loguru import logger

import settings
from cooperation import NoImprovement, compare, cooperation_gains, recommend, summarize_gains
from model_core import PARAMETERS, ConstraintViolation, ExternalityError, InvalidMeta, Mode, Regime
from scenario_io import (
    CalibrationConflict, ParseError, SchemaError, emit_plot, emit_points, load_scenario,
    write_results, write_solution, write_sweep, write_table,
)
from sweep import ParameterRegion, RegionInfeasible, sample, sweep_grid

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_CONSTRAINT = 3


class UsageError(ExternalityError):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting with status 2."""

    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _configure_logging() -> None:
    logger.remove()
    sink = lambda msg: sys.stderr.write(msg)  # resolve stderr at write time
    try:
        logger.add(sink, level=settings.LOG_LEVEL, format="{level}:{name}:{message}")
    except ValueError:
        logger.add(sink, level="WARNING", format="{level}:{name}:{message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("scenario", help="scenario file (.scn, JSON)")
    common.add_argument("--mode", choices=[m.value for m in Mode], default=settings.DEFAULT_MODE,
                        help="paper = reference closed-form table; standard = textbook welfare "
                             "(default: %(default)s)")
    common.add_argument("-o", "--output", help="write the document here instead of stdout")

    parser = _Parser(prog="externality_cli.py",
                     description="Externality market equilibria, Pigouvian taxes and deadweight loss.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", parents=[common], help="equilibria and welfare per regime")
    p_solve.add_argument("--regime", choices=[r.value for r in Regime] + ["both"], default="both")

    p_cmp = sub.add_parser("compare", parents=[common], help="non-cooperative vs cooperative report")
    p_cmp.add_argument("--recommend", action="store_true", help="append the action-plan block")

    p_sweep = sub.add_parser("sweep", parents=[common],
                             help="grid sweep of one parameter, or Monte Carlo gain statistics")
    p_sweep.add_argument("--param", choices=list(PARAMETERS), help="parameter to sweep")
    p_sweep.add_argument("--from", dest="start", type=float, help="grid start")
    p_sweep.add_argument("--to", dest="stop", type=float, help="grid end (inclusive)")
    p_sweep.add_argument("--steps", type=int, help="grid size, >= 2")
    p_sweep.add_argument("--draws", type=int, help="Monte Carlo sample size (instead of a grid)")
    p_sweep.add_argument("--seed", type=int, default=settings.DEFAULT_SEED,
                         help="sampling seed (default: %(default)s)")
    p_sweep.add_argument("--spread", type=float, default=settings.SWEEP_SPREAD,
                         help="relative half-width of the sampling region (default: %(default)s)")

    p_plot = sub.add_parser("plot", parents=[common], help="SVG of both regimes, optional points CSV")
    p_plot.add_argument("--svg-out", help="SVG path (default: stdout)")
    p_plot.add_argument("--csv-out", help="points CSV path")
    p_plot.add_argument("--samples", type=int, default=settings.PLOT_SAMPLES,
                        help="CSV rows, >= 2 (default: %(default)s)")

    sub.add_parser("validate", parents=[common], help="check a scenario file without computing")
    return parser


def _check_flags(args) -> None:
    if args.command == "sweep":
        grid = [args.param, args.start, args.stop, args.steps]
        if args.draws is not None:
            if any(v is not None for v in grid):
                raise UsageError("sweep: use either --param/--from/--to/--steps or --draws, not both")
            if args.draws < 1:
                raise UsageError("sweep: --draws must be >= 1")
            if not 0 < args.spread < 1:
                raise UsageError("sweep: --spread must lie in (0, 1)")
            return
        if any(v is None for v in grid):
            raise UsageError("sweep: --param, --from, --to and --steps are required "
                             f"(parameters: {', '.join(PARAMETERS)})")
        if not args.start < args.stop:
            raise UsageError("sweep: --from must be below --to")
        if args.steps < 2:
            raise UsageError("sweep: --steps must be >= 2")
    elif args.command == "plot" and args.samples < 2:
        raise UsageError("plot: --samples must be >= 2")


def _write(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        logger.info("[cli] wrote {}", path)
    else:
        sys.stdout.write(text)


# ---------- subcommands ----------

def cmd_solve(scenario, args) -> Optional[str]:
    regimes = list(Regime) if args.regime == "both" else [Regime(args.regime)]
    return write_solution(scenario, args.mode, regimes)


def cmd_compare(scenario, args) -> Optional[str]:
    report = compare(scenario, args.mode)
    rec = recommend(report) if args.recommend else None
    return write_results(report, rec)


def cmd_sweep(scenario, args) -> Optional[str]:
    if args.draws is not None:
        region = ParameterRegion.around(scenario, args.spread)
        scenarios = sample(region, args.draws, args.seed)
        return write_table(summarize_gains(cooperation_gains(scenarios, args.mode)))
    series = sweep_grid(scenario, args.param, args.start, args.stop, args.steps, args.mode)
    return write_sweep(series)


def cmd_plot(scenario, args) -> Optional[str]:
    report = compare(scenario, args.mode)
    if args.csv_out:
        _write(emit_points(report, args.samples), args.csv_out)
    svg = emit_plot(report)
    if args.svg_out:
        _write(svg, args.svg_out)
        return None
    return svg


def cmd_validate(scenario, args) -> Optional[str]:
    return json.dumps({"name": scenario.meta.name, "valid": True}) + "\n"


COMMANDS = {
    "solve": cmd_solve,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "plot": cmd_plot,
    "validate": cmd_validate,
}


def run(argv: Optional[List[str]] = None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _check_flags(args)
    except UsageError as e:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(f"[ERR] {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return int(e.code or 0)

    try:
        text = Path(args.scenario).read_text(encoding="utf-8")
        scenario = load_scenario(text)
        logger.info("[cli] {} on {!r} ({} mode)", args.command, scenario.meta.name, args.mode)
        out = COMMANDS[args.command](scenario, args)
        if out is not None:
            _write(out, args.output)
    except OSError as e:
        # str(e) carries the offending path (input or output)
        print(f"[ERR] {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_IO
    except UnicodeDecodeError as e:
        print(f"[ERR] {args.scenario}: not UTF-8 text ({e})", file=sys.stderr)
        return EXIT_IO
    except (ParseError, SchemaError, CalibrationConflict, InvalidMeta) as e:
        print(f"[ERR] {args.scenario}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_IO
    except (ConstraintViolation, NoImprovement, RegionInfeasible) as e:
        print(f"[ERR] {args.scenario}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CONSTRAINT
    except ExternalityError as e:
        logger.exception("[cli] unexpected model failure")
        print(f"[ERR] {args.scenario}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CONSTRAINT
    except ValueError as e:
        # flag values argparse accepts but the library rejects
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(f"[ERR] {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
