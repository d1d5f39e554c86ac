"""Command-line front end.

    python -m dude_lab analytic --config cfg.json
    python -m dude_lab simulate --config cfg.json --drops 200000 --seed 7 --out results/
    python -m dude_lab sweep    --config cfg.json --sweep-key q_ratio_db --grid -10:20:1 --svg --out results/
    python -m dude_lab validate --config cfg.json --drops 200000
    python -m dude_lab figures  --id 3 --svg --out results/

Exit codes: 0 ok, 2 usage, 3 I/O, 4 validation report with FAIL entries.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analytic as an
from . import experiments as ex
from . import outputs
from .errors import ConfigError, DudeLabError, ParameterError
from .model import FEASIBLE_CASES, SimulationParams, default_params, load_config

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_FAIL = 0, 2, 3, 4
COMMANDS = ("analytic", "simulate", "sweep", "validate", "figures")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2^64), got {text}")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _grid(text):
    """Comma list ``a,b,c`` or inclusive range ``start:stop:step``."""
    try:
        if ":" in text:
            start, stop, step = (float(t) for t in text.split(":"))
            if step <= 0:
                raise ValueError
            n = int(round((stop - start) / step))
            return tuple(round(start + i * step, 12) for i in range(n + 1))
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; use a,b,c or start:stop:step") from None


def _scenarios(text):
    items = tuple(s.strip() for s in text.split(",") if s.strip())
    bad = [s for s in items if s not in ex.SCENARIOS]
    if bad or not items:
        raise argparse.ArgumentTypeError(f"scenarios must be drawn from {','.join(ex.SCENARIOS)}")
    return items


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", type=Path, help="JSON parameter file")
    shared.add_argument("--seed", type=_u64, help="simulation seed (unsigned 64-bit)")
    shared.add_argument("--drops", type=_positive_int, help="Monte Carlo drops")
    shared.add_argument("--out", type=Path, help="output directory (default: CSV to stdout)")
    shared.add_argument("--svg", action="store_true", help="also write SVG charts (needs --out)")
    shared.add_argument("--variant", choices=[v.value for v in an.DistancePdfVariant], default="consistent",
                        help="serving-distance pdf variant")

    parser = _Parser(prog="dude_lab", description="Decoupled uplink/downlink association in two-tier networks.")
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(COMMANDS) + "}", parser_class=_Parser)
    sub.required = True
    sub.add_parser("analytic", parents=[shared], help="closed-form metrics at the configured point")
    sub.add_parser("simulate", parents=[shared], help="analytic plus Monte Carlo at the configured point")
    p = sub.add_parser("sweep", parents=[shared], help="sweep one parameter")
    p.add_argument("--sweep-key", choices=ex.SWEEP_KEYS, default="q_ratio_db")
    p.add_argument("--grid", type=_grid, default=_grid("-10:20:1"))
    p.add_argument("--scenarios", type=_scenarios, default=ex.SCENARIOS)
    sub.add_parser("validate", parents=[shared], help="analytic vs Monte Carlo report")
    p = sub.add_parser("figures", parents=[shared], help="datasets behind the figure analogues")
    p.add_argument("--id", type=int, choices=range(2, 7), required=True, metavar="{2..6}")
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command != "figures" and args.config is None:
        parser.error(f"{args.command}: --config is required")
    if args.svg and args.out is None:
        parser.error("--svg needs --out")
    return args


def _load(args):
    if args.config is None:
        return default_params(), None
    return load_config(args.config)


def _sim(args, sim, default_drops, required):
    if sim is None and args.drops is None and args.seed is None and not required:
        return None
    sim = sim or SimulationParams(drops=default_drops)
    changes = {}
    if args.drops is not None:
        changes["drops"] = args.drops
    if args.seed is not None:
        changes["seed"] = args.seed
    return replace(sim, **changes)


def _write(args, name, result) -> None:
    if args.out is None:
        sys.stdout.write(outputs.csv_text(result))
        return
    args.out.mkdir(parents=True, exist_ok=True)
    path = outputs.emit_csv(result, args.out / f"{name}.csv")
    print(f"wrote {path}", file=sys.stderr)
    if args.svg:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", outputs.SkipWithWarning)
            for p in outputs.emit_svg(result, args.out / name):
                print(f"wrote {p}", file=sys.stderr)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)


def _distance_table(params, variant) -> str:
    x = np.linspace(0.0, 3.0 * an.serving_distance_quantile(0.999, params), 121)
    cols = [x] + [an.serving_distance_pdf(c, x, params, variant) for c in FEASIBLE_CASES]
    lines = ["distance_km," + ",".join(f"pdf_case{int(c)}" for c in FEASIBLE_CASES)]
    lines += [",".join(f"{v:.17e}" for v in row) for row in zip(*cols)]
    return "\n".join(lines) + "\n"


def _summary(result) -> None:
    for r in result.rows:
        if r.failed:
            print(f"{r.scenario:>13}: {', '.join(r.flags)}", file=sys.stderr)
            continue
        p = r.metrics.probabilities
        print(
            f"{r.scenario:>13}: Pr=({p.pr_case1:.5f}, {p.pr_case2:.5f}, {p.pr_case3:.5f}, {p.pr_case4:.5f})"
            f" SE={r.metrics.se_avg:.5f} bit/s/Hz EE={r.metrics.ee_avg:.6g} bit/J",
            file=sys.stderr,
        )


def run(args) -> int:
    params, cfg_sim = _load(args)
    variant = an.DistancePdfVariant(args.variant)

    if args.command == "analytic":
        result = ex.evaluate_point(params)
        _summary(result)
        _write(args, "analytic", result)
        if args.out is not None:
            p = outputs.atomic_write(args.out / f"distance_pdf_{variant.value}.csv", _distance_table(params, variant))
            print(f"wrote {p}", file=sys.stderr)
        return EXIT_OK

    if args.command == "simulate":
        result = ex.evaluate_point(params, sim=_sim(args, cfg_sim, 10_000, True))
        _summary(result)
        _write(args, "simulate", result)
        return EXIT_OK

    if args.command == "sweep":
        spec = ex.SweepSpec(params, args.sweep_key, args.grid, args.scenarios, _sim(args, cfg_sim, 10_000, False))
        _write(args, "sweep", ex.run_sweep(spec))
        return EXIT_OK

    if args.command == "figures":
        base = params if args.config is not None else None
        result = ex.reproduce_figures(args.id, _sim(args, cfg_sim, 10_000, False), base)
        _write(args, f"figure{args.id}", result)
        return EXIT_OK

    # validate
    report = ex.validate(params, _sim(args, cfg_sim, 200_000, True))
    print(report.to_text())
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        path = outputs.atomic_write(args.out / "validation.json", json.dumps(report.to_dict(), indent=2) + "\n")
        print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        return run(args)
    except (ConfigError, ParameterError, ValueError) as exc:
        print(f"dude_lab: error: {exc}", file=sys.stderr)
        print(build_parser().format_usage(), end="", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"dude_lab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DudeLabError as exc:
        print(f"dude_lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
