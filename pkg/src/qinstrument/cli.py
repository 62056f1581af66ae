"""Command line entry point: ``qinstrument run|check|dilate|undilate``.

Exit codes: 0 success, 1 validation failure (including a negative ``check``
verdict), 2 parse failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import scenario as sc
from .dilation import model_instrument, realize
from .errors import ParseError, ValidationError

EXIT_OK, EXIT_INVALID, EXIT_PARSE = 0, 1, 2


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    report = sc.run_scenario_file(
        args.scenario, samples=args.samples, seed=args.seed, final_states=args.final_states
    )
    _emit(sc.dumps(report), args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    family = sc.decode_map_family(sc.load_json(args.instrument))
    report = sc.check_report(family)
    _emit(sc.dumps(report), args.out)
    return EXIT_OK if report["cp_instrument"] else EXIT_INVALID


def cmd_dilate(args) -> int:
    ins = sc.decode_instrument(sc.load_json(args.instrument))
    _emit(sc.dumps(sc.encode_model(realize(ins))), args.out)
    return EXIT_OK


def cmd_undilate(args) -> int:
    model = sc.decode_model(sc.load_json(args.model))
    _emit(sc.dumps(sc.encode_instrument(model_instrument(model))), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qinstrument", description="Quantum instrument and sequential measurement toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="exact joint distribution (and optional samples) of a scenario")
    run.add_argument("scenario")
    run.add_argument("--samples", type=int, default=0, help="Monte Carlo trajectories to draw")
    run.add_argument("--seed", type=lambda v: int(v, 0), default=0, help="64-bit RNG seed")
    run.add_argument("--final-states", action="store_true", help="include normalized branch states")
    run.add_argument("--out", help="write the JSON report here instead of stdout")
    run.set_defaults(func=cmd_run)

    check = sub.add_parser("check", help="Davies-Lewis and CP verdicts for an instrument file")
    check.add_argument("instrument")
    check.add_argument("--out")
    check.set_defaults(func=cmd_check)

    dilate = sub.add_parser("dilate", help="pure indirect measurement model for a CP instrument")
    dilate.add_argument("instrument")
    dilate.add_argument("--out")
    dilate.set_defaults(func=cmd_dilate)

    undilate = sub.add_parser("undilate", help="instrument induced by an indirect measurement model")
    undilate.add_argument("model")
    undilate.add_argument("--out")
    undilate.set_defaults(func=cmd_undilate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "samples", 0) < 0:
        print("error: --samples must be non-negative", file=sys.stderr)
        return EXIT_PARSE
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"error: validation-error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
