"""
Command-line entry point.

  python main.py build2d --rows 3 --cols 4 --seed 7 --out output/report.json
  python main.py build3d --ny 3 --nz 3 --cols 3 --dot output/lattice.dot
  python main.py verify --report output/report.json

Exit codes: 0 pass, 1 usage / IO / malformed input, 2 verification failure.
"""

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

from agents.verifier_agent import verify_report
from config import (
    DEFAULT_CAVITY,
    DEFAULT_CONTROL,
    DEFAULT_CORRECTIONS,
    DEFAULT_REPORT,
    DEFAULT_SEED,
    DEFAULT_SWITCHING,
)
from graph import PRUNE_AT_INJECTION, PRUNE_BY_MEASUREMENT, BuildState, run_build
from models.schema import CavityVariant, Control, CorrectionMode, RunReport, Switching
from tools.excel_report import save_trials_to_excel

EXIT_PASS = 0
EXIT_USAGE = 1
EXIT_FAIL = 2

logger = logging.getLogger(__name__)


def setup_logging() -> None:
    """Configure structured logging."""
    from config import LOG_LEVEL, LOG_FORMAT
    logging.basicConfig(
        level=getattr(logging, LOG_LEVEL.upper(), logging.INFO),
        format=LOG_FORMAT,
        handlers=[logging.StreamHandler(sys.stdout)],
    )
    logging.getLogger("httpx").setLevel(logging.WARNING)
    logging.getLogger("langgraph").setLevel(logging.WARNING)


class CliParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with status 1."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {value!r}")
    if number < 1:
        raise argparse.ArgumentTypeError(f"must be ≥ 1, got {number}")
    return number


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--cols", type=_positive_int, required=True, help="Time bins per rail")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED, help="Measurement seed (env CLUSTER_SEED)")
    parser.add_argument("--switching", choices=[s.value for s in Switching], default=DEFAULT_SWITCHING)
    parser.add_argument("--control", choices=[c.value for c in Control], default=DEFAULT_CONTROL)
    parser.add_argument("--corrections", choices=[c.value for c in CorrectionMode], default=DEFAULT_CORRECTIONS)
    parser.add_argument(
        "--cavity",
        choices=[v.value for v in CavityVariant],
        default=DEFAULT_CAVITY,
        help="Module construction: Q-switched cavity or reflection from the cavity",
    )
    parser.add_argument("--out", type=Path, default=DEFAULT_REPORT, help="JSON report path")
    parser.add_argument("--dot", type=Path, default=None, help="Write the target graph as DOT")
    parser.add_argument("--events", action="store_true", help="Include event log and module records")
    parser.add_argument("--trials", type=_positive_int, default=1, help="Run seeds seed..seed+N-1")


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(prog="cluster", description="Photonic cluster-state builder and verifier")
    sub = parser.add_subparsers(dest="command", required=True)

    build2d = sub.add_parser("build2d", help="Build and verify a 2D square-lattice cluster")
    build2d.add_argument("--rows", type=_positive_int, required=True, help="Rails")
    _add_run_flags(build2d)

    build3d = sub.add_parser("build3d", help="Build and verify a 3D topological cluster")
    build3d.add_argument("--ny", type=_positive_int, required=True, help="Rails along y")
    build3d.add_argument("--nz", type=_positive_int, required=True, help="Rails along z")
    build3d.add_argument(
        "--pruning",
        choices=[PRUNE_AT_INJECTION, PRUNE_BY_MEASUREMENT],
        default=PRUNE_AT_INJECTION,
        help="Skip blue photons at the source or measure them out of a cubic cluster",
    )
    _add_run_flags(build3d)

    verify = sub.add_parser("verify", help="Re-verify a JSON run report")
    verify.add_argument("--report", type=Path, required=True)
    return parser


# ── Commands ──────────────────────────────────────────────────────────────────

def trial_path(out: Path, seed: int) -> Path:
    return out.with_name(f"{out.stem}.seed{seed}{out.suffix}")


def _initial_state(args: argparse.Namespace, dimension: int, seed: int, out: Optional[Path]) -> BuildState:
    return BuildState(
        dimension=dimension,
        rows=getattr(args, "rows", 1),
        cols=args.cols,
        ny=getattr(args, "ny", 1),
        nz=getattr(args, "nz", 1),
        seed=seed,
        switching=Switching(args.switching),
        control=Control(args.control),
        corrections=CorrectionMode(args.corrections),
        cavity=CavityVariant(args.cavity),
        pruning=getattr(args, "pruning", PRUNE_AT_INJECTION),
        include_events=args.events,
        out_path=str(out) if out else None,
        dot_path=str(args.dot) if args.dot else None,
    )


async def _run_trials(args: argparse.Namespace, dimension: int) -> list[dict]:
    seeds = [args.seed + k for k in range(args.trials)]
    if len(seeds) == 1:
        states = [_initial_state(args, dimension, seeds[0], args.out)]
    else:
        states = [_initial_state(args, dimension, s, trial_path(args.out, s)) for s in seeds]
    finals = await asyncio.gather(*(run_build(state) for state in states))
    return list(finals)


def cmd_build(args: argparse.Namespace, dimension: int) -> int:
    finals = asyncio.run(_run_trials(args, dimension))

    errors = [e for final in finals for e in final.get("errors", [])]
    if errors:
        for error in errors:
            print(f"error: {error}", file=sys.stderr)
        return EXIT_USAGE

    if len(finals) > 1:
        summary = args.out.with_name(f"{args.out.stem}.trials.xlsx")
        try:
            save_trials_to_excel(
                [{"report": f["report"], "path": f.get("output_path")} for f in finals], summary
            )
        except Exception as exc:
            print(f"error: could not write {summary}: {exc}", file=sys.stderr)
            return EXIT_USAGE

    failed = [f["report"]["seed"] for f in finals if not f["report"]["pass"]]
    for final in finals:
        report = final["report"]
        logger.info(
            "Seed %d: %s, %d measurements",
            report["seed"], "PASS" if report["pass"] else "FAIL", report["resources"]["measurement_count"],
        )
    if failed:
        print(f"verification failed for seeds {failed}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_PASS


def cmd_build2d(args: argparse.Namespace) -> int:
    return cmd_build(args, 2)


def cmd_build3d(args: argparse.Namespace) -> int:
    return cmd_build(args, 3)


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        report = RunReport.model_validate_json(args.report.read_text(encoding="utf-8"))
        verification = verify_report(report)
    except (OSError, ValidationError, ValueError) as exc:
        print(f"error: cannot verify {args.report}: {exc}", file=sys.stderr)
        return EXIT_USAGE

    logger.info(verification.summary())
    if verification.passed:
        return EXIT_PASS
    for mismatch in verification.mismatched_generators:
        print(f"mismatch at vertex {mismatch.vertex}: {mismatch.generator}", file=sys.stderr)
    return EXIT_FAIL


COMMANDS = {"build2d": cmd_build2d, "build3d": cmd_build3d, "verify": cmd_verify}


def main(argv: Optional[Sequence[str]] = None) -> int:
    setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except KeyboardInterrupt:
        print("\nStopped by user.", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
