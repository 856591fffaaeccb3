# src/udw_wavepacket/cli.py
#
# Command-line interface: udw profile|respond|scan|qed <scenario> [flags]

import argparse
import io
import sys
from typing import Optional, Sequence

from .config_io import OUTPUT_FORMATS, RUN_KINDS
from .core import run_scenario
from .errors import ConfigError, NegativeBeyondTolerance, QuadratureFailure

# Fix Windows console encoding for Unicode output
if sys.platform == "win32":
    sys.stdout = io.TextIOWrapper(sys.stdout.buffer, encoding="utf-8", errors="replace")
    sys.stderr = io.TextIOWrapper(sys.stderr.buffer, encoding="utf-8", errors="replace")


EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_QUADRATURE = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="udw",
        description="Response of smeared, possibly accelerated two-level detectors to one-particle wavepackets.",
    )
    parser.add_argument(
        "run",
        choices=RUN_KINDS,
        help="profile: smearing transform; respond: excitation probability; "
        "scan: probability against carrier; qed: interaction decomposition.",
    )
    parser.add_argument("scenario", help="Scenario file (.ini, .cfg or .json).")
    parser.add_argument(
        "--out",
        "-o",
        default=None,
        help="Output directory (default: output.directory or reports/<scenario>/).",
    )
    parser.add_argument(
        "--threads",
        "-t",
        type=int,
        default=None,
        help="Worker threads for the 2-D integration. Affects speed only.",
    )
    parser.add_argument("--rel-tol", type=float, default=None, help="Relative tolerance of the tau integration.")
    parser.add_argument("--kmin", type=float, default=None, help="Lower field wavenumber cutoff.")
    parser.add_argument("--kmax", type=float, default=None, help="Upper field wavenumber cutoff.")
    parser.add_argument(
        "--format",
        "-f",
        choices=OUTPUT_FORMATS,
        default=None,
        help="Tabular/report output next to the JSON envelope. Default: csv.",
    )
    parser.add_argument("--quiet", "-q", action="store_true", help="Hide the progress spinner.")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    print("Smeared Detector Response")
    print("=" * 40)
    print(f"Run: {args.run}")
    print(f"Scenario: {args.scenario}")
    if args.out:
        print(f"Output directory: {args.out}")
    print()

    try:
        outcome = run_scenario(
            args.scenario,
            run_kind=args.run,
            out_dir=args.out,
            threads=args.threads,
            rel_tol=args.rel_tol,
            k_min=args.kmin,
            k_max=args.kmax,
            output_format=args.format,
            show_progress=not args.quiet,
        )
    except (ConfigError, FileNotFoundError) as e:
        print(f"\nConfiguration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureFailure, NegativeBeyondTolerance) as e:
        print(f"\nQuadrature failure: {e}", file=sys.stderr)
        return EXIT_QUADRATURE
    except ValueError as e:
        print(f"\nConfiguration error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    print()
    print("=" * 40)
    print(f"{args.run.upper()} COMPLETE")
    print("=" * 40)
    print(outcome.summary_line())
    for path in outcome.artifacts:
        print(f"  - {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
