"""Command line front end: render one figure kind from simulator CSVs.

Exit codes: 0 rendered, 1 bad arguments or schema mismatch, 2 the data
violates an inequality the figure displays (bypass with --force).
"""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, InvariantViolation, ValidationError, plot


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="analysis-plots", description=__doc__)
    parser.add_argument("kind", choices=sorted(FIGURE_KINDS))
    parser.add_argument("--input", required=True, action="append",
                        help="input CSV (repeatable; first one is used)")
    parser.add_argument("--output", required=True, help="output path stem (.png/.svg appended)")
    parser.add_argument("--title", default="")
    parser.add_argument("--force", action="store_true",
                        help="render even if a displayed inequality is violated")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    spec = FigureSpec(
        kind=args.kind,
        inputs=tuple(args.input),
        output=args.output,
        title=args.title,
        force=args.force,
    )
    try:
        written = plot(spec)
    except InvariantViolation as exc:
        print(f"refusing to render: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    print("\n".join(written))
    return 0


if __name__ == "__main__":
    sys.exit(main())
