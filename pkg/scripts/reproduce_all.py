"""Run every CLI subcommand with one config into a single output tree."""
import argparse
import sys
from pathlib import Path

from sicsaw.cli import main as cli

RUNS = [
    ["rayleigh"],
    ["field"],
    ["autler-townes", "--power-mw", "25", "100", "400"],
    ["rabi", "--power-mw", "400", "100", "25"],
    ["apr"],
    ["map", "--direction", "transverse"],
    ["map", "--direction", "longitudinal"],
    ["map", "--direction", "2d"],
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=None)
    ap.add_argument("--out", type=Path, default=Path("out"))
    ap.add_argument("--skip-2d", action="store_true", help="skip the slow 2d map")
    args = ap.parse_args()
    extra = ["--config", args.config] if args.config else []
    for cmd in RUNS:
        if args.skip_2d and cmd[-1] == "2d":
            continue
        sub = args.out / "_".join(c for c in cmd if not c.startswith("-") and not c[0].isdigit())
        code = cli(cmd + extra + ["--out", str(sub)])
        if code:
            sys.exit(code)


if __name__ == "__main__":
    main()
