"""Write the single-step and accumulation figure tables into one directory."""
import argparse
import sys

from phonon_accum.cli import main as cli_main


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="figures")
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    args = ap.parse_args()
    for fig in ("fig2", "fig3"):
        code = cli_main(["reproduce", fig, "--out", args.out, "--format", args.format])
        if code:
            sys.exit(code)


if __name__ == "__main__":
    main()
