#!/usr/bin/env python3
"""Compare the numba and numpy kernel backends.

Same thing as `nibblecolor bench`; kept as a standalone script so it can run
against a source checkout without installing the console entry point.
"""

import argparse

from nibblecolor.bench import run_benchmark


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=200, help="ground-set size")
    ap.add_argument("--k", type=int, default=3, help="hyperedge size")
    ap.add_argument("--degree", type=int, default=20, help="ground degree cap")
    ap.add_argument("--rounds", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print(run_benchmark(args.n, args.k, args.degree, args.rounds, args.seed))


if __name__ == "__main__":
    main()
