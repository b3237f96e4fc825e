"""Run every built-in scenario and write CSV/JSON artifacts.

    python scripts/run_all.py --out results
"""
import argparse
import time

from multistate.cli import emit_plotdata
from multistate.scenarios import REGISTRY, run_scenario


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results")
    ap.add_argument("names", nargs="*", default=list(REGISTRY))
    args = ap.parse_args()
    for name in args.names:
        t0 = time.perf_counter()
        rep = run_scenario(name)
        emit_plotdata(rep, args.out)
        dt = time.perf_counter() - t0
        for e in rep.experiments:
            print(f"{name:32s} {e.name:24s} {e.verdict:12s} {dt:7.1f}s")


if __name__ == "__main__":
    main()
