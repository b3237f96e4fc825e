"""Low- and high-velocity exponent scans on the coupled Coulomb-like pair.

    python scripts/velocity_scan.py
"""
from multistate.scenarios import run_scenario


def main():
    rep = run_scenario("low-high-velocity")
    for e in rep.experiments:
        print(f"{e.name}: {e.verdict} {dict((k, v) for k, v in e.metrics.items() if not isinstance(v, list))}")
        for tname, (cols, rows) in e.tables.items():
            print("  " + "  ".join(f"{c:>10s}" for c in cols))
            for r in rows:
                print("  " + "  ".join(f"{v:10.4g}" for v in r))


if __name__ == "__main__":
    main()
