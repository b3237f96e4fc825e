"""Trade-off between filter width and box size for the minimal-velocity run.

Narrow filters keep the slow channel away from the ball edge but spread the
packet (width ~ 1/dk) and widen the tails of f(P) <x>^{-2} psi; wide filters
reach energies whose speed is below the ball speed.

    python scripts/filter_width_scan.py
"""
from multistate.scenarios import run_scenario


def main():
    for sup in (0.2, 0.1, 0.07, 0.05):
        rep = run_scenario("manybody-minimal-velocity", {"filter.support": sup, "high_factors": [2.0]})
        by = {e.name: e for e in rep.experiments}
        if "minimal_velocity" not in by:
            print(f"support {sup:5.3f}: {rep.experiments[0].verdict} ({rep.experiments[0].reason})")
            continue
        m, h = by["minimal_velocity"].metrics, by["hygiene"].metrics
        print(f"support {sup:5.3f}: slope {m['slope']:+.3f}, boundary max {h['boundary_max']:.1e}")


if __name__ == "__main__":
    main()
