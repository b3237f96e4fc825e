"""Onset of delocalized spectrum for -Delta + 2 + cos(theta)^2 on a ladder of boxes.

    python scripts/essential_onset_ladder.py
"""
from multistate.config import parse_spec
from multistate.discretize import Grid
from multistate.spectral import sigma_ess_bottom


def main():
    spec = parse_spec({"mode": "homogeneous", "ambient_dim": 2, "channels": [
        {"homogeneous": {"preset": "cosine_homogeneous", "params": {"offset": 2.0, "power": 2}}}]})
    ladder = [Grid(2, L, N) for L, N in ((10.0, 48), (20.0, 96), (40.0, 192))]
    rep = sigma_ess_bottom(spec, ladder, 0)
    print(f"analytic minimum {rep.analytic}")
    for L, v in rep.onsets:
        print(f"L = {L:5.1f}: onset {v:.4f} (excess {v - rep.analytic:.4f})")
    (l1, v1), (l2, v2) = rep.onsets[-2:]
    # onset - Sigma ~ c / L for the angular zero-point energy of the valley
    print(f"1/L extrapolation from the two largest boxes: {(l2 * v2 - l1 * v1) / (l2 - l1):.4f}")


if __name__ == "__main__":
    main()
