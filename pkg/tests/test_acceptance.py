"""Acceptance criteria 1-11; each prints one PASS/FAIL line.

Run as ``pytest tests/test_acceptance.py -v`` (lines appear in the terminal
summary) or ``python tests/test_acceptance.py``.
"""
import sys
import time

import numpy as np
import pytest

from multistate.discretize import Grid, build_A, build_laplacian, commutator
from multistate.scenarios import run_scenario

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # script mode without the tests directory on the path
    ACCEPTANCE_LINES = {}

_CACHE = {}


def _run(name):
    if name not in _CACHE:
        t0 = time.perf_counter()
        rep = run_scenario(name)
        _CACHE[name] = (rep, time.perf_counter() - t0)
    return _CACHE[name]


def _exp(rep, name):
    return next(e for e in rep.experiments if e.name == name)


def _record(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[n] = line
    print(line)
    return ok


# ---------------------------------------------------------------- oracles

def independent_two_channel_well(depth, width, constants, L, N):
    """Eigenvalues of diag(-d^2 + c_1 - depth e^{-(x/width)^2}, -d^2 + c_2) from a hand-built dense matrix."""
    h = 2 * L / N
    x = -L + (np.arange(N) + 0.5) * h
    lap = (2 * np.eye(N) - np.eye(N, k=1) - np.eye(N, k=-1)) / h**2
    blocks = [lap + np.diag(constants[0] - depth * np.exp(-(x / width) ** 2)), lap + constants[1] * np.eye(N)]
    return np.concatenate([np.linalg.eigvalsh(b) for b in blocks])


# frozen from the independent dense solve above at L = 40, N = 1024, depth 2, width 1
BOUND_STATE_ENERGY = -0.9550489875693784


# ---------------------------------------------------------------- criteria

def test_criterion_01_free_channel_mourre():
    rep, dt = _run("free-two-channel-mourre")
    r = _exp(rep, "mourre").metrics["report"]
    ok = r["rayleigh_min"] >= 0.8 - 0.05 and r["negative_modes"] == 0 and r["gamma_target"] == 0.75 and dt < 120
    assert _record(1, ok, f"rayleigh_min={r['rayleigh_min']:.4f} (>= 0.75), negative_modes={r['negative_modes']}, "
                          f"{dt:.1f}s")


def test_criterion_02_commutator_identity():
    t0 = time.perf_counter()
    L, N = 20.0, 256
    h = 2 * L / N
    kmax = np.pi / (4 * h)
    rng = np.random.default_rng(0)
    ks, ph = rng.uniform(-kmax, kmax, 6), rng.uniform(0, 2 * np.pi, 6)
    errs = []
    for n in (N, 2 * N):
        g = Grid(1, L, n)
        x = g.axis
        psi = np.exp(-x**2 / 18.0) * sum(np.exp(1j * (k * x + p)) for k, p in zip(ks, ph))
        T, A = build_laplacian(g), build_A(g)
        rhs = 2 * (T.matrix @ psi)
        errs.append(np.linalg.norm(commutator(T, A).matrix @ psi - rhs) / np.linalg.norm(rhs))
    dt = time.perf_counter() - t0
    ok = errs[0] <= 5 * h and errs[1] <= 5 * h / 2 and errs[1] <= errs[0] / 2 and dt < 60
    assert _record(2, ok, f"rel_err(h)={errs[0]:.3e} (<= {5 * h:.3f}), rel_err(h/2)={errs[1]:.3e}, "
                          f"ratio={errs[0] / errs[1]:.2f} (>= 2), {dt:.1f}s")


def test_criterion_03_thresholds():
    rep, dt = _run("manybody-two-line-thresholds")
    cfg = rep.config
    T = _exp(rep, "thresholds").metrics["recursive"]
    ev = independent_two_channel_well(cfg["depth"], cfg["width"], cfg["constants"], cfg["grid"]["L"],
                                      cfg["grid"]["N"])
    brute = sorted(set(np.round(ev[ev < min(cfg["constants"]) - 1e-9], 12)) | set(cfg["constants"]))
    d = _exp(rep, "d_lambda").metrics["d"]
    eb = T[0]
    ok = (len(T) == len(brute) == 3 and np.allclose(T, brute, atol=1e-6) and eb < 0
          and abs(eb - BOUND_STATE_ENERGY) <= 1e-9 and d == 0.5 and dt < 120)
    assert _record(3, ok, f"T={np.round(T, 6).tolist()} brute={np.round(brute, 6).tolist()}, d(1.5)={d}, {dt:.1f}s")


def test_criterion_04_compact_remainder():
    rep, dt = _run("decaying-mourre")
    r = _exp(rep, "mourre_certification").metrics["report"]
    counts = dict((L, c) for L, c in r["stability"])
    ok = (not r["pure_bound"] and r["mourre_compatible"] and 0 < r["negative_modes"] <= r["n_window"]
          and min(r["localization"]) >= 0.9 and counts.get(40.0) == counts.get(80.0) and dt < 300)
    assert _record(4, ok, f"pure_bound={r['pure_bound']}, negative_modes={r['negative_modes']}, "
                          f"localization={r['localization']}, counts(L=40,80)={counts}, "
                          f"verdict={'Mourre-compatible' if r['mourre_compatible'] else 'not compatible'}, "
                          f"{dt:.1f}s")


def test_criterion_05_homogeneous_mourre():
    rep, dt = _run("homogeneous-2d-mourre")
    margins = _exp(rep, "gradient_condition").metrics["margins"]
    m = _exp(rep, "mourre").metrics
    r = m["report"]
    g0 = r["gamma_achieved"]
    ok = (min(margins) > 0 and r["mourre_compatible"] and g0 is not None and g0 > 0
          and _exp(rep, "mourre").passed and dt < 1800)
    assert _record(5, ok, f"margins>0 (min {min(margins):.3f}), beta={m['beta']:.3g}, gamma_0={g0:.4f}, "
                          f"negative_modes={r['negative_modes']}, {dt:.1f}s")


def test_criterion_06_minimal_velocity():
    rep, dt = _run("manybody-minimal-velocity")
    f = _exp(rep, "minimal_velocity").metrics
    hyg = _exp(rep, "hygiene").metrics
    guard = hyg["breach_time"] is None and hyg["boundary_max"] <= 1e-6
    ok = f["slope"] <= -1 + 0.15 and guard and dt < 600
    assert _record(6, ok, f"slope={f['slope']:.3f} (<= -0.85) over t in {f['window']}, radius 2*sqrt(0.4)*t, "
                          f"boundary_max={hyg['boundary_max']:.2e}, {dt:.1f}s")


def test_criterion_07_high_velocity():
    rep, dt = _run("manybody-minimal-velocity")
    m = _exp(rep, "high_velocity").metrics
    lpp = m["smallest_passing_lambda_pp"]
    ok = lpp is not None and lpp > m["max_group_speed"] ** 2
    assert _record(7, ok, f"max speed={m['max_group_speed']:.4f}, smallest passing lambda''={lpp}, "
                          f"smooth slope={m['smooth_slope']}")


def test_criterion_08_channel_decay():
    rep, dt = _run("remark1-channel-decay")
    f = _exp(rep, "channel_decay").metrics
    c = _exp(rep, "control_no_coupling").metrics
    ok = f["slope"] <= -0.8 and c["max_population"] < 1e-8 and dt < 600
    assert _record(8, ok, f"slope={f['slope']:.3f} (<= -0.8) over t in {f['window']}, "
                          f"control max={c['max_population']:.2e} (< 1e-8), {dt:.1f}s")


def test_criterion_09_essential_spectrum():
    rep, dt = _run("essential-spectrum-appendix")
    o = _exp(rep, "onset").metrics
    w = _exp(rep, "weyl").metrics
    top = o["onsets"][-1]
    ok = o["analytic"] == pytest.approx(2.0, abs=1e-12) and abs(top[1] - 2.0) <= 0.15 and w["ratio"] >= 1.7 \
        and dt < 900
    assert _record(9, ok, f"Sigma=2, onsets={[(L, round(v, 4)) for L, v in o['onsets']]} (top rung within 0.15), "
                          f"weyl ratio={w['ratio']:.2f} (>= 1.7), {dt:.1f}s")


def test_criterion_10_graf():
    rep, dt = _run("graf-field-check")
    m = _exp(rep, "graf").metrics
    ok = (_exp(rep, "graf").passed and np.isfinite(m["C1"]) and np.isfinite(m["C2"])
          and m["hessian_min"] >= -1e-8 and m["delta"] > 0 and dt < 60)
    assert _record(10, ok, f"C1={m['C1']}, C2={m['C2']:.4f}, hessian_min={m['hessian_min']:.2e}, "
                           f"delta={m['delta']:.3f}, {dt:.1f}s")


def test_criterion_11_hygiene():
    runs = []
    for name, exps in (("manybody-minimal-velocity", ["hygiene"]),
                       ("remark1-channel-decay", ["hygiene", "control_hygiene"]),
                       ("low-high-velocity", ["hygiene"])):
        rep, _ = _run(name)
        tol = rep.config["tol"]
        for e in exps:
            h = _exp(rep, e).metrics
            runs.append((f"{name}/{e}", h, tol))
    ok = all(h["norm_drift"] <= 1e-8 and h["energy_drift"] <= 1e-8 and h["time_reversal"] <= 2 * tol
             for _, h, tol in runs)
    worst = {k: max(h[k] for _, h, _ in runs) for k in ("norm_drift", "energy_drift", "time_reversal")}
    assert _record(11, ok, f"{len(runs)} runs, worst norm drift={worst['norm_drift']:.1e}, "
                           f"energy drift={worst['energy_drift']:.1e}, time reversal={worst['time_reversal']:.1e}")


if __name__ == "__main__":
    failed = 0
    for fn in [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]:
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
