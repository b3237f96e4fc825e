import numpy as np
import pytest
from hypothesis import given, strategies as st

from multistate.config import parse_spec
from multistate.discretize import Grid, build_A, build_laplacian, build_P
from multistate.errors import BelowSigma, BoxTooSmall
from multistate.profiles import EnergyBump
from multistate.spectral import (
    SpectralWindow, ThresholdSet, analytic_channel_minimum, d_lambda, eigencount_window, eigenpairs_in,
    eigenvalues_below, gershgorin, localization, mourre_report, mourre_scan, numerical_onset, smooth_filter,
    thresholds, weyl_residual, weyl_state, window_projection,
)


def well(depth, L=20.0, N=256):
    spec = parse_spec({"mode": "decaying", "ambient_dim": 1, "channels": [
        {"decaying": {"preset": "gaussian_well", "params": {"depth": depth}}}]})
    return build_P(spec, Grid(1, L, N))


def independent_well_matrix(depth, L, N):
    """Plain numpy tridiagonal -u'' - depth exp(-x^2) u on the cell-centred grid."""
    h = 2 * L / N
    x = -L + (np.arange(N) + 0.5) * h
    M = (np.diag(np.full(N, 2.0)) - np.diag(np.ones(N - 1), 1) - np.diag(np.ones(N - 1), -1)) / h**2
    return M + np.diag(-depth * np.exp(-x**2))


def test_dense_and_iterative_paths_agree():
    P = well(8.0, 40.0, 1024)
    wd, Vd = eigenpairs_in(P, -6.0, 0.05)
    wi, Vi = eigenpairs_in(P, -6.0, 0.05, dense_max=10)
    np.testing.assert_allclose(wd, wi, atol=1e-9)
    overlap = np.abs(np.sum(Vd.conj() * Vi, axis=0))
    np.testing.assert_allclose(overlap, 1.0, atol=1e-8)


def test_bound_states_match_independent_solver():
    ev = np.linalg.eigvalsh(independent_well_matrix(8.0, 20.0, 256))
    np.testing.assert_allclose(eigenvalues_below(well(8.0), -1e-9), ev[ev < 0], atol=1e-10)


def test_window_projection_properties():
    P = well(8.0)
    Pi = window_projection(P, SpectralWindow(0.5, 0.4))
    D = Pi.dense()
    np.testing.assert_allclose(D @ D, D, atol=1e-10)
    M = P.dense()
    assert np.abs(M @ D - D @ M).max() <= 1e-9 * np.abs(M).max()
    assert np.all(np.abs(Pi.eigenvalues - 0.5) <= 0.4)


def test_empty_window():
    Pi = window_projection(well(8.0), SpectralWindow(-20.0, 0.5))
    assert Pi.rank == 0
    np.testing.assert_array_equal(Pi.apply(np.ones(256)), 0.0)


def test_chebyshev_filter_matches_eigen_filter():
    P = well(2.0, 10.0, 96)
    f = EnergyBump(0.5, 0.1, 0.4)
    ex = smooth_filter(P, f, "eigen")
    ch = smooth_filter(P, f, "chebyshev", tol=1e-8)
    v = np.random.default_rng(3).normal(size=96)
    assert np.linalg.norm(ex.apply(v) - ch.apply(v)) <= 1e-7 * np.linalg.norm(v)
    assert ex.norm_bound() <= 1.0


def test_gershgorin_encloses_spectrum():
    P = well(8.0, 10.0, 64)
    lo, hi = gershgorin(P)
    ev = np.linalg.eigvalsh(P.dense())
    assert lo <= ev.min() and ev.max() <= hi


def test_bound_state_localized_and_continuum_not():
    P = well(8.0, 40.0, 512)
    w, V = eigenpairs_in(P, -10.0, 0.2)
    loc = localization(P, V)
    assert np.all(loc[w < 0] > 0.99)
    assert np.all(loc[w > 0.01] < 0.5)


def test_free_mourre_bound_small_grid():
    g = Grid(1, 20.0, 256)
    rep = mourre_report(build_laplacian(g), build_A(g), SpectralWindow(1.0, 0.1), gamma_target=1.6)
    assert rep.pure_bound and rep.rayleigh_min >= 1.6


def test_mourre_scan_monotone_in_window():
    g = Grid(1, 20.0, 256)
    rows = mourre_scan(build_laplacian(g), build_A(g), 1.0, [0.05, 0.1, 0.3], 1.0)
    mins = [r[1] for r in rows]
    assert mins[0] >= mins[1] >= mins[2]


def manybody_free(constants):
    return parse_spec({"mode": "manybody", "ambient_dim": 1, "lattice": {"generators": [[]]},
                       "channels": [{"constant": c} for c in constants]})


def test_thresholds_of_free_channels_are_constants():
    spec = manybody_free([0.0, 1.0])
    T = thresholds(spec, Grid(1, 5.0, 16), spec.lattice.a_max)
    assert T.values == [0.0, 1.0]
    assert d_lambda(T, 1.5) == 0.5
    assert d_lambda(T, 0.7) == pytest.approx(0.7)
    with pytest.raises(BelowSigma):
        d_lambda(T, -0.1)


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=5), st.floats(-5, 10))
def test_d_lambda_is_distance_to_nearest_lower_threshold(vals, lam):
    T = ThresholdSet(sorted(vals), ["x"] * len(vals))
    if lam < min(vals):
        with pytest.raises(BelowSigma):
            d_lambda(T, lam)
    else:
        d = d_lambda(T, lam)
        assert d >= 0
        assert any(abs(lam - d - v) < 1e-12 for v in vals)
        assert not any(lam - d + 1e-12 < v <= lam for v in vals)


def test_channel_minimum_and_onset():
    spec = parse_spec({"mode": "homogeneous", "ambient_dim": 2, "channels": [
        {"homogeneous": {"preset": "cosine_homogeneous", "params": {"offset": 2.0, "power": 2}}}]})
    val, ang = analytic_channel_minimum(spec, 0)
    assert val == pytest.approx(2.0, abs=1e-12)
    assert abs(np.cos(ang)) < 1e-6


def test_free_onset_1d():
    P = build_laplacian(Grid(1, 20.0, 128))
    assert 0.0 < numerical_onset(P) < 0.05


def test_weyl_guards():
    spec = parse_spec({"mode": "homogeneous", "ambient_dim": 2, "channels": [
        {"homogeneous": {"preset": "cosine_homogeneous", "params": {"offset": 2.0, "power": 2}}}]})
    g = Grid(2, 10.0, 64)
    with pytest.raises(BelowSigma):
        weyl_state(spec, g, 0, 1.0, 2.0)
    with pytest.raises(BoxTooSmall):
        weyl_state(spec, g, 0, 3.0, 4.0)
    u = weyl_state(spec, g, 0, 3.0, 2.0)
    assert np.isfinite(weyl_residual(spec, g, 0, 3.0, 2.0)) and np.linalg.norm(u) > 0


def test_eigencount_ladder():
    rep = eigencount_window(well(8.0, 40.0, 1024), SpectralWindow(-3.0, 2.0), ladder=[well(8.0, 20.0, 512)])
    assert rep.count == 1 and rep.stable
