import numpy as np
import pytest
from hypothesis import given, strategies as st

from multistate.discretize import build_graf_G
from multistate.graf import GrafFunction, SmoothAbs
from multistate.lattice import Subspace, generate_lattice, two_line_lattice

coord = st.floats(-20, 20, allow_nan=False)


@given(st.floats(0.01, 1.0), st.floats(-3, 3))
def test_smooth_abs_bounds(w, z):
    s = SmoothAbs(w)
    v = float(s(np.array([z]))[0])
    assert v >= abs(z) - 1e-12
    assert v <= abs(z) + float(s(np.array([0.0]))[0]) + 1e-12
    if abs(z) >= w:
        assert v == pytest.approx(abs(z), abs=1e-12)


def test_smooth_abs_derivatives():
    s = SmoothAbs(0.3)
    z = np.linspace(-0.5, 0.5, 41)
    h = 1e-6
    np.testing.assert_allclose(s.d1(z), (s(z + h) - s(z - h)) / (2 * h), atol=1e-6)
    np.testing.assert_allclose(s.d2(z), (s.d1(z + h) - s.d1(z - h)) / (2 * h), atol=1e-4)


def test_gradient_and_hessian_match_differences():
    G = GrafFunction(two_line_lattice(), 0.3)
    x = np.random.default_rng(0).uniform(-2, 2, size=(40, 2))
    val, g, H = G.evaluate(x)
    h = 1e-6
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        np.testing.assert_allclose(g[:, k], (G(x + e) - G(x - e)) / (2 * h), atol=1e-6)
        np.testing.assert_allclose(H[:, :, k], (G.grad(x + e) - G.grad(x - e)) / (2 * h), atol=1e-5)


@given(coord, coord, coord, coord, st.floats(0, 1))
def test_convex_along_segments(a, b, c, d, lam):
    G = build_graf_G(two_line_lattice())
    x, y = np.array([[a, b]]), np.array([[c, d]])
    mid = G(lam * x + (1 - lam) * y)[0]
    assert mid <= lam * G(x)[0] + (1 - lam) * G(y)[0] + 1e-9 * (1 + abs(mid))


@given(coord, coord)
def test_sandwich_bounds(a, b):
    G = GrafFunction(two_line_lattice(), 0.05)
    x = np.array([[a, b]])
    twoG = 2 * G(x)[0]
    x2 = a * a + b * b
    assert max(x2, 2.0) <= twoG + 1e-9
    assert twoG <= x2 + G.upper_constant() + 1e-9


def test_flat_near_clusters():
    G = GrafFunction(two_line_lattice(), 0.05)
    # near the x-axis, far from the origin, G = x1^2/2 + offset, so d/dx2 G vanishes
    x = np.array([[10.0, 0.3], [-7.0, -0.5]])
    np.testing.assert_allclose(G.grad(x)[:, 1], 0.0, atol=1e-12)


def test_check_two_line():
    rep = GrafFunction(two_line_lattice(), 0.05).check(n_samples=10_000, seed=0)
    assert rep.passed
    assert rep.C1 == 2.0 and rep.C2 <= rep.C2_bound
    assert rep.hessian_min >= -1e-8 and rep.delta > 0


def test_check_three_lines():
    gens = [Subspace.span([[1.0, 0.0]]), Subspace.span([[0.0, 1.0]]), Subspace.span([[1.0, 1.0]])]
    rep = GrafFunction(generate_lattice(gens, 2), 0.05).check(n_samples=4000, seed=1)
    assert rep.passed
