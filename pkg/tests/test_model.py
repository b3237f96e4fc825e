import numpy as np
import pytest
from hypothesis import given, strategies as st

from multistate.config import parse_spec
from multistate.errors import BetaTooLarge, CriticalValue, SpecInvalid, WidthTooLarge
from multistate.model import (
    build_cutoffs, check_gradient_condition, find_crossings, japanese, ray_derivatives, select_beta,
    validate_assumptions, weight_a, Weight,
)


def homogeneous_pair(phases=(0.0, np.pi / 4), g=0.0):
    cfg = {"mode": "homogeneous", "ambient_dim": 2,
           "channels": [{"homogeneous": {"preset": "cosine_homogeneous", "params": {"phase": p}}} for p in phases]}
    if g:
        cfg["couplings"] = [{"j": 1, "k": 2, "preset": "inverse_power", "params": {"g": g}, "rho": 2.0}]
    return parse_spec(cfg)


def test_japanese_bracket():
    np.testing.assert_allclose(japanese(np.array([[3.0, 4.0]])), [np.sqrt(26.0)])


def test_crossings_match_arccos():
    spec = homogeneous_pair()
    cr = find_crossings(spec, 0.3)
    a = np.arccos(0.3)
    expected = np.sort(np.mod([a, -a, np.pi / 4 + a, np.pi / 4 - a], 2 * np.pi))
    np.testing.assert_allclose(cr.angles, expected, atol=1e-12)
    assert all(len(m) == 1 for m in cr.memberships)
    assert sorted(cr.owned_by(1)) == pytest.approx(sorted(np.mod([np.pi / 4 + a, np.pi / 4 - a], 2 * np.pi)))


def test_gradient_condition_margins_positive():
    spec = homogeneous_pair()
    gc = check_gradient_condition(find_crossings(spec, 0.3), spec)
    # a single member channel has margin dV^2 = sin^2(arccos 0.3) = 0.91
    np.testing.assert_allclose([g.margin for g in gc], 0.91, atol=1e-12)
    assert all(g.passed for g in gc)


def test_opposing_gradients_fail():
    # identical profiles cross the level together with equal gradients: still positive
    spec = homogeneous_pair(phases=(0.0, 0.0))
    gc = check_gradient_condition(find_crossings(spec, 0.3), spec)
    assert all(g.passed for g in gc)
    # cos(t) and cos(-t + pi) = -cos(t) share crossings only at level 0, where gradients cancel
    cfg = {"mode": "homogeneous", "ambient_dim": 2, "channels": [
        {"homogeneous": {"preset": "cosine_homogeneous", "params": {}}},
        {"homogeneous": {"preset": "cosine_homogeneous", "params": {"amplitude": -1.0}}}]}
    spec2 = parse_spec(cfg)
    gc2 = check_gradient_condition(find_crossings(spec2, 0.0), spec2)
    assert not any(g.passed for g in gc2)


def test_critical_level_raises():
    spec = homogeneous_pair()
    with pytest.raises(CriticalValue):
        find_crossings(spec, 1.0)


def test_cutoff_width_guard():
    spec = homogeneous_pair()
    cr = find_crossings(spec, 0.3)
    with pytest.raises(WidthTooLarge):
        build_cutoffs(cr, 1.0, 2)
    cuts = build_cutoffs(cr, 0.3, 2)
    for j, c in enumerate(cuts):
        for a in cr.owned_by(j):
            assert c(a) == 1.0


def test_weight_gradient_matches_difference():
    spec = homogeneous_pair()
    cuts = build_cutoffs(find_crossings(spec, 0.3), 0.3, 2)
    w = Weight(spec, cuts, 0.1)
    rng = np.random.default_rng(1)
    x = rng.uniform(-3, 3, size=(50, 2))
    h = 1e-6
    fd = np.stack([(w(x + h * e) - w(x - h * e)) / (2 * h) for e in np.eye(2)], axis=-1)
    np.testing.assert_allclose(w.grad(x), fd, rtol=1e-5, atol=1e-6)


def test_weight_beta_zero_is_quadratic():
    spec = homogeneous_pair()
    w = Weight(spec, None, 0.0)
    x = np.array([[1.0, 2.0]])
    assert w(x)[0] == pytest.approx(5.0 / 4)
    np.testing.assert_allclose(w.grad(x), x / 2)


def test_beta_guard_and_selection():
    spec = homogeneous_pair()
    cuts = build_cutoffs(find_crossings(spec, 0.3), 0.3, 2)
    with pytest.raises(BetaTooLarge):
        weight_a(spec, cuts, 5.0)
    w = select_beta(spec, cuts, 0.5)
    assert w.positivity_margin() >= 0.5 and w.hessian_min_eig() >= 0.25


def test_ray_derivatives_of_homogeneous_function():
    # f(x) = |x|^2: (x.grad) f = 2 f, (x.grad)^2 f = 4 f
    fn = lambda p: np.sum(p**2, axis=-1)
    r = np.linspace(1, 3, 5)
    d = ray_derivatives(fn, np.array([0.6, 0.8]), r, order=2)
    np.testing.assert_allclose(d[1], 2 * r**2, rtol=1e-5)
    np.testing.assert_allclose(d[2], 4 * r**2, rtol=1e-4)


def test_validate_assumptions_decaying():
    spec = parse_spec({"mode": "decaying", "ambient_dim": 1, "channels": [
        {"decaying": {"preset": "coulomb_like", "params": {"C": 3.0}}}, {"constant": -2.0}],
        "couplings": [{"j": 1, "k": 2, "preset": "inverse_power", "params": {"g": 0.3}, "rho": 1.0}]})
    rep = validate_assumptions(spec, -1.0)
    assert rep.passed
    assert "coupling_decay[0,1].r_hat" in rep.names()


def test_validate_assumptions_flags_nondecaying_coupling():
    spec = parse_spec({"mode": "decaying", "ambient_dim": 1, "channels": [{}, {}],
                       "couplings": [{"j": 1, "k": 2, "preset": "constant", "params": {"g": 0.3}}]})
    rep = validate_assumptions(spec, 1.0)
    assert not rep["coupling_decay[0,1].r_hat"].passed


def test_validate_assumptions_homogeneous():
    rep = validate_assumptions(homogeneous_pair(g=0.3), 0.3)
    assert rep.passed
    assert rep["gradient_condition"].passed
    assert rep["degree_zero[0]"].details["max_deviation"] <= 1e-12


def test_validate_assumptions_manybody_structure():
    spec = parse_spec({"mode": "manybody", "ambient_dim": 2,
                       "lattice": {"generators": [[[1.0, 0.0]], [[0.0, 1.0]]]},
                       "channels": [{"manybody": [{"generator": 0, "preset": "gaussian_well",
                                                   "params": {"depth": 2.0}}]}]})
    rep = validate_assumptions(spec, 0.5)
    assert rep.passed


def test_spec_validation_errors():
    with pytest.raises(SpecInvalid):
        parse_spec({"mode": "homogeneous", "ambient_dim": 1, "channels": [{}]})
    with pytest.raises(SpecInvalid):
        parse_spec({"mode": "decaying", "ambient_dim": 1, "channels": [{}],
                    "couplings": [{"j": 1, "k": 3, "preset": "constant"}]})


@given(st.floats(-0.95, 0.95).filter(lambda v: abs(v) > 0.02))
def test_crossings_lie_on_level(lam):
    spec = homogeneous_pair()
    cr = find_crossings(spec, lam)
    for a, mem in zip(cr.angles, cr.memberships):
        for j in mem:
            assert abs(spec.potentials[j].homogeneous(a) - lam) < 1e-10
    assert len(cr) == 4
