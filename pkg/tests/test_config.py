import json

import numpy as np
import pytest

from multistate.config import load_spec, parse_spec
from multistate.errors import SpecInvalid


def test_unknown_keys_rejected():
    with pytest.raises(SpecInvalid):
        parse_spec({"mode": "decaying", "ambient_dim": 1, "channels": [{"colour": 1}]})
    with pytest.raises(SpecInvalid):
        parse_spec({"mode": "decaying", "ambient_dim": 1, "channels": [
            {"decaying": {"preset": "coulomb_like", "params": {"Z": 1}}}]})


def test_missing_mode():
    with pytest.raises(SpecInvalid):
        parse_spec({"ambient_dim": 1, "channels": [{}]})


def test_coulomb_like_values():
    spec = parse_spec({"mode": "decaying", "ambient_dim": 1, "channels": [
        {"decaying": {"preset": "coulomb_like", "params": {"C": 3.0}}}]})
    x = np.array([[0.0], [1.0]])
    np.testing.assert_allclose(spec.potential(0, x), [-3.0, -3.0 / np.sqrt(2)])


def test_one_based_couplings(tmp_path):
    cfg = {"mode": "decaying", "ambient_dim": 1, "channels": [{}, {"constant": 1.0}],
           "couplings": [{"j": 1, "k": 2, "preset": "gaussian", "params": {"g": 0.5}}]}
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    spec = load_spec(path)
    c = spec.couplings[0]
    assert (c.j, c.k) == (0, 1)
    assert c.r_hat(np.array([[0.0]]))[0] == pytest.approx(0.5)
    np.testing.assert_allclose(spec.constants, [0.0, 1.0])


def test_manybody_term_bound_to_generator():
    spec = parse_spec({"mode": "manybody", "ambient_dim": 2,
                       "lattice": {"generators": [[[1.0, 0.0]], [[0.0, 1.0]]]},
                       "channels": [{"manybody": [{"generator": 0, "preset": "gaussian_well",
                                                   "params": {"depth": 2.0}}]}]})
    t = spec.potentials[0].manybody_terms[0]
    # the well depends on the coordinate orthogonal to the x-axis only
    x = np.array([[0.0, 0.0], [5.0, 0.0], [0.0, 1.0]])
    v = t.fn(x)
    assert v[0] == pytest.approx(v[1])
    assert v[2] > v[0]


def test_empty_generator_is_zero_subspace():
    spec = parse_spec({"mode": "manybody", "ambient_dim": 1, "lattice": {"generators": [[]]},
                       "channels": [{}, {"constant": 1.0}]})
    assert [e.dim for e in spec.lattice.elements] == [1, 0]
