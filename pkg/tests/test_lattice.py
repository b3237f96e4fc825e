import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from multistate.errors import DegenerateGenerator, NonTrivialIntersection
from multistate.lattice import (
    Subspace, SubspaceLattice, axis_line, generate_lattice, intersect, leq, order_isomorphic, projectors,
    two_line_lattice,
)


def test_span_rejects_rank_deficient():
    with pytest.raises(DegenerateGenerator):
        Subspace.span([[1.0, 2.0], [2.0, 4.0]])


def test_two_line_lattice_structure():
    lat = two_line_lattice()
    assert len(lat) == 4
    assert [e.dim for e in lat.elements] == [2, 1, 1, 0]
    assert lat.a_min == 0 and lat.a_max == 3
    for a in range(4):
        assert leq(lat, 0, a) and leq(lat, a, 3)
    assert not leq(lat, 1, 2) and not leq(lat, 2, 1)
    assert sorted(lat.below(3, strict=True)) == [0, 1, 2]


def test_single_line_family_has_nontrivial_bottom():
    with pytest.raises(NonTrivialIntersection):
        generate_lattice([Subspace.span([[1.0, 1.0]])], 2)


def test_projector_pair_complementary():
    lat = two_line_lattice()
    pp = projectors(lat, 1)
    np.testing.assert_allclose(pp.onto_Xa + pp.onto_Xperp, np.eye(2))
    np.testing.assert_allclose(pp.onto_Xa @ pp.onto_Xperp, 0, atol=1e-15)


def test_json_roundtrip():
    lat = two_line_lattice()
    back = SubspaceLattice.from_json(lat.to_json())
    assert order_isomorphic(lat, back)


def test_three_body_jacobi_lattice():
    # pair-collision planes of three particles on a line, centre of mass removed
    e = np.eye(3)
    pairs = [(0, 1), (0, 2), (1, 2)]
    # internal space: vectors orthogonal to (1,1,1)
    q, _ = np.linalg.qr(np.array([[1, -1, 0], [1, 1, -2]], dtype=float).T)
    basis = q.T
    gens = []
    for i, j in pairs:
        # X_ij = {x : x_i = x_j} inside the internal space, a line
        d = basis @ (e[i] - e[j])
        gens.append(Subspace.from_projector(np.eye(2) - np.outer(d, d) / (d @ d)))
    lat = generate_lattice(gens, 2)
    assert len(lat) == 5
    assert [e.dim for e in lat.elements] == [2, 1, 1, 1, 0]


unit = st.floats(-1, 1, allow_nan=False)


@st.composite
def line_families(draw):
    """At least two non-parallel lines in R^3, optionally with planes."""
    vecs = []
    while len(vecs) < draw(st.integers(2, 3)):
        v = np.array([draw(unit), draw(unit), draw(unit)])
        assume(np.linalg.norm(v) > 0.1)
        assume(all(np.linalg.norm(np.cross(v, w)) > 0.05 * np.linalg.norm(v) * np.linalg.norm(w) for w in vecs))
        vecs.append(v)
    gens = [Subspace.span(v[None, :], 3) for v in vecs]
    for _ in range(draw(st.integers(0, 2))):
        v = np.array([draw(unit), draw(unit), draw(unit)])
        assume(np.linalg.norm(v) > 0.1)
        gens.append(Subspace.span(v[None, :], 3).complement())
    return gens


@given(line_families())
def test_generated_family_is_closed(gens):
    lat = generate_lattice(gens, 3)
    for a in range(len(lat)):
        for b in range(len(lat)):
            c = intersect(lat.elements[a], lat.elements[b])
            assert any(c.same_as(e) for e in lat.elements)
    # order is reflexive, antisymmetric and transitive
    o = lat.order
    assert o.diagonal().all()
    assert not np.any(o & o.T & ~np.eye(len(lat), dtype=bool))
    assert np.all(~(o.astype(int) @ o.astype(int) > 0) | o)
    assert lat.elements[lat.a_min].dim == 3 and lat.elements[lat.a_max].dim == 0


@given(line_families())
def test_projectors_idempotent(gens):
    lat = generate_lattice(gens, 3)
    for e in lat.elements:
        p = e.projector
        np.testing.assert_allclose(p @ p, p, atol=1e-12)
        np.testing.assert_allclose(p, p.T, atol=1e-14)


def test_axis_line():
    assert axis_line(2, 1).contains(Subspace.span([[0.0, 3.0]]))
