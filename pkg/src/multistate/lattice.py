"""Intersection-closed families of linear subspaces of R^n.

Inclusion and equality are decided through projectors: X_a contains X_b iff
||Pi_a Pi_b - Pi_b|| <= TOL.  Elements are ordered by decreasing dimension so
that index 0 is always the whole space.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import DegenerateGenerator, NonTrivialIntersection

TOL = 1e-10
RANK_TOL = 1e-10


def _canonical_basis(proj):
    """Orthonormal rows spanning Ran(proj), Gram-Schmidt on the projected unit vectors."""
    n = proj.shape[0]
    rows = []
    for i in range(n):
        v = proj[:, i].copy()
        for r in rows:
            v -= (r @ v) * r
        nv = np.linalg.norm(v)
        if nv > 1e-6:
            v /= nv
            # one refinement pass keeps orthonormality at machine level
            for r in rows:
                v -= (r @ v) * r
            rows.append(v / np.linalg.norm(v))
    return np.array(rows).reshape(len(rows), n)


@dataclass(frozen=True, eq=False)
class Subspace:
    """A linear subspace given by an orthonormal row basis of shape (dim, n)."""

    basis: np.ndarray
    ambient_dim: int

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float).reshape(-1, self.ambient_dim)
        object.__setattr__(self, "basis", b)
        gram = b @ b.T
        if not np.allclose(gram, np.eye(b.shape[0]), atol=1e-12, rtol=0):
            raise DegenerateGenerator("basis is not orthonormal")

    @classmethod
    def span(cls, vectors, ambient_dim=None):
        """Subspace spanned by full-rank ``vectors`` (rows). Raises DegenerateGenerator otherwise."""
        v = np.atleast_2d(np.asarray(vectors, dtype=float))
        if ambient_dim is None:
            ambient_dim = v.shape[1]
        if v.size == 0:
            return cls.zero(ambient_dim)
        if v.shape[1] != ambient_dim:
            raise DegenerateGenerator(f"vectors live in R^{v.shape[1]}, expected R^{ambient_dim}")
        s = np.linalg.svd(v, compute_uv=False)
        if s.size == 0 or s.min() <= RANK_TOL * max(1.0, s.max()):
            raise DegenerateGenerator("generator basis is not full rank")
        q, _ = np.linalg.qr(v.T)
        return cls.from_projector(q @ q.T)

    @classmethod
    def from_projector(cls, proj):
        proj = np.asarray(proj, dtype=float)
        return cls(_canonical_basis(proj), proj.shape[0])

    @classmethod
    def zero(cls, n):
        return cls(np.zeros((0, n)), n)

    @classmethod
    def whole(cls, n):
        return cls(np.eye(n), n)

    @property
    def dim(self):
        return self.basis.shape[0]

    @property
    def projector(self):
        return self.basis.T @ self.basis

    def complement(self):
        return Subspace.from_projector(np.eye(self.ambient_dim) - self.projector)

    def contains(self, other):
        return np.linalg.norm(self.projector @ other.projector - other.projector) <= TOL

    def same_as(self, other):
        return np.linalg.norm(self.projector - other.projector) <= TOL

    def __repr__(self):
        return f"Subspace(dim={self.dim}, n={self.ambient_dim})"


def intersect(a: Subspace, b: Subspace) -> Subspace:
    """X_a cap X_b as the null space of the stacked complement projectors."""
    n = a.ambient_dim
    eye = np.eye(n)
    stacked = np.vstack([eye - a.projector, eye - b.projector])
    _, s, vt = np.linalg.svd(stacked)
    s_full = np.zeros(n)
    s_full[: s.size] = s
    null = vt[s_full <= RANK_TOL]
    if null.shape[0] == 0:
        return Subspace.zero(n)
    return Subspace.from_projector(null.T @ null)


@dataclass(frozen=True)
class ProjectorPair:
    onto_Xa: np.ndarray
    onto_Xperp: np.ndarray


@dataclass(frozen=True, eq=False)
class SubspaceLattice:
    elements: tuple
    order: np.ndarray  # order[a, b] is True iff X_a contains X_b
    a_min: int
    a_max: int
    ambient_dim: int = field(default=0)

    def __len__(self):
        return len(self.elements)

    def below(self, a, strict=False):
        """Indices b with b <= a (optionally b != a)."""
        return [b for b in range(len(self)) if self.order[b, a] and not (strict and b == a)]

    def internal_basis(self, a):
        """Orthonormal basis of X^a (rows), i.e. the coordinates a subsystem depends on."""
        return self.elements[a].complement().basis

    def to_json(self):
        payload = {
            "ambient_dim": self.ambient_dim,
            "elements": [e.basis.tolist() for e in self.elements],
            "order": [[int(b) for b in np.flatnonzero(self.order[a]) if b != a] for a in range(len(self))],
            "a_min": self.a_min,
            "a_max": self.a_max,
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        n = d["ambient_dim"]
        elems = tuple(Subspace(np.array(b, dtype=float).reshape(-1, n), n) for b in d["elements"])
        order = np.eye(len(elems), dtype=bool)
        for a, succ in enumerate(d["order"]):
            order[a, succ] = True
        return cls(elems, order, d["a_min"], d["a_max"], n)


def _sort_key(s: Subspace):
    return (-s.dim, tuple(np.round(s.projector.ravel(), 12)))


def generate_lattice(generators, ambient_dim) -> SubspaceLattice:
    """Smallest intersection-closed family containing ``generators`` and R^n."""
    elems = [Subspace.whole(ambient_dim)]
    for g in generators:
        if not isinstance(g, Subspace):
            g = Subspace.span(g, ambient_dim)
        if g.ambient_dim != ambient_dim:
            raise DegenerateGenerator(f"generator lives in R^{g.ambient_dim}, expected R^{ambient_dim}")
        if not any(g.same_as(e) for e in elems):
            elems.append(g)
    changed = True
    while changed:
        changed = False
        for a, b in combinations(list(elems), 2):
            c = intersect(a, b)
            if not any(c.same_as(e) for e in elems):
                elems.append(c)
                changed = True
    bottom = elems[0]
    for e in elems[1:]:
        bottom = intersect(bottom, e)
    if bottom.dim != 0:
        raise NonTrivialIntersection(f"intersection of the family has dimension {bottom.dim}")
    elems.sort(key=_sort_key)
    k = len(elems)
    order = np.array([[elems[a].contains(elems[b]) for b in range(k)] for a in range(k)])
    a_max = next(i for i, e in enumerate(elems) if e.dim == 0)
    return SubspaceLattice(tuple(elems), order, 0, a_max, ambient_dim)


def leq(lattice: SubspaceLattice, a: int, b: int) -> bool:
    """a <= b iff X_a contains X_b."""
    return bool(lattice.elements[a].contains(lattice.elements[b]))


def projectors(lattice: SubspaceLattice, a: int) -> ProjectorPair:
    p = lattice.elements[a].projector
    return ProjectorPair(p, np.eye(lattice.ambient_dim) - p)


def order_isomorphic(l1: SubspaceLattice, l2: SubspaceLattice) -> bool:
    """Same elements (as subspaces) with the same order, up to relabeling."""
    if len(l1) != len(l2):
        return False
    perm = []
    for e in l1.elements:
        match = [j for j, f in enumerate(l2.elements) if e.same_as(f)]
        if len(match) != 1:
            return False
        perm.append(match[0])
    perm = np.array(perm)
    return bool(np.array_equal(l1.order, l2.order[np.ix_(perm, perm)]))


def axis_line(n, i):
    v = np.zeros(n)
    v[i] = 1.0
    return Subspace.span(v[None, :], n)


def two_line_lattice():
    """{R^2, x-axis, y-axis, {0}}."""
    return generate_lattice([axis_line(2, 0), axis_line(2, 1)], 2)
