"""Finite-difference operators on a Dirichlet box.

Every operator is assembled on a slightly padded grid and compressed to the
box with the embedding J (box -> padded grid).  For operators that are local
this changes nothing: J^T O_pad J is the usual Dirichlet matrix.  The padded
form is kept so commutators can be taken before truncation, which removes the
boundary term that the literal commutator of two truncated matrices carries.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import NotManyBody, ShapeMismatch, SpecInvalid
from .model import ProblemSpec

DENSE_CAP = 20000
PAD = 2


@dataclass(frozen=True)
class Grid:
    """Cell-centred grid x_i = -L + (i + 1/2) h, h = 2L/N, on [-L, L]^dim."""

    dim: int
    half_width: float
    points_per_axis: int
    pad: int = PAD

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise SpecInvalid("grid dimension must be 1 or 2")
        if self.points_per_axis % 2:
            raise SpecInvalid("points_per_axis must be even")
        if self.half_width <= 0:
            raise SpecInvalid("half_width must be positive")

    @property
    def L(self):
        return self.half_width

    @property
    def N(self):
        return self.points_per_axis

    @property
    def spacing(self):
        return 2.0 * self.half_width / self.points_per_axis

    h = spacing

    @property
    def axis(self):
        return -self.L + (np.arange(self.N) + 0.5) * self.spacing

    @property
    def padded_axis(self):
        return -self.L + (np.arange(self.N + 2 * self.pad) - self.pad + 0.5) * self.spacing

    @staticmethod
    def _points(ax, dim):
        if dim == 1:
            return ax[:, None]
        X, Y = np.meshgrid(ax, ax, indexing="ij")
        return np.stack([X.ravel(), Y.ravel()], axis=-1)

    @property
    def points(self):
        """Box points, shape (N^dim, dim), C order."""
        return self._points(self.axis, self.dim)

    @property
    def padded_points(self):
        return self._points(self.padded_axis, self.dim)

    @property
    def size(self):
        return self.N**self.dim

    @property
    def padded_size(self):
        return (self.N + 2 * self.pad) ** self.dim

    @property
    def radius(self):
        return np.sqrt(np.sum(self.points**2, axis=-1))

    @property
    def maxnorm(self):
        return np.max(np.abs(self.points), axis=-1)

    def embedding(self):
        """Sparse J of shape (padded_size, size) with ones at box positions."""
        ne = self.N + 2 * self.pad
        inside = np.zeros((ne,) * self.dim, dtype=bool)
        sl = slice(self.pad, self.pad + self.N)
        inside[(sl,) * self.dim] = True
        rows = np.flatnonzero(inside.ravel())
        return sp.csr_matrix((np.ones(rows.size), (rows, np.arange(rows.size))), shape=(ne**self.dim, rows.size))

    def to_json(self):
        return json.dumps({"dim": self.dim, "half_width": self.L, "points_per_axis": self.N,
                           "spacing": self.spacing, "pad": self.pad})


def channel_embedding(grid: Grid, m: int):
    return sp.block_diag([grid.embedding()] * m, format="csr")


@dataclass
class DiscreteState:
    values: np.ndarray
    m: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.ndim != 1 or self.values.size % self.m:
            raise ShapeMismatch("state length is not a multiple of the channel count")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("state has non-finite entries")

    @property
    def norm(self):
        return float(np.linalg.norm(self.values))

    def channel(self, j):
        n = self.values.size // self.m
        return self.values[j * n:(j + 1) * n]


@dataclass
class DiscreteOperator:
    """Box matrix plus (optionally) its padded-grid parent for interior commutators."""

    matrix: sp.spmatrix
    grid: Grid
    m: int = 1
    padded: Optional[sp.spmatrix] = None
    hermitian_defect: Optional[float] = None
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.matrix = sp.csr_matrix(self.matrix)
        if self.padded is not None:
            self.padded = sp.csr_matrix(self.padded)
        if self.hermitian_defect is None:
            self.hermitian_defect = hermitian_defect(self.matrix)

    @property
    def shape(self):
        return self.matrix.shape

    def apply(self, v):
        if isinstance(v, DiscreteState):
            return DiscreteState(self.matrix @ v.values, self.m)
        return self.matrix @ v

    __matmul__ = apply

    def dense(self, cap=DENSE_CAP):
        if self.shape[0] > cap:
            raise MemoryError(f"dimension {self.shape[0]} exceeds the dense cap {cap}")
        return self.matrix.toarray()

    @property
    def is_real(self):
        return not np.iscomplexobj(self.matrix.data) or not np.any(self.matrix.data.imag)

    def to_coo_text(self, path):
        """Write 'row col re im' lines, 0-based."""
        coo = self.matrix.tocoo()
        data = coo.data.astype(complex)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
            for r, c, v in zip(coo.row, coo.col, data):
                fh.write(f"{int(r)} {int(c)} {float(v.real)!r} {float(v.imag)!r}\n")


def hermitian_defect(M):
    d = M - M.conj().T
    return float(np.max(np.abs(d.data))) if d.nnz else 0.0


def _real_if_possible(M, rel=1e-14):
    M = sp.csr_matrix(M)
    if np.iscomplexobj(M.data) and M.nnz:
        if np.max(np.abs(M.data.imag)) <= rel * max(1.0, np.max(np.abs(M.data))):
            M = sp.csr_matrix(M.real)
    return M


def _compress(ext, grid, m):
    J = channel_embedding(grid, m)
    return _real_if_possible(J.T @ ext @ J)


# ---- one-dimensional stencils on the padded axis, lifted by Kronecker products

def _second_diff_1d(ne, h):
    e = np.ones(ne)
    return sp.diags([-e[:-1], 2 * e, -e[:-1]], [-1, 0, 1], format="csr") / h**2


def _central_diff_1d(ne, h):
    e = np.ones(ne - 1)
    return sp.diags([-e, e], [-1, 1], format="csr") / (2 * h)


def _lift(op1d, axis, dim, ne):
    if dim == 1:
        return op1d
    eye = sp.identity(ne, format="csr")
    return sp.kron(op1d, eye, format="csr") if axis == 0 else sp.kron(eye, op1d, format="csr")


def padded_gradient(grid: Grid):
    """Antisymmetric central differences D_k on the padded grid, one per axis."""
    ne = grid.N + 2 * grid.pad
    d1 = _central_diff_1d(ne, grid.spacing)
    return [_lift(d1, k, grid.dim, ne) for k in range(grid.dim)]


def padded_laplacian(grid: Grid):
    """-Delta on the padded grid."""
    ne = grid.N + 2 * grid.pad
    t1 = _second_diff_1d(ne, grid.spacing)
    return sum(_lift(t1, k, grid.dim, ne) for k in range(grid.dim))


def build_laplacian(grid: Grid) -> DiscreteOperator:
    """Dirichlet -Delta_h (3-point stencil per axis)."""
    ext = padded_laplacian(grid)
    return DiscreteOperator(_compress(ext, grid, 1), grid, 1, ext, label="-Delta")


def _first_order(coef, grads):
    """sum_k (C_k D_k + D_k C_k)/2 for coefficient arrays coef[..., k]."""
    out = None
    for k, D in enumerate(grads):
        C = sp.diags(coef[:, k])
        t = (C @ D + D @ C) / 2
        out = t if out is None else out + t
    return out


def _coupling_blocks(spec: ProblemSpec, pts, grads, coord_map=None, vec_map=None, keep=None):
    """Dict (j, k) -> padded block contributions, symmetric by construction."""
    blocks = {}
    npts = pts.shape[0]
    ambient = pts if coord_map is None else coord_map(pts)

    def add(key, M):
        blocks[key] = M if key not in blocks else blocks[key] + M

    for c in spec.couplings:
        if keep is not None and not keep(c):
            continue
        B = sp.csr_matrix((npts, npts), dtype=complex)
        if c.r_tilde is not None:
            vec = np.asarray(c.r_tilde(ambient), dtype=complex).reshape(npts, -1)
            if vec_map is not None:
                vec = vec_map(vec)
            B = B + _first_order(vec, grads)
        if c.r_hat is not None:
            B = B + sp.diags(np.asarray(c.r_hat(ambient), dtype=complex) * np.ones(npts))
        if c.j == c.k:
            add((c.j, c.j), (B + B.conj().T) / 2)
        else:
            add((c.j, c.k), B)
            add((c.k, c.j), B.conj().T)
    return blocks


def _assemble(diag_blocks, coup_blocks, m):
    rows = []
    for j in range(m):
        row = []
        for k in range(m):
            M = coup_blocks.get((j, k))
            if j == k:
                M = diag_blocks[j] if M is None else diag_blocks[j] + M
            row.append(M)
        rows.append(row)
    return sp.bmat(rows, format="csr")


def build_P(spec: ProblemSpec, grid: Grid) -> DiscreteOperator:
    """diag(-Delta + V_j) + R with block(k, j) = adjoint(block(j, k))."""
    if grid.dim != spec.ambient_dim:
        raise SpecInvalid(f"grid dim {grid.dim} != spec ambient dim {spec.ambient_dim}")
    pts = grid.padded_points
    T = padded_laplacian(grid)
    diag = [T + sp.diags(spec.potential(j, pts)) for j in range(spec.m)]
    grads = padded_gradient(grid)
    ext = _real_if_possible(_assemble(diag, _coupling_blocks(spec, pts, grads), spec.m))
    return DiscreteOperator(_compress(ext, grid, spec.m), grid, spec.m, ext, label="P")


def _dilation_like(grid, coef, m, label):
    grads = padded_gradient(grid)
    S = 2 * _first_order(coef, grads)  # sum_k (G_k D_k + D_k G_k)
    ext = sp.block_diag([-1j * S] * m, format="csr")
    return DiscreteOperator(_compress(ext, grid, m), grid, m, ext, label=label)


def build_A(grid: Grid, channels: int = 1) -> DiscreteOperator:
    """(x.D + D.x)/2 times -i, i.e. the discrete dilation generator (x.p + p.x)/2; diag over channels."""
    return _dilation_like(grid, grid.padded_points / 2.0, channels, "A")


def build_AV(grid: Grid, weight, channels: int = 1) -> DiscreteOperator:
    """grad a . p + p . grad a with p = -i D; equals build_A when a = |x|^2/4."""
    return _dilation_like(grid, np.asarray(weight.grad(grid.padded_points)), channels, "A_V")


def commutator(O1: DiscreteOperator, O2: DiscreteOperator, mode: str = "auto") -> DiscreteOperator:
    """i(O1 O2 - O2 O1), re-Hermitized.

    mode="interior" multiplies the padded parents and compresses afterwards;
    mode="matrix" uses the box matrices as they are.  "auto" picks interior
    whenever both operators carry a padded parent.
    """
    if O1.shape != O2.shape:
        raise ShapeMismatch(f"{O1.shape} vs {O2.shape}")
    if mode == "auto":
        mode = "interior" if (O1.padded is not None and O2.padded is not None) else "matrix"
    if mode == "interior":
        if O1.padded is None or O2.padded is None or O1.padded.shape != O2.padded.shape:
            raise ShapeMismatch("interior commutator needs matching padded operators")
        ext = 1j * (O1.padded @ O2.padded - O2.padded @ O1.padded)
        C = channel_embedding(O1.grid, O1.m).T @ ext @ channel_embedding(O1.grid, O1.m)
    elif mode == "matrix":
        ext = None
        C = 1j * (O1.matrix @ O2.matrix - O2.matrix @ O1.matrix)
    else:
        raise ValueError(f"unknown commutator mode {mode!r}")
    C = sp.csr_matrix(C)
    defect = hermitian_defect(C)
    C = _real_if_possible((C + C.conj().T) / 2)
    if ext is not None:
        ext = _real_if_possible((ext + ext.conj().T) / 2)
    return DiscreteOperator(C, O1.grid, O1.m, ext, hermitian_defect=defect,
                            label=f"i[{O1.label},{O2.label}]", meta={"mode": mode, "raw_defect": defect})


def multiplication(grid: Grid, values, channels: int = 1) -> DiscreteOperator:
    """Diagonal multiplication operator by a function sampled on the (padded) grid."""
    f = values if callable(values) else None
    if f is None:
        raise TypeError("values must be a callable of points")
    ext = sp.block_diag([sp.diags(np.asarray(f(grid.padded_points), dtype=float))] * channels, format="csr")
    return DiscreteOperator(_compress(ext, grid, channels), grid, channels, ext, label="mult")


# ---- many-body subsystems

@dataclass(frozen=True)
class ConstantSubsystem:
    """The subsystem with no internal coordinates: diag(c_1, ..., c_m)."""

    constants: np.ndarray

    @property
    def eigenvalues(self):
        return np.sort(np.asarray(self.constants, dtype=float))


def build_subsystem(spec: ProblemSpec, grid: Grid, a: int):
    """P^a on a grid over the coordinates of X^a (same L and N as ``grid``)."""
    if spec.mode != "manybody" or spec.lattice is None:
        raise NotManyBody("subsystem operators need a many-body spec")
    lat = spec.lattice
    basis = lat.internal_basis(a)  # rows span X^a
    d = basis.shape[0]
    if d == 0:
        return ConstantSubsystem(spec.constants)
    below = set(lat.below(a))
    sub = Grid(d, grid.L, grid.N, grid.pad)
    pts = sub.padded_points
    amb = pts @ basis
    T = padded_laplacian(sub)
    diag = [T + sp.diags(spec.potential(j, amb, elements=below)) for j in range(spec.m)]
    grads = padded_gradient(sub)
    blocks = _coupling_blocks(
        spec, pts, grads, coord_map=lambda y: y @ basis, vec_map=lambda v: v @ basis.T,
        keep=lambda c: c.lattice_element in below,
    )
    ext = _real_if_possible(_assemble(diag, blocks, spec.m))
    return DiscreteOperator(_compress(ext, sub, spec.m), sub, spec.m, ext, label=f"P^{a}",
                            meta={"element": a, "basis": basis})


def build_graf_G(lattice, smoothing=0.05, offsets=None):
    """Convex Graf-type function and its property checker (see :mod:`multistate.graf`)."""
    from .graf import GrafFunction

    return GrafFunction(lattice, smoothing, offsets)
