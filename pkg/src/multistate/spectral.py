"""Spectral windows, filters, Mourre-form diagnostics, thresholds and essential-spectrum checks."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import brentq, minimize_scalar

from .discretize import DENSE_CAP, DiscreteOperator, Grid, build_P, build_subsystem, ConstantSubsystem
from .errors import BelowSigma, BoxTooSmall, EigensolverFailure, EmptyFilter, RecursionDepth, SpecInvalid
from .model import ProblemSpec
from .profiles import EnergyBump, standard_bump

DENSE_EIGH_MAX = 4096  # below this size a full dense eigensolve is cheaper than shift-invert
LOCALIZATION_RADIUS = 0.25
LOCALIZED = 0.9
DELOCALIZED = 0.5


@dataclass(frozen=True)
class SpectralWindow:
    center: float
    half_width: float

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    @property
    def interval(self):
        return (self.center - self.half_width, self.center + self.half_width)

    def contains(self, E):
        lo, hi = self.interval
        E = np.asarray(E)
        return (E > lo) & (E < hi)


# ---------------------------------------------------------------- eigenpairs

def _as_matrix(P):
    return P.matrix if isinstance(P, DiscreteOperator) else sp.csr_matrix(P)


def eigenpairs_in(P, lo, hi, k0=40, dense_max=DENSE_EIGH_MAX):
    """All eigenpairs of the Hermitian P with eigenvalue in the open interval (lo, hi)."""
    M = _as_matrix(P)
    n = M.shape[0]
    if n <= dense_max:
        w, V = sla.eigh(M.toarray(), subset_by_value=(lo, hi))
        keep = (w > lo) & (w < hi)
        return w[keep], V[:, keep]
    center = 0.5 * (lo + hi)
    radius = 0.5 * (hi - lo)
    sigma = center + 1e-7 * np.pi * (1 + abs(center))
    k = min(k0, n - 2)
    op = spla.splu(sp.csc_matrix(M - sigma * sp.identity(n, dtype=M.dtype, format="csc")))
    inv = spla.LinearOperator((n, n), matvec=op.solve, dtype=M.dtype)
    while True:
        try:
            w, V = spla.eigsh(M, k=k, sigma=sigma, which="LM", OPinv=inv, tol=1e-12)
        except spla.ArpackNoConvergence as exc:
            raise EigensolverFailure(str(exc)) from exc
        if np.max(np.abs(w - center)) > radius + abs(sigma - center) or k >= n - 2:
            break
        k = min(2 * k, n - 2)
    if np.max(np.abs(w - center)) <= radius and k >= n - 2:
        raise EigensolverFailure("window holds nearly the whole spectrum; use a dense operator")
    order = np.argsort(w)
    w, V = w[order], V[:, order]
    keep = (w > lo) & (w < hi)
    return w[keep], V[:, keep]


def lowest_eigenpairs(P, k, dense_max=DENSE_EIGH_MAX):
    M = _as_matrix(P)
    n = M.shape[0]
    if n <= dense_max:
        w, V = sla.eigh(M.toarray(), subset_by_index=(0, min(k, n) - 1))
        return w, V
    lo = gershgorin(M)[0]
    w, V = spla.eigsh(M, k=k, sigma=lo - 1.0, which="LM", tol=1e-12)
    o = np.argsort(w)
    return w[o], V[:, o]


def eigenvalues_below(P, E, k0=16, dense_max=DENSE_EIGH_MAX):
    """All eigenvalues strictly below E."""
    M = _as_matrix(P)
    n = M.shape[0]
    if n <= dense_max:
        w = sla.eigvalsh(M.toarray())
        return w[w < E]
    k = k0
    while True:
        w, _ = lowest_eigenpairs(M, k, dense_max)
        if w[-1] >= E or k >= n - 2:
            return w[w < E]
        k = min(2 * k, n - 2)


def gershgorin(M):
    M = _as_matrix(M)
    d = M.diagonal().real
    off = np.asarray(abs(M).sum(axis=1)).ravel() - np.abs(d)
    return float(np.min(d - off)), float(np.max(d + off))


def localization(op: DiscreteOperator, vectors, frac=LOCALIZATION_RADIUS):
    """Mass fraction of each column inside |x| <= frac * L."""
    grid = op.grid
    inside = np.tile(grid.radius <= frac * grid.L, op.m)
    V = np.asarray(vectors).reshape(op.shape[0], -1)
    mass = np.sum(np.abs(V) ** 2, axis=0)
    return np.sum(np.abs(V[inside]) ** 2, axis=0) / np.where(mass > 0, mass, 1.0)


# ---------------------------------------------------------------- projections and filters

@dataclass
class WindowProjection:
    eigenvalues: np.ndarray
    basis: np.ndarray  # columns

    @property
    def rank(self):
        return self.basis.shape[1]

    def apply(self, v):
        if self.rank == 0:
            return np.zeros_like(v, dtype=np.result_type(v, self.basis))
        return self.basis @ (self.basis.conj().T @ v)

    def dense(self, cap=DENSE_CAP):
        n = self.basis.shape[0]
        if n > cap:
            raise MemoryError("projector too large for dense form")
        return self.basis @ self.basis.conj().T


def window_projection(P, window: SpectralWindow) -> WindowProjection:
    lo, hi = window.interval
    w, V = eigenpairs_in(P, lo, hi)
    return WindowProjection(w, V)


@dataclass
class FilterOperator:
    """f(P) applied through an eigen expansion or a Chebyshev series."""

    P: object
    f: EnergyBump
    method: str
    eigenvalues: Optional[np.ndarray] = None
    basis: Optional[np.ndarray] = None
    cheb: Optional[np.ndarray] = None
    bounds: Optional[tuple] = None

    def apply(self, v):
        v = np.asarray(v)
        if self.method == "eigen":
            if self.basis.shape[1] == 0:
                return np.zeros(v.shape, dtype=np.result_type(v, float))
            return self.basis @ (self.f(self.eigenvalues) * (self.basis.conj().T @ v))
        M = _as_matrix(self.P)
        a, b = self.bounds
        mid, half = (a + b) / 2, (b - a) / 2
        c = self.cheb
        t0 = v.astype(np.result_type(v, M.dtype, float))
        t1 = (M @ t0 - mid * t0) / half
        out = c[0] * t0 + c[1] * t1
        for ck in c[2:]:
            t0, t1 = t1, 2 * (M @ t1 - mid * t1) / half - t0
            out = out + ck * t1
        return out

    def norm_bound(self):
        if self.method == "eigen":
            return float(np.max(np.abs(self.f(self.eigenvalues)), initial=0.0))
        return float(np.sum(np.abs(self.cheb)))


def chebyshev_coefficients(f, a, b, degree):
    """Chebyshev interpolation coefficients of f on [a, b]."""
    k = np.arange(degree + 1)
    nodes = np.cos(np.pi * (k + 0.5) / (degree + 1))
    vals = f((b - a) / 2 * nodes + (a + b) / 2)
    c = np.array([2.0 / (degree + 1) * np.sum(vals * np.cos(np.pi * j * (k + 0.5) / (degree + 1)))
                  for j in range(degree + 1)])
    c[0] /= 2
    return c


def smooth_filter(P, f: EnergyBump, method="eigen", tol=1e-8, max_degree=2**16, n_probe=3, seed=0) -> FilterOperator:
    """f(P) for a compactly supported bump.

    The eigen path expands over every eigenpair inside supp f, which is exact
    because f vanishes elsewhere.  The Chebyshev path doubles the degree until
    it matches the eigen path on random probes to ``tol``.
    """
    lo, hi = f.interval
    w, V = eigenpairs_in(P, lo, hi)
    exact = FilterOperator(P, f, "eigen", w, V)
    if method == "eigen":
        return exact
    if method != "chebyshev":
        raise ValueError(f"unknown filter method {method!r}")
    a, b = gershgorin(P)
    rng = np.random.default_rng(seed)
    n = _as_matrix(P).shape[0]
    probes = [rng.normal(size=n) for _ in range(n_probe)]
    ref = [exact.apply(p) for p in probes]
    deg = 64
    while deg <= max_degree:
        cand = FilterOperator(P, f, "chebyshev", cheb=chebyshev_coefficients(f, a, b, deg), bounds=(a, b))
        err = max(np.linalg.norm(cand.apply(p) - r) / np.linalg.norm(p) for p, r in zip(probes, ref))
        if err <= tol:
            return cand
        deg *= 2
    raise EigensolverFailure(f"Chebyshev filter did not reach {tol} up to degree {max_degree}")


# ---------------------------------------------------------------- Mourre form

@dataclass
class MourreReport:
    window: SpectralWindow
    gamma_target: float
    n_window: int
    rayleigh_min: Optional[float]
    negative_modes: int
    localization: list
    stability: list  # (L, negative_modes) from small to large box
    gamma_achieved: Optional[float]
    tol: float = 1e-9
    form_eigenvalues: list = field(default_factory=list)

    @property
    def pure_bound(self):
        return self.rayleigh_min is None or self.rayleigh_min >= self.gamma_target - self.tol

    @property
    def stable(self):
        counts = [c for _, c in self.stability]
        return len(counts) < 2 or counts[-1] == counts[-2]

    @property
    def mourre_compatible(self):
        return self.stable and all(l >= LOCALIZED for l in self.localization)

    def to_json(self):
        d = {
            "window": [self.window.center, self.window.half_width],
            "gamma_target": self.gamma_target,
            "n_window": self.n_window,
            "rayleigh_min": self.rayleigh_min,
            "negative_modes": self.negative_modes,
            "localization": [float(x) for x in self.localization],
            "stability": [[float(L), int(c)] for L, c in self.stability],
            "gamma_achieved": self.gamma_achieved,
            "pure_bound": self.pure_bound,
            "mourre_compatible": self.mourre_compatible,
        }
        return json.dumps(d)


def mourre_form(P: DiscreteOperator, conj: DiscreteOperator, window: SpectralWindow, mode="auto"):
    """Eigen-decomposition of Q^* i[P, conj] Q on the window eigenbasis Q."""
    from .discretize import commutator

    lo, hi = window.interval
    w, Q = eigenpairs_in(P, lo, hi)
    if Q.shape[1] == 0:
        return w, Q, np.zeros(0), np.zeros((0, 0))
    C = commutator(P, conj, mode=mode)
    F = Q.conj().T @ (C.matrix @ Q)
    F = (F + F.conj().T) / 2
    ev, U = np.linalg.eigh(F)
    return w, Q, ev, U


def _count(P, conj, window, gamma_target, tol, mode):
    w, Q, ev, U = mourre_form(P, conj, window, mode)
    neg = ev < gamma_target - tol
    return w, Q, ev, U, neg


def mourre_report(P: DiscreteOperator, conj: DiscreteOperator, window: SpectralWindow, gamma_target: float,
                  ladder: Sequence = (), tol: float = 1e-9, mode: str = "auto") -> MourreReport:
    """Windowed commutator form, its modes below gamma_target, their localization and box stability.

    ``ladder`` holds extra (P, conj) pairs on smaller boxes; the main pair is the
    largest rung.
    """
    w, Q, ev, U, neg = _count(P, conj, window, gamma_target, tol, mode)
    loc = []
    if np.any(neg):
        loc = [float(x) for x in localization(P, Q @ U[:, neg])]
    stability = []
    for Pk, Ck in ladder:
        stability.append((Pk.grid.L, int(np.sum(_count(Pk, Ck, window, gamma_target, tol, mode)[-1]))))
    stability.append((P.grid.L, int(np.sum(neg))))
    stability.sort(key=lambda t: t[0])
    rest = ev[~neg]
    return MourreReport(
        window=window,
        gamma_target=float(gamma_target),
        n_window=int(len(w)),
        rayleigh_min=float(ev[0]) if ev.size else None,
        negative_modes=int(np.sum(neg)),
        localization=loc,
        stability=stability,
        gamma_achieved=float(rest[0]) if rest.size else None,
        tol=tol,
        form_eigenvalues=[float(x) for x in ev[:16]],
    )


def mourre_scan(P, conj, center, half_widths, gamma_target, mode="auto"):
    """Rows (delta, rayleigh_min, negative_modes) for a sequence of window half-widths."""
    rows = []
    for d in half_widths:
        _, _, ev, _, neg = _count(P, conj, SpectralWindow(center, d), gamma_target, 1e-9, mode)
        rows.append((float(d), float(ev[0]) if ev.size else float("nan"), int(np.sum(neg))))
    return rows


# ---------------------------------------------------------------- thresholds

@dataclass
class ThresholdSet:
    values: list
    provenance: list

    @property
    def sigma(self):
        return float(min(self.values))

    def to_json(self):
        return json.dumps({"values": [float(v) for v in self.values], "provenance": self.provenance,
                           "sigma": self.sigma})


def _merge(values, prov, tol=1e-9):
    order = np.argsort(values, kind="stable")
    out_v, out_p = [], []
    for i in order:
        if out_v and abs(values[i] - out_v[-1]) <= tol:
            out_p[-1] = out_p[-1] + "; " + prov[i]
        else:
            out_v.append(float(values[i]))
            out_p.append(prov[i])
    return out_v, out_p


def thresholds(spec: ProblemSpec, grid: Grid, a: int, _depth=0, _cache=None) -> ThresholdSet:
    """Thresholds of the subsystem a: discrete eigenvalues of every strictly intermediate
    subsystem below its own onset, together with the channel constants."""
    if spec.mode != "manybody":
        raise SpecInvalid("thresholds need a many-body spec")
    lat = spec.lattice
    if _depth > len(lat):
        raise RecursionDepth("lattice recursion did not terminate")
    if _cache is None:
        _cache = {}
    if a in _cache:
        return _cache[a]
    vals = [float(c) for c in spec.constants]
    prov = [f"c_{j + 1}" for j in range(spec.m)]
    for b in lat.below(a, strict=True):
        if b == lat.a_min:
            continue
        onset = thresholds(spec, grid, b, _depth + 1, _cache).sigma
        Pb = build_subsystem(spec, grid, b)
        if isinstance(Pb, ConstantSubsystem):
            continue
        for i, e in enumerate(eigenvalues_below(Pb, onset - 1e-9)):
            vals.append(float(e))
            prov.append(f"eigenvalue {i} of P^b, b = element {b} (dim X^b = {Pb.grid.dim})")
    v, p = _merge(vals, prov)
    res = ThresholdSet(v, p)
    _cache[a] = res
    return res


def d_lambda(T: ThresholdSet, lam: float) -> float:
    """Distance from lam to the nearest threshold at or below it."""
    if lam < T.sigma:
        raise BelowSigma(f"lambda = {lam} lies below Sigma = {T.sigma}")
    return float(min(lam - t for t in T.values if t <= lam))


# ---------------------------------------------------------------- essential spectrum

def channel_spec(spec: ProblemSpec, j: int) -> ProblemSpec:
    return ProblemSpec(1, spec.ambient_dim, (spec.potentials[j],), (), spec.lattice, spec.mode)


def analytic_channel_minimum(spec: ProblemSpec, j: int, n_scan=4096):
    """(min over the circle of the homogeneous profile plus constant, minimizing angle)."""
    p = spec.potentials[j]
    if p.homogeneous is None:
        return float(p.constant), 0.0
    th = np.linspace(0, 2 * np.pi, n_scan, endpoint=False)
    v = p.homogeneous(th)
    i = int(np.argmin(v))
    step = 2 * np.pi / n_scan
    res = minimize_scalar(lambda t: float(p.homogeneous(np.array(t))), bounds=(th[i] - step, th[i] + step),
                          method="bounded", options={"xatol": 1e-12})
    return float(min(res.fun, v[i])) + float(p.constant), float(res.x % (2 * np.pi))


@dataclass
class SigmaEssReport:
    analytic: float
    onsets: list  # (L, onset)

    @property
    def difference(self):
        return self.onsets[-1][1] - self.analytic


def numerical_onset(P: DiscreteOperator, k0=24, threshold=DELOCALIZED):
    """Lowest eigenvalue whose eigenvector is not localized in the inner quarter box."""
    n = P.shape[0]
    k = min(k0, n - 2)
    while True:
        w, V = lowest_eigenpairs(P, k)
        loc = localization(P, V)
        idx = np.flatnonzero(loc < threshold)
        if idx.size:
            return float(w[idx[0]])
        if k >= n - 2:
            return float("nan")
        k = min(2 * k, n - 2)


def sigma_ess_bottom(spec: ProblemSpec, grid_ladder: Sequence[Grid], j: int) -> SigmaEssReport:
    analytic, _ = analytic_channel_minimum(spec, j)
    cs = channel_spec(spec, j)
    onsets = [(g.L, numerical_onset(build_P(cs, g))) for g in sorted(grid_ladder, key=lambda g: g.L)]
    return SigmaEssReport(analytic, onsets)


def _discrete_wavenumber(energy, h):
    if energy <= 0:
        return 0.0
    if energy >= 4 / h**2:
        raise BoxTooSmall("energy above the grid band edge")
    return brentq(lambda q: (2 - 2 * np.cos(q * h)) / h**2 - energy, 0.0, np.pi / h)


def weyl_state(spec: ProblemSpec, grid: Grid, j: int, lam: float, k: float, angle=None):
    """k^{-n/2} e^{i q omega.x} phi((x - k^2 omega)/k) with q matched to the grid dispersion."""
    sigma_j, amin = analytic_channel_minimum(spec, j)
    if lam < sigma_j:
        raise BelowSigma(f"lambda = {lam} below Sigma_j = {sigma_j}")
    if grid.dim == 1:
        omega = np.array([1.0 if angle is None else np.sign(np.cos(angle)) or 1.0])
    else:
        ang = amin if angle is None else angle
        omega = np.array([np.cos(ang), np.sin(ang)])
    x = grid.points
    center = k**2 * omega
    if np.max(np.abs(center)) + k > grid.L - 2 * grid.spacing:
        raise BoxTooSmall(f"bump at scale k = {k} does not fit in the box of half-width {grid.L}")
    q = _discrete_wavenumber(lam - sigma_j, grid.spacing)
    u = (x - center) / k
    phi = standard_bump(np.sqrt(np.sum(u**2, axis=-1)))
    return k ** (-grid.dim / 2) * np.exp(1j * q * (x @ omega)) * phi


def weyl_residual(spec: ProblemSpec, grid: Grid, j: int, lam: float, k: float, angle=None) -> float:
    """||(P_j - lam) u^k|| / ||u^k||."""
    P = build_P(channel_spec(spec, j), grid)
    u = weyl_state(spec, grid, j, lam, k, angle)
    return float(np.linalg.norm(P.matrix @ u - lam * u) / np.linalg.norm(u))


# ---------------------------------------------------------------- eigenvalue counts

@dataclass
class EigencountReport:
    count: int
    counts: list  # (L, count)

    @property
    def stable(self):
        c = [x for _, x in self.counts]
        return len(c) < 2 or c[-1] == c[-2]


def eigencount_window(P: DiscreteOperator, window: SpectralWindow, ladder: Sequence = ()) -> EigencountReport:
    """Number of localized (>= 0.9 inner-quarter mass) eigenvectors with eigenvalue in the window."""
    def one(op):
        lo, hi = window.interval
        w, V = eigenpairs_in(op, lo, hi)
        return int(np.sum(localization(op, V) >= LOCALIZED)) if w.size else 0

    counts = [(op.grid.L, one(op)) for op in ladder] + [(P.grid.L, one(P))]
    counts.sort(key=lambda t: t[0])
    return EigencountReport(dict(counts)[P.grid.L], counts)


def check_energy_window_mass(P, psi, interval):
    """||E_P(interval) psi||^2 / ||psi||^2."""
    w, V = eigenpairs_in(P, *interval)
    if w.size == 0:
        return 0.0
    c = V.conj().T @ psi
    return float(np.sum(np.abs(c) ** 2) / np.linalg.norm(psi) ** 2)
