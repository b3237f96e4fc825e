"""Analytic problem data: channel potentials, couplings, crossings, cutoffs and the weight a(x).

Points are arrays of shape (..., n).  Angles on the circle are in radians.
Channels are indexed from 0 in code.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import BetaTooLarge, CriticalValue, SpecInvalid, WidthTooLarge
from .lattice import SubspaceLattice
from .profiles import dplateau_bump, dradial_switch, plateau_bump, radial_switch

MODES = ("decaying", "homogeneous", "manybody")


def japanese(x):
    """<x> = (1 + |x|^2)^(1/2) for points of shape (..., n)."""
    x = np.asarray(x, dtype=float)
    return np.sqrt(1.0 + np.sum(x**2, axis=-1))


@dataclass(frozen=True)
class SphereProfile:
    """A function on S^1 given by its angular values and angular derivative."""

    value: Callable
    dtheta: Callable
    label: str = ""

    def __call__(self, theta):
        return self.value(np.asarray(theta, dtype=float))


@dataclass(frozen=True)
class ManyBodyTerm:
    """v^b: an ambient callable expected to depend on x only through x^b."""

    element: int
    fn: Callable
    label: str = ""


@dataclass(frozen=True)
class ChannelPotential:
    homogeneous: Optional[SphereProfile] = None
    decaying: Optional[Callable] = None
    decay_rate: float = 0.0
    constant: float = 0.0
    manybody_terms: tuple = ()

    def homogeneous_part(self, x):
        x = np.asarray(x, dtype=float)
        if self.homogeneous is None:
            return np.zeros(x.shape[:-1])
        r = np.sqrt(np.sum(x**2, axis=-1))
        theta = np.arctan2(x[..., 1], x[..., 0])
        return radial_switch(r) * self.homogeneous(theta)

    def __call__(self, x, elements=None):
        """V_j(x); ``elements`` restricts the many-body sum to the given lattice indices."""
        x = np.asarray(x, dtype=float)
        out = self.homogeneous_part(x) + self.constant
        if self.decaying is not None:
            out = out + self.decaying(x)
        for t in self.manybody_terms:
            if elements is None or t.element in elements:
                out = out + t.fn(x)
        return out


@dataclass(frozen=True)
class CouplingTerm:
    """r_jk = r_tilde . grad + r_hat acting from channel k into channel j."""

    j: int
    k: int
    r_tilde: Optional[Callable] = None  # x -> (..., n)
    r_hat: Optional[Callable] = None  # x -> (...)
    lattice_element: Optional[int] = None
    decay_rate: float = 0.0
    label: str = ""


@dataclass(frozen=True)
class ProblemSpec:
    m: int
    ambient_dim: int
    potentials: tuple
    couplings: tuple = ()
    lattice: Optional[SubspaceLattice] = None
    mode: str = "decaying"

    def __post_init__(self):
        object.__setattr__(self, "potentials", tuple(self.potentials))
        object.__setattr__(self, "couplings", tuple(self.couplings))
        if self.mode not in MODES:
            raise SpecInvalid(f"unknown mode {self.mode!r}")
        if len(self.potentials) != self.m:
            raise SpecInvalid(f"{len(self.potentials)} potentials for m = {self.m}")
        if self.ambient_dim not in (1, 2):
            raise SpecInvalid("only n = 1 and n = 2 are supported")
        for c in self.couplings:
            if not (0 <= c.j < self.m and 0 <= c.k < self.m):
                raise SpecInvalid(f"coupling ({c.j}, {c.k}) out of range")
        has_hom = any(p.homogeneous is not None for p in self.potentials)
        if self.mode == "homogeneous" and self.ambient_dim < 2:
            raise SpecInvalid("homogeneous mode needs n >= 2: sphere gradients do not exist in 1D")
        if has_hom and self.mode != "homogeneous":
            raise SpecInvalid("homogeneous potentials are only allowed in homogeneous mode")
        if self.mode == "manybody":
            if self.lattice is None:
                raise SpecInvalid("manybody mode requires a lattice")
            if self.lattice.ambient_dim != self.ambient_dim:
                raise SpecInvalid("lattice and spec disagree on the ambient dimension")
            for p in self.potentials:
                for t in p.manybody_terms:
                    if t.element == self.lattice.a_min:
                        raise SpecInvalid("v^{a_min} must vanish")
                    if not 0 <= t.element < len(self.lattice):
                        raise SpecInvalid(f"lattice element {t.element} out of range")
            for c in self.couplings:
                if c.lattice_element is None or c.lattice_element == self.lattice.a_min:
                    raise SpecInvalid("manybody couplings need a lattice element other than a_min")
        elif any(p.manybody_terms for p in self.potentials):
            raise SpecInvalid("many-body terms need manybody mode")

    @property
    def constants(self):
        return np.array([p.constant for p in self.potentials])

    def potential(self, j, x, elements=None):
        return self.potentials[j](x, elements)

    def without_couplings(self):
        return ProblemSpec(self.m, self.ambient_dim, self.potentials, (), self.lattice, self.mode)


# ---------------------------------------------------------------- crossings

@dataclass(frozen=True)
class CrossingSet:
    angles: np.ndarray
    memberships: tuple  # tuple of frozensets of channel indices
    energy: float

    @property
    def directions(self):
        return np.stack([np.cos(self.angles), np.sin(self.angles)], axis=-1).reshape(-1, 2)

    def __len__(self):
        return len(self.angles)

    def owned_by(self, j):
        return [self.angles[i] for i, mem in enumerate(self.memberships) if j in mem]


def _angle_diff(a, b):
    return (np.asarray(a) - b + np.pi) % (2 * np.pi) - np.pi


def _circle_roots(f, df, lam, n_scan=4096, crit_tol=1e-6):
    th = np.linspace(0.0, 2 * np.pi, n_scan, endpoint=False)
    g = f(th) - lam
    scale = max(1.0, float(np.max(np.abs(f(th)))))
    roots = []
    for i in range(n_scan):
        a, b = th[i], th[i] + 2 * np.pi / n_scan
        ga, gb = g[i], g[(i + 1) % n_scan]
        if ga == 0.0:
            roots.append(a)
        elif ga * gb < 0:
            roots.append(brentq(lambda t: f(np.array(t)) - lam, a, b, xtol=1e-14, rtol=1e-15))
    # tangential touches that never change sign
    for i in range(n_scan):
        gm, g0, gp = g[i - 1], g[i], g[(i + 1) % n_scan]
        if abs(g0) < 1e-6 * scale and abs(g0) <= abs(gm) and abs(g0) <= abs(gp) and gm * gp > 0 and g0 * gm > 0:
            raise CriticalValue(f"level {lam} touches the profile tangentially near angle {th[i]:.6f}")
    out = []
    for r in roots:
        r = float(r % (2 * np.pi))
        if abs(df(np.array(r))) < crit_tol:
            raise CriticalValue(f"level {lam} is a critical value (angle {r:.6f})")
        out.append(r)
    return out


def find_crossings(spec: ProblemSpec, lam: float, n_scan=4096, crit_tol=1e-6) -> CrossingSet:
    """All directions where some homogeneous profile equals ``lam``, with channel memberships."""
    if spec.mode != "homogeneous" or spec.ambient_dim != 2:
        raise SpecInvalid("find_crossings needs homogeneous mode on n = 2")
    angles = []
    for p in spec.potentials:
        if p.homogeneous is None:
            continue
        for r in _circle_roots(p.homogeneous.value, p.homogeneous.dtheta, lam, n_scan, crit_tol):
            if not any(abs(_angle_diff(r, a)) < 1e-8 for a in angles):
                angles.append(r)
    angles = np.sort(np.array(angles, dtype=float))
    mem = []
    for a in angles:
        s = frozenset(
            j for j, p in enumerate(spec.potentials)
            if p.homogeneous is not None and abs(p.homogeneous(a) - lam) <= 1e-9
        )
        mem.append(s)
    return CrossingSet(angles, tuple(mem), float(lam))


@dataclass(frozen=True)
class GradientCheck:
    angle: float
    channel: int
    margin: float
    passed: bool


def check_gradient_condition(crossings: CrossingSet, spec: ProblemSpec):
    """Tangential gradient test at every crossing for every member channel."""
    out = []
    for a, mem in zip(crossings.angles, crossings.memberships):
        grads = {j: float(spec.potentials[j].homogeneous.dtheta(np.array(a))) for j in mem}
        total = sum(grads.values())
        for j in sorted(mem):
            margin = grads[j] * total
            out.append(GradientCheck(float(a), j, margin, margin > 0))
    return out


# ------------------------------------------------------------------ cutoffs

class AngularCutoff:
    """chi_j: sum of plateau bumps around the crossing angles owned by channel j."""

    def __init__(self, centers, width):
        self.centers = [float(c) for c in centers]
        self.width = float(width)

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta)
        for c in self.centers:
            out = out + plateau_bump(_angle_diff(theta, c), self.width / 2, self.width)
        return out

    def dtheta(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta)
        for c in self.centers:
            out = out + dplateau_bump(_angle_diff(theta, c), self.width / 2, self.width)
        return out

    def at_points(self, x):
        x = np.asarray(x, dtype=float)
        return self(np.arctan2(x[..., 1], x[..., 0]))


def build_cutoffs(crossings: CrossingSet, width: float, m: int):
    """One cutoff per channel; channels without crossings get the zero function."""
    if width <= 0:
        raise WidthTooLarge("width must be positive")
    a = crossings.angles
    if len(a) > 1:
        sep = min(abs(_angle_diff(a[i], a[j])) for i in range(len(a)) for j in range(i + 1, len(a)))
    else:
        sep = 2 * np.pi
    if width >= sep / 2:
        raise WidthTooLarge(f"width {width} >= half the minimal separation {sep / 2}")
    return [AngularCutoff(crossings.owned_by(j), width) for j in range(m)]


# ------------------------------------------------------------------ weight a(x)

class Weight:
    """a(x) = (1 - 2 beta S(x)) |x|^2 / 4 with S = theta(r) sum_j Vt_j(phi) chi_j(phi)."""

    def __init__(self, spec: ProblemSpec, cutoffs, beta: float):
        self.spec = spec
        self.cutoffs = list(cutoffs) if cutoffs is not None else []
        self.beta = float(beta)
        self._terms = [
            (p.homogeneous, c)
            for p, c in zip(spec.potentials, self.cutoffs)
            if p.homogeneous is not None and c.centers
        ]

    def angular_sum(self, theta):
        theta = np.asarray(theta, dtype=float)
        g = np.zeros_like(theta)
        dg = np.zeros_like(theta)
        for v, c in self._terms:
            cv = c(theta)
            g = g + v(theta) * cv
            dg = dg + v.dtheta(theta) * cv + v(theta) * c.dtheta(theta)
        return g, dg

    def _parts(self, x):
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x**2, axis=-1)
        if self.beta == 0.0 or not self._terms:
            zero = np.zeros(x.shape[:-1])
            return x, r2, zero, None
        r = np.sqrt(r2)
        theta = np.arctan2(x[..., 1], x[..., 0])
        g, dg = self.angular_sum(theta)
        s = radial_switch(r)
        S = s * g
        safe_r = np.where(r > 0, r, 1.0)
        dS_r = dradial_switch(r) * g
        dS_t = s * dg / safe_r
        er = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        et = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
        gradS = dS_r[..., None] * er + dS_t[..., None] * et
        return x, r2, S, gradS

    def __call__(self, x):
        _, r2, S, _ = self._parts(x)
        return (1.0 - 2.0 * self.beta * S) * r2 / 4.0

    def grad(self, x):
        x, r2, S, gradS = self._parts(x)
        out = (1.0 - 2.0 * self.beta * S)[..., None] * x / 2.0
        if gradS is not None:
            out = out - (self.beta / 2.0) * r2[..., None] * gradS
        return out

    def positivity_margin(self, n_theta=4096):
        """min over the plane of 1 - 2 beta S."""
        if self.beta == 0.0 or not self._terms:
            return 1.0
        th = np.linspace(0, 2 * np.pi, n_theta, endpoint=False)
        g, _ = self.angular_sum(th)
        return float(min(1.0, np.min(1.0 - 2.0 * self.beta * g)))

    def hessian_min_eig(self, radii=None, n_theta=720, eps=1e-5):
        """Smallest Hessian eigenvalue of a on a polar sample (finite differences of grad a)."""
        n = self.spec.ambient_dim
        if self.beta == 0.0 or not self._terms:
            return 0.5
        if radii is None:
            radii = np.linspace(0.02, 2.0, 60)
        th = np.linspace(0, 2 * np.pi, n_theta, endpoint=False)
        R, T = np.meshgrid(radii, th, indexing="ij")
        pts = np.stack([R * np.cos(T), R * np.sin(T)], axis=-1).reshape(-1, n)
        H = np.empty(pts.shape[:1] + (n, n))
        for k in range(n):
            e = np.zeros(n)
            e[k] = eps
            H[:, :, k] = (self.grad(pts + e) - self.grad(pts - e)) / (2 * eps)
        H = (H + np.swapaxes(H, 1, 2)) / 2
        return float(np.min(np.linalg.eigvalsh(H)))


def weight_a(spec: ProblemSpec, cutoffs, beta: float, min_margin=0.5) -> Weight:
    """Weight a(x) and its gradient; raises BetaTooLarge if 1 - 2 beta S drops below 1/2."""
    if beta < 0:
        raise BetaTooLarge("beta must be nonnegative")
    w = Weight(spec, cutoffs, beta)
    margin = w.positivity_margin()
    if margin < min_margin:
        raise BetaTooLarge(f"1 - 2 beta S reaches {margin:.4f} < {min_margin}")
    return w


def select_beta(spec: ProblemSpec, cutoffs, beta0=0.5, min_beta=1e-6):
    """Halve beta from ``beta0`` until the positivity margin and the Hessian surrogate hold.

    The Hessian test (smallest eigenvalue of Hess a at least 1/4) is the
    pointwise form of requiring the beta part of the kinetic commutator to be
    dominated by half of the free part.
    """
    beta = beta0
    while beta >= min_beta:
        w = Weight(spec, cutoffs, beta)
        if w.positivity_margin() >= 0.5 and w.hessian_min_eig() >= 0.25:
            return w
        beta /= 2
    raise BetaTooLarge("no admissible beta found")


# ------------------------------------------------------------------ assumption checks

@dataclass
class CheckResult:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)


@dataclass
class AssumptionReport:
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def names(self):
        return [c.name for c in self.checks]


def _rays(n, count=8):
    if n == 1:
        return np.array([[1.0], [-1.0]])
    th = 2 * np.pi * (np.arange(count) + 0.25) / count
    return np.stack([np.cos(th), np.sin(th)], axis=-1)


def ray_derivatives(fn, direction, radii, order=2):
    """(x.grad)^l fn along the ray s*direction, l = 0..order, by finite differences in log s.

    Along a ray x.grad = s d/ds = d/du with u = log s.
    """
    u = np.log(radii)
    du = 1e-3
    out = []
    for l in range(order + 1):
        acc = np.zeros_like(u)
        # central differences of order l in u
        for k in range(l + 1):
            coef = (-1) ** k * _binom(l, k)
            shift = (l / 2 - k) * du
            pts = np.exp(u + shift)[:, None] * direction[None, :]
            acc = acc + coef * np.asarray(fn(pts))
        out.append(acc / du**l)
    return out


def _binom(n, k):
    from math import comb

    return comb(n, k)


def _decay_check(fn, n, box, order=2, ratio_tol=0.25, directions=None):
    """o(1) surrogate: sup over the outer half of each ray relative to the global sup."""
    radii = np.linspace(0.05 * box, box, 200)
    dirs = _rays(n) if directions is None else directions
    worst = 0.0
    curves = []
    for d in dirs:
        ders = ray_derivatives(fn, d, radii, order)
        for l, vals in enumerate(ders):
            a = np.abs(np.asarray(vals))
            a = a.reshape(a.shape[0], -1).max(axis=1)
            peak = a.max()
            tail = a[radii >= box / 2].max()
            ratio = 0.0 if peak <= 1e-14 else tail / peak
            worst = max(worst, ratio)
            curves.append((l, a))
    return worst <= ratio_tol, worst, radii, curves


def _structural_check(fn, lattice, element, n, box, rng):
    """fn must be invariant along X_b (it may only depend on x^b)."""
    xb = lattice.elements[element].basis
    if xb.shape[0] == 0:
        return True, 0.0
    pts = rng.uniform(-box, box, size=(64, n))
    shifts = rng.uniform(-box, box, size=(64, xb.shape[0])) @ xb
    diff = np.max(np.abs(fn(pts + shifts) - fn(pts)))
    scale = max(1.0, float(np.max(np.abs(fn(pts)))))
    return diff <= 1e-10 * scale, float(diff)


def validate_assumptions(spec: ProblemSpec, lam: float, box: float = 40.0, seed: int = 0) -> AssumptionReport:
    """Sampled numerical surrogates of the standing assumptions for the given mode."""
    n = spec.ambient_dim
    rng = np.random.default_rng(seed)
    checks = []

    # couplings: o(1) decay of (x.grad)^l of every coefficient
    for c in spec.couplings:
        dirs = None
        if spec.mode == "manybody":
            comp = spec.lattice.internal_basis(c.lattice_element)
            dirs = np.vstack([comp, -comp])
        for part, fn in (("r_hat", c.r_hat), ("r_tilde", c.r_tilde)):
            if fn is None:
                continue
            ok, worst, radii, curves = _decay_check(fn, n, box, directions=dirs)
            det = {"tail_ratio": worst, "radii": radii, "curves": curves}
            if spec.mode == "manybody":
                sok, sdiff = _structural_check(fn, spec.lattice, c.lattice_element, n, box, rng)
                det["structural_defect"] = sdiff
                ok = ok and sok
            checks.append(CheckResult(f"coupling_decay[{c.j},{c.k}].{part}", ok, det))

    if spec.mode == "decaying":
        for j, p in enumerate(spec.potentials):
            fn = (lambda x, p=p: p(x))
            radii = np.linspace(0.05 * box, box, 200)
            sup_ok = True
            worst = 0.0
            for d in _rays(n):
                for l, vals in enumerate(ray_derivatives(fn, d, radii)):
                    a = np.abs(vals)
                    inner = a[radii < box / 2].max()
                    outer = a[radii >= box / 2].max()
                    if outer > 1.5 * inner + 1e-12:
                        sup_ok = False
                    worst = max(worst, outer)
            checks.append(CheckResult(f"bounded_dilation_derivatives[{j}]", bool(sup_ok), {"outer_sup": worst}))
            checks.append(CheckResult(
                f"single_channel_mourre[{j}]", True,
                {"note": "certified numerically by spectral.mourre_report on the channel"},
            ))

    if spec.mode == "homogeneous":
        s_vals = np.linspace(1.0, 4.0, 7)
        for j, p in enumerate(spec.potentials):
            if p.homogeneous is None:
                continue
            th = rng.uniform(0, 2 * np.pi, 64)
            r0 = rng.uniform(0.5, 2.0, 64)
            x0 = np.stack([r0 * np.cos(th), r0 * np.sin(th)], axis=-1)
            dev = max(
                float(np.max(np.abs(p.homogeneous_part(s * x0) - p.homogeneous_part(x0)))) for s in s_vals
            )
            checks.append(CheckResult(f"degree_zero[{j}]", dev <= 1e-12, {"max_deviation": dev}))
        try:
            cr = find_crossings(spec, lam)
            checks.append(CheckResult("noncritical", True, {"n_crossings": len(cr)}))
            if len(cr):
                gc = check_gradient_condition(cr, spec)
                checks.append(CheckResult(
                    "gradient_condition", all(g.passed for g in gc), {"margins": [g.margin for g in gc]}
                ))
        except CriticalValue as exc:
            checks.append(CheckResult("noncritical", False, {"error": str(exc)}))
        for j, p in enumerate(spec.potentials):
            if p.decaying is None:
                continue
            ok, worst, radii, curves = _decay_check(p.decaying, n, box)
            checks.append(CheckResult(f"decaying_part[{j}]", ok, {"tail_ratio": worst, "radii": radii, "curves": curves}))

    if spec.mode == "manybody":
        lat = spec.lattice
        for j, p in enumerate(spec.potentials):
            for t in p.manybody_terms:
                sok, sdiff = _structural_check(t.fn, lat, t.element, n, box, rng)
                comp = lat.internal_basis(t.element)
                ok, worst, _, _ = _decay_check(t.fn, n, box, directions=np.vstack([comp, -comp]))
                checks.append(CheckResult(
                    f"manybody_term[{j}].b{t.element}", sok and ok,
                    {"structural_defect": sdiff, "tail_ratio": worst},
                ))

    return AssumptionReport(checks)
