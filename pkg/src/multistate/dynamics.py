"""Time evolution e^{-itP} and the propagation observables built on it."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
from scipy import special, stats

from .discretize import DiscreteOperator
from .errors import BoundaryBreach, EmptyFilter, GapNonpositive, ToleranceFailure, WindowTooShort
from .model import japanese
from .profiles import EnergyBump, step01
from .spectral import eigenpairs_in, gershgorin

GUARD_FRACTION = 0.9  # outer 10% of the box in max-norm
GUARD_LIMIT = 1e-6
DRIFT_LIMIT = 1e-8


# ---------------------------------------------------------------- propagators

class ChebyshevPropagator:
    """e^{-i dt P} v by a Chebyshev series with Bessel coefficients."""

    def __init__(self, M, tol=1e-10, max_arg=400.0):
        self.M = M
        lo, hi = gershgorin(M)
        self.mid = 0.5 * (lo + hi)
        self.half = 0.5 * (hi - lo) * 1.01 + 1e-12
        self.tol = tol
        self.max_arg = max_arg

    def _coeffs(self, dt):
        x = self.half * abs(dt)
        kmax = int(x + 20 + 10 * x ** (1 / 3))
        k = np.arange(kmax + 1)
        j = special.jv(k, x)
        # truncate once the tail is below tol
        tail = np.flatnonzero(np.abs(j) > self.tol * 1e-3)
        kmax = int(tail[-1]) + 2 if tail.size else 1
        c = (2.0 - (k[: kmax + 1] == 0)) * (-1j * np.sign(dt)) ** k[: kmax + 1] * j[: kmax + 1]
        return c

    def step(self, v, dt):
        if dt == 0:
            return v.copy()
        n_sub = max(1, int(np.ceil(self.half * abs(dt) / self.max_arg)))
        h = dt / n_sub
        c = self._coeffs(h)
        phase = np.exp(-1j * self.mid * h)
        for _ in range(n_sub):
            t0 = v
            t1 = (self.M @ v - self.mid * v) / self.half
            out = c[0] * t0 + c[1] * t1
            for ck in c[2:]:
                t0, t1 = t1, 2 * (self.M @ t1 - self.mid * t1) / self.half - t0
                out = out + ck * t1
            v = phase * out
        return v


class LanczosPropagator:
    """e^{-i dt P} v from a Krylov subspace with adaptive sub-steps."""

    def __init__(self, M, tol=1e-10, krylov_dim=30):
        self.M = M
        self.tol = tol
        self.m = krylov_dim

    def _lanczos(self, v):
        n = v.size
        m = min(self.m, n)
        Q = np.zeros((n, m + 1), dtype=complex)
        alpha = np.zeros(m)
        beta = np.zeros(m)
        nv = np.linalg.norm(v)
        Q[:, 0] = v / nv
        for j in range(m):
            w = self.M @ Q[:, j]
            alpha[j] = np.real(np.vdot(Q[:, j], w))
            w = w - alpha[j] * Q[:, j] - (beta[j - 1] * Q[:, j - 1] if j > 0 else 0)
            # full reorthogonalization keeps the basis clean at these sizes
            w = w - Q[:, : j + 1] @ (Q[:, : j + 1].conj().T @ w)
            beta[j] = np.linalg.norm(w)
            if beta[j] < 1e-14:
                return Q[:, : j + 1], alpha[: j + 1], beta[: j + 1], nv, True
            Q[:, j + 1] = w / beta[j]
        return Q, alpha, beta, nv, False

    def step(self, v, dt):
        t_done = 0.0
        h = dt
        while abs(t_done) < abs(dt) * (1 - 1e-14):
            h = np.sign(dt) * min(abs(h), abs(dt - t_done))
            Q, a, b, nv, exact = self._lanczos(v)
            k = a.size
            T = np.diag(a) + np.diag(b[: k - 1], 1) + np.diag(b[: k - 1], -1)
            ev, U = np.linalg.eigh(T)
            y = U @ (np.exp(-1j * ev * h) * U[0].conj())
            err = 0.0 if exact else abs(b[k - 1] * y[-1]) * nv
            if err > self.tol and not exact:
                h /= 2
                continue
            v = nv * (Q[:, :k] @ y)
            t_done += h
            if err < self.tol * 1e-3:
                h *= 1.5
        return v


def make_propagator(P, method="auto", tol=1e-10):
    M = P.matrix if isinstance(P, DiscreteOperator) else P
    if method == "auto":
        method = "chebyshev" if (isinstance(P, DiscreteOperator) and P.grid.dim == 1) else "krylov"
    if method == "chebyshev":
        return ChebyshevPropagator(M, tol)
    if method == "krylov":
        return LanczosPropagator(M, tol)
    raise ValueError(f"unknown propagation method {method!r}")


# ---------------------------------------------------------------- trace

@dataclass
class PropagationTrace:
    times: np.ndarray
    states: np.ndarray  # (T, dim)
    channel_populations: np.ndarray  # (T, m)
    boundary_mass: np.ndarray
    norm_drift: np.ndarray
    energy_drift: np.ndarray
    radius: np.ndarray  # |x| for each stacked component
    box_half_width: float
    m: int
    breach_time: Optional[float] = None
    region_masses: dict = field(default_factory=dict)

    @property
    def truncated(self):
        return self.breach_time is not None

    @property
    def norms(self):
        return np.linalg.norm(self.states, axis=1)

    def region_mass(self, mask_fn):
        """||1_region psi(t)||^2 for mask_fn(radius, t) -> bool array."""
        return np.array([np.sum(np.abs(s[mask_fn(self.radius, t)]) ** 2) for s, t in zip(self.states, self.times)])

    def weighted_mass(self, weight_fn):
        return np.array([np.sum(np.abs(weight_fn(self.radius, t) * s) ** 2) for s, t in zip(self.states, self.times)])

    def hygiene(self):
        if self.times.size == 0:
            return {"norm_drift": float("nan"), "energy_drift": float("nan")}
        return {"norm_drift": float(np.max(self.norm_drift)), "energy_drift": float(np.max(self.energy_drift))}


def propagate(P: DiscreteOperator, psi0, t_grid, tol=1e-10, method="auto", guard=GUARD_LIMIT,
              on_breach="truncate", drift_limit=DRIFT_LIMIT) -> PropagationTrace:
    """Evolve psi0 over the increasing sample times and record the observables."""
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be increasing")
    psi = np.asarray(psi0, dtype=complex).copy()
    M = P.matrix
    prop = make_propagator(P, method, tol)
    grid = P.grid
    outer = np.tile(grid.maxnorm > GUARD_FRACTION * grid.L, P.m)
    radius = np.tile(grid.radius, P.m)
    nb = grid.size
    n0 = np.linalg.norm(psi)
    e0 = np.real(np.vdot(psi, M @ psi))

    states, pops, bmass, ndrift, edrift = [], [], [], [], []
    breach = None
    t_prev = 0.0
    for t in t_grid:
        psi = prop.step(psi, t - t_prev)
        t_prev = t
        b = float(np.sum(np.abs(psi[outer]) ** 2))
        if b > guard:
            breach = float(t)
            if on_breach == "raise":
                raise BoundaryBreach(f"boundary mass {b:.3e} exceeds {guard:.1e} at t = {t}", t)
            break
        states.append(psi.copy())
        pops.append([np.sum(np.abs(psi[j * nb:(j + 1) * nb]) ** 2) for j in range(P.m)])
        bmass.append(b)
        ndrift.append(abs(np.linalg.norm(psi) - n0))
        edrift.append(abs(np.real(np.vdot(psi, M @ psi)) - e0))
    if ndrift and max(ndrift) > drift_limit:
        raise ToleranceFailure(f"norm drift {max(ndrift):.2e} exceeds {drift_limit:.0e}")
    k = len(states)
    return PropagationTrace(
        times=t_grid[:k],
        states=np.array(states).reshape(k, psi.size),
        channel_populations=np.array(pops).reshape(k, P.m),
        boundary_mass=np.array(bmass),
        norm_drift=np.array(ndrift),
        energy_drift=np.array(edrift),
        radius=radius,
        box_half_width=grid.L,
        m=P.m,
        breach_time=breach,
    )


def evolve(P, psi, t, tol=1e-10, method="auto"):
    """Single evolution e^{-itP} psi; t may be negative."""
    return make_propagator(P, method, tol).step(np.asarray(psi, dtype=complex), float(t))


def time_reversal_error(P, psi0, t, tol=1e-10, method="auto"):
    fwd = evolve(P, psi0, t, tol, method)
    back = evolve(P, fwd, -t, tol, method)
    return float(np.linalg.norm(back - psi0))


def spectral_evolution(w, V, coeffs, times):
    """Exact states V diag(e^{-itw}) coeffs; an independent route used as an oracle."""
    return np.array([V @ (np.exp(-1j * w * t) * coeffs) for t in np.atleast_1d(times)])


# ---------------------------------------------------------------- state preparation

@dataclass
class PreparedState:
    values: np.ndarray
    window_mass: float
    eigenvalues: np.ndarray
    basis: np.ndarray
    coefficients: np.ndarray  # expansion of the normalized state in ``basis``


def weighted_seed(P: DiscreteOperator, seed, s_prime):
    """<x>^{-s'} seed on the channel-stacked grid."""
    w = np.tile(japanese(P.grid.points) ** (-float(s_prime)), P.m)
    return w * np.asarray(seed)


def prepare_state(P: DiscreteOperator, f: EnergyBump, s_prime: float, seed, rel_floor=1e-10) -> PreparedState:
    """Normalized f(P) <x>^{-s'} seed, computed from every eigenpair in supp f."""
    phi = weighted_seed(P, seed, s_prime)
    lo, hi = f.interval
    w, V = eigenpairs_in(P, lo, hi)
    if w.size == 0:
        raise EmptyFilter("no spectrum inside the filter support")
    c = f(w) * (V.conj().T @ phi)
    nc = np.linalg.norm(c)
    if nc <= rel_floor * np.linalg.norm(phi):
        raise EmptyFilter("filtered state vanishes")
    c = c / nc
    psi = V @ c
    mass = float(np.sum(np.abs(V.conj().T @ psi) ** 2) / np.linalg.norm(psi) ** 2)
    return PreparedState(psi, mass, w, V, c)


def gaussian_seed(P: DiscreteOperator, width=1.0, center=None, momentum=None, channels=None):
    """Gaussian packet on the stacked grid; ``channels`` gives per-channel amplitudes."""
    x = P.grid.points
    c = np.zeros(P.grid.dim) if center is None else np.asarray(center, dtype=float)
    k = np.zeros(P.grid.dim) if momentum is None else np.asarray(momentum, dtype=float)
    g = np.exp(-np.sum((x - c) ** 2, axis=-1) / (2 * width**2)) * np.exp(1j * (x @ k))
    amps = np.ones(P.m) if channels is None else np.asarray(channels, dtype=float)
    return np.concatenate([a * g for a in amps])


# ---------------------------------------------------------------- fits

@dataclass
class DecayFit:
    window: tuple
    slope: float
    slope_ci: float
    passed: bool
    s_target: float
    tolerance: float
    n_points: int
    below_floor: bool = False
    intercept: float = float("nan")

    def to_dict(self):
        return {"window": list(self.window), "slope": self.slope, "ci": self.slope_ci,
                "verdict": "pass" if self.passed else "fail", "s_target": self.s_target,
                "tolerance": self.tolerance, "n_points": self.n_points, "below_floor": self.below_floor}


def fit_decay(t, y, window, s_target=1.0, tolerance=0.15, floor=None, valid=None, min_points=8) -> DecayFit:
    """Least-squares slope of log y against log t inside ``window``.

    ``valid`` masks out samples that should not enter the fit; ``floor`` turns a
    series that stays below it into a pass without a fit.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    t1, t2 = window
    if not t2 > 2 * t1:
        raise WindowTooShort("need t2 > 2 t1")
    sel = (t >= t1 - 1e-12) & (t <= t2 + 1e-12)
    if valid is not None:
        sel &= np.asarray(valid, dtype=bool)
    if floor is not None and np.any(sel) and np.all(y[sel] < floor):
        return DecayFit((t1, t2), float("-inf"), 0.0, True, s_target, tolerance, int(sel.sum()), True)
    if sel.sum() < min_points:
        raise WindowTooShort(f"{int(sel.sum())} usable samples in [{t1}, {t2}], need {min_points}")
    lt = np.log(t[sel])
    ly = np.log(np.maximum(y[sel], 1e-300))
    res = stats.linregress(lt, ly)
    ci = float(stats.t.ppf(0.975, sel.sum() - 2) * res.stderr)
    slope = float(res.slope)
    return DecayFit((t1, t2), slope, ci, slope <= -s_target + tolerance, s_target, tolerance, int(sel.sum()),
                    False, float(res.intercept))


def _in_box(trace, radius_of_t, frac=GUARD_FRACTION):
    return np.array([radius_of_t(t) < frac * trace.box_half_width for t in trace.times])


def low_velocity_mass(trace, lam_p, window=(5.0, 25.0), s=1.0, tolerance=0.15):
    """||1{|x| < sqrt(lam') t} psi(t)|| and its decay fit."""
    if lam_p <= 0:
        raise ValueError("lambda' must be positive")
    v = np.sqrt(lam_p)
    series = np.sqrt(trace.region_mass(lambda r, t: r < v * t))
    trace.region_masses[f"low:{lam_p}"] = series**2
    fit = fit_decay(trace.times, series, window, s, tolerance, valid=_in_box(trace, lambda t: v * t))
    return series, fit


def high_velocity_mass(trace, lam_pp, window=(5.0, 25.0), s=1.0, tolerance=0.15, floor=1e-10):
    """||1{|x| > sqrt(lam'') t} psi(t)|| and its decay fit (a series below ``floor`` passes)."""
    v = np.sqrt(lam_pp)
    series = np.sqrt(trace.region_mass(lambda r, t: r > v * t))
    trace.region_masses[f"high:{lam_pp}"] = series**2
    fit = fit_decay(trace.times, series, window, s, tolerance, floor=floor, valid=_in_box(trace, lambda t: v * t))
    return series, fit


def minimal_velocity_manybody(trace, d, eps, window=(5.0, 25.0), s=1.0, tolerance=0.15):
    """||1{x^2/(4t^2) < d - eps} psi(t)||, i.e. the ball of radius 2 sqrt(d - eps) t."""
    if d <= eps:
        raise GapNonpositive(f"d = {d} <= eps = {eps}")
    v = 2 * np.sqrt(d - eps)
    series = np.sqrt(trace.region_mass(lambda r, t: r < v * t))
    trace.region_masses[f"minimal:{d - eps}"] = series**2
    fit = fit_decay(trace.times, series, window, s, tolerance, valid=_in_box(trace, lambda t: v * t))
    return series, fit


def channel_population(trace, j, s=1.0, rho=1.0, window=(5.0, 30.0), tolerance=0.15, floor=None):
    """||E_jj psi(t)|| and its fit against the exponent min(s, rho)."""
    series = np.sqrt(trace.channel_populations[:, j])
    fit = fit_decay(trace.times, series, window, min(s, rho), tolerance, floor=floor)
    return series, fit


# ---------------------------------------------------------------- smooth observables

@dataclass(frozen=True)
class SmoothStep:
    """chi = 1 below -2 eps, 0 above -eps, nonincreasing in between."""

    eps: float

    def __call__(self, x):
        return 1.0 - step01((np.asarray(x, dtype=float) + 2 * self.eps) / self.eps)

    def derivative(self, x):
        from .profiles import dstep01

        return -dstep01((np.asarray(x, dtype=float) + 2 * self.eps) / self.eps) / self.eps


def smooth_step(eps: float) -> SmoothStep:
    if eps <= 0:
        raise ValueError("eps must be positive")
    return SmoothStep(float(eps))


def smooth_low_velocity_mass(trace, lam_p, eps, window=(5.0, 25.0), s=1.0, tolerance=0.15):
    """Low-velocity mass with chi((|x|/t - sqrt(lam'))) in place of the sharp indicator."""
    chi = smooth_step(eps)
    v = np.sqrt(lam_p)
    series = np.sqrt(trace.weighted_mass(lambda r, t: chi(r / t - v)))
    fit = fit_decay(trace.times, series, window, s, tolerance, valid=_in_box(trace, lambda t: v * t))
    return series, fit


def smooth_high_velocity_mass(trace, lam_pp, eps, window=(5.0, 25.0), s=1.0, tolerance=0.15, floor=1e-10):
    chi = smooth_step(eps)
    v = np.sqrt(lam_pp)
    series = np.sqrt(trace.weighted_mass(lambda r, t: chi(v - r / t)))
    fit = fit_decay(trace.times, series, window, s, tolerance, floor=floor, valid=_in_box(trace, lambda t: v * t))
    return series, fit


def max_group_speed(interval, constants):
    """Largest free group speed 2 sqrt(E - c) over energies in ``interval`` and channel constants."""
    hi = interval[1]
    return max(2 * np.sqrt(max(hi - c, 0.0)) for c in constants)
