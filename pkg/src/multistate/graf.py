"""A smooth convex function interpolating the cluster quadratics |x_a|^2/2 + r_a.

G is a nested pairwise smooth maximum.  The smooth max of u and v is
(u + v)/2 + s((u - v)/2) where s is a convex even regularization of |z| that
equals |z| for |z| >= w.  Since s is convex with |s'| <= 1, the smooth max is
convex and nondecreasing in both arguments, so G is convex.  Value, gradient
and Hessian are propagated exactly by the chain rule.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PropertyViolated
from .profiles import dstep01, step01

_GL_X, _GL_W = np.polynomial.legendre.leggauss(48)


class SmoothAbs:
    """s(z) = |z| for |z| >= w, convex and C-infinity, with s'(z) = 2 step((z + w)/(2w)) - 1."""

    def __init__(self, w):
        if w <= 0:
            raise ValueError("smoothing width must be positive")
        self.w = float(w)

    def d1(self, z):
        return 2.0 * step01((np.asarray(z, dtype=float) + self.w) / (2 * self.w)) - 1.0

    def d2(self, z):
        return dstep01((np.asarray(z, dtype=float) + self.w) / (2 * self.w)) / self.w

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        out = np.abs(z)
        inside = np.abs(z) < self.w
        if np.any(inside):
            zi = z[inside]
            # s(z) = s(-w) + int_{-w}^{z} s'(t) dt with s(-w) = w
            half = (zi + self.w) / 2
            mid = (zi - self.w) / 2
            t = mid[:, None] + half[:, None] * _GL_X[None, :]
            out[inside] = self.w + half * (self.d1(t) @ _GL_W)
        return out


@dataclass
class GrafReport:
    C1: float
    C2: float
    C2_bound: float
    derivative_sups: dict
    hessian_min: float
    delta: float
    delta_by_element: dict
    passed: bool
    failures: list


class GrafFunction:
    def __init__(self, lattice, smoothing=0.05, offsets=None):
        self.lattice = lattice
        self.s = SmoothAbs(smoothing)
        self.n = lattice.ambient_dim
        if offsets is None:
            offsets = [0.5 * (self.n - e.dim) for e in lattice.elements]
        self.offsets = np.asarray(offsets, dtype=float)
        if self.offsets.shape != (len(lattice),):
            raise ValueError("one offset per lattice element is required")
        self.projs = [e.projector for e in lattice.elements]

    def _quadratic(self, idx, x):
        P = self.projs[idx]
        xa = x @ P
        val = 0.5 * np.sum(xa * xa, axis=-1) + self.offsets[idx]
        grad = xa
        hess = np.broadcast_to(P, x.shape[:-1] + P.shape)
        return val, grad, hess

    def _smax(self, u, v):
        uv, ug, uh = u
        vv, vg, vh = v
        z = (uv - vv) / 2
        s1 = self.s.d1(z)
        s2 = self.s.d2(z)
        val = (uv + vv) / 2 + self.s(z)
        cu = (1 + s1) / 2
        cv = (1 - s1) / 2
        grad = cu[..., None] * ug + cv[..., None] * vg
        dg = (ug - vg) / 2
        hess = (cu[..., None, None] * uh + cv[..., None, None] * vh
                + s2[..., None, None] * dg[..., :, None] * dg[..., None, :])
        return val, grad, hess

    def evaluate(self, x):
        """Return (G, grad G, Hess G) at points of shape (k, n)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        acc = self._quadratic(0, x)
        for idx in range(1, len(self.projs)):
            acc = self._smax(acc, self._quadratic(idx, x))
        return acc

    def __call__(self, x):
        return self.evaluate(x)[0]

    def grad(self, x):
        return self.evaluate(x)[1]

    def upper_constant(self):
        """Analytic C_2: every smooth max adds at most s(0) to the true max."""
        depth = len(self.projs) - 1
        return 2 * (float(np.max(self.offsets)) + depth * float(self.s(np.array([0.0]))[0]))

    def flatness_radius(self, a, rng, n_samples=4000, extent=6.0, tol=1e-10, candidates=None):
        """Largest delta on a ladder such that grad G has no X^a component when |x^a| < delta."""
        lat = self.lattice
        comp = lat.internal_basis(a)
        base = lat.elements[a].basis
        if comp.shape[0] == 0:
            return np.inf  # |x^a| = 0 identically, nothing to check
        if candidates is None:
            candidates = np.linspace(2.0, 0.02, 100)
        best = 0.0
        for d in candidates:
            k = n_samples
            xa = rng.uniform(-extent, extent, size=(k, base.shape[0])) @ base if base.shape[0] else np.zeros((k, self.n))
            dirs = rng.normal(size=(k, comp.shape[0]))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            rad = d * rng.uniform(0, 1, size=(k, 1)) ** (1.0 / comp.shape[0])
            x = xa + (rad * dirs) @ comp
            g = self.grad(x)
            leak = np.max(np.abs(g @ comp.T))
            if leak <= tol:
                best = d
                break
        return best

    def check(self, n_samples=10_000, seed=0, scale=8.0, raise_on_fail=True) -> GrafReport:
        rng = np.random.default_rng(seed)
        n = self.n
        # mixture of scales so both the origin and the cluster tubes are sampled
        radii = scale * rng.uniform(0, 1, size=(n_samples, 1)) ** 0.5
        dirs = rng.normal(size=(n_samples, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        x = radii * dirs
        # push a quarter of the samples close to each cluster subspace
        for idx, e in enumerate(self.lattice.elements):
            if 0 < e.dim < n:
                sel = rng.choice(n_samples, n_samples // (4 * len(self.lattice)), replace=False)
                x[sel] = x[sel] @ e.projector + 0.5 * rng.normal(size=(sel.size, n)) @ (np.eye(n) - e.projector)
        G, g, H = self.evaluate(x)
        x2 = np.sum(x * x, axis=-1)
        twoG = 2 * G
        failures = []

        C1 = 2 * float(self.offsets[self.lattice.a_max])
        lower_def = np.max(np.maximum(x2, C1) - twoG)
        if lower_def > 1e-10:
            i = int(np.argmax(np.maximum(x2, C1) - twoG))
            failures.append(("lower bound", x[i]))
        C2 = float(np.max(twoG - x2))
        C2_bound = self.upper_constant()
        if C2 > C2_bound + 1e-10:
            i = int(np.argmax(twoG - x2))
            failures.append(("upper bound", x[i]))

        # derivative bounds: compare sups near the origin and far out along the same geometry
        far = x * 100.0
        Gf, gf, Hf = self.evaluate(far)
        eye = np.eye(n)
        sups = {}
        for lbl, (GG, gg, HH, xx) in (("near", (G, g, H, x)), ("far", (Gf, gf, Hf, far))):
            sups[lbl] = (
                float(np.max(np.abs(2 * GG - np.sum(xx * xx, axis=-1)))),
                float(np.max(np.abs(2 * gg - 2 * xx))),
                float(np.max(np.abs(2 * HH - 2 * eye))),
            )
        for order in range(3):
            if not np.isfinite(sups["far"][order]) or sups["far"][order] > 2 * sups["near"][order] + 1e-8:
                failures.append((f"derivative order {order} unbounded", None))

        hmin = float(np.min(np.linalg.eigvalsh((H + np.swapaxes(H, 1, 2)) / 2)))
        if hmin < -1e-8:
            i = int(np.argmin(np.linalg.eigvalsh(H)[:, 0]))
            failures.append(("convexity", x[i]))

        deltas = {a: self.flatness_radius(a, rng) for a in range(len(self.lattice)) if a != self.lattice.a_min}
        finite = [d for d in deltas.values() if np.isfinite(d)]
        delta = min(finite) if finite else np.inf
        if not delta > 0:
            failures.append(("flatness", None))

        rep = GrafReport(C1, C2, C2_bound, sups, hmin, delta, deltas, not failures, failures)
        if failures and raise_on_fail:
            what, pt = failures[0]
            raise PropertyViolated(f"Graf property failed: {what}", pt)
        return rep
