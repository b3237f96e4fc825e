"""Smooth compactly supported profiles built from exp(-1/t).

Everything here is vectorized over numpy arrays and C-infinity.
"""
import numpy as np


def _psi(t):
    t = np.asarray(t, dtype=float)
    pos = t > 0
    safe = np.where(pos, t, 1.0)
    # exp(-1/t) / t^2 written in log form so tiny t underflows to 0 instead of 0/0
    with np.errstate(over="ignore"):
        inv = 1.0 / safe
    return np.where(pos, np.exp(-inv), 0.0), np.where(pos, np.exp(-inv - 2 * np.log(safe)), 0.0)


def step01(t):
    """Smooth monotone step: 0 for t <= 0, 1 for t >= 1."""
    a, _ = _psi(t)
    b, _ = _psi(1.0 - np.asarray(t, dtype=float))
    return a / (a + b)


def dstep01(t):
    """Derivative of :func:`step01`."""
    t = np.asarray(t, dtype=float)
    a, da = _psi(t)
    b, db = _psi(1.0 - t)
    db = -db
    s = a + b
    return (da * b - a * db) / s**2


def d2step01(t, eps=1e-5):
    # central difference of the analytic first derivative; only used for Hessians
    t = np.asarray(t, dtype=float)
    return (dstep01(t + eps) - dstep01(t - eps)) / (2 * eps)


def plateau_bump(d, plateau, support):
    """1 for |d| <= plateau, 0 for |d| >= support, smooth and monotone in between."""
    if not 0 <= plateau < support:
        raise ValueError("need 0 <= plateau < support")
    u = (np.abs(np.asarray(d, dtype=float)) - plateau) / (support - plateau)
    return 1.0 - step01(u)


def dplateau_bump(d, plateau, support):
    """Derivative of :func:`plateau_bump` with respect to the signed distance d."""
    d = np.asarray(d, dtype=float)
    w = support - plateau
    u = (np.abs(d) - plateau) / w
    return -dstep01(u) * np.sign(d) / w


def radial_switch(r):
    """0 for r <= 1/4, 1 for r >= 1/2."""
    return step01((np.asarray(r, dtype=float) - 0.25) / 0.25)


def dradial_switch(r):
    return dstep01((np.asarray(r, dtype=float) - 0.25) / 0.25) / 0.25


def standard_bump(u):
    """exp(-1/(1-u^2)) on |u| < 1, zero outside (not normalized)."""
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) < 1
    q = np.where(inside, 1.0 - u**2, 1.0)
    return np.where(inside, np.exp(-1.0 / q), 0.0)


class EnergyBump:
    """Filter profile centered at ``center``: 1 on the plateau, 0 beyond the support radius."""

    def __init__(self, center, plateau, support):
        if not 0 <= plateau < support:
            raise ValueError("need 0 <= plateau < support")
        self.center = float(center)
        self.plateau = float(plateau)
        self.support = float(support)

    def __call__(self, E):
        return plateau_bump(np.asarray(E, dtype=float) - self.center, self.plateau, self.support)

    @property
    def interval(self):
        return (self.center - self.support, self.center + self.support)

    def __repr__(self):
        return f"EnergyBump(center={self.center}, plateau={self.plateau}, support={self.support})"
