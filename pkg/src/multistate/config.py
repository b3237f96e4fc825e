"""Preset library and JSON reader for ProblemSpec.

Schema (unknown keys are rejected at every level)::

    {
      "mode": "decaying" | "homogeneous" | "manybody",
      "ambient_dim": 1 | 2,
      "lattice": {"generators": [[[basis row], ...], ...]},          # manybody only; [] is {0}
      "channels": [
        {"constant": 0.0,
         "homogeneous": {"preset": "cosine_homogeneous", "params": {...}},
         "decaying": {"preset": "coulomb_like", "params": {...}},
         "manybody": [{"generator": 0, "preset": "gaussian_well", "params": {...}}]}
      ],
      "couplings": [{"j": 1, "k": 2, "preset": "inverse_power", "params": {"g": 0.3},
                     "rho": 1.0, "generator": 0}]
    }

Channel indices ``j``, ``k`` in the file are 1-based; ``generator`` indexes the
generator list of the lattice block.
"""
from __future__ import annotations

import json

import numpy as np

from .errors import SpecInvalid
from .lattice import Subspace, generate_lattice
from .model import ChannelPotential, CouplingTerm, ManyBodyTerm, ProblemSpec, SphereProfile, japanese


def _params(given, defaults, where):
    given = dict(given or {})
    extra = set(given) - set(defaults)
    if extra:
        raise SpecInvalid(f"{where}: unknown parameters {sorted(extra)}")
    out = dict(defaults)
    out.update(given)
    return out


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise SpecInvalid(f"{where}: expected an object")
    extra = set(d) - set(allowed)
    if extra:
        raise SpecInvalid(f"{where}: unknown keys {sorted(extra)}")


# ---- homogeneous profiles on S^1

def cosine_homogeneous(offset=0.0, amplitude=1.0, phase=0.0, power=1):
    """offset + amplitude * cos(theta - phase)**power."""
    power = int(power)
    if power < 1:
        raise SpecInvalid("power must be a positive integer")

    def value(th):
        return offset + amplitude * np.cos(th - phase) ** power

    def dtheta(th):
        return -amplitude * power * np.cos(th - phase) ** (power - 1) * np.sin(th - phase)

    return SphereProfile(value, dtheta, f"{offset}+{amplitude}cos(t-{phase})^{power}")


HOMOGENEOUS_PRESETS = {
    "cosine_homogeneous": (cosine_homogeneous, {"offset": 0.0, "amplitude": 1.0, "phase": 0.0, "power": 1}),
}


# ---- decaying potentials and coupling profiles, as functions of a coordinate map

def _coulomb_like(C=1.0, rho=1.0):
    return lambda y: -C * japanese(y) ** (-rho)


def _gaussian_well(depth=1.0, width=1.0):
    return lambda y: -depth * np.exp(-np.sum(np.asarray(y) ** 2, axis=-1) / width**2)


def _zero():
    return lambda y: np.zeros(np.asarray(y).shape[:-1])


DECAYING_PRESETS = {
    "coulomb_like": (_coulomb_like, {"C": 1.0, "rho": 1.0}),
    "gaussian_well": (_gaussian_well, {"depth": 1.0, "width": 1.0}),
    "zero": (_zero, {}),
}


def _coupling_constant(g=0.0, rho=0.0):
    return lambda y: g * np.ones(np.asarray(y).shape[:-1]), None


def _coupling_inverse_power(g=0.0, rho=1.0):
    return lambda y: g * japanese(y) ** (-rho), None


def _coupling_gaussian(g=0.0, width=1.0, rho=0.0):
    return lambda y: g * np.exp(-np.sum(np.asarray(y) ** 2, axis=-1) / width**2), None


def _coupling_gradient(g=0.0, axis=0, rho=1.0):
    def vec(y):
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape)
        out[..., int(axis)] = g * japanese(y) ** (-rho)
        return out

    return None, vec


COUPLING_PRESETS = {
    "constant": (_coupling_constant, {"g": 0.0}),
    "inverse_power": (_coupling_inverse_power, {"g": 0.0}),
    "gaussian": (_coupling_gaussian, {"g": 0.0, "width": 1.0}),
    "gradient_inverse_power": (_coupling_gradient, {"g": 0.0, "axis": 0}),
}


def _through(fn, basis):
    """Compose fn with x -> coordinates of x^b in ``basis`` (rows)."""
    if basis is None:
        return fn
    return lambda x: fn(np.asarray(x, dtype=float) @ basis.T)


def _vector_through(fn, basis):
    # vector field on X^b expressed back in ambient coordinates
    if basis is None:
        return fn
    return lambda x: fn(np.asarray(x, dtype=float) @ basis.T) @ basis


def parse_spec(cfg: dict) -> ProblemSpec:
    _check_keys(cfg, {"mode", "ambient_dim", "lattice", "channels", "couplings"}, "spec")
    for key in ("mode", "ambient_dim", "channels"):
        if key not in cfg:
            raise SpecInvalid(f"spec: missing key {key!r}")
    mode = cfg["mode"]
    n = int(cfg["ambient_dim"])
    lattice = None
    gen_index = {}
    if "lattice" in cfg:
        _check_keys(cfg["lattice"], {"generators"}, "lattice")
        gens = [Subspace.zero(n) if len(g) == 0 else Subspace.span(np.array(g, dtype=float), n)
                for g in cfg["lattice"]["generators"]]
        lattice = generate_lattice(gens, n)
        for i, g in enumerate(gens):
            gen_index[i] = next(a for a, e in enumerate(lattice.elements) if e.same_as(g))

    def element_of(entry, where):
        if lattice is None:
            raise SpecInvalid(f"{where}: 'generator' needs a lattice block")
        g = int(entry["generator"])
        if g not in gen_index:
            raise SpecInvalid(f"{where}: generator {g} out of range")
        return gen_index[g]

    potentials = []
    for ci, ch in enumerate(cfg["channels"]):
        where = f"channels[{ci}]"
        _check_keys(ch, {"constant", "homogeneous", "decaying", "manybody"}, where)
        hom = None
        if "homogeneous" in ch:
            _check_keys(ch["homogeneous"], {"preset", "params"}, where + ".homogeneous")
            name = ch["homogeneous"]["preset"]
            if name not in HOMOGENEOUS_PRESETS:
                raise SpecInvalid(f"{where}: unknown homogeneous preset {name!r}")
            f, d = HOMOGENEOUS_PRESETS[name]
            hom = f(**_params(ch["homogeneous"].get("params"), d, where))
        dec, rate = None, 0.0
        if "decaying" in ch:
            _check_keys(ch["decaying"], {"preset", "params"}, where + ".decaying")
            name = ch["decaying"]["preset"]
            if name not in DECAYING_PRESETS:
                raise SpecInvalid(f"{where}: unknown decaying preset {name!r}")
            f, d = DECAYING_PRESETS[name]
            p = _params(ch["decaying"].get("params"), d, where)
            dec = f(**p)
            rate = float(p.get("rho", np.inf if name == "gaussian_well" else 0.0))
        terms = []
        for ti, t in enumerate(ch.get("manybody", [])):
            tw = f"{where}.manybody[{ti}]"
            _check_keys(t, {"generator", "preset", "params"}, tw)
            name = t["preset"]
            if name not in DECAYING_PRESETS:
                raise SpecInvalid(f"{tw}: unknown preset {name!r}")
            f, d = DECAYING_PRESETS[name]
            b = element_of(t, tw)
            terms.append(ManyBodyTerm(b, _through(f(**_params(t.get("params"), d, tw)), lattice.internal_basis(b)), name))
        potentials.append(ChannelPotential(hom, dec, rate, float(ch.get("constant", 0.0)), tuple(terms)))

    couplings = []
    for ci, c in enumerate(cfg.get("couplings", [])):
        where = f"couplings[{ci}]"
        _check_keys(c, {"j", "k", "preset", "params", "rho", "generator"}, where)
        name = c["preset"]
        if name not in COUPLING_PRESETS:
            raise SpecInvalid(f"{where}: unknown coupling preset {name!r}")
        f, d = COUPLING_PRESETS[name]
        p = _params(c.get("params"), d, where)
        rho = float(c.get("rho", 0.0))
        if name != "constant":
            p["rho"] = rho
        r_hat, r_tilde = f(**p)
        b = element_of(c, where) if "generator" in c else None
        basis = lattice.internal_basis(b) if b is not None else None
        couplings.append(CouplingTerm(
            int(c["j"]) - 1, int(c["k"]) - 1,
            r_tilde=_vector_through(r_tilde, basis) if r_tilde is not None else None,
            r_hat=_through(r_hat, basis) if r_hat is not None else None,
            lattice_element=b, decay_rate=rho, label=name,
        ))

    return ProblemSpec(len(potentials), n, tuple(potentials), tuple(couplings), lattice, mode)


def load_spec(path) -> ProblemSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(json.load(fh))
