"""Seeded random off-shell configurations and generators.

Used by the identity suites: configurations are a regular background plus
small trigonometric-polynomial perturbations, so metrics stay invertible
on the default sampling box.
"""

from __future__ import annotations

import numpy as np

from . import geom
from . import symker as sk
from .geom import FieldConfig, GaugeAlgebra, SymmetryGenerator, TensorField
from .symker import Chart

__all__ = ["random_function", "random_config", "random_generator", "default_chart", "random_deformation"]


def default_chart(m: int, signature: int = -1) -> Chart:
    names = {1: ("t",), 2: ("t", "x"), 3: ("t", "x", "y"), 4: ("t", "x", "y", "z")}[m]
    return Chart(names, signature)


def random_function(chart: Chart, rng: np.random.Generator, scale: float = 0.1, degree: int = 2):
    """c0 + linear + quadratic monomials + one sin and one cos term."""
    X = chart.symbols
    m = chart.dim
    terms = [sk.const(float(rng.normal()))]
    for i in range(m):
        terms.append(sk.mul(float(rng.normal()), X[i]))
    if degree >= 2:
        for i in range(m):
            for j in range(i, m):
                terms.append(sk.mul(float(rng.normal()) * 0.5, X[i], X[j]))
    lin = sk.total(sk.mul(float(rng.normal()), X[i]) for i in range(m))
    terms.append(sk.mul(float(rng.normal()), sk.sin(lin)))
    lin2 = sk.total(sk.mul(float(rng.normal()), X[i]) for i in range(m))
    terms.append(sk.mul(float(rng.normal()), sk.cos(lin2)))
    return sk.mul(scale / np.sqrt(len(terms)), sk.total(terms))


def _random_tensor(chart, rng, index, symmetries=(), algebra_dim=0, scale=0.1, base=None):
    shape = tuple(algebra_dim if ch == "A" else chart.dim for ch in index)
    comps = geom.zeros(shape)
    done = {}
    for k in np.ndindex(*shape):
        key = list(k)
        sign = 1
        for i, j, s in symmetries:
            if key[i] > key[j]:
                key[i], key[j] = key[j], key[i]
                sign *= s
        key = tuple(key)
        if any(key[i] == key[j] for i, j, s in symmetries if s == -1):
            continue
        if key not in done:
            v = random_function(chart, rng, scale)
            if base is not None:
                v = sk.add(base[key], v)
            done[key] = v
        comps[k] = sk.mul(sign, done[key])
    return TensorField(chart, index, comps, tuple(symmetries), check=False, algebra_dim=algebra_dim)


def random_config(theory, chart: Chart | None = None, seed: int = 0, scale: float = 0.1,
                  algebra: GaugeAlgebra | None = None) -> FieldConfig:
    """A random smooth configuration for every field of ``theory``."""
    chart = chart or default_chart(theory.dims[0])
    rng = np.random.default_rng(seed)
    m = chart.dim
    alg = algebra or theory.algebra
    fields, roles = {}, {}
    for s in theory.fields:
        if s.role == "metric":
            base = geom.zeros((m, m))
            for i in range(m):
                base[i, i] = sk.const(-1 if (i == 0 and chart.signature < 0) else 1)
            T = _random_tensor(chart, rng, "dd", s.symmetries, scale=scale, base=base)
        elif s.role == "gauge":
            T = _random_tensor(chart, rng, "Ad", (), alg.dim, scale=3 * scale)
        elif s.role == "connection":
            T = _random_tensor(chart, rng, s.index, s.symmetries, scale=3 * scale)
        else:
            T = _random_tensor(chart, rng, s.index, s.symmetries, scale=10 * scale)
        fields[s.name] = T
        roles[s.name] = s.role
    params = {p: float(rng.uniform(0.5, 1.5)) for p in theory.params}
    return FieldConfig(chart, fields, roles, params, alg, name=f"random-{theory.name}-{seed}")


def random_generator(theory, chart: Chart, seed: int = 0, kind: str | None = None) -> SymmetryGenerator:
    """Random generator adapted to the theory: affine for theories that are
    only affine-covariant, constant vertical part for Chern-Simons."""
    rng = np.random.default_rng(seed + 1000)
    m = chart.dim
    X = chart.symbols
    kind = kind or theory.local
    n = theory.algebra.dim if theory.algebra is not None else 0
    if kind == "translation":
        xi = [sk.const(float(rng.normal())) for _ in range(m)]
    elif kind == "affine":
        xi = [sk.total([sk.const(float(rng.normal()))] + [sk.mul(float(rng.normal()) * 0.3, X[j]) for j in range(m)])
              for _ in range(m)]
    else:
        xi = [random_function(chart, rng, 1.0) for _ in range(m)]
    if kind == "global-gauge":
        xa = [sk.const(float(rng.normal())) for _ in range(n)]
    else:
        xa = [random_function(chart, rng, 1.0) for _ in range(n)]
    return SymmetryGenerator(chart, tuple(xi), tuple(xa), label=f"random-{seed}")


def random_deformation(config: FieldConfig, names, seed: int = 0, scale: float = 0.3):
    from .noether import DeformationX

    rng = np.random.default_rng(seed + 2000)
    out = {}
    for k in names:
        T = config.fields[k]
        out[k] = _random_tensor(config.chart, rng, T.index, T.symmetries, T.algebra_dim, scale=scale)
    return DeformationX(out, label=f"random-{seed}")
