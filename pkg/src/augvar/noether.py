"""Lagrangian machinery on jet space.

Every theory is written once as a density of generic jet fields.  From the
density this module derives, symbolically and once per chart,

* momenta (partial derivatives with respect to jet coordinates),
* the Euler-Lagrange morphism,
* the Poincare-Cartan contraction (the unique one for order <= 2),
* the Noether current, the work form, the reduced current, the Bianchi
  form, and the superpotential obtained by the canonical integration by
  parts.

Results are :class:`HorizontalForm` objects whose coefficients are jet
expressions together with the configuration (and generator, and
deformation) needed to evaluate them.

Form conventions.  An (m-1)-form is ``V^mu ds_mu`` with
``ds_mu = d_mu _| ds``.  An (m-2)-form is ``sum_{mu<nu} U^{mu nu} ds_{mu nu}``
with ``ds_{mu nu} = d_nu _| d_mu _| ds`` and antisymmetric ``U``; then
``Div U`` has components ``d_nu U^{mu nu}`` and the contraction of an
(m-1)-form with a vector is ``(i_xi V)^{mu nu} = V^mu xi^nu - V^nu xi^mu``.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Mapping, Sequence

import numpy as np

from . import geom
from . import symker as sk
from .geom import FieldConfig, GaugeAlgebra, SymmetryGenerator, TensorField
from .symker import Chart, Expr

__all__ = [
    "NoetherError",
    "FieldSpec",
    "TheoryEntry",
    "HorizontalForm",
    "DeformationX",
    "Kit",
    "catalog",
    "lookup",
    "pc_contract",
    "noether_current",
    "work_form",
    "covariance_residual",
    "formal_divergence",
    "superpotential",
    "reduced_current",
    "bianchi_residual",
    "symplectic_form",
    "corrected_variation",
    "interior",
    "lie_form",
    "variation",
    "rename_fields",
    "first_variation_residual",
]

HALF = Fraction(1, 2)


class NoetherError(ValueError):
    pass


# ---------------------------------------------------------------------------
# forms

@dataclass
class HorizontalForm:
    """A p-form on the chart with jet-expression coefficients.

    ``coeffs`` has shape ``()`` for p = m, ``(m,)`` for p = m-1 and
    ``(m, m)`` (antisymmetric) for p = m-2.  ``config``, ``generator`` and
    ``extra`` carry whatever is needed to evaluate the jet symbols.
    """

    chart: Chart
    degree: int
    coeffs: np.ndarray
    config: FieldConfig | None = None
    generator: SymmetryGenerator | None = None
    extra: dict | None = None
    label: str = ""

    def __post_init__(self):
        m = self.chart.dim
        c = np.asarray(self.coeffs, dtype=object)
        expected = {m: (), m - 1: (m,), m - 2: (m, m)}
        if self.degree not in expected:
            raise NoetherError(f"degree {self.degree} is not supported on a {m}-dimensional chart")
        if c.shape != expected[self.degree]:
            raise NoetherError(f"coefficients of a {self.degree}-form have shape {expected[self.degree]}")
        if self.degree == m - 2:
            for i in range(m):
                if not c[i, i].is_zero:
                    raise NoetherError("(m-2)-form coefficients must be antisymmetric")
                for j in range(i + 1, m):
                    if c[j, i] is not sk.mul(-1, c[i, j]):
                        raise NoetherError("(m-2)-form coefficients must be antisymmetric")
        self.coeffs = c

    @classmethod
    def from_upper(cls, chart: Chart, upper: Mapping, **kw) -> "HorizontalForm":
        """(m-2)-form from the components with mu < nu."""
        m = chart.dim
        c = geom.zeros((m, m))
        for (i, j), v in upper.items():
            if i == j:
                continue
            if i > j:
                i, j, v = j, i, sk.mul(-1, v)
            c[i, j] = sk._as_expr(v)
            c[j, i] = sk.mul(-1, c[i, j])
        return cls(chart, m - 2, c, **kw)

    def _like(self, coeffs, label=None) -> "HorizontalForm":
        return HorizontalForm(self.chart, self.degree, coeffs, self.config, self.generator, self.extra,
                              self.label if label is None else label)

    def _merge(self, other: "HorizontalForm"):
        if other.degree != self.degree or other.chart != self.chart:
            raise NoetherError("forms of different degree or chart")
        extra = dict(self.extra or {})
        extra.update(other.extra or {})
        return (self.config or other.config, self.generator or other.generator, extra or None)

    def __add__(self, other: "HorizontalForm") -> "HorizontalForm":
        cfg, gen, extra = self._merge(other)
        c = self._apply(lambda k: sk.add(self.coeffs[k], other.coeffs[k]))
        return HorizontalForm(self.chart, self.degree, c, cfg, gen, extra, self.label)

    def __sub__(self, other: "HorizontalForm") -> "HorizontalForm":
        return self + other.scale(-1)

    def _apply(self, fn) -> np.ndarray:
        """Coefficient array from ``fn(index)``; for (m-2)-forms only the
        upper triangle is computed and mirrored."""
        shape = self.coeffs.shape
        out = np.empty(shape, dtype=object)
        if self.degree == self.chart.dim - 2:
            m = self.chart.dim
            for i in range(m):
                out[i, i] = sk.ZERO
                for j in range(i + 1, m):
                    out[i, j] = fn((i, j))
                    out[j, i] = sk.mul(-1, out[i, j])
            return out
        for k in np.ndindex(*shape):
            out[k] = fn(k)
        return out

    def scale(self, c) -> "HorizontalForm":
        return self._like(self._apply(lambda k: sk.mul(c, self.coeffs[k])))

    def map(self, fn) -> "HorizontalForm":
        return self._like(self._apply(lambda k: fn(self.coeffs[k])))

    def bind(self, config=None, generator=None, extra=None) -> "HorizontalForm":
        ex = dict(self.extra or {})
        ex.update(extra or {})
        return HorizontalForm(self.chart, self.degree, self.coeffs, config or self.config,
                              generator or self.generator, ex or None, self.label)

    def components(self) -> list:
        """Independent coefficients (mu < nu for an (m-2)-form)."""
        if self.degree == self.chart.dim - 2:
            m = self.chart.dim
            return [self.coeffs[i, j] for i in range(m) for j in range(i + 1, m)]
        return list(self.coeffs.reshape(-1))

    def evaluate(self, points, params: Mapping | None = None, dparam: str | None = None) -> np.ndarray:
        """Numeric coefficients at points (n, m); shape (n,) + coeffs.shape.

        With ``dparam`` the derivative with respect to that parameter is
        returned instead (chain rule through every jet symbol)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        flat = list(self.coeffs.reshape(-1))
        if self.config is None:
            cfg = FieldConfig(self.chart, {}, {}, check=False)
        else:
            cfg = self.config
        if dparam is None:
            vals = cfg.evaluate(flat, pts, self.generator, self.extra, params)
        else:
            vals = _param_derivative(cfg, flat, pts, dparam, self.generator, self.extra, params)
        out = np.stack(vals, axis=-1) if vals else np.zeros((pts.shape[0], 0))
        return out.reshape((pts.shape[0],) + self.coeffs.shape)

    def is_zero(self) -> bool:
        return all(x.is_zero for x in self.coeffs.reshape(-1))

    def divergence_values(self, points, params: Mapping | None = None, h: float = 1e-30) -> np.ndarray:
        """Numeric Div of this form at points, by complex-step differentiation
        of the bound coefficients (exact to rounding).  Same layout as
        ``formal_divergence(self).evaluate(points)``."""
        m = self.chart.dim
        if self.degree not in (m - 1, m - 2):
            raise NoetherError("divergence acts on (m-1)- and (m-2)-forms")
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        cfg = self.config or FieldConfig(self.chart, {}, {}, check=False)
        n = pts.shape[0]
        out = np.zeros((n,) if self.degree == m - 1 else (n, m))
        for nu in range(m):
            z = pts.astype(complex)
            z[:, nu] += 1j * h
            if self.degree == m - 1:
                v = cfg.evaluate([self.coeffs[nu]], z, self.generator, self.extra, params)[0]
                out += v.imag / h
            else:
                col = [self.coeffs[mu, nu] for mu in range(m)]
                vals = cfg.evaluate(col, z, self.generator, self.extra, params)
                for mu in range(m):
                    out[:, mu] += vals[mu].imag / h
        return out


def _param_derivative(cfg, exprs, pts, p, gen, extra, params):
    """d/dp of bound expressions: explicit dependence plus the chain rule
    through the jets of every field."""
    psym = sk.param(p)
    jets = sorted(sk.free_symbols(*exprs, kind="jet"), key=lambda s: s.name)
    tangent = {}
    for s in jets:
        tangent[s] = sk.jet("d/" + s.val[2][0], s.val[2][1], s.val[2][2])
    out_exprs = []
    for e in exprs:
        g = sk.gradient(e, jets) if jets else {}
        terms = [sk.diff(e, psym)]
        for s in jets:
            if not g[s].is_zero:
                terms.append(sk.mul(g[s], tangent[s]))
        out_exprs.append(sk.total(terms))
    ex = dict(extra or {})
    names = {s.val[2][0] for s in jets}
    for nm in names:
        if nm in cfg.fields:
            src = cfg.fields[nm]
        elif extra and nm in extra:
            src = extra[nm]
        elif nm in ("xi", "xia") and gen is not None:
            src = _vector_field(cfg.chart, gen.xi if nm == "xi" else gen.xi_a)
        else:
            raise sk.UnboundSymbolError(nm)
        ex["d/" + nm] = src.map(lambda x: sk.diff(x, psym))
    return cfg.evaluate(out_exprs, pts, gen, ex, params)


def _vector_field(chart, comps) -> TensorField:
    arr = np.empty((len(comps),), dtype=object)
    for i, c in enumerate(comps):
        arr[i] = c
    n = len(comps)
    if n == chart.dim:
        return TensorField(chart, "u", arr, check=False)
    return TensorField(chart, "A", arr, algebra_dim=max(n, 1), check=False)


def interior(V: HorizontalForm, gen: SymmetryGenerator | None = None) -> HorizontalForm:
    """i_xi of an m- or (m-1)-form."""
    m = V.chart.dim
    xi = (gen or V.generator or SymmetryGenerator.generic(V.chart)).xi
    if V.degree == m:
        c = np.empty((m,), dtype=object)
        for i in range(m):
            c[i] = sk.mul(xi[i], V.coeffs[()])
        return HorizontalForm(V.chart, m - 1, c, V.config, V.generator, V.extra, f"i_xi {V.label}")
    if V.degree == m - 1:
        c = geom.zeros((m, m))
        for i in range(m):
            for j in range(i + 1, m):
                c[i, j] = sk.add(sk.mul(V.coeffs[i], xi[j]), sk.mul(-1, V.coeffs[j], xi[i]))
                c[j, i] = sk.mul(-1, c[i, j])
        return HorizontalForm(V.chart, m - 2, c, V.config, V.generator, V.extra, f"i_xi {V.label}")
    raise NoetherError("interior product is implemented for degrees m and m-1")


def formal_divergence(form: HorizontalForm, config: FieldConfig | None = None) -> HorizontalForm:
    """Div: (Div V) = d_mu V^mu for (m-1)-forms, (Div U)^mu = d_nu U^{mu nu}
    for (m-2)-forms.  Total derivatives act on jets."""
    m = form.chart.dim
    X = form.chart.coords
    cfg = config or form.config
    if form.degree == m - 1:
        c = np.empty((), dtype=object)
        c[()] = sk.total(sk.diff(form.coeffs[i], X[i]) for i in range(m))
        return HorizontalForm(form.chart, m, c, cfg, form.generator, form.extra, f"Div {form.label}")
    if form.degree == m - 2:
        c = np.empty((m,), dtype=object)
        for mu in range(m):
            c[mu] = sk.total(sk.diff(form.coeffs[mu, nu], X[nu]) for nu in range(m) if nu != mu)
        return HorizontalForm(form.chart, m - 1, c, cfg, form.generator, form.extra, f"Div {form.label}")
    raise NoetherError("formal divergence acts on (m-1)- and (m-2)-forms")


def lie_form(V: HorizontalForm, gen: SymmetryGenerator | None = None) -> HorizontalForm:
    """Lie derivative of an (m-1)-form (a vector density) along xi."""
    m = V.chart.dim
    if V.degree != m - 1:
        raise NoetherError("lie_form acts on (m-1)-forms")
    X = V.chart.coords
    xi = (gen or V.generator or SymmetryGenerator.generic(V.chart)).xi
    div_xi = sk.total(sk.diff(xi[n], X[n]) for n in range(m))
    c = np.empty((m,), dtype=object)
    for mu in range(m):
        terms = [sk.mul(div_xi, V.coeffs[mu])]
        for n in range(m):
            terms.append(sk.mul(xi[n], sk.diff(V.coeffs[mu], X[n])))
            terms.append(sk.mul(-1, V.coeffs[n], sk.diff(xi[mu], X[n])))
        c[mu] = sk.total(terms)
    return V._like(c, f"Lie {V.label}")


def rename_fields(e: Expr, mapping: Mapping[str, str]) -> Expr:
    """Rename the fields of every jet symbol in ``e``."""
    subs = {}
    for s in sk.free_symbols(e, kind="jet"):
        f, comp, idx = s.val[2]
        if f in mapping:
            subs[s] = sk.jet(mapping[f], comp, idx)
    return sk.subs(e, subs) if subs else e


def variation(e: Expr, fields: Sequence[str], prefix: str = "X.") -> Expr:
    """Vertical variation: sum over jets of ``field`` of dE/dy_I * (dy)_I,
    the deformation jets being named ``prefix + field``."""
    fs = set(fields)
    jets = sorted((s for s in sk.free_symbols(e, kind="jet") if s.val[2][0] in fs), key=lambda s: s.name)
    if not jets:
        return sk.ZERO
    g = sk.gradient(e, jets)
    return sk.total(
        sk.mul(g[s], sk.jet(prefix + s.val[2][0], s.val[2][1], s.val[2][2])) for s in jets if not g[s].is_zero
    )


@dataclass
class DeformationX:
    """Vertical vector X = dy^i d_i: one tensor of expressions per field.

    ``boundary`` marks deformations declared to vanish on the boundary of
    the region under study (Dirichlet data)."""

    fields: dict
    boundary: bool = False
    label: str = ""

    def extra(self, prefix: str = "X.") -> dict:
        return {prefix + k: v for k, v in self.fields.items()}

    def scaled(self, c) -> "DeformationX":
        return DeformationX({k: v.scale(c) for k, v in self.fields.items()}, self.boundary, self.label)

    @classmethod
    def zero_like(cls, config: FieldConfig, names: Sequence[str]) -> "DeformationX":
        return cls({k: config.fields[k].map(lambda x: sk.ZERO) for k in names}, label="0")


# ---------------------------------------------------------------------------
# theories

@dataclass(frozen=True)
class FieldSpec:
    name: str
    role: str
    index: str
    symmetries: tuple = ()


@dataclass(eq=False)
class TheoryEntry:
    """A catalog record.

    ``density(fields, chart, theory)`` returns the Lagrangian density as an
    Expr of the given tensors.  ``closed_superpotential(fields, gen,
    chart, theory)`` returns the registered closed-form U as an antisymmetric
    (m, m) object array.  ``local`` is ``None`` for globally covariant
    theories, ``"affine"`` when only affine generators preserve the
    Lagrangian, ``"global-gauge"`` when only constant vertical parts do and
    ``"translation"`` when only constant generators do.  ``background``
    names fields that are not dynamical (their equations are not part of
    the on-shell condition).
    """

    name: str
    fields: tuple
    order: int
    density: Callable
    algebra: GaugeAlgebra | None = None
    local: str | None = None
    group: str = "gravity"
    dims: tuple = (4,)
    closed_superpotential: Callable | None = None
    closed_reduced: Callable | None = None
    printed_pc: Callable | None = None
    f: Expr | None = None
    params: tuple = ()
    summary: str = ""
    background: tuple = ()
    _kits: dict = field(default_factory=dict, repr=False)
    _variants: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def field_names(self) -> tuple:
        return tuple(s.name for s in self.fields)

    @property
    def roles(self) -> dict:
        return {s.name: s.role for s in self.fields}

    def with_algebra(self, alg: GaugeAlgebra) -> "TheoryEntry":
        if self.algebra is None:
            raise NoetherError(f"{self.name} has no gauge sector")
        if alg is self.algebra:
            return self
        with self._lock:
            v = self._variants.get(id(alg))
            if v is None or v.algebra is not alg:
                v = TheoryEntry(self.name, self.fields, self.order, self.density, alg, self.local, self.group,
                                self.dims, self.closed_superpotential, self.closed_reduced, self.printed_pc,
                                self.f, self.params, self.summary, self.background)
                self._variants[id(alg)] = v
        return v

    def kit(self, chart: Chart) -> "Kit":
        key = (chart.coords, chart.signature)
        with self._lock:
            k = self._kits.get(key)
            if k is None:
                k = Kit(self, chart)
                self._kits[key] = k
        return k

    def _check_config(self, config: FieldConfig):
        for s in self.fields:
            if s.name not in config.fields:
                raise NoetherError(f"configuration lacks field {s.name!r} required by {self.name}")
            if config.fields[s.name].index != s.index:
                raise NoetherError(f"field {s.name!r} has index structure {config.fields[s.name].index!r}, "
                                   f"expected {s.index!r}")
        if self.algebra is not None and config.algebra is not None and config.algebra.dim != self.algebra.dim:
            raise NoetherError("configuration and theory use different gauge algebras")

    def bound(self, config: FieldConfig) -> "TheoryEntry":
        """This theory adjusted to the configuration's gauge algebra."""
        if self.algebra is not None and config.algebra is not None and config.algebra is not self.algebra:
            return self.with_algebra(config.algebra)
        return self

    # the per-theory API --------------------------------------------------
    def lagrangian_density(self, config: FieldConfig) -> HorizontalForm:
        self._check_config(config)
        th = self.bound(config)
        c = np.empty((), dtype=object)
        c[()] = th.kit(config.chart).L
        return HorizontalForm(config.chart, config.chart.dim, c, config, label=f"L[{self.name}]")

    def momenta(self, config: FieldConfig) -> dict:
        """{(field, component, multi-index): Expr} for every jet coordinate
        the density depends on (partials with respect to the shared
        symbol of symmetric components)."""
        th = self.bound(config)
        kit = th.kit(config.chart)
        return {s.val[2]: kit.grad[s] for s in kit.jets}

    def euler_lagrange(self, config: FieldConfig, dynamical_only: bool = False) -> dict:
        th = self.bound(config)
        kit = th.kit(config.chart)
        out = {}
        for fname, key in kit.comp_keys:
            if dynamical_only and fname in self.background:
                continue
            out[(fname, key)] = kit.EL[(fname, key)]
        return out

    def pc_contract(self, config: FieldConfig, X: DeformationX) -> HorizontalForm:
        return pc_contract(self, config, X)

    def superpotential(self, config: FieldConfig, gen: SymmetryGenerator) -> HorizontalForm:
        return superpotential(self, config, gen)

    def reduced_current(self, config: FieldConfig, gen: SymmetryGenerator) -> HorizontalForm:
        return reduced_current(self, config, gen)


def _deriv(e: Expr, idx: Sequence[str]) -> Expr:
    for c in idx:
        e = sk.diff(e, c)
    return e


class Kit:
    """Jet-level objects of one theory on one chart (built lazily)."""

    def __init__(self, theory: TheoryEntry, chart: Chart):
        self.theory = theory
        self.chart = chart
        m = chart.dim
        self.X = chart.coords
        n = theory.algebra.dim if theory.algebra is not None else 0
        self.algebra_dim = n
        self.fields = {
            s.name: geom.jet_field(chart, s.name, s.index, s.symmetries, n if "A" in s.index else 0)
            for s in theory.fields
        }
        self.gen = SymmetryGenerator.generic(chart, n)
        self.L = sk._as_expr(theory.density(self.fields, chart, theory))
        self.m = m

    # -- momenta and field equations ------------------------------------------
    @cached_property
    def comp_keys(self) -> list:
        out = []
        for s in self.theory.fields:
            for key, _ in self.fields[s.name].independent():
                out.append((s.name, key))
        return out

    @cached_property
    def jets(self) -> list:
        names = set(self.fields)
        return sorted((s for s in sk.free_symbols(self.L, kind="jet") if s.val[2][0] in names),
                      key=lambda s: s.name)

    @cached_property
    def grad(self) -> dict:
        return sk.gradient(self.L, self.jets)

    def raw(self, fname: str, key: tuple, idx: tuple = ()) -> Expr:
        return self.grad.get(sk.jet(fname, key, idx), sk.ZERO)

    def p(self, fname, key, mu: int) -> Expr:
        return self.raw(fname, key, (self.X[mu],))

    def P(self, fname, key, mu: int, nu: int) -> Expr:
        r = self.raw(fname, key, (self.X[mu], self.X[nu]))
        return r if mu == nu else sk.mul(HALF, r)

    @cached_property
    def max_order(self) -> int:
        return max((len(s.val[2][2]) for s in self.jets), default=0)

    @cached_property
    def EL(self) -> dict:
        out = {}
        for fname, key in self.comp_keys:
            terms = []
            for s in self.jets:
                f, k, idx = s.val[2]
                if f == fname and k == key:
                    terms.append(sk.mul((-1) ** len(idx), _deriv(self.grad[s], idx)))
            out[(fname, key)] = sk.total(terms)
        return out

    @cached_property
    def dP(self) -> dict:
        m = self.m
        out = {}
        for fname, key in self.comp_keys:
            out[(fname, key)] = [
                sk.total(sk.diff(self.P(fname, key, mu, nu), self.X[nu]) for nu in range(m)) for mu in range(m)
            ]
        return out

    def pc(self, delta: Mapping[str, TensorField]) -> list:
        """Components F^mu of the Poincare-Cartan contraction with dy."""
        m = self.m
        order = self.max_order
        if order > 2:
            raise NoetherError("Poincare-Cartan contraction is implemented for order <= 2")
        out = []
        for mu in range(m):
            terms = []
            for fname, key in self.comp_keys:
                if fname not in delta:
                    continue
                d = delta[fname].comps[key]
                if d.is_zero:
                    continue
                coeff = [self.p(fname, key, mu)]
                if order == 2:
                    coeff.append(sk.mul(-1, self.dP[(fname, key)][mu]))
                    for nu in range(m):
                        P = self.P(fname, key, mu, nu)
                        if not P.is_zero:
                            terms.append(sk.mul(P, sk.diff(d, self.X[nu])))
                terms.append(sk.mul(sk.total(coeff), d))
            out.append(sk.total(terms))
        return out

    def delta_fields(self, prefix: str = "X.") -> dict:
        """Generic deformation: jet pseudo-fields named prefix + field."""
        return {
            s.name: geom.jet_field(self.chart, prefix + s.name, s.index, s.symmetries,
                                   self.algebra_dim if "A" in s.index else 0)
            for s in self.theory.fields
        }

    # -- currents ---------------------------------------------------------------
    @cached_property
    def lie(self) -> dict:
        alg = self.theory.algebra
        return {
            s.name: geom.lie_derivative(self.fields[s.name], self.gen, s.role, alg) for s in self.theory.fields
        }

    @cached_property
    def E(self) -> list:
        F = self.pc(self.lie)
        return [sk.add(F[mu], sk.mul(-1, self.gen.xi[mu], self.L)) for mu in range(self.m)]

    @cached_property
    def W(self) -> Expr:
        terms = []
        for fname, key in self.comp_keys:
            terms.append(sk.mul(-1, self.EL[(fname, key)], self.lie[fname].comps[key]))
        return sk.total(terms)

    @cached_property
    def xi_jets(self) -> list:
        return [sk.jet("xi", (i,)) for i in range(self.m)] + [sk.jet("xia", (a,)) for a in range(self.algebra_dim)]

    def _xi_coefficients(self, e: Expr):
        """Split an expression linear in generator jets into coefficients
        of xi, d_nu xi and the symmetrized d_nu d_s xi, per generator
        component."""
        syms = sorted((s for s in sk.free_symbols(e, kind="jet") if s.val[2][0] in ("xi", "xia")),
                      key=lambda s: s.name)
        g = sk.gradient(e, syms) if syms else {}
        m = self.m
        out = {}
        for base in self.xi_jets:
            f, comp, _ = base.val[2]
            w0 = g.get(base, sk.ZERO)
            w1 = [g.get(sk.jet(f, comp, (self.X[n],)), sk.ZERO) for n in range(m)]
            w2 = [[sk.ZERO] * m for _ in range(m)]
            for n in range(m):
                for s_ in range(m):
                    r = g.get(sk.jet(f, comp, (self.X[n], self.X[s_])), sk.ZERO)
                    w2[n][s_] = r if n == s_ else sk.mul(HALF, r)
            out[base] = (w0, w1, w2)
        for s in syms:
            if len(s.val[2][2]) > 2:
                raise NoetherError("generator derivatives beyond second order are not supported")
        return out

    @cached_property
    def _W_coeffs(self):
        return self._xi_coefficients(self.W)

    @cached_property
    def Etilde(self) -> list:
        m = self.m
        X = self.X
        Et = [[] for _ in range(m)]
        for base, (w0, w1, w2) in self._W_coeffs.items():
            f, comp, _ = base.val[2]
            dxi = [sk.jet(f, comp, (X[n],)) for n in range(m)]
            for lam in range(m):
                Et[lam].append(sk.mul(w1[lam], base))
                for s_ in range(m):
                    Et[lam].append(sk.mul(w2[lam][s_], dxi[s_]))
                Et[lam].append(sk.mul(-1, sk.total(sk.diff(w2[n][lam], X[n]) for n in range(m)), base))
        return [sk.total(t) for t in Et]

    @cached_property
    def B(self) -> Expr:
        m = self.m
        X = self.X
        out = []
        for base, (w0, w1, w2) in self._W_coeffs.items():
            coeff = [w0]
            coeff.append(sk.mul(-1, sk.total(sk.diff(w1[n], X[n]) for n in range(m))))
            coeff.append(sk.total(_deriv(w2[n][s_], (X[n], X[s_])) for n in range(m) for s_ in range(m)))
            out.append(sk.mul(sk.total(coeff), base))
        return sk.total(out)

    @cached_property
    def U_alg(self) -> np.ndarray:
        """Canonical superpotential from D = E - Etilde: with D^mu =
        a^mu xi + b^{mu nu} d_nu xi + c^{mu nu s} d_nu d_s xi,
        U^{mu k} = A^{mu k} xi + B^{mu k n} d_n xi where
        B^{mu k n} = 2/3 (c^{mu k n} - c^{k mu n}) and
        A^{mu k} = b^{mu k} - d_n B^{mu n k} (antisymmetrized)."""
        m = self.m
        X = self.X
        D = [sk.add(self.E[mu], sk.mul(-1, self.Etilde[mu])) for mu in range(m)]
        per = [self._xi_coefficients(D[mu]) for mu in range(m)]
        U = geom.zeros((m, m))
        two3 = Fraction(2, 3)
        for base in self.xi_jets:
            f, comp, _ = base.val[2]
            dxi = [sk.jet(f, comp, (X[n],)) for n in range(m)]
            b = [[per[mu][base][1][n] for n in range(m)] for mu in range(m)]
            c = [[[per[mu][base][2][n][s_] for s_ in range(m)] for n in range(m)] for mu in range(m)]
            Bt = [[[sk.mul(two3, sk.add(c[mu][k][n], sk.mul(-1, c[k][mu][n]))) for n in range(m)]
                   for k in range(m)] for mu in range(m)]
            A = [[sk.add(b[mu][k], sk.mul(-1, sk.total(sk.diff(Bt[mu][n][k], X[n]) for n in range(m))))
                  for k in range(m)] for mu in range(m)]
            for mu in range(m):
                for k in range(mu + 1, m):
                    a = sk.mul(HALF, sk.add(A[mu][k], sk.mul(-1, A[k][mu])))
                    terms = [U[mu, k], sk.mul(a, base)]
                    terms += [sk.mul(Bt[mu][k][n], dxi[n]) for n in range(m)]
                    U[mu, k] = sk.total(terms)
        for mu in range(m):
            for k in range(mu + 1, m):
                U[k, mu] = sk.mul(-1, U[mu, k])
        return U

    @cached_property
    def U(self) -> np.ndarray:
        """Registered closed form when available, else the canonical one."""
        fn = self.theory.closed_superpotential
        if fn is None:
            return self.U_alg
        U = np.asarray(fn(self.fields, self.gen, self.chart, self.theory), dtype=object)
        return U

    @cached_property
    def covariance(self) -> Expr:
        """sum_I p^I d_I(Lie y) - d_mu(xi^mu L)."""
        terms = []
        for s in self.jets:
            f, key, idx = s.val[2]
            terms.append(sk.mul(self.grad[s], _deriv(self.lie[f].comps[key], idx)))
        terms.append(sk.mul(-1, sk.total(sk.diff(sk.mul(self.gen.xi[mu], self.L), self.X[mu])
                                          for mu in range(self.m))))
        return sk.total(terms)

    def first_variation(self, prefix: str = "X.") -> Expr:
        """dL - <EL|dy> - Div <F|dy> for a generic deformation; identically 0."""
        delta = self.delta_fields(prefix)
        dL = variation(self.L, list(self.fields), prefix)
        el = sk.total(sk.mul(self.EL[(f, k)], delta[f].comps[k]) for f, k in self.comp_keys)
        F = self.pc(delta)
        div = sk.total(sk.diff(F[mu], self.X[mu]) for mu in range(self.m))
        return sk.total([dL, sk.mul(-1, el), sk.mul(-1, div)])


# ---------------------------------------------------------------------------
# operations on configurations

def _gen_for(config: FieldConfig, gen: SymmetryGenerator, theory: TheoryEntry) -> SymmetryGenerator:
    if gen.chart.coords != config.chart.coords:
        raise NoetherError("generator and configuration live on different charts")
    for x in gen.xi + gen.xi_a:
        if sk.free_symbols(x, kind="jet"):
            raise NoetherError("field-dependent generators are not allowed here (delta Xi must vanish)")
    n = theory.algebra.dim if theory.algebra is not None else 0
    if len(gen.xi_a) not in (0, n):
        raise NoetherError(f"generator has {len(gen.xi_a)} vertical components, theory needs {n}")
    if n and not gen.xi_a:
        gen = SymmetryGenerator(gen.chart, gen.xi, (sk.ZERO,) * n, gen.label)
    return gen


def _vec(chart, exprs, degree, config=None, gen=None, extra=None, label="") -> HorizontalForm:
    c = np.empty((len(exprs),), dtype=object)
    for i, e in enumerate(exprs):
        c[i] = e
    return HorizontalForm(chart, degree, c, config, gen, extra, label)


def _top(chart, e, config=None, gen=None, extra=None, label="") -> HorizontalForm:
    c = np.empty((), dtype=object)
    c[()] = e
    return HorizontalForm(chart, chart.dim, c, config, gen, extra, label)


def pc_contract(theory: TheoryEntry, config: FieldConfig, X: DeformationX) -> HorizontalForm:
    """<F | j X>: the Poincare-Cartan contraction with a deformation."""
    theory._check_config(config)
    th = theory.bound(config)
    kit = th.kit(config.chart)
    for k, v in X.fields.items():
        if k not in kit.fields:
            raise NoetherError(f"deformation of unknown field {k!r}")
        if v.comps.shape != kit.fields[k].comps.shape:
            raise NoetherError(f"deformation of {k!r} has the wrong shape")
    delta = {k: kit.delta_fields()[k] for k in X.fields}
    F = kit.pc(delta)
    return _vec(config.chart, F, config.chart.dim - 1, config, None, X.extra(), f"<F|X>[{theory.name}]")


def noether_current(theory: TheoryEntry, config: FieldConfig, gen: SymmetryGenerator) -> HorizontalForm:
    theory._check_config(config)
    th = theory.bound(config)
    gen = _gen_for(config, gen, th)
    kit = th.kit(config.chart)
    return _vec(config.chart, kit.E, config.chart.dim - 1, config, gen, None, f"E[{theory.name}]")


def work_form(theory: TheoryEntry, config: FieldConfig, gen: SymmetryGenerator) -> HorizontalForm:
    theory._check_config(config)
    th = theory.bound(config)
    gen = _gen_for(config, gen, th)
    return _top(config.chart, th.kit(config.chart).W, config, gen, None, f"W[{theory.name}]")


def reduced_current(theory: TheoryEntry, config: FieldConfig, gen: SymmetryGenerator) -> HorizontalForm:
    theory._check_config(config)
    th = theory.bound(config)
    gen = _gen_for(config, gen, th)
    return _vec(config.chart, th.kit(config.chart).Etilde, config.chart.dim - 1, config, gen, None,
                f"Etilde[{theory.name}]")


def superpotential(theory: TheoryEntry, config: FieldConfig, gen: SymmetryGenerator,
                   algorithmic: bool = False) -> HorizontalForm:
    """Registered closed-form superpotential (or the canonical algorithmic
    one when ``algorithmic`` is set or none is registered)."""
    theory._check_config(config)
    th = theory.bound(config)
    gen = _gen_for(config, gen, th)
    m = config.chart.dim
    if m < 2:
        raise NoetherError("superpotentials need at least two dimensions")
    kit = th.kit(config.chart)
    U = kit.U_alg if algorithmic else kit.U
    return HorizontalForm(config.chart, m - 2, U, config, gen, None, f"U[{theory.name}]")


def covariance_residual(theory: TheoryEntry, config: FieldConfig, gen: SymmetryGenerator) -> HorizontalForm:
    """Left minus right side of the covariance identity, as an m-form."""
    theory._check_config(config)
    th = theory.bound(config)
    gen = _gen_for(config, gen, th)
    return _top(config.chart, th.kit(config.chart).covariance, config, gen, None, f"cov[{theory.name}]")


def bianchi_residual(theory: TheoryEntry, config: FieldConfig, gen: SymmetryGenerator) -> HorizontalForm:
    """B = W - Div Etilde (identically zero off-shell)."""
    W = work_form(theory, config, gen)
    Et = reduced_current(theory, config, gen)
    return W - formal_divergence(Et)


def first_variation_residual(theory: TheoryEntry, config: FieldConfig, X: DeformationX) -> HorizontalForm:
    theory._check_config(config)
    th = theory.bound(config)
    kit = th.kit(config.chart)
    return _top(config.chart, kit.first_variation(), config, None, X.extra(), f"dL[{theory.name}]")


def symplectic_form(theory: TheoryEntry, config: FieldConfig, X: DeformationX,
                    gen: SymmetryGenerator) -> HorizontalForm:
    """omega(X, Lie y) = delta_X <F|Lie y> - Lie_xi <F|X>."""
    theory._check_config(config)
    th = theory.bound(config)
    gen = _gen_for(config, gen, th)
    kit = th.kit(config.chart)
    names = list(kit.fields)
    F_lie = kit.pc(kit.lie)
    dF = [variation(f, names) for f in F_lie]
    FX = pc_contract(th, config, X).bind(generator=gen)
    lie = lie_form(FX, gen)
    c = [sk.add(dF[mu], sk.mul(-1, lie.coeffs[mu])) for mu in range(config.chart.dim)]
    return _vec(config.chart, c, config.chart.dim - 1, config, gen, X.extra(), f"omega[{theory.name}]")


def symplectic_pair(theory: TheoryEntry, config: FieldConfig, X1: DeformationX, X2: DeformationX) -> HorizontalForm:
    """omega(X1, X2) = delta_X1 <F|X2> - delta_X2 <F|X1> for two constant
    deformations (antisymmetric by construction of the pairing)."""
    theory._check_config(config)
    th = theory.bound(config)
    kit = th.kit(config.chart)
    names = list(kit.fields)
    d1 = kit.delta_fields("X.")
    d2 = kit.delta_fields("Y.")
    F2 = kit.pc(d2)
    F1 = kit.pc(d1)
    c = [sk.add(variation(F2[mu], names, "X."), sk.mul(-1, variation(F1[mu], names, "Y.")))
         for mu in range(config.chart.dim)]
    extra = X1.extra("X.")
    extra.update(X2.extra("Y."))
    return _vec(config.chart, c, config.chart.dim - 1, config, None, extra, f"omega[{theory.name}]")


def corrected_variation(theory: TheoryEntry, config: FieldConfig, X: DeformationX,
                        gen: SymmetryGenerator, algorithmic: bool = False) -> HorizontalForm:
    """delta_X Q = delta_X U - i_xi <F|X> (an (m-2)-form)."""
    U = superpotential(theory, config, gen, algorithmic=algorithmic)
    names = list(theory.field_names)
    dU = U.map(lambda e: variation(e, names))
    FX = pc_contract(theory, config, X).bind(generator=U.generator)
    out = dU - interior(FX, U.generator)
    return out.bind(extra=X.extra())


# ---------------------------------------------------------------------------
# catalog access

def catalog(**kw) -> list:
    from .catalog import build_catalog

    return build_catalog(**kw)


def lookup(name: str, **kw) -> TheoryEntry:
    from .catalog import lookup as _lookup

    return _lookup(name, **kw)
