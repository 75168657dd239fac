"""Augmented Lagrangians and relative superpotentials.

Given a configuration y and a vacuum ybar of the same theory, the augmented
Lagrangian is ``l = L(y) - L(ybar) + Div alpha(y, ybar)`` where the
correction alpha satisfies

    d/ds alpha(y_s, ybar)|_{s=0} = -<F(Lbar) | X>,   alpha(ybar, ybar) = 0

along families of solutions y_s starting at ybar with tangent X.  Its
superpotential is ``U(l) = U(L)(y) - U(L)(ybar) + i_xi alpha``.

Everything is built at jet level on a merged configuration holding the
fields of y under their own names and the vacuum fields under ``name +
"bar"``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Mapping

import numpy as np

from . import geom
from . import noether as nt
from . import symker as sk
from .catalog import (_P_tensor, _antisym, _contract_slot, _fprime_of, _ric2, _riem2, _riem_lower,
                      levi_civita_symbol, metric_pieces)
from .geom import FieldConfig, SymmetryGenerator, TensorField, so3_gauge_transform
from .noether import DeformationX, FieldSpec, HorizontalForm, NoetherError, TheoryEntry

__all__ = [
    "BAR",
    "bar",
    "SolutionFamily",
    "AugmentedTheory",
    "ConditionReport",
    "augmented",
    "merged_config",
    "build_alpha",
    "verify_condition",
    "augmented_lagrangian",
    "augmented_superpotential",
    "dirichlet_pc_check",
    "formal_integration_check",
    "cs_covariant_lagrangian",
    "so3_gauge_transform",
    "ALPHA_VARIANTS",
]

BAR = "bar"


def bar(name: str) -> str:
    return name + BAR


# ---------------------------------------------------------------------------
# configurations


def _freeze(T: TensorField, params: Mapping) -> TensorField:
    """Replace parameter symbols by their numeric values."""
    if not params:
        return T
    mapping = {sk.param(k): sk.const(v) for k, v in params.items()}
    return T.subs(mapping)


def merged_config(theory: TheoryEntry, config: FieldConfig, vacuum: FieldConfig) -> FieldConfig:
    """One configuration carrying y (own names) and ybar (barred names).

    The vacuum's parameters are substituted numerically so that the two
    configurations may use the same parameter names (two masses, say)."""
    if config.chart.coords != vacuum.chart.coords:
        raise NoetherError("configuration and vacuum live on different charts")
    theory._check_config(config)
    theory._check_config(vacuum)
    fields, roles = {}, {}
    for s in theory.fields:
        fields[s.name] = config.fields[s.name]
        roles[s.name] = s.role
        fields[bar(s.name)] = _freeze(vacuum.fields[s.name], vacuum.params)
        roles[bar(s.name)] = s.role
    alg = config.algebra or vacuum.algebra
    return FieldConfig(config.chart, fields, roles, dict(config.params), alg,
                       name=f"{config.name}|{vacuum.name}", check=False)


@dataclass
class SolutionFamily:
    """A curve y_s of configurations, fields given as expressions in the
    coordinates and the parameter ``param``; y_0 is the vacuum."""

    config: FieldConfig
    param: str = "s"
    label: str = ""

    def __post_init__(self):
        p = dict(self.config.params)
        p.setdefault(self.param, 0.0)
        self.config = FieldConfig(self.config.chart, self.config.fields, self.config.roles, p,
                                  self.config.algebra, self.config.name, check=False)

    @property
    def names(self) -> list:
        return list(self.config.fields)

    def at(self, s: float) -> FieldConfig:
        """The member y_s with the parameter substituted."""
        sym = sk.param(self.param)
        fields = {k: T.subs({sym: sk.const(s)}) for k, T in self.config.fields.items()}
        params = {k: v for k, v in self.config.params.items() if k != self.param}
        return FieldConfig(self.config.chart, fields, dict(self.config.roles), params, self.config.algebra,
                           name=f"{self.config.name}@{self.param}={s:g}", check=False)

    @cached_property
    def generator(self) -> DeformationX:
        """X = d/ds y_s at s = 0."""
        sym = sk.param(self.param)
        out = {k: T.map(lambda e: sk.subs(sk.diff(e, sym), {sym: sk.ZERO}))
               for k, T in self.config.fields.items()}
        return DeformationX(out, label=f"d/d{self.param} {self.label}")

    def check(self, vacuum: FieldConfig, points=None, h: float = 1e-6) -> dict:
        """Residuals of y_0 = vacuum and of X against a central difference."""
        pts = self.config.sample_points(5, seed=11) if points is None else points
        y0 = self.at(0.0)
        d0 = dX = 0.0
        for k in self.names:
            a = y0.evaluate(list(y0.fields[k].comps.reshape(-1)), pts)
            b = vacuum.evaluate(list(vacuum.fields[k].comps.reshape(-1)), pts)
            d0 = max(d0, max((np.max(np.abs(x - y)) for x, y in zip(a, b)), default=0.0))
            gen = self.generator.fields[k]
            g = y0.evaluate(list(gen.comps.reshape(-1)), pts)
            yp, ym = self.at(h), self.at(-h)
            fp = yp.evaluate(list(yp.fields[k].comps.reshape(-1)), pts)
            fm = ym.evaluate(list(ym.fields[k].comps.reshape(-1)), pts)
            for gv, p, m in zip(g, fp, fm):
                dX = max(dX, float(np.max(np.abs(gv - (p - m) / (2 * h)) / (1 + np.abs(gv)))))
        return {"initial": d0, "generator": dX}

    @classmethod
    def linear(cls, vacuum: FieldConfig, direction: Mapping[str, TensorField], param: str = "s",
               label: str = "linear") -> "SolutionFamily":
        """y_s = ybar + s B."""
        s = sk.param(param)
        fields = dict(vacuum.fields)
        for k, B in direction.items():
            fields[k] = vacuum.fields[k] + B.scale(s)
        cfg = FieldConfig(vacuum.chart, fields, dict(vacuum.roles), dict(vacuum.params), vacuum.algebra,
                          name=f"{vacuum.name}+{param}B", check=False)
        return cls(cfg, param, label)

    @classmethod
    def scaled_parameter(cls, config: FieldConfig, name: str, value: float | None = None,
                         param: str = "s", label: str = "") -> "SolutionFamily":
        """Replace the parameter ``name`` by ``s * value`` (value defaults to
        the configuration's own)."""
        v = config.params[name] if value is None else value
        mapping = {sk.param(name): sk.mul(v, sk.param(param))}
        fields = {k: T.subs(mapping) for k, T in config.fields.items()}
        params = {k: w for k, w in config.params.items() if k != name}
        cfg = FieldConfig(config.chart, fields, dict(config.roles), params, config.algebra,
                          name=f"{config.name}[{name}={param}*{v:g}]", check=False)
        return cls(cfg, param, label or f"{name} = {param}*{v:g}")


# ---------------------------------------------------------------------------
# correction terms
#
# Each constructor takes the tensors of y (``f``) and of the vacuum (``fb``)
# keyed by the base field names and returns the m components alpha^mu.


def _sub(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.empty(a.shape, dtype=object)
    for k in np.ndindex(*a.shape):
        out[k] = sk.add(a[k], sk.mul(-1, b[k]))
    return out


def _trace_w(dens_inv: np.ndarray, coeff, w: np.ndarray, m: int) -> list:
    """coeff * sum_ab dens_inv^{ab} w^l_{ab}."""
    return [sk.mul(coeff, sk.total(sk.mul(dens_inv[a, b], w[l, a, b]) for a in range(m) for b in range(m)
                                   if not dens_inv[a, b].is_zero))
            for l in range(m)]


def _alpha_hilbert(f, fb, chart, th):
    """-sqrt(gbar) gbar^{ab} w^l_{ab}, w = u(g) - u(gbar)."""
    mp, mb = metric_pieces(f["g"]), metric_pieces(fb["g"])
    w = _sub(geom.u_tensor(mp.gamma, True).comps, geom.u_tensor(mb.gamma, True).comps)
    return _trace_w(mb.ginv.comps, sk.mul(-1, mb.sqrtg), w, chart.dim)


def _alpha_hilbert_tilde(f, fb, chart, th):
    """-sqrt(g) g^{ab} w^l_{ab}: the variant built on y instead of ybar."""
    mp, mb = metric_pieces(f["g"]), metric_pieces(fb["g"])
    w = _sub(geom.u_tensor(mp.gamma, True).comps, geom.u_tensor(mb.gamma, True).comps)
    return _trace_w(mp.ginv.comps, sk.mul(-1, mp.sqrtg), w, chart.dim)


def _alpha_palatini(f, fb, chart, th):
    g, G = f["g"], f["Gamma"]
    gb, Gb = fb["g"], fb["Gamma"]
    w = _sub(geom.u_tensor(G, False).comps, geom.u_tensor(Gb, False).comps)
    return _trace_w(geom.inverse_metric(gb).comps, sk.mul(-1, geom.sqrt_abs_det(gb)), w, chart.dim)


def _alpha_efo(f, fb, chart, th):
    """(sqrt(g) g^{ab} - sqrt(gbar) gbar^{ab}) ubar^l_{ab}."""
    mp, mb = metric_pieces(f["g"]), metric_pieces(fb["g"])
    m = chart.dim
    ub = geom.u_tensor(mb.gamma, True).comps
    dens = np.empty((m, m), dtype=object)
    for a in range(m):
        for b in range(m):
            dens[a, b] = sk.add(sk.mul(mp.sqrtg, mp.ginv.comps[a, b]), sk.mul(-1, mb.sqrtg, mb.ginv.comps[a, b]))
    return _trace_w(dens, sk.ONE, ub, m)


def _alpha_cs(f, fb, chart, th):
    """-2 eps^{mu b l} eta_ij (A - Abar)^i_b Abar^j_l."""
    A, Ab = f["A"].comps, fb["A"].comps
    alg = th.algebra
    n = alg.dim
    out = [[] for _ in range(chart.dim)]
    for (mu, b, l), s in levi_civita_symbol(chart.dim).items():
        for i in range(n):
            for j in range(n):
                e = alg.eta[i, j]
                if e:
                    out[mu].append(sk.mul(-2 * s * geom._num(e), sk.add(A[i, b], sk.mul(-1, Ab[i, b])), Ab[j, l]))
    return [sk.total(t) for t in out]


def _alpha_f_R(f, fb, chart, th):
    """-sqrt(gbar) f'(Rbar) gbar^{ab} w^l_{ab}."""
    mp, mb = metric_pieces(f["g"]), metric_pieces(fb["g"])
    w = _sub(geom.u_tensor(mp.gamma, True).comps, geom.u_tensor(mb.gamma, True).comps)
    fp = _fprime_of(th, mb.scalar())
    return _trace_w(mb.ginv.comps, sk.mul(-1, mb.sqrtg, fp), w, chart.dim)


def _alpha_f_ric2(f, fb, chart, th):
    """-2 sqrt(gbar) f'(Rbar_ab Rbar^ab) Rbar^{ab} w^l_{ab} (plain u)."""
    mp, mb = metric_pieces(f["g"]), metric_pieces(fb["g"])
    w = _sub(geom.u_tensor(mp.gamma, False).comps, geom.u_tensor(mb.gamma, False).comps)
    S, Rup = _ric2(mb)
    fp = _fprime_of(th, S)
    return _trace_w(Rup, sk.mul(-2, mb.sqrtg, fp), w, chart.dim)


def _alpha_f_riem2(f, fb, chart, th):
    """-4 sqrt(gbar) f'(Riem^2) Rbar_a^{b mu n} q^a_{bn}, q = Gamma - Gammabar."""
    mp, mb = metric_pieces(f["g"]), metric_pieces(fb["g"])
    m = chart.dim
    q = _sub(mp.gamma.comps, mb.gamma.comps)
    S, _ = _riem2(mb)
    fp = _fprime_of(th, S)
    low = _riem_lower(mb)
    mixed = low
    for slot in (1, 2, 3):
        mixed = _contract_slot(mixed, mb.ginv.comps, slot)
    out = []
    for mu in range(m):
        terms = [sk.mul(mixed[a, b, mu, n], q[a, b, n]) for a in range(m) for b in range(m) for n in range(m)
                 if not mixed[a, b, mu, n].is_zero]
        out.append(sk.mul(-4, mb.sqrtg, fp, sk.total(terms)))
    return out


def _alpha_ym(f, fb, chart, th):
    """sqrt(gbar) eta_AB Fbar^{A mu n} (A - Abar)^B_n."""
    alg = th.algebra
    gb, Ab, A = fb["g"], fb["A"], f["A"]
    m, n = chart.dim, alg.dim
    gi = geom.inverse_metric(gb).comps
    F = geom.field_strength(Ab, alg).comps
    sq = geom.sqrt_abs_det(gb)
    out = []
    for mu in range(m):
        terms = []
        for a in range(n):
            for b in range(n):
                e = alg.eta[a, b]
                if not e:
                    continue
                for nu in range(m):
                    Fup = sk.total(sk.mul(gi[mu, r], gi[nu, s], F[a, r, s]) for r in range(m) for s in range(m))
                    terms.append(sk.mul(geom._num(e), Fup, sk.add(A.comps[b, nu], sk.mul(-1, Ab.comps[b, nu]))))
        out.append(sk.mul(sq, sk.total(terms)))
    return out


def _alpha_canonical(theory: TheoryEntry):
    """alpha^mu = -pbar_i^mu (y^i - ybar^i), valid for first-order densities."""

    def fn(f, fb, chart, th):
        kit = th.kit(chart)
        if kit.max_order > 1:
            raise NoetherError(f"the generic correction needs a first-order density; {theory.name} is not")
        ren = {s.name: bar(s.name) for s in theory.fields}
        out = []
        for mu in range(chart.dim):
            terms = []
            for fname, key in kit.comp_keys:
                p = kit.p(fname, key, mu)
                if p.is_zero:
                    continue
                pb = nt.rename_fields(p, ren)
                d = sk.add(f[fname].comps[key], sk.mul(-1, fb[fname].comps[key]))
                terms.append(sk.mul(-1, pb, d))
            out.append(sk.total(terms))
        return out

    return fn


ALPHA_VARIANTS: dict = {
    "hilbert": {"canonical": _alpha_hilbert, "tilde": _alpha_hilbert_tilde},
    "palatini": {"canonical": _alpha_palatini},
    "einstein_first_order": {"canonical": _alpha_efo},
    "chern_simons_so3_3d": {"canonical": _alpha_cs},
    "f_of_R": {"canonical": _alpha_f_R},
    "f_of_ricci2": {"canonical": _alpha_f_ric2},
    "f_of_riemann2": {"canonical": _alpha_f_riem2},
    "yang_mills": {"canonical": _alpha_ym},
}


def _alpha_none(f, fb, chart, th):
    return [sk.ZERO] * chart.dim


def _alpha_constructor(theory: TheoryEntry, variant: str) -> Callable:
    if variant == "none":
        return _alpha_none
    reg = ALPHA_VARIANTS.get(theory.name)
    if reg is None:
        if variant != "canonical":
            raise NoetherError(f"{theory.name} has only the canonical correction")
        return _alpha_canonical(theory)
    if variant not in reg:
        raise NoetherError(f"{theory.name} has no {variant!r} correction; known: {', '.join(reg)}")
    return reg[variant]


# ---------------------------------------------------------------------------
# augmented theory


class _AugKit:
    """Jet-level objects of an augmented theory on one chart."""

    def __init__(self, aug: "AugmentedTheory", chart):
        th = aug.base
        self.chart = chart
        self.base_kit = th.kit(chart)
        n = th.algebra.dim if th.algebra is not None else 0
        self.f = self.base_kit.fields
        self.fb = {s.name: geom.jet_field(chart, bar(s.name), s.index, s.symmetries, n if "A" in s.index else 0)
                   for s in th.fields}
        self.ren = {s.name: bar(s.name) for s in th.fields}
        self.aug = aug

    @cached_property
    def alpha(self) -> list:
        a = [sk._as_expr(x) for x in self.aug.alpha_fn(self.f, self.fb, self.chart, self.aug.base)]
        if self.aug.gauge:
            g = self.gamma
            a = [sk.add(x, y) for x, y in zip(a, g)]
        return a

    @cached_property
    def gamma(self) -> list:
        """c (sum EL(y) - sum EL(ybar)) along the first coordinate: zero at
        y = ybar and on every solution."""
        k = self.base_kit
        tr = sk.total(k.EL.values())
        trb = nt.rename_fields(tr, self.ren)
        c = sk.mul(self.aug.gauge, sk.add(tr, sk.mul(-1, trb)))
        return [c] + [sk.ZERO] * (self.chart.dim - 1)

    @cached_property
    def L_vac(self):
        return nt.rename_fields(self.base_kit.L, self.ren)

    @cached_property
    def div_alpha(self):
        X = self.chart.coords
        return sk.total(sk.diff(self.alpha[mu], X[mu]) for mu in range(self.chart.dim))

    @cached_property
    def density(self):
        return sk.total([self.base_kit.L, sk.mul(-1, self.L_vac), self.div_alpha])

    @cached_property
    def U(self) -> np.ndarray:
        U = self.base_kit.U
        m = self.chart.dim
        xi = self.base_kit.gen.xi
        a = self.alpha

        def comp(mu, nu):
            return sk.total([U[mu, nu], sk.mul(-1, nt.rename_fields(U[mu, nu], self.ren)),
                             sk.mul(a[mu], xi[nu]), sk.mul(-1, a[nu], xi[mu])])

        return _antisym(m, comp)


class AugmentedTheory:
    """A base theory together with one choice of correction term.

    ``variant`` selects the registered correction (``"canonical"`` always
    exists, ``"none"`` drops the correction; ``"tilde"`` for hilbert).  A nonzero ``gauge`` adds the
    correction ``c * (sum EL(y) - sum EL(ybar))`` along the first
    coordinate, which vanishes on every pair of solutions."""

    def __init__(self, base: TheoryEntry, variant: str = "canonical", gauge: float = 0.0,
                 alpha_fn: Callable | None = None):
        self.base = base
        self.variant = variant
        self.gauge = gauge
        self.alpha_fn = alpha_fn or _alpha_constructor(base, variant)
        self._kits: dict = {}
        self._lock = threading.Lock()
        self._entry = None

    @property
    def name(self) -> str:
        g = f"+gauge({self.gauge:g})" if self.gauge else ""
        return f"{self.base.name}[{self.variant}{g}]"

    def bound(self, config: FieldConfig) -> "AugmentedTheory":
        th = self.base.bound(config)
        if th is self.base:
            return self
        return augmented(th, self.variant, self.gauge)

    def kit(self, chart) -> _AugKit:
        key = (chart.coords, chart.signature)
        with self._lock:
            k = self._kits.get(key)
            if k is None:
                k = _AugKit(self, chart)
                self._kits[key] = k
        return k

    @property
    def entry(self) -> TheoryEntry:
        """The augmented Lagrangian as a catalog-style theory of (y, ybar)."""
        if self._entry is None:
            base = self.base
            specs = tuple(base.fields) + tuple(FieldSpec(bar(s.name), s.role, s.index, s.symmetries)
                                              for s in base.fields)
            aug = self

            def density(fields, chart, theory):
                return aug.kit(chart).density

            self._entry = TheoryEntry(f"augmented-{self.name}", specs, 2, density, base.algebra, base.local,
                                      base.group, base.dims, params=base.params, f=base.f,
                                      summary=f"L - Lbar + Div alpha for {base.name}")
        return self._entry

    # -- bound objects ------------------------------------------------------------
    def alpha(self, config: FieldConfig, vacuum: FieldConfig) -> HorizontalForm:
        aug = self.bound(config)
        cfg = merged_config(aug.base, config, vacuum)
        a = aug.kit(cfg.chart).alpha
        return nt._vec(cfg.chart, a, cfg.chart.dim - 1, cfg, None, None, f"alpha[{self.name}]")

    def augmented_lagrangian(self, config: FieldConfig, vacuum: FieldConfig) -> HorizontalForm:
        aug = self.bound(config)
        cfg = merged_config(aug.base, config, vacuum)
        return nt._top(cfg.chart, aug.kit(cfg.chart).density, cfg, None, None, f"l[{self.name}]")

    def augmented_superpotential(self, config: FieldConfig, vacuum: FieldConfig,
                                 gen: SymmetryGenerator) -> HorizontalForm:
        aug = self.bound(config)
        cfg = merged_config(aug.base, config, vacuum)
        gen = nt._gen_for(cfg, gen, aug.base)
        m = cfg.chart.dim
        if m < 2:
            raise NoetherError("superpotentials need at least two dimensions")
        return HorizontalForm(cfg.chart, m - 2, aug.kit(cfg.chart).U, cfg, gen, None, f"U(l)[{self.name}]")


_AUGMENTED: dict = {}
_AUG_LOCK = threading.Lock()


def augmented(theory: TheoryEntry, variant: str = "canonical", gauge: float = 0.0) -> AugmentedTheory:
    """Cached :class:`AugmentedTheory` for a catalog entry."""
    key = (id(theory), variant, float(gauge))
    with _AUG_LOCK:
        a = _AUGMENTED.get(key)
        if a is None or a.base is not theory:
            a = AugmentedTheory(theory, variant, gauge)
            _AUGMENTED[key] = a
    return a


def build_alpha(theory: TheoryEntry, vacuum: FieldConfig, variant: str = "canonical") -> Callable:
    """alpha constructor for a fixed vacuum: config -> (m-1)-form."""
    aug = augmented(theory, variant)
    return lambda config: aug.alpha(config, vacuum)


def augmented_lagrangian(theory: TheoryEntry, config: FieldConfig, vacuum: FieldConfig,
                         variant: str = "canonical") -> HorizontalForm:
    return augmented(theory, variant).augmented_lagrangian(config, vacuum)


def augmented_superpotential(theory: TheoryEntry, config: FieldConfig, vacuum: FieldConfig,
                             gen: SymmetryGenerator, variant: str = "canonical", gauge: float = 0.0) -> HorizontalForm:
    return augmented(theory, variant, gauge).augmented_superpotential(config, vacuum, gen)


# ---------------------------------------------------------------------------
# checks


@dataclass
class ConditionReport:
    theory: str
    family: str
    method: str
    residual: float
    scale: float
    tolerance: float
    points: int = 0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tolerance)


def verify_condition(theory: TheoryEntry, family: SolutionFamily, vacuum: FieldConfig | None = None,
                     method: str = "symbolic", h: float = 1e-5, tol: float | None = None,
                     points=None, variant: str = "canonical") -> ConditionReport:
    """max |d/ds alpha(y_s, ybar)|_{s=0} + <F(Lbar)|X>| over sample points.

    ``method="symbolic"`` differentiates through the chain rule in s;
    ``method="fd"`` uses a central difference with step ``h``."""
    vac = vacuum or family.at(0.0)
    aug = augmented(theory, variant).bound(vac)
    th = aug.base
    pts = vac.sample_points(5, seed=5) if points is None else np.atleast_2d(points)
    X = family.generator
    F = nt.pc_contract(th, vac, X).evaluate(pts)
    if method == "symbolic":
        a = aug.alpha(family.config, vac)
        da = a.evaluate(pts, params={family.param: 0.0}, dparam=family.param)
        default_tol = 1e-7
    elif method == "fd":
        ap = aug.alpha(family.at(h), vac).evaluate(pts)
        am = aug.alpha(family.at(-h), vac).evaluate(pts)
        da = (ap - am) / (2 * h)
        default_tol = 1e-4
    else:
        raise ValueError(f"unknown method {method!r}")
    a0 = aug.alpha(family.at(0.0), vac).evaluate(pts)
    res = float(np.max(np.abs(da + F)))
    scale = float(np.max(np.abs(F), initial=0.0))
    return ConditionReport(th.name, family.label or family.config.name, method, res, scale,
                           default_tol if tol is None else tol, len(pts),
                           {"alpha_at_vacuum": float(np.max(np.abs(a0), initial=0.0))})


def dirichlet_pc_check(theory: TheoryEntry, config: FieldConfig, vacuum: FieldConfig, X: DeformationX,
                       points=None, variant: str = "canonical") -> dict:
    """<F(l)|X> of the augmented Lagrangian with y = ybar and dy = 0
    substituted (the vacuum deformation is left free), together with the
    unsubstituted value for comparison."""
    aug = augmented(theory, variant).bound(config)
    th = aug.base
    entry = aug.entry
    pts = config.sample_points(5, seed=9) if points is None else np.atleast_2d(points)
    zero = {k: T.map(lambda e: sk.ZERO) for k, T in X.fields.items()}
    Xs = DeformationX({**zero, **{bar(k): T for k, T in X.fields.items()}}, boundary=True)
    at_vac = merged_config(th, vacuum, vacuum)
    sub = nt.pc_contract(entry, at_vac, Xs).evaluate(pts)
    Xg = DeformationX({**X.fields, **{bar(k): T for k, T in X.fields.items()}})
    free = nt.pc_contract(entry, merged_config(th, config, vacuum), Xg).evaluate(pts)
    return {"substituted": float(np.max(np.abs(sub))), "unsubstituted": float(np.max(np.abs(free)))}


def formal_integration_check(theory: TheoryEntry, family: SolutionFamily, gen: SymmetryGenerator, surface,
                             vacuum: FieldConfig | None = None, variant: str = "canonical",
                             tol: float = 1e-5) -> dict:
    """d/ds of the surface integral of U(l)(y_s, ybar) at s = 0 against the
    integral of delta_X U(Lbar) - i_xi <F(Lbar)|X>."""
    from .evalnum import surface_integral

    vac = vacuum or family.at(0.0)
    aug = augmented(theory, variant).bound(vac)
    U = aug.augmented_superpotential(family.config, vac, gen)
    lhs = surface_integral(U, surface, params={family.param: 0.0}, dparam=family.param)
    rhs = surface_integral(nt.corrected_variation(aug.base, vac, family.generator, gen), surface)
    scale = max(abs(lhs.value), abs(rhs.value))
    rel = abs(lhs.value - rhs.value) / scale if scale > 0 else abs(lhs.value - rhs.value)
    ok = rel <= tol if scale > 0 else abs(lhs.value - rhs.value) <= 1e-12
    return {"lhs": lhs.value, "rhs": rhs.value, "relative": rel, "passed": bool(ok),
            "errors": (lhs.error, rhs.error)}


# ---------------------------------------------------------------------------
# Chern-Simons helpers


def cs_covariant_lagrangian(theory: TheoryEntry, config: FieldConfig, vacuum: FieldConfig) -> HorizontalForm:
    """2 eps^{mnr} (eta Fbar_mn . B_r + eta (Dbar_m B_n) . B_r + 1/3 eps_ijk B^i_m B^j_n B^k_r),
    B = A - Abar and Dbar the covariant derivative of the vacuum connection.

    Expanding L(Abar + B) with F_mn = d_m A_n - d_n A_m + [A_m, A_n] gives
    every term of the bracket twice, hence the overall factor 2."""
    alg = theory.algebra
    n = alg.dim
    cfg = merged_config(theory, config, vacuum)
    chart = cfg.chart
    X = chart.coords
    A = geom.jet_field(chart, "A", "Ad", (), n).comps
    Ab = geom.jet_field(chart, bar("A"), "Ad", (), n).comps
    Fb = geom.field_strength(TensorField(chart, "Ad", Ab, algebra_dim=n, check=False), alg).comps
    B = _sub(A, Ab)
    c = alg.structure
    m = chart.dim

    def D(i, mu, nu):
        terms = [sk.diff(B[i, nu], X[mu])]
        for j in range(n):
            for k in range(n):
                if c[i, j, k]:
                    terms.append(sk.mul(geom._num(c[i, j, k]), Ab[j, mu], B[k, nu]))
        return sk.total(terms)

    epsA = levi_civita_symbol(3) if n == 3 else {}
    terms = []
    for (a, b, r), s in levi_civita_symbol(m).items():
        for i in range(n):
            for j in range(n):
                e = alg.eta[i, j]
                if e:
                    terms.append(sk.mul(2 * s * geom._num(e), Fb[i, a, b], B[j, r]))
                    terms.append(sk.mul(2 * s * geom._num(e), D(i, a, b), B[j, r]))
        for (i, j, k), t in epsA.items():
            terms.append(sk.mul(Fraction(2 * s * t, 3), B[i, a], B[j, b], B[k, r]))
    return nt._top(chart, sk.total(terms), cfg, None, None, "l[B-form]")
