"""Numeric back end: surface and slice quadrature, the Stokes suite, the
solution library and relative conserved quantities.

Integration convention.  An (m-2)-form U^{mu nu} ds_{mu nu} restricted to
the surface where coordinates a, b are held fixed integrates to

    sign * int U^{ab} dx^c dx^d ...

with ``sign`` the parity of the permutation (a, b, c, d, ...) of the chart
order.  For a coordinate sphere of (t, r, theta, phi) this is
int U^{tr} dtheta dphi.  An (m-1)-form V^mu ds_mu on the slice x^a = const
integrates to (-1)^a int V^a over the remaining coordinates.  With these
rules int_{slice} Div U = (outer sphere) - (inner sphere) for the annulus
between two spheres, which is what :func:`stokes_check` tests.
"""

from __future__ import annotations

import functools
import json
import math
import os
import warnings
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping, Sequence

import numpy as np

from . import augment
from . import geom
from . import noether as nt
from . import symker as sk
from .geom import FieldConfig, SymmetryGenerator
from .noether import HorizontalForm, TheoryEntry
from .symker import Chart

__all__ = [
    "ORDER_ENV",
    "EvalError",
    "SingularSurfaceError",
    "UnknownSolutionError",
    "OffShellWarning",
    "SurfaceSpec",
    "QuadResult",
    "QuantityReport",
    "StokesReport",
    "default_order",
    "surface_integral",
    "slice_integral",
    "stokes_check",
    "random_polynomial_form",
    "two_form_superpotential",
    "richardson",
    "el_residual",
    "relative_quantity",
    "solution_library",
    "library_ids",
    "load_solution",
]

ORDER_ENV = "AUGVAR_QUAD_ORDER"
DEFAULT_ORDER = 32
MIN_ORDER = 8
REFINE = 8
OFF_SHELL_TOL = 1e-5


class EvalError(ValueError):
    pass


class UnknownSolutionError(EvalError, LookupError):
    """Neither a library id nor an existing field file."""


class SingularSurfaceError(EvalError):
    """The integrand is not finite somewhere on the surface."""


class OffShellWarning(UserWarning):
    """A configuration does not solve the field equations of the theory."""


def default_order() -> int:
    """Quadrature order per direction, overridable through the environment."""
    raw = os.environ.get(ORDER_ENV)
    if not raw:
        return DEFAULT_ORDER
    try:
        n = int(raw)
    except ValueError as exc:
        raise EvalError(f"{ORDER_ENV} must be an integer, got {raw!r}") from exc
    if n < MIN_ORDER:
        raise EvalError(f"{ORDER_ENV} must be at least {MIN_ORDER}")
    return n


@functools.lru_cache(maxsize=64)
def _gauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def _parity(perm: Sequence[int]) -> int:
    p = list(perm)
    sign = 1
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def _product_rule(ranges, orders):
    """Tensor-product Gauss-Legendre nodes (N, k) and weights (N,)."""
    axes, wts = [], []
    for (lo, hi), n in zip(ranges, orders):
        x, w = _gauss(int(n))
        axes.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
        wts.append(0.5 * (hi - lo) * w)
    grids = np.meshgrid(*axes, indexing="ij")
    wgrid = np.meshgrid(*wts, indexing="ij")
    nodes = np.stack([g.reshape(-1) for g in grids], axis=-1)
    weights = np.prod(np.stack([g.reshape(-1) for g in wgrid], axis=-1), axis=-1)
    return nodes, weights


# ---------------------------------------------------------------------------
# surfaces

@dataclass(frozen=True)
class SurfaceSpec:
    """A closed coordinate surface: two coordinates held fixed, the others
    running over the given ranges.

    ``orders`` gives the Gauss-Legendre order per free direction; ``None``
    uses :func:`default_order`.  Singular coordinate endpoints (the poles
    of a sphere) are never sampled since the rule has interior nodes only.
    """

    fixed: tuple
    free: tuple
    orders: tuple | None = None
    kind: str = "coordinate"

    def __post_init__(self):
        fixed = tuple((str(c), float(v)) for c, v in self.fixed)
        free = tuple((str(c), float(lo), float(hi)) for c, lo, hi in self.free)
        if len(fixed) != 2:
            raise EvalError("a surface holds exactly two coordinates fixed")
        names = [c for c, _ in fixed] + [c for c, _, _ in free]
        if len(set(names)) != len(names):
            raise EvalError("surface coordinates must be distinct")
        object.__setattr__(self, "fixed", fixed)
        object.__setattr__(self, "free", free)
        if self.orders is not None:
            orders = tuple(int(n) for n in self.orders)
            if len(orders) != len(free):
                raise EvalError("one quadrature order per free coordinate")
            if any(n < MIN_ORDER for n in orders):
                raise EvalError(f"quadrature orders must be at least {MIN_ORDER}")
            object.__setattr__(self, "orders", orders)

    @classmethod
    def sphere(cls, r: float, t: float = 0.0, order: int | None = None, radial: str = "r",
               time: str = "t", polar: str = "theta", azimuth: str = "phi") -> "SurfaceSpec":
        """Coordinate sphere at fixed time and radius."""
        orders = None if order is None else (order, order)
        return cls(((time, t), (radial, r)), ((polar, 0.0, math.pi), (azimuth, 0.0, 2 * math.pi)),
                   orders, "sphere")

    @classmethod
    def torus(cls, r: float, t: float = 0.0, order: int | None = None, radial: str = "r",
              time: str = "t", angle: str = "phi", period: float = 2 * math.pi) -> "SurfaceSpec":
        """Closed curve at fixed time and radial coordinate on a 3d chart."""
        orders = None if order is None else (order,)
        return cls(((time, t), (radial, r)), ((angle, 0.0, period),), orders, "torus")

    @property
    def radius(self) -> float:
        return self.fixed[1][1]

    def with_fixed(self, **values) -> "SurfaceSpec":
        fixed = tuple((c, float(values.get(c, v))) for c, v in self.fixed)
        return SurfaceSpec(fixed, self.free, self.orders, self.kind)

    def with_radius(self, r: float) -> "SurfaceSpec":
        return self.with_fixed(**{self.fixed[1][0]: r})

    def with_orders(self, orders) -> "SurfaceSpec":
        if isinstance(orders, int):
            orders = (orders,) * len(self.free)
        return SurfaceSpec(self.fixed, self.free, tuple(orders), self.kind)

    def resolved_orders(self) -> tuple:
        return self.orders or (default_order(),) * len(self.free)

    def layout(self, chart: Chart):
        """(a, b, free slot indices, sign) on ``chart``."""
        try:
            a, b = (chart.index(c) for c, _ in self.fixed)
            free = [chart.index(c) for c, _, _ in self.free]
        except ValueError as exc:
            raise EvalError(f"surface coordinates do not belong to chart {chart.coords}") from exc
        if len(free) != chart.dim - 2:
            raise EvalError(f"a closed surface on a {chart.dim}-dimensional chart has {chart.dim - 2} free coordinates")
        return a, b, free, _parity([a, b] + free)

    def nodes(self, chart: Chart, orders=None):
        """Quadrature points (N, m) and weights (N,)."""
        a, b, free, _ = self.layout(chart)
        orders = tuple(orders or self.resolved_orders())
        local, w = _product_rule([(lo, hi) for _, lo, hi in self.free], orders)
        pts = np.zeros((local.shape[0], chart.dim))
        pts[:, a] = self.fixed[0][1]
        pts[:, b] = self.fixed[1][1]
        for k, idx in enumerate(free):
            pts[:, idx] = local[:, k]
        return pts, w

    def to_dict(self) -> dict:
        return {"kind": self.kind, "fixed": {c: v for c, v in self.fixed},
                "free": {c: [lo, hi] for c, lo, hi in self.free},
                "orders": list(self.resolved_orders())}

    def describe(self) -> str:
        fx = ", ".join(f"{c}={v:g}" for c, v in self.fixed)
        return f"{self.kind}({fx})"


@dataclass(frozen=True)
class QuadResult:
    """Quadrature value with its order-refinement error estimate."""

    value: float
    error: float
    orders: tuple
    l1: float = 0.0

    def __float__(self):
        return float(self.value)


def _values(form: HorizontalForm, exprs, pts, params=None, dparam=None) -> list:
    cfg = form.config or FieldConfig(form.chart, {}, {}, check=False)
    try:
        with np.errstate(all="raise"):
            if dparam is None:
                vals = cfg.evaluate(exprs, pts, form.generator, form.extra, params)
            else:
                vals = nt._param_derivative(cfg, exprs, pts, dparam, form.generator, form.extra, params)
    except (sk.DomainError, ZeroDivisionError, FloatingPointError, OverflowError) as exc:
        raise SingularSurfaceError(f"integrand is singular on the surface: {exc}") from exc
    out = [np.asarray(v, dtype=float) for v in vals]
    for v in out:
        if not np.all(np.isfinite(v)):
            raise SingularSurfaceError("integrand is not finite on the surface")
    return out


def _error_floor(value: float, l1: float) -> float:
    return 1e-13 * max(abs(value), l1)


def surface_integral(form: HorizontalForm, surface: SurfaceSpec, params: Mapping | None = None,
                     dparam: str | None = None, orders=None, config: FieldConfig | None = None,
                     refine: bool = True) -> QuadResult:
    """Integral of an (m-2)-form over a closed coordinate surface.

    ``dparam`` integrates the derivative of the coefficients with respect to
    that parameter.  The error estimate is the change under raising every
    order by 8, floored at the rounding level of the quadrature sum.
    """
    if config is not None:
        form = form.bind(config)
    m = form.chart.dim
    if form.degree != m - 2:
        raise EvalError(f"surface integrals need an (m-2)-form, got degree {form.degree}")
    a, b, _, sign = surface.layout(form.chart)
    coeff = form.coeffs[a, b]
    orders = tuple(orders or surface.resolved_orders())

    def at(ords):
        if coeff.is_zero:
            return 0.0, 0.0
        pts, w = surface.nodes(form.chart, ords)
        f = _values(form, [coeff], pts, params, dparam)[0]
        return sign * float(np.dot(w, f)), float(np.dot(np.abs(w), np.abs(f)))

    value, l1 = at(orders)
    if not refine:
        return QuadResult(value, _error_floor(value, l1), orders, l1)
    fine, _ = at(tuple(n + REFINE for n in orders))
    err = max(abs(fine - value), _error_floor(value, l1))
    return QuadResult(value, err, orders, l1)


def slice_integral(form: HorizontalForm, fixed: tuple, free: Sequence, orders=None,
                   params: Mapping | None = None) -> QuadResult:
    """Integral of an (m-1)-form over the slice ``fixed = (coord, value)``
    with the other coordinates over ``free = [(coord, lo, hi), ...]``."""
    chart = form.chart
    m = chart.dim
    if form.degree != m - 1:
        raise EvalError(f"slice integrals need an (m-1)-form, got degree {form.degree}")
    a = chart.index(fixed[0])
    idx = [chart.index(c) for c, _, _ in free]
    if sorted([a] + idx) != list(range(m)):
        raise EvalError("slice coordinates must cover the chart")
    orders = tuple(orders or (default_order(),) * len(free))
    sign = _parity([a] + idx)

    def at(ords):
        local, w = _product_rule([(lo, hi) for _, lo, hi in free], ords)
        pts = np.zeros((local.shape[0], m))
        pts[:, a] = fixed[1]
        for k, i in enumerate(idx):
            pts[:, i] = local[:, k]
        f = _values(form, [form.coeffs[a]], pts, params)[0]
        return sign * float(np.dot(w, f)), float(np.dot(np.abs(w), np.abs(f)))

    value, l1 = at(orders)
    fine, _ = at(tuple(n + REFINE for n in orders))
    return QuadResult(value, max(abs(fine - value), _error_floor(value, l1)), orders, l1)


# ---------------------------------------------------------------------------
# Stokes suite

@dataclass(frozen=True)
class StokesReport:
    outer: float
    inner: float
    volume: float
    residual: float
    relative: float

    @property
    def passed(self) -> bool:
        return self.relative <= 1e-6


def stokes_check(form: HorizontalForm, inner: SurfaceSpec, outer: SurfaceSpec, orders=None) -> StokesReport:
    """Compare the outer minus inner surface integrals with the integral of
    Div(form) over the region between them (same fixed time, radial
    coordinate between the two radii)."""
    (tname, tval), (rname, r0) = inner.fixed
    if outer.fixed[0] != inner.fixed[0] or outer.fixed[1][0] != rname or outer.free != inner.free:
        raise EvalError("inner and outer surfaces must differ only in radius")
    r1 = outer.fixed[1][1]
    div = nt.formal_divergence(form)
    o = surface_integral(form, outer, orders=orders)
    i = surface_integral(form, inner, orders=orders)
    free = ((rname, r0, r1),) + tuple(inner.free)
    v = slice_integral(div, (tname, tval), free, orders=None if orders is None else (orders[0],) + tuple(orders))
    res = abs(o.value - i.value - v.value)
    scale = max(abs(o.value), abs(i.value), abs(v.value), 1e-300)
    return StokesReport(o.value, i.value, v.value, res, res / scale)


def spherical_chart() -> Chart:
    return Chart(("t", "r", "theta", "phi"), -1, ((0, 1), (1, 4), (0.3, 2.8), (0, 6)), "spherical")


def random_polynomial_form(seed: int = 0, chart: Chart | None = None, degree: int = 2) -> HorizontalForm:
    """A random (m-2)-form on a spherical chart whose coefficients are
    polynomials in (t, r, cos theta, cos phi, sin phi).  U^{t theta} carries
    a factor sin theta and everything is periodic in phi, so the annulus
    Stokes identity holds with no side contributions."""
    chart = chart or spherical_chart()
    rng = np.random.default_rng(seed)
    t, r, th, ph = chart.symbols
    base = [sk.ONE, t, r, sk.cos(th), sk.cos(ph), sk.sin(ph)]
    monos = [sk.ONE]
    for _ in range(degree):
        monos = list({id(x): x for x in (sk.mul(a, b) for a in monos for b in base)}.values())

    def poly():
        return sk.total(sk.mul(float(rng.normal()), mono) for mono in monos)

    upper = {}
    for i in range(4):
        for j in range(i + 1, 4):
            p = poly()
            if (i, j) == (0, 2):
                p = sk.mul(sk.sin(th), p)
            upper[(i, j)] = p
    return HorizontalForm.from_upper(chart, upper, label=f"random-poly-{seed}")


def two_form_superpotential(F, chart: Chart, config: FieldConfig | None = None) -> HorizontalForm:
    """The (m-2)-form U^{mu nu} = 1/2 eps^{mu nu rho sigma} F_{rho sigma}
    (Levi-Civita symbol) of a 2-form F_{rho sigma} on a 4d chart, so that
    its surface integral is the flux of F."""
    m = chart.dim
    if m != 4:
        raise EvalError("two_form_superpotential needs a 4-dimensional chart")
    Fc = F.comps if hasattr(F, "comps") else np.asarray(F, dtype=object)
    eps = geom._levi_civita(4)
    c = geom.zeros((m, m))
    for (mu, nu, rho, sig), s in eps.items():
        c[mu, nu] = sk.add(c[mu, nu], sk.mul(0.5 * s, Fc[rho, sig]))
    return HorizontalForm(chart, m - 2, c, config, label="dual-2-form")


# ---------------------------------------------------------------------------
# solution library

def _data_files() -> dict:
    root = resources.files("augvar") / "data"
    return {p.name[:-5]: p for p in sorted(root.iterdir(), key=lambda p: p.name) if p.name.endswith(".yaml")}


def library_ids() -> list:
    return list(_data_files())


@functools.lru_cache(maxsize=None)
def _library_entry(name: str) -> FieldConfig:
    files = _data_files()
    if name not in files:
        raise UnknownSolutionError(f"unknown library solution or missing file {name!r}; "
                                   f"library: {', '.join(files)}")
    return geom.load_field_file(files[name].read_text(encoding="utf-8"))


def solution_library() -> list:
    """Every shipped sample configuration (see ``config.meta`` for the
    intended theory and the on-shell flag)."""
    return [_library_entry(n) for n in library_ids()]


def load_solution(spec, **params) -> FieldConfig:
    """A library id, an id with parameter overrides (``"schwarzschild:M=2"``),
    a path to a field file, or a FieldConfig (returned with overrides)."""
    if isinstance(spec, FieldConfig):
        return spec.with_params(**params) if params else spec
    text = str(spec)
    name, _, over = text.partition(":") if not os.path.exists(text) else (text, "", "")
    p = {}
    for item in filter(None, (s.strip() for s in over.split(","))):
        k, eq, v = item.partition("=")
        if not eq:
            raise EvalError(f"bad parameter override {item!r}, expected name=value")
        try:
            p[k.strip()] = float(v)
        except ValueError as exc:
            raise EvalError(f"bad parameter value in {item!r}") from exc
    p.update(params)
    if os.path.exists(name):
        cfg = geom.load_field_file(name)
    else:
        cfg = _library_entry(name)
    unknown = set(p) - set(cfg.params)
    if unknown:
        raise EvalError(f"{cfg.name} has no parameters {sorted(unknown)}")
    if not p:
        return cfg
    out = cfg.with_params(**p)
    out.name = cfg.name + "(" + ",".join(f"{k}={v:g}" for k, v in sorted(p.items())) + ")"
    return out


# ---------------------------------------------------------------------------
# relative quantities

def richardson(h: Sequence[float], values: Sequence[float]) -> tuple:
    """Value at h = 0 of the polynomial through (h_i, values_i), and the
    Lagrange weights of that extrapolation."""
    h = np.asarray(h, dtype=float)
    w = np.ones(len(h))
    for i in range(len(h)):
        for j in range(len(h)):
            if i != j:
                w[i] *= h[j] / (h[j] - h[i])
    return float(np.dot(w, values)), w


def el_residual(theory: TheoryEntry, config: FieldConfig, n: int = 5, seed: int = 0) -> float:
    """Max |EL| of the dynamical fields at sampled points."""
    th = theory.with_algebra(config.algebra) if config.algebra is not None and theory.algebra is not None else theory
    el = th.euler_lagrange(config, dynamical_only=True)
    pts = config.sample_points(n, seed=seed)
    vals = config.evaluate(list(el.values()), pts)
    return float(max((np.max(np.abs(v)) for v in vals), default=0.0))


@dataclass
class QuantityReport:
    """Relative conserved quantity with its provenance in the run."""

    theory: str
    solution: str
    vacuum: str
    generator: str
    surface: dict
    value: float
    error: float
    radii: list = field(default_factory=list)
    extrapolated: bool = False
    variant: str = "canonical"
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"theory": self.theory, "solution": self.solution, "vacuum": self.vacuum,
                "generator": self.generator, "surface": self.surface, "value": self.value,
                "error": self.error, "radii": self.radii, "extrapolated": self.extrapolated,
                "variant": self.variant, "warnings": self.warnings}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _generator(chart: Chart, gen, algebra_dim: int, params=()) -> SymmetryGenerator:
    if isinstance(gen, SymmetryGenerator):
        return gen
    if isinstance(gen, str):
        if gen in chart.coords:
            return SymmetryGenerator.coordinate(chart, gen, algebra_dim)
        raise EvalError(f"unknown generator {gen!r}")
    xi, xia = gen
    xia = list(xia) + ["0"] * (algebra_dim - len(xia))
    return SymmetryGenerator.parse(chart, list(xi), xia, params)


def _describe_gen(gen: SymmetryGenerator) -> str:
    xi = ", ".join(sk.to_text(e) for e in gen.xi)
    s = f"xi=({xi})"
    if gen.xi_a:
        s += " xi_A=(" + ", ".join(sk.to_text(e) for e in gen.xi_a) + ")"
    return f"{gen.label}: {s}" if gen.label else s


def relative_quantity(theory, solution, vacuum, generator, surface: SurfaceSpec, radii=None,
                      variant: str = "canonical", gauge: float = 0.0, orders=None,
                      check_shell: bool = True) -> QuantityReport:
    """Surface integral of the augmented superpotential U(l) for
    (solution, vacuum).  With ``radii`` the integral is taken on each
    sphere and Richardson-extrapolated in 1/r to r = infinity.

    Configurations failing their field equations (EL residual above 1e-5)
    raise an :class:`OffShellWarning` and are noted in the report.
    """
    if isinstance(theory, str):
        theory = nt.lookup(theory)
    sol = load_solution(solution)
    vac = load_solution(vacuum)
    if sol.chart.coords != vac.chart.coords:
        raise EvalError("solution and vacuum live on different charts")
    alg = sol.algebra or vac.algebra
    if alg is not None and theory.algebra is not None:
        theory = theory.with_algebra(alg)
    gen = _generator(sol.chart, generator, alg.dim if (alg is not None and theory.algebra is not None) else 0,
                     tuple(sol.params))
    notes = []
    if check_shell:
        for label, cfg in (("solution", sol), ("vacuum", vac)):
            res = el_residual(theory, cfg)
            if res > OFF_SHELL_TOL:
                msg = f"{label} {cfg.name} is off-shell for {theory.name} (EL residual {res:.3g})"
                warnings.warn(msg, OffShellWarning, stacklevel=2)
                notes.append(msg)
    U = augment.augmented_superpotential(theory, sol, vac, gen, variant, gauge)
    if radii:
        rows = []
        for r in radii:
            q = surface_integral(U, surface.with_radius(float(r)), orders=orders)
            rows.append({"r": float(r), "value": q.value, "error": q.error})
        if len(rows) > 1:
            value, w = richardson([1.0 / row["r"] for row in rows], [row["value"] for row in rows])
            error = float(np.dot(np.abs(w), [row["error"] for row in rows]))
            extrapolated = True
        else:
            value, error, extrapolated = rows[0]["value"], rows[0]["error"], False
        surf = surface.with_radius(float(radii[-1])).to_dict()
    else:
        q = surface_integral(U, surface, orders=orders)
        value, error, rows, extrapolated = q.value, q.error, [], False
        surf = surface.to_dict()
    if orders is not None:
        surf["orders"] = list(orders) if not isinstance(orders, int) else [orders] * len(surface.free)
    return QuantityReport(theory.name, sol.name, vac.name, _describe_gen(gen), surf, value, error, rows,
                          extrapolated, variant, notes)
