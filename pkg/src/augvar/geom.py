"""Tensor calculus on a single chart.

Tensors are dense numpy object arrays of :class:`~augvar.symker.Expr`.  The
index structure is a string with one letter per slot:

* ``u`` contravariant spacetime index,
* ``d`` covariant spacetime index,
* ``A`` gauge-algebra index.

No index is ever raised or lowered implicitly; every contraction names the
tensors involved.  Because ``symker.diff`` with respect to a coordinate is a
total derivative, the same functions work on explicit configurations (fields
given as functions of the coordinates) and on generic jet fields (fields
given as jet symbols).
"""

from __future__ import annotations

import functools
import itertools
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from . import symker as sk
from .symker import Chart, Expr

__all__ = [
    "GeomError",
    "TensorField",
    "GaugeAlgebra",
    "SymmetryGenerator",
    "FieldConfig",
    "ROLES",
    "abelian",
    "so3",
    "zeros",
    "jet_field",
    "determinant",
    "inverse_metric",
    "sqrt_abs_det",
    "christoffel",
    "riemann",
    "ricci",
    "scalar_curvature",
    "u_tensor",
    "field_strength",
    "lie_derivative",
    "covariant_derivative",
    "metricity_residual",
    "so3_gauge_transform",
    "pure_gauge_so3",
    "load_field_file",
    "dump_field_file",
    "FieldFileError",
]

ROLES = ("metric", "connection", "gauge", "point-particle")


class GeomError(ValueError):
    pass


def _obj(shape) -> np.ndarray:
    a = np.empty(shape, dtype=object)
    a.fill(sk.ZERO)
    return a


def _num(v):
    v = float(v)
    return int(v) if v.is_integer() else v


def zeros(shape) -> np.ndarray:
    """Object array filled with the symbolic zero."""
    return _obj(shape)


def _free_values(exprs, rng, params=None):
    """Random (but valid-looking) values for every free symbol."""
    vals = {}
    for s in sk.free_symbols(*exprs):
        if params and s.name in params:
            vals[s.name] = params[s.name]
        else:
            vals[s.name] = rng.uniform(0.5, 1.5, size=5)
    return vals


# ---------------------------------------------------------------------------
# algebra

@dataclass(frozen=True)
class GaugeAlgebra:
    """Structure constants ``c[A, B, C] = c^A_{BC}`` and pairing ``eta``."""

    name: str
    structure: np.ndarray
    eta: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.structure, dtype=float)
        eta = np.asarray(self.eta, dtype=float)
        n = eta.shape[0]
        if c.shape != (n, n, n) or eta.shape != (n, n):
            raise GeomError("structure constants and pairing shapes disagree")
        if not np.allclose(c, -c.transpose(0, 2, 1), atol=1e-12):
            raise GeomError("structure constants must be antisymmetric")
        # Jacobi: c^A_{BE} c^E_{CD} + cyclic(BCD) = 0
        jac = (
            np.einsum("abe,ecd->abcd", c, c)
            + np.einsum("ace,edb->abcd", c, c)
            + np.einsum("ade,ebc->abcd", c, c)
        )
        if np.max(np.abs(jac), initial=0.0) > 1e-12:
            raise GeomError("structure constants violate the Jacobi identity")
        if not np.allclose(eta, eta.T, atol=1e-15):
            raise GeomError("pairing must be symmetric")
        object.__setattr__(self, "structure", c)
        object.__setattr__(self, "eta", eta)

    @property
    def dim(self) -> int:
        return self.eta.shape[0]

    @property
    def is_abelian(self) -> bool:
        return not np.any(self.structure)


@functools.lru_cache(maxsize=None)
def abelian(n: int = 1) -> GaugeAlgebra:
    return GaugeAlgebra(f"u1^{n}" if n > 1 else "u1", np.zeros((n, n, n)), np.eye(n))


@functools.lru_cache(maxsize=None)
def so3() -> GaugeAlgebra:
    eps = np.zeros((3, 3, 3))
    for (i, j, k), s in _levi_civita(3).items():
        eps[i, j, k] = s
    return GaugeAlgebra("so3", eps, np.eye(3))


def _levi_civita(n: int) -> dict:
    out = {}
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        out[perm] = -1 if inv % 2 else 1
    return out


# ---------------------------------------------------------------------------
# tensors

@dataclass(frozen=True)
class TensorField:
    """Dense tensor of expressions on a chart.

    ``symmetries`` lists slot pairs ``(i, j, sign)``: ``sign=+1`` symmetric,
    ``-1`` antisymmetric.  They are checked on construction unless
    ``check=False`` (internal constructions that are symmetric by design).
    """

    chart: Chart
    index: str
    comps: np.ndarray
    symmetries: tuple = ()
    name: str = ""
    algebra_dim: int = 0
    check: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        comps = np.asarray(self.comps, dtype=object)
        if comps.ndim == 0 and self.index == "":
            comps = comps.reshape(())
        object.__setattr__(self, "comps", comps)
        if any(ch not in "udA" for ch in self.index):
            raise GeomError(f"bad index structure {self.index!r}")
        if "A" in self.index and self.algebra_dim < 1:
            raise GeomError("an algebra slot needs algebra_dim >= 1")
        shape = tuple(self.algebra_dim if ch == "A" else self.chart.dim for ch in self.index)
        if comps.shape != shape:
            raise GeomError(f"component array has shape {comps.shape}, expected {shape}")
        for k, x in np.ndenumerate(comps):
            if not isinstance(x, Expr):
                comps[k] = sk._as_expr(x)
        sym = tuple(tuple(s) for s in self.symmetries)
        for i, j, s in sym:
            if self.index[i] != self.index[j] or s not in (1, -1):
                raise GeomError("symmetries pair slots of the same kind")
        object.__setattr__(self, "symmetries", sym)
        if self.check and sym:
            self._check_symmetries()

    def _check_symmetries(self, tol: float = 1e-10):
        pending = []
        for i, j, s in self.symmetries:
            swapped = np.swapaxes(self.comps, i, j)
            for k, a in np.ndenumerate(self.comps):
                b = swapped[k]
                if s == 1 and a is b:
                    continue
                if s == -1 and (a is sk.mul(-1, b)):
                    continue
                pending.append((a, b, s))
        if not pending:
            return
        rng = np.random.default_rng(12345)
        exprs = [sk.add(a, sk.mul(-s, b)) for a, b, s in pending]
        vals = _free_values(exprs, rng)
        try:
            out = sk.Evaluator(exprs)(vals, check=False)
        except sk.SymkerError:
            return
        for r in out:
            if np.nanmax(np.abs(np.asarray(r, dtype=float)), initial=0.0) > tol:
                raise GeomError(f"declared symmetry does not hold for {self.name or 'tensor'}")

    @property
    def shape(self):
        return self.comps.shape

    def __getitem__(self, k):
        return self.comps[k]

    def map(self, fn, index: str | None = None, symmetries=None, name: str | None = None) -> "TensorField":
        out = _obj(self.comps.shape)
        for k, x in np.ndenumerate(self.comps):
            out[k] = fn(x)
        return TensorField(
            self.chart,
            self.index if index is None else index,
            out,
            self.symmetries if symmetries is None else symmetries,
            self.name if name is None else name,
            self.algebra_dim,
            check=False,
        )

    def __sub__(self, other: "TensorField") -> "TensorField":
        if self.comps.shape != other.comps.shape or self.index != other.index:
            raise GeomError("tensor shapes differ")
        out = _obj(self.comps.shape)
        for k, x in np.ndenumerate(self.comps):
            out[k] = sk.add(x, sk.mul(-1, other.comps[k]))
        return TensorField(self.chart, self.index, out, self.symmetries, self.name, self.algebra_dim, check=False)

    def __add__(self, other: "TensorField") -> "TensorField":
        if self.comps.shape != other.comps.shape or self.index != other.index:
            raise GeomError("tensor shapes differ")
        out = _obj(self.comps.shape)
        for k, x in np.ndenumerate(self.comps):
            out[k] = sk.add(x, other.comps[k])
        return TensorField(self.chart, self.index, out, self.symmetries, self.name, self.algebra_dim, check=False)

    def scale(self, c) -> "TensorField":
        return self.map(lambda x: sk.mul(c, x))

    def subs(self, mapping) -> "TensorField":
        return self.map(lambda x: sk.subs(x, mapping))

    def diff(self, var) -> "TensorField":
        return self.map(lambda x: sk.diff(x, var))

    def independent(self):
        """Index tuples of independent components under the declared
        (anti)symmetries, with their multiplicity in a full contraction."""
        seen = {}
        for k in np.ndindex(*self.comps.shape):
            key = list(k)
            for i, j, _ in self.symmetries:
                if key[i] > key[j]:
                    key[i], key[j] = key[j], key[i]
            key = tuple(key)
            seen[key] = seen.get(key, 0) + 1
        anti = [(i, j) for i, j, s in self.symmetries if s == -1]
        return [(k, n) for k, n in seen.items() if not any(k[i] == k[j] for i, j in anti)]


def jet_field(chart: Chart, name: str, index: str, symmetries=(), algebra_dim: int = 0) -> TensorField:
    """Generic field whose components are jet symbols.

    Components related by a declared symmetry share one symbol (with a sign
    for antisymmetry); this keeps the jet coordinates independent.
    """
    shape = tuple(algebra_dim if ch == "A" else chart.dim for ch in index)
    comps = _obj(shape)
    for k in np.ndindex(*shape):
        key = list(k)
        sign = 1
        for i, j, s in symmetries:
            if key[i] > key[j]:
                key[i], key[j] = key[j], key[i]
                sign *= s
        anti_diag = any(key[i] == key[j] for i, j, s in symmetries if s == -1)
        if anti_diag:
            continue
        comps[k] = sk.mul(sign, sk.jet(name, tuple(key)))
    return TensorField(chart, index, comps, tuple(symmetries), name, algebra_dim, check=False)


@dataclass(frozen=True)
class SymmetryGenerator:
    """Infinitesimal gauge-natural symmetry: ``xi`` (spacetime part, one Expr
    per coordinate) and ``xi_a`` (vertical part, one per algebra generator)."""

    chart: Chart
    xi: tuple
    xi_a: tuple = ()
    label: str = ""

    def __post_init__(self):
        xi = tuple(sk._as_expr(x) for x in self.xi)
        xa = tuple(sk._as_expr(x) for x in self.xi_a)
        if len(xi) != self.chart.dim:
            raise GeomError(f"need {self.chart.dim} spacetime components, got {len(xi)}")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "xi_a", xa)

    @classmethod
    def parse(cls, chart: Chart, xi: Sequence[str], xi_a: Sequence[str] = (), params=()) -> "SymmetryGenerator":
        return cls(
            chart,
            tuple(sk.parse(s, chart, params) for s in xi),
            tuple(sk.parse(s, chart, params) for s in xi_a),
            label=f"xi=({', '.join(xi)})" + (f" xi_a=({', '.join(xi_a)})" if xi_a else ""),
        )

    @classmethod
    def coordinate(cls, chart: Chart, name: str, algebra_dim: int = 0) -> "SymmetryGenerator":
        xi = [sk.ONE if c == name else sk.ZERO for c in chart.coords]
        return cls(chart, tuple(xi), (sk.ZERO,) * algebra_dim, label=f"d/d{name}")

    @classmethod
    def generic(cls, chart: Chart, algebra_dim: int = 0) -> "SymmetryGenerator":
        """Generator made of jet symbols; its values are bound later."""
        xi = tuple(sk.jet("xi", (i,)) for i in range(chart.dim))
        xa = tuple(sk.jet("xia", (a,)) for a in range(algebra_dim))
        return cls(chart, xi, xa, label="generic")

    def scaled(self, c) -> "SymmetryGenerator":
        return SymmetryGenerator(
            self.chart,
            tuple(sk.mul(c, x) for x in self.xi),
            tuple(sk.mul(c, x) for x in self.xi_a),
            label=f"{c}*({self.label})",
        )

    def __add__(self, other: "SymmetryGenerator") -> "SymmetryGenerator":
        n = max(len(self.xi_a), len(other.xi_a))
        a = self.xi_a + (sk.ZERO,) * (n - len(self.xi_a))
        b = other.xi_a + (sk.ZERO,) * (n - len(other.xi_a))
        return SymmetryGenerator(
            self.chart,
            tuple(sk.add(x, y) for x, y in zip(self.xi, other.xi)),
            tuple(sk.add(x, y) for x, y in zip(a, b)),
            label=f"({self.label})+({other.label})",
        )

    @property
    def is_zero(self) -> bool:
        return all(x.is_zero for x in self.xi + self.xi_a)


@dataclass
class FieldConfig:
    """A point of configuration space: named fields with roles on a chart,
    plus numeric parameter values."""

    chart: Chart
    fields: dict
    roles: dict
    params: dict = field(default_factory=dict)
    algebra: GaugeAlgebra | None = None
    name: str = ""
    check: bool = True
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for k, r in self.roles.items():
            if r not in ROLES:
                raise GeomError(f"unknown field role {r!r}")
            if k not in self.fields:
                raise GeomError(f"role given for missing field {k!r}")
        for k in self.fields:
            if k not in self.roles:
                raise GeomError(f"field {k!r} has no role")
        self._cache: dict = {}
        if self.check:
            for k, r in self.roles.items():
                if r == "metric":
                    self._check_metric(self.fields[k])

    def _check_metric(self, g: TensorField):
        if g.index != "dd":
            raise GeomError("a metric has two covariant slots")
        det = determinant(g.comps)
        pts = self.sample_points(5, seed=7)
        vals = self.evaluate([det], pts)[0]
        if np.any(np.abs(vals) < 1e-14):
            raise GeomError("metric is degenerate at sampled points")

    def field_of_role(self, role: str) -> TensorField:
        for k, r in self.roles.items():
            if r == role:
                return self.fields[k]
        raise GeomError(f"configuration has no {role} field")

    def __getitem__(self, k) -> TensorField:
        return self.fields[k]

    def with_params(self, **params) -> "FieldConfig":
        p = dict(self.params)
        p.update(params)
        return FieldConfig(self.chart, self.fields, self.roles, p, self.algebra, self.name, check=False,
                           meta=self.meta)

    # -- sampling and evaluation ---------------------------------------------
    def sample_points(self, n: int = 5, seed: int = 0, exprs: Sequence[Expr] = (), tries: int = 20) -> np.ndarray:
        """Random chart points where ``exprs`` evaluate finitely; singular
        draws are redrawn up to ``tries`` times."""
        rng = np.random.default_rng(seed)
        out = []
        for _ in range(tries):
            pts = self.chart.sample(rng, n)
            if not exprs:
                return pts
            try:
                vals = self.evaluate(list(exprs), pts)
            except sk.SymkerError:
                continue
            ok = np.all([np.isfinite(np.asarray(v, dtype=float)) for v in vals], axis=0)
            out.extend(pts[np.broadcast_to(ok, (n,))])
            if len(out) >= n:
                return np.array(out[:n])
        raise GeomError("could not find regular sample points")

    def _field_jet(self, fname: str, comp: tuple, index: tuple) -> Expr:
        key = (fname, comp, index)
        r = self._cache.get(key)
        if r is None:
            if index:
                r = sk.diff(self._field_jet(fname, comp, index[:-1]), index[-1])
            else:
                r = self.fields[fname].comps[comp]
            self._cache[key] = r
        return r

    def resolve(self, e: Expr, generator: SymmetryGenerator | None = None, extra: Mapping | None = None) -> dict:
        """Expressions (in coordinates and parameters) for every jet symbol
        occurring in ``e``."""
        out = {}
        for s in sk.free_symbols(e, kind="jet"):
            fname, comp, index = s.val[2]
            if extra and fname in extra:
                base = extra[fname].comps[comp]
                r = base
                for c in index:
                    r = sk.diff(r, c)
            elif fname in self.fields:
                r = self._field_jet(fname, comp, index)
            elif fname in ("xi", "xia") and generator is not None:
                r = (generator.xi if fname == "xi" else generator.xi_a)[comp[0]]
                for c in index:
                    r = sk.diff(r, c)
            else:
                raise sk.UnboundSymbolError(s.name)
            out[s] = r
        return out

    def evaluate(
        self,
        exprs: Sequence[Expr],
        points: np.ndarray,
        generator: SymmetryGenerator | None = None,
        extra: Mapping | None = None,
        params: Mapping | None = None,
        check: bool = True,
    ) -> list:
        """Evaluate expressions (possibly containing jet symbols) at points
        of shape (n, m).  Returns one array of length n per expression."""
        exprs = [sk._as_expr(e) for e in exprs]
        pts = np.atleast_2d(np.asarray(points))
        dtype = complex if np.iscomplexobj(pts) else float
        pts = pts.astype(dtype)
        values = {c: pts[:, i] for i, c in enumerate(self.chart.coords)}
        values.update(self.params)
        if params:
            values.update(params)
        jets = set()
        for e in exprs:
            jets |= sk.free_symbols(e, kind="jet")
        jet_exprs = {}
        for s in jets:
            jet_exprs.update(self.resolve(s, generator, extra))
        if jet_exprs:
            syms = list(jet_exprs)
            jv = sk.Evaluator([jet_exprs[s] for s in syms])(values, check=check)
            for s, v in zip(syms, jv):
                values[s.name] = v
        n = pts.shape[0]
        out = sk.Evaluator(exprs)(values, check=check)
        return [np.broadcast_to(np.asarray(v, dtype=dtype), (n,)).copy() for v in out]


# ---------------------------------------------------------------------------
# so(3) gauge transformations

def _rot(axis: int, angle) -> np.ndarray:
    c, s = sk.cos(angle), sk.sin(angle)
    R = zeros((3, 3))
    i, j = [k for k in range(3) if k != axis]
    R[axis, axis] = sk.ONE
    R[i, i] = c
    R[j, j] = c
    R[i, j] = sk.mul(-1, s)
    R[j, i] = s
    return R


def _matmul(a, b):
    n = a.shape[0]
    out = zeros((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = sk.total(sk.mul(a[i, k], b[k, j]) for k in range(n))
    return out


def so3_gauge_transform(A: TensorField, angles) -> TensorField:
    """Gauge transform of an so(3) potential by g = R_z(a) R_x(b), with
    ``angles = (a, b)`` expressions in the coordinates.

    In matrix form (generators (T_i)_{jk} = -eps_{ijk}), A' = g A g^-1 - (dg) g^-1."""
    chart = A.chart
    m = chart.dim
    eps = _levi_civita(3)
    a, b = (sk._as_expr(x) for x in angles)
    g = _matmul(_rot(2, a), _rot(0, b))
    ginv = g.T.copy()
    out = zeros((3, m))
    for mu in range(m):
        M = zeros((3, 3))
        for (i, j, k), s in eps.items():
            M[j, k] = sk.add(M[j, k], sk.mul(-s, A.comps[i, mu]))
        dg = np.vectorize(lambda e: sk.diff(e, chart.coords[mu]), otypes=[object])(g)
        gMg, dgg = _matmul(_matmul(g, M), ginv), _matmul(dg, ginv)
        Mp = np.vectorize(lambda x, y: sk.add(x, sk.mul(-1, y)), otypes=[object])(gMg, dgg)
        for i in range(3):
            out[i, mu] = sk.mul(Fraction(-1, 2), sk.total(sk.mul(s, Mp[j, k]) for (ii, j, k), s in eps.items()
                                                           if ii == i))
    return TensorField(chart, "Ad", out, (), A.name, 3, check=False)


def pure_gauge_so3(chart: Chart, angles) -> TensorField:
    """The flat so(3) potential obtained by gauge-transforming A = 0."""
    return so3_gauge_transform(TensorField(chart, "Ad", zeros((3, chart.dim)), algebra_dim=3), angles)


# ---------------------------------------------------------------------------
# metric algebra

def determinant(a: np.ndarray) -> Expr:
    """Symbolic determinant by cofactor expansion with shared minors."""
    n = a.shape[0]
    memo: dict = {}

    def minor(rows: tuple, cols: tuple) -> Expr:
        key = (rows, cols)
        r = memo.get(key)
        if r is not None:
            return r
        if len(rows) == 1:
            r = a[rows[0], cols[0]]
        else:
            terms = []
            i = rows[0]
            for jj, j in enumerate(cols):
                x = a[i, j]
                if x.is_zero:
                    continue
                sub = minor(rows[1:], cols[:jj] + cols[jj + 1:])
                terms.append(sk.mul(-1 if jj % 2 else 1, x, sub))
            r = sk.total(terms)
        memo[key] = r
        return r

    return minor(tuple(range(n)), tuple(range(n)))


def _inverse(a: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    inv = _obj((n, n))
    # diagonal fast path
    if all(a[i, j].is_zero for i in range(n) for j in range(n) if i != j):
        for i in range(n):
            inv[i, i] = sk.power(a[i, i], -1)
        return inv
    det = determinant(a)
    rdet = sk.power(det, -1)
    for i in range(n):
        for j in range(n):
            rows = tuple(r for r in range(n) if r != j)
            cols = tuple(c for c in range(n) if c != i)
            sub = determinant(a[np.ix_(rows, cols)]) if n > 1 else sk.ONE
            inv[i, j] = sk.mul(-1 if (i + j) % 2 else 1, sub, rdet)
    return inv


def inverse_metric(g: TensorField) -> TensorField:
    """g^{mu nu}.  Raises if the metric is not 2-covariant."""
    if g.index != "dd":
        raise GeomError("inverse_metric expects a 2-covariant tensor")
    inv = _inverse(g.comps)
    m = g.chart.dim
    for i in range(m):
        for j in range(i + 1, m):
            inv[j, i] = inv[i, j]
    return TensorField(g.chart, "uu", inv, ((0, 1, 1),), f"{g.name}^-1", check=False)


def sqrt_abs_det(g: TensorField) -> Expr:
    """sqrt(|det g|), with the sign taken from the chart signature."""
    return sk.sqrt(sk.mul(g.chart.signature, determinant(g.comps)))


def christoffel(g: TensorField, ginv: TensorField | None = None) -> TensorField:
    """Levi-Civita symbols Gamma^l_{ab} (slots ``udd``)."""
    m = g.chart.dim
    ginv = ginv or inverse_metric(g)
    X = g.chart.coords
    dg = [[[sk.diff(g.comps[a, b], X[c]) for c in range(m)] for b in range(m)] for a in range(m)]
    # first kind Gamma_{s a b}
    first = _obj((m, m, m))
    for s in range(m):
        for a in range(m):
            for b in range(a, m):
                first[s, a, b] = sk.mul(Fraction(1, 2), sk.add(dg[s][b][a], dg[s][a][b], sk.mul(-1, dg[a][b][s])))
                first[s, b, a] = first[s, a, b]
    out = _obj((m, m, m))
    for l in range(m):
        for a in range(m):
            for b in range(a, m):
                out[l, a, b] = sk.total(sk.mul(ginv.comps[l, s], first[s, a, b]) for s in range(m))
                out[l, b, a] = out[l, a, b]
    return TensorField(g.chart, "udd", out, ((1, 2, 1),), "Gamma", check=False)


def riemann(gamma: TensorField) -> TensorField:
    """R^a_{b mu nu} = d_mu G^a_{b nu} - d_nu G^a_{b mu} + G^a_{l mu} G^l_{b nu} - G^a_{l nu} G^l_{b mu}."""
    m = gamma.chart.dim
    X = gamma.chart.coords
    G = gamma.comps
    out = _obj((m, m, m, m))
    for a in range(m):
        for b in range(m):
            for mu in range(m):
                for nu in range(mu + 1, m):
                    terms = [sk.diff(G[a, b, nu], X[mu]), sk.mul(-1, sk.diff(G[a, b, mu], X[nu]))]
                    for l in range(m):
                        terms.append(sk.mul(G[a, l, mu], G[l, b, nu]))
                        terms.append(sk.mul(-1, G[a, l, nu], G[l, b, mu]))
                    r = sk.total(terms)
                    out[a, b, mu, nu] = r
                    out[a, b, nu, mu] = sk.mul(-1, r)
    return TensorField(gamma.chart, "uddd", out, ((2, 3, -1),), "Riemann", check=False)


def ricci(gamma: TensorField, riem: TensorField | None = None, symmetrize: bool = False) -> TensorField:
    """R_{b nu} = R^a_{b a nu}; ``symmetrize`` keeps only R_{(b nu)}."""
    m = gamma.chart.dim
    R = (riem or riemann(gamma)).comps
    out = _obj((m, m))
    for b in range(m):
        for nu in range(m):
            out[b, nu] = sk.total(R[a, b, a, nu] for a in range(m))
    sym = ()
    if symmetrize:
        half = Fraction(1, 2)
        s = _obj((m, m))
        for b in range(m):
            for nu in range(b, m):
                s[b, nu] = sk.mul(half, sk.add(out[b, nu], out[nu, b]))
                s[nu, b] = s[b, nu]
        out, sym = s, ((0, 1, 1),)
    return TensorField(gamma.chart, "dd", out, sym, "Ricci", check=False)


def scalar_curvature(g: TensorField, gamma: TensorField, ginv: TensorField | None = None,
                     ric: TensorField | None = None) -> Expr:
    """g^{b nu} R_{b nu}(Gamma)."""
    m = g.chart.dim
    ginv = ginv or inverse_metric(g)
    ric = ric or ricci(gamma)
    return sk.total(
        sk.mul(ginv.comps[b, n], ric.comps[b, n])
        for b in range(m)
        for n in range(m)
        if not ginv.comps[b, n].is_zero
    )


def u_tensor(gamma: TensorField, symmetrized: bool = True) -> TensorField:
    """u^l_{ab} = Gamma^l_{ab} - delta^l_(a Gamma_b) (symmetrized) or
    Gamma^l_{ab} - delta^l_a Gamma_b (plain), with Gamma_b = Gamma^a_{ab}."""
    m = gamma.chart.dim
    G = gamma.comps
    trace = [sk.total(G[a, a, b] for a in range(m)) for b in range(m)]
    out = _obj((m, m, m))
    half = Fraction(1, 2)
    for l in range(m):
        for a in range(m):
            for b in range(m):
                if symmetrized:
                    corr = []
                    if l == a:
                        corr.append(sk.mul(half, trace[b]))
                    if l == b:
                        corr.append(sk.mul(half, trace[a]))
                    out[l, a, b] = sk.add(G[l, a, b], sk.mul(-1, sk.total(corr)))
                else:
                    out[l, a, b] = sk.add(G[l, a, b], sk.mul(-1, trace[b])) if l == a else G[l, a, b]
    sym = ((1, 2, 1),) if symmetrized else ()
    return TensorField(gamma.chart, "udd", out, sym, "u", check=False)


def field_strength(A: TensorField, alg: GaugeAlgebra) -> TensorField:
    """F^A_{mu nu} = d_mu A^A_nu - d_nu A^A_mu + c^A_{BC} A^B_mu A^C_nu."""
    if A.index != "Ad":
        raise GeomError("gauge potential has slots 'Ad'")
    m = A.chart.dim
    n = alg.dim
    X = A.chart.coords
    c = alg.structure
    out = _obj((n, m, m))
    for a in range(n):
        for mu in range(m):
            for nu in range(mu + 1, m):
                terms = [sk.diff(A.comps[a, nu], X[mu]), sk.mul(-1, sk.diff(A.comps[a, mu], X[nu]))]
                for b in range(n):
                    for cc in range(n):
                        if c[a, b, cc]:
                            terms.append(sk.mul(_num(c[a, b, cc]), A.comps[b, mu], A.comps[cc, nu]))
                r = sk.total(terms)
                out[a, mu, nu] = r
                out[a, nu, mu] = sk.mul(-1, r)
    return TensorField(A.chart, "Add", out, ((1, 2, -1),), "F", n, check=False)


def covariant_derivative(T: TensorField, gamma: TensorField) -> TensorField:
    """nabla_r T for a spacetime tensor; the new covariant slot is appended
    last."""
    m = T.chart.dim
    X = T.chart.coords
    G = gamma.comps
    if "A" in T.index:
        raise GeomError("covariant_derivative acts on spacetime tensors only")
    shape = T.comps.shape + (m,)
    out = _obj(shape)
    for k in np.ndindex(*T.comps.shape):
        for r in range(m):
            terms = [sk.diff(T.comps[k], X[r])]
            for slot, ch in enumerate(T.index):
                for s in range(m):
                    kk = list(k)
                    if ch == "u":
                        kk[slot] = s
                        terms.append(sk.mul(G[k[slot], s, r], T.comps[tuple(kk)]))
                    else:
                        kk[slot] = s
                        terms.append(sk.mul(-1, G[s, k[slot], r], T.comps[tuple(kk)]))
            out[k + (r,)] = sk.total(terms)
    return TensorField(T.chart, T.index + "d", out, (), f"nabla {T.name}", T.algebra_dim, check=False)


def metricity_residual(g: TensorField, gamma: TensorField) -> TensorField:
    """nabla_l g_{mu nu}; vanishes for the Levi-Civita connection."""
    return covariant_derivative(g, gamma)


# ---------------------------------------------------------------------------
# Lie derivatives

def lie_derivative(
    T: TensorField,
    gen: SymmetryGenerator,
    role: str,
    algebra: GaugeAlgebra | None = None,
) -> TensorField:
    """Lie derivative of a field along a gauge-natural generator.

    * ``metric`` (and any plain spacetime tensor, role ``tensor``): the usual
      tensorial formula.
    * ``connection``: the affine law, including the second derivatives of xi.
    * ``gauge``: xi^nu F_{nu mu} + D_mu(xi_V) with xi_V = xi^A + A_nu xi^nu.
    * ``point-particle``: xi^t dq/dt for the mechanics chart.
    """
    m = T.chart.dim
    X = T.chart.coords
    xi = gen.xi
    dxi = [[sk.diff(xi[a], X[mu]) for mu in range(m)] for a in range(m)]  # dxi[a][mu] = d_mu xi^a

    def transport(k) -> list:
        return [sk.mul(xi[a], sk.diff(T.comps[k], X[a])) for a in range(m) if not xi[a].is_zero]

    if role in ("metric", "tensor") or (role == "point-particle" and T.index != "Ad"):
        if role == "point-particle" and "A" in T.index:
            raise GeomError("unsupported point-particle field")
        out = _obj(T.comps.shape)
        for k in np.ndindex(*T.comps.shape):
            terms = transport(k)
            for slot, ch in enumerate(T.index):
                if ch == "A":
                    continue
                for s in range(m):
                    kk = list(k)
                    kk[slot] = s
                    if ch == "d":
                        terms.append(sk.mul(T.comps[tuple(kk)], dxi[s][k[slot]]))
                    else:
                        terms.append(sk.mul(-1, T.comps[tuple(kk)], dxi[k[slot]][s]))
            out[k] = sk.total(terms)
        return TensorField(T.chart, T.index, out, T.symmetries, f"Lie {T.name}", T.algebra_dim, check=False)

    if role == "connection":
        if T.index != "udd":
            raise GeomError("a connection has slots 'udd'")
        G = T.comps
        out = _obj(G.shape)
        for l in range(m):
            for a in range(m):
                for b in range(a, m):
                    terms = transport((l, a, b))
                    for r in range(m):
                        terms.append(sk.mul(-1, G[r, a, b], dxi[l][r]))
                        terms.append(sk.mul(G[l, r, b], dxi[r][a]))
                        terms.append(sk.mul(G[l, a, r], dxi[r][b]))
                    terms.append(sk.diff(dxi[l][a], X[b]))
                    out[l, a, b] = sk.total(terms)
                    out[l, b, a] = out[l, a, b]
        return TensorField(T.chart, "udd", out, T.symmetries, f"Lie {T.name}", check=False)

    if role == "gauge":
        if algebra is None:
            raise GeomError("gauge Lie derivative needs the algebra")
        if T.index != "Ad":
            raise GeomError("a gauge potential has slots 'Ad'")
        n = algebra.dim
        c = algebra.structure
        A = T.comps
        F = field_strength(T, algebra).comps
        xa = gen.xi_a if gen.xi_a else (sk.ZERO,) * n
        if len(xa) != n:
            raise GeomError("generator has the wrong number of vertical components")
        xv = [sk.add(xa[a], sk.total(sk.mul(A[a, nu], xi[nu]) for nu in range(m))) for a in range(n)]
        out = _obj((n, m))
        for a in range(n):
            for mu in range(m):
                terms = [sk.mul(xi[nu], F[a, nu, mu]) for nu in range(m) if not xi[nu].is_zero]
                terms.append(sk.diff(xv[a], X[mu]))
                for b in range(n):
                    for cc in range(n):
                        if c[a, b, cc]:
                            terms.append(sk.mul(_num(c[a, b, cc]), A[b, mu], xv[cc]))
                out[a, mu] = sk.total(terms)
        return TensorField(T.chart, "Ad", out, (), f"Lie {T.name}", n, check=False)

    raise GeomError(f"unsupported field role {role!r}")


# ---------------------------------------------------------------------------
# field-definition files

class FieldFileError(GeomError):
    """A field-definition file does not follow the schema."""


_ALGEBRAS = {"so3": so3, "u1": lambda: abelian(1)}


def _algebra_from(name):
    if name is None:
        return None
    if name in _ALGEBRAS:
        return _ALGEBRAS[name]()
    if isinstance(name, str) and name.startswith("u1^") and name[3:].isdigit():
        return abelian(int(name[3:]))
    raise FieldFileError(f"unknown algebra {name!r}")


def _algebra_name(alg):
    if alg is None:
        return None
    if alg.is_abelian:
        return "u1" if alg.dim == 1 else f"u1^{alg.dim}"
    if alg is so3():
        return "so3"
    raise FieldFileError("only so3 and abelian algebras can be written")


def _component_key(text, chart: Chart, index: str) -> tuple:
    if index == "" and str(text).strip() == "":
        return ()
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != len(index):
        raise FieldFileError(f"component {text!r} needs {len(index)} indices")
    out = []
    for p, ch in zip(parts, index):
        if p.lstrip("-").isdigit():
            out.append(int(p))
        elif ch != "A" and p in chart.coords:
            out.append(chart.index(p))
        else:
            raise FieldFileError(f"bad index {p!r} in component {text!r}")
    return tuple(out)


def load_field_file(source) -> FieldConfig:
    """Read a field-definition file (YAML) into a :class:`FieldConfig`.

    ``source`` is a path or the YAML text itself.  Schema::

        name: schwarzschild
        description: free text
        theory: hilbert            # intended theory (optional)
        on_shell: true             # false flags an off-shell sample
        chart:
          coords: [t, r, theta, phi]
          signature: -1
          ranges: {r: [3, 10]}     # sampling box, default [0.5, 1.5]
        params: {M: 1.0}
        algebra: so3               # so3, u1 or u1^n; only for gauge fields
        fields:
          g:
            role: metric
            index: dd
            symmetries: [[0, 1, 1]]
            components: {"t,t": "-(1 - 2*M/r)", "1,1": "1/(1 - 2*M/r)"}

    Component keys are comma separated slot values, either integers or
    coordinate names for spacetime slots.  Missing components are zero and
    symmetric partners are filled in.  A gauge field may instead give
    ``pure_gauge: [a, b]`` (so3 only), the gauge transform of zero by
    R_z(a) R_x(b).  The remaining keys go to ``config.meta``.
    """
    import yaml

    if isinstance(source, os.PathLike) or (isinstance(source, str) and "\n" not in source
                                          and os.path.exists(source)):
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = str(source)
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise FieldFileError(f"not valid YAML: {exc}") from exc
    if not isinstance(doc, dict) or "chart" not in doc or "fields" not in doc:
        raise FieldFileError("a field file needs 'chart' and 'fields' blocks")
    cb = doc["chart"]
    coords = tuple(cb["coords"])
    ranges = cb.get("ranges") or {}
    unknown = set(ranges) - set(coords)
    if unknown:
        raise FieldFileError(f"ranges for unknown coordinates {sorted(unknown)}")
    box = tuple(tuple(ranges.get(c, (0.5, 1.5))) for c in coords)
    chart = Chart(coords, int(cb.get("signature", -1)), box, doc.get("name", ""))
    params = {str(k): float(v) for k, v in (doc.get("params") or {}).items()}
    alg = _algebra_from(doc.get("algebra"))
    fields, roles = {}, {}
    for fname, spec in doc["fields"].items():
        role = spec.get("role")
        if role not in ROLES:
            raise FieldFileError(f"field {fname!r}: unknown role {role!r}")
        index = spec.get("index", "")
        sym = tuple(tuple(s) for s in spec.get("symmetries", ()))
        adim = alg.dim if "A" in index and alg is not None else 0
        if "A" in index and alg is None:
            raise FieldFileError(f"field {fname!r} has an algebra slot but no algebra is given")
        if "pure_gauge" in spec:
            if alg is not so3() or index != "Ad":
                raise FieldFileError("pure_gauge needs an so3 field with index Ad")
            ang = [sk.parse(str(a), chart, params) for a in spec["pure_gauge"]]
            T = pure_gauge_so3(chart, ang)
        else:
            shape = tuple(adim if ch == "A" else chart.dim for ch in index)
            comps = zeros(shape)
            for key, expr in (spec.get("components") or {}).items():
                k = _component_key(key, chart, index)
                if any(not 0 <= v < n for v, n in zip(k, shape)):
                    raise FieldFileError(f"component {key!r} out of range")
                e = sk.parse(str(expr), chart, params)
                comps[k] = e
                for i, j, s in sym:
                    kk = list(k)
                    kk[i], kk[j] = kk[j], kk[i]
                    comps[tuple(kk)] = e if s == 1 else sk.mul(-1, e)
            T = TensorField(chart, index, comps, sym, fname, adim)
        fields[fname] = T
        roles[fname] = role
    meta = {k: v for k, v in doc.items() if k not in ("chart", "fields", "params", "algebra")}
    meta.setdefault("on_shell", True)
    return FieldConfig(chart, fields, roles, params, alg, doc.get("name", ""), meta=meta)


def dump_field_file(config: FieldConfig, path=None) -> str:
    """Write ``config`` in the field-file format; returns the YAML text."""
    import yaml

    ch = config.chart
    doc = {"name": config.name}
    for k, v in config.meta.items():
        if k != "name":
            doc[k] = v
    doc["chart"] = {"coords": list(ch.coords), "signature": ch.signature}
    if ch.ranges is not None:
        doc["chart"]["ranges"] = {c: list(r) for c, r in zip(ch.coords, ch.ranges)}
    if config.params:
        doc["params"] = dict(config.params)
    if config.algebra is not None:
        doc["algebra"] = _algebra_name(config.algebra)
    fields = {}
    for fname, T in config.fields.items():
        comps = {}
        for k, e in np.ndenumerate(T.comps):
            if any(k[i] > k[j] for i, j, _ in T.symmetries):
                continue
            if e is sk.ZERO:
                continue
            comps[",".join(map(str, k))] = sk.to_text(e)
        spec = {"role": config.roles[fname], "index": T.index}
        if T.symmetries:
            spec["symmetries"] = [list(s) for s in T.symmetries]
        spec["components"] = comps
        fields[fname] = spec
    doc["fields"] = fields
    text = yaml.safe_dump(doc, sort_keys=False, width=1000)
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text
