"""Theory catalog: Lagrangian densities and closed-form superpotentials.

Each density is written against generic tensors (usually jet fields) so
the machinery in :mod:`augvar.noether` can differentiate it.  Closed-form
superpotentials are antisymmetric (m, m) object arrays built from the same
tensors and the (generic) generator; the split identity
``E - Etilde = Div U`` is their test.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from . import geom
from . import symker as sk
from .geom import SymmetryGenerator, TensorField
from .noether import FieldSpec, NoetherError, TheoryEntry, variation

__all__ = ["build_catalog", "lookup", "default_f", "levi_civita_symbol", "divergence_twin", "metric_pieces"]

HALF = Fraction(1, 2)
SYM01 = ((0, 1, 1),)
SYM12 = ((1, 2, 1),)


def default_f():
    """f(X) = X + X^2/10, the default scalar function of the f-family."""
    return sk.parse("X + X^2/10", [], ["X"])


def levi_civita_symbol(m: int) -> dict:
    return geom._levi_civita(m)


def _f_of(theory: TheoryEntry, S):
    return sk.subs(theory.f, {sk.param("X"): S})


def _fprime_of(theory: TheoryEntry, S):
    return sk.subs(sk.diff(theory.f, sk.param("X")), {sk.param("X"): S})


# ---------------------------------------------------------------------------
# shared geometry

class metric_pieces:
    """Inverse, density and Levi-Civita symbols of a metric (computed once)."""

    def __init__(self, g: TensorField):
        self.g = g
        self.m = g.chart.dim
        self.ginv = geom.inverse_metric(g)
        self.sqrtg = geom.sqrt_abs_det(g)
        self.gamma = geom.christoffel(g, self.ginv)

    @property
    def X(self):
        return self.g.chart.coords

    def riemann(self):
        if not hasattr(self, "_riem"):
            self._riem = geom.riemann(self.gamma)
        return self._riem

    def ricci(self):
        if not hasattr(self, "_ric"):
            self._ric = geom.ricci(self.gamma, self.riemann(), symmetrize=True)
        return self._ric

    def scalar(self):
        if not hasattr(self, "_R"):
            self._R = geom.scalar_curvature(self.g, self.gamma, self.ginv, self.ricci())
        return self._R

    def raise_all(self, T: np.ndarray, slots: str) -> np.ndarray:
        """Raise every ``d`` slot of T with g^-1."""
        out = T
        for i, ch in enumerate(slots):
            if ch != "d":
                continue
            out = _contract_slot(out, self.ginv.comps, i)
        return out

    def nabla_xi(self, gen: SymmetryGenerator) -> list:
        """D[a][b] = nabla_a xi^b."""
        m = self.m
        X = self.X
        G = self.gamma.comps
        return [[sk.add(sk.diff(gen.xi[b], X[a]), sk.total(sk.mul(G[b, a, c], gen.xi[c]) for c in range(m)))
                 for b in range(m)] for a in range(m)]


def _contract_slot(T: np.ndarray, M: np.ndarray, slot: int) -> np.ndarray:
    """out[..., i, ...] = sum_j M[i, j] T[..., j, ...] along ``slot``."""
    m = M.shape[0]
    out = np.empty(T.shape, dtype=object)
    for k in np.ndindex(*T.shape):
        terms = []
        for j in range(m):
            if M[k[slot], j].is_zero:
                continue
            kk = list(k)
            kk[slot] = j
            t = T[tuple(kk)]
            if not t.is_zero:
                terms.append(sk.mul(M[k[slot], j], t))
        out[k] = sk.total(terms)
    return out


def _antisym(m: int, fn) -> np.ndarray:
    U = geom.zeros((m, m))
    for mu in range(m):
        for nu in range(mu + 1, m):
            U[mu, nu] = fn(mu, nu)
            U[nu, mu] = sk.mul(-1, U[mu, nu])
    return U


def _lower_xi(g: TensorField, gen: SymmetryGenerator) -> list:
    m = g.chart.dim
    return [sk.total(sk.mul(g.comps[a, b], gen.xi[b]) for b in range(m)) for a in range(m)]


# ---------------------------------------------------------------------------
# Hilbert

def _hilbert_density(f, chart, th):
    mp = metric_pieces(f["g"])
    return sk.mul(mp.sqrtg, mp.scalar())


def komar(g: TensorField, gen: SymmetryGenerator, mp: metric_pieces | None = None) -> np.ndarray:
    """U^{mu nu} = sqrt(g) (nabla^nu xi^mu - nabla^mu xi^nu)."""
    mp = mp or metric_pieces(g)
    m = mp.m
    D = mp.nabla_xi(gen)
    up = [[sk.total(sk.mul(mp.ginv.comps[a, c], D[c][b]) for c in range(m)) for b in range(m)] for a in range(m)]
    # up[a][b] = nabla^a xi^b
    return _antisym(m, lambda mu, nu: sk.mul(mp.sqrtg, sk.add(up[nu][mu], sk.mul(-1, up[mu][nu]))))


def _hilbert_U(f, gen, chart, th):
    return komar(f["g"], gen)


def _hilbert_pc(f, chart, th, dvar):
    mp = metric_pieces(f["g"])
    u = geom.u_tensor(mp.gamma, symmetrized=True).comps
    m = mp.m
    return [sk.total(sk.mul(mp.sqrtg, mp.ginv.comps[a, b], dvar(u[l, a, b])) for a in range(m) for b in range(m))
            for l in range(m)]


def _hilbert_reduced(f, gen, chart, th):
    """Etilde^mu = 2 sqrt(g) G^mu_r xi^r."""
    mp = metric_pieces(f["g"])
    m = mp.m
    R = mp.scalar()
    ric = mp.ricci().comps
    out = []
    for mu in range(m):
        terms = []
        for r in range(m):
            G = sk.total(sk.mul(mp.ginv.comps[mu, a], ric[a, r]) for a in range(m))
            if mu == r:
                G = sk.add(G, sk.mul(-HALF, R))
            terms.append(sk.mul(G, gen.xi[r]))
        out.append(sk.mul(2, mp.sqrtg, sk.total(terms)))
    return out


# ---------------------------------------------------------------------------
# Palatini

def _palatini_density(f, chart, th):
    g, G = f["g"], f["Gamma"]
    ginv = geom.inverse_metric(g)
    ric = geom.ricci(G, symmetrize=True)
    return sk.mul(geom.sqrt_abs_det(g), geom.scalar_curvature(g, G, ginv, ric))


def _palatini_U(f, gen, chart, th):
    """U^{mu nu} = sqrt(g) (g^{a nu} nabla_a xi^mu - g^{a mu} nabla_a xi^nu)
    + 1/2 (V^mu xi^nu - V^nu xi^mu), nabla the independent connection and
    V^nu = nabla_a (sqrt(g) g^{a nu}) (which vanishes on-shell)."""
    g, G = f["g"], f["Gamma"]
    m = chart.dim
    X = chart.coords
    Gc = G.comps
    ginv = geom.inverse_metric(g).comps
    sq = geom.sqrt_abs_det(g)
    D = [[sk.add(sk.diff(gen.xi[b], X[a]), sk.total(sk.mul(Gc[b, a, c], gen.xi[c]) for c in range(m)))
          for b in range(m)] for a in range(m)]
    up = [[sk.total(sk.mul(ginv[a, c], D[c][b]) for c in range(m)) for b in range(m)] for a in range(m)]
    dens = [[sk.mul(sq, ginv[a, b]) for b in range(m)] for a in range(m)]
    trace = [sk.total(Gc[c, c, l] for c in range(m)) for l in range(m)]
    V = []
    for n in range(m):
        terms = []
        for a in range(m):
            terms.append(sk.diff(dens[a][n], X[a]))
            for c in range(m):
                terms.append(sk.mul(Gc[a, c, a], dens[c][n]))
                terms.append(sk.mul(Gc[n, c, a], dens[a][c]))
            terms.append(sk.mul(-1, trace[a], dens[a][n]))
        V.append(sk.total(terms))
    return _antisym(m, lambda mu, nu: sk.total([
        sk.mul(sq, up[nu][mu]), sk.mul(-1, sq, up[mu][nu]),
        sk.mul(HALF, V[mu], gen.xi[nu]), sk.mul(-HALF, V[nu], gen.xi[mu])]))


def _palatini_pc(f, chart, th, dvar):
    g, G = f["g"], f["Gamma"]
    m = chart.dim
    ginv = geom.inverse_metric(g).comps
    sq = geom.sqrt_abs_det(g)
    u = geom.u_tensor(G, symmetrized=False).comps
    return [sk.total(sk.mul(sq, ginv[a, b], dvar(u[l, a, b])) for a in range(m) for b in range(m))
            for l in range(m)]


# ---------------------------------------------------------------------------
# first-order Einstein (local)

def _efo_density(f, chart, th):
    mp = metric_pieces(f["g"])
    m = mp.m
    G = mp.gamma.comps
    trace = [sk.total(G[l, l, b] for l in range(m)) for b in range(m)]
    terms = []
    for i in range(m):
        for k in range(m):
            gik = mp.ginv.comps[i, k]
            if gik.is_zero:
                continue
            inner = [sk.mul(G[a, i, l], G[l, k, a]) for a in range(m) for l in range(m)]
            inner += [sk.mul(-1, G[l, i, k], trace[l]) for l in range(m)]
            terms.append(sk.mul(gik, sk.total(inner)))
    return sk.mul(mp.sqrtg, sk.total(terms))


def efo_beta(g: TensorField, mp: metric_pieces | None = None) -> list:
    """beta^l = sqrt(g) g^{ab} u^l_{ab}, with sqrt(g) R = L_EFO + d_l beta^l."""
    mp = mp or metric_pieces(g)
    m = mp.m
    u = geom.u_tensor(mp.gamma, symmetrized=True).comps
    return [sk.mul(mp.sqrtg, sk.total(sk.mul(mp.ginv.comps[a, b], u[l, a, b]) for a in range(m) for b in range(m)))
            for l in range(m)]


def _efo_U(f, gen, chart, th):
    mp = metric_pieces(f["g"])
    U = komar(f["g"], gen, mp)
    beta = efo_beta(f["g"], mp)
    m = chart.dim
    return _antisym(m, lambda mu, nu: sk.add(
        U[mu, nu], sk.mul(-1, sk.add(sk.mul(beta[mu], gen.xi[nu]), sk.mul(-1, beta[nu], gen.xi[mu])))))


def _efo_pc(f, chart, th, dvar):
    mp = metric_pieces(f["g"])
    m = mp.m
    u = geom.u_tensor(mp.gamma, symmetrized=True).comps
    dens = [[sk.mul(mp.sqrtg, mp.ginv.comps[a, b]) for b in range(m)] for a in range(m)]
    return [sk.mul(-1, sk.total(sk.mul(dvar(dens[a][b]), u[l, a, b]) for a in range(m) for b in range(m)))
            for l in range(m)]


# ---------------------------------------------------------------------------
# Chern-Simons

def _cs_density(f, chart, th):
    A = f["A"].comps
    alg = th.algebra
    F = geom.field_strength(f["A"], alg).comps
    eps = levi_civita_symbol(chart.dim)
    n = alg.dim
    epsA = levi_civita_symbol(3) if n == 3 else {}
    terms = []
    for (a, b, l), s in eps.items():
        for i in range(n):
            for j in range(n):
                e = alg.eta[i, j]
                if e:
                    terms.append(sk.mul(s * geom._num(e), F[i, a, b], A[j, l]))
        for (i, j, k), t in epsA.items():
            terms.append(sk.mul(Fraction(-s * t, 3), A[i, a], A[j, b], A[k, l]))
    return sk.total(terms)


def gauge_vertical(A: TensorField, gen: SymmetryGenerator) -> list:
    """xi_V^A = xi^A + A^A_nu xi^nu."""
    n = A.algebra_dim
    m = A.chart.dim
    xa = gen.xi_a if gen.xi_a else (sk.ZERO,) * n
    return [sk.add(xa[a], sk.total(sk.mul(A.comps[a, nu], gen.xi[nu]) for nu in range(m))) for a in range(n)]


def _cs_U(f, gen, chart, th):
    """U^{ab} = 2 eps^{abl} eta_{ij} (xi_V^i + xi^i) A^j_l.

    The density is gauge invariant only up to a divergence, so the constant
    vertical part enters with twice the weight it has in xi_V."""
    A = f["A"]
    alg = th.algebra
    n = alg.dim
    xv = gauge_vertical(A, gen)
    xa = gen.xi_a if gen.xi_a else (sk.ZERO,) * n
    w = [sk.add(xv[i], xa[i]) for i in range(n)]
    eps = levi_civita_symbol(chart.dim)

    def comp(a, b):
        terms = []
        for l in range(chart.dim):
            s = eps.get((a, b, l), 0)
            if s:
                terms += [sk.mul(2 * s * geom._num(alg.eta[i, j]), w[i], A.comps[j, l])
                          for i in range(n) for j in range(n) if alg.eta[i, j]]
        return sk.total(terms)

    return _antisym(chart.dim, comp)


def _cs_pc(f, chart, th, dvar):
    A = f["A"]
    alg = th.algebra
    n = alg.dim
    eps = levi_civita_symbol(chart.dim)
    out = [[] for _ in range(chart.dim)]
    for (a, b, l), s in eps.items():
        for i in range(n):
            for j in range(n):
                if alg.eta[i, j]:
                    out[a].append(sk.mul(2 * s * geom._num(alg.eta[i, j]), dvar(A.comps[i, b]), A.comps[j, l]))
    return [sk.total(t) for t in out]


# ---------------------------------------------------------------------------
# f-family

def _f_R_density(f, chart, th):
    mp = metric_pieces(f["g"])
    return sk.mul(mp.sqrtg, _f_of(th, mp.scalar()))


def _ric2(mp: metric_pieces):
    ric = mp.ricci().comps
    up = mp.raise_all(ric, "dd")
    m = mp.m
    return sk.total(sk.mul(ric[a, b], up[a, b]) for a in range(m) for b in range(m)), up


def _riem_lower(mp: metric_pieces) -> np.ndarray:
    """R_{abcd} = g_{ae} R^e_{bcd}."""
    R = mp.riemann().comps
    return _contract_slot(R, mp.g.comps, 0)


def _riem2(mp: metric_pieces):
    low = _riem_lower(mp)
    up = mp.raise_all(low, "dddd")
    m = mp.m
    return sk.total(sk.mul(low[k], up[k]) for k in np.ndindex(m, m, m, m) if not low[k].is_zero), up


def _f_ric2_density(f, chart, th):
    mp = metric_pieces(f["g"])
    S, _ = _ric2(mp)
    return sk.mul(mp.sqrtg, _f_of(th, S))


def _f_riem2_density(f, chart, th):
    mp = metric_pieces(f["g"])
    S, _ = _riem2(mp)
    return sk.mul(mp.sqrtg, _f_of(th, S))


def _P_tensor(mp: metric_pieces, th: TheoryEntry, kind: str) -> np.ndarray:
    """P^{abcd} = (1/sqrt g) dL/dR_{abcd}, with the symmetries of Riemann."""
    m = mp.m
    gi = mp.ginv.comps
    P = geom.zeros((m, m, m, m))
    if kind == "R":
        fp = _fprime_of(th, mp.scalar())
        for a, b, c, d in np.ndindex(m, m, m, m):
            P[a, b, c, d] = sk.mul(HALF, fp, sk.add(sk.mul(gi[a, c], gi[b, d]), sk.mul(-1, gi[a, d], gi[b, c])))
    elif kind == "ric2":
        S, Rup = _ric2(mp)
        fp = _fprime_of(th, S)
        for a, b, c, d in np.ndindex(m, m, m, m):
            P[a, b, c, d] = sk.mul(HALF, fp, sk.total([
                sk.mul(gi[a, c], Rup[b, d]), sk.mul(-1, gi[a, d], Rup[b, c]),
                sk.mul(-1, gi[b, c], Rup[a, d]), sk.mul(gi[b, d], Rup[a, c])]))
    else:
        S, Rup = _riem2(mp)
        fp = _fprime_of(th, S)
        for k in np.ndindex(m, m, m, m):
            P[k] = sk.mul(2, fp, Rup[k])
    return P


def _f_U_factory(kind: str):
    def U_fn(f, gen, chart, th):
        """U^{mu nu} = sqrt(g) (-2 P^{mu nu r s} nabla_r xi_s + 4 nabla_r P^{mu nu r s} xi_s)."""
        mp = metric_pieces(f["g"])
        m = mp.m
        X = mp.X
        G = mp.gamma.comps
        P = _P_tensor(mp, th, kind)
        xl = _lower_xi(mp.g, gen)
        # nabla_r xi_s = d_r xi_s - G^l_{rs} xi_l
        Dl = [[sk.add(sk.diff(xl[s], X[r]), sk.mul(-1, sk.total(sk.mul(G[l, r, s], xl[l]) for l in range(m))))
               for s in range(m)] for r in range(m)]

        def divP(mu, nu, s):
            # nabla_r P^{mu nu r s}
            terms = []
            for r in range(m):
                terms.append(sk.diff(P[mu, nu, r, s], X[r]))
                for l in range(m):
                    terms.append(sk.mul(G[mu, l, r], P[l, nu, r, s]))
                    terms.append(sk.mul(G[nu, l, r], P[mu, l, r, s]))
                    terms.append(sk.mul(G[r, l, r], P[mu, nu, l, s]))
                    terms.append(sk.mul(G[s, l, r], P[mu, nu, r, l]))
            return sk.total(terms)

        def comp(mu, nu):
            t1 = sk.total(sk.mul(P[mu, nu, r, s], Dl[r][s]) for r in range(m) for s in range(m))
            t2 = sk.total(sk.mul(divP(mu, nu, s), xl[s]) for s in range(m))
            return sk.mul(mp.sqrtg, sk.add(sk.mul(-2, t1), sk.mul(4, t2)))

        return _antisym(m, comp)

    return U_fn


# ---------------------------------------------------------------------------
# Yang-Mills

def _ym_Fup(f, th):
    g, A = f["g"], f["A"]
    alg = th.algebra
    mp_ginv = geom.inverse_metric(g).comps
    F = geom.field_strength(A, alg).comps
    m = g.chart.dim
    n = alg.dim
    up = np.empty((n, m, m), dtype=object)
    for a in range(n):
        up[a] = _contract_slot(_contract_slot(F[a], mp_ginv, 0), mp_ginv, 1)
    return F, up


def _ym_density(f, chart, th):
    alg = th.algebra
    F, up = _ym_Fup(f, th)
    m = chart.dim
    n = alg.dim
    terms = []
    for a in range(n):
        for b in range(n):
            e = alg.eta[a, b]
            if not e:
                continue
            for mu in range(m):
                for nu in range(m):
                    if mu != nu:
                        terms.append(sk.mul(geom._num(e), F[a, mu, nu], up[b, mu, nu]))
    return sk.mul(Fraction(-1, 4), geom.sqrt_abs_det(f["g"]), sk.total(terms))


def _ym_U(f, gen, chart, th):
    """U^{mu nu} = -sqrt(g) eta_{AB} F^{A mu nu} xi_V^B."""
    alg = th.algebra
    _, up = _ym_Fup(f, th)
    xv = gauge_vertical(f["A"], gen)
    sq = geom.sqrt_abs_det(f["g"])
    n = alg.dim
    return _antisym(chart.dim, lambda mu, nu: sk.mul(-1, sq, sk.total(
        sk.mul(geom._num(alg.eta[a, b]), up[a, mu, nu], xv[b]) for a in range(n) for b in range(n)
        if alg.eta[a, b])))


def _ym_pc(f, chart, th, dvar):
    alg = th.algebra
    _, up = _ym_Fup(f, th)
    sq = geom.sqrt_abs_det(f["g"])
    n = alg.dim
    m = chart.dim
    return [sk.mul(-1, sq, sk.total(sk.mul(geom._num(alg.eta[a, b]), up[a, mu, nu], dvar(f["A"].comps[b, nu]))
                                     for a in range(n) for b in range(n) for nu in range(m) if alg.eta[a, b]))
            for mu in range(m)]


# ---------------------------------------------------------------------------
# mechanics

def _spring_density(f, chart, th):
    t = chart.coords[0]
    m, k = sk.param("m"), sk.param("k")
    x, q = f["x"].comps[()], f["q"].comps[()]
    xd, qd = sk.diff(x, t), sk.diff(q, t)
    return sk.add(sk.mul(m, sk.add(sk.power(xd, 2), sk.power(qd, 2))), sk.mul(-2, sk.power(k, 2), sk.power(q, 2)))


def _spring_pc(f, chart, th, dvar):
    t = chart.coords[0]
    m = sk.param("m")
    x, q = f["x"].comps[()], f["q"].comps[()]
    return [sk.mul(2, m, sk.add(sk.mul(sk.diff(x, t), dvar(x)), sk.mul(sk.diff(q, t), dvar(q))))]


# ---------------------------------------------------------------------------
# registry

METRIC = FieldSpec("g", "metric", "dd", SYM01)
CONNECTION = FieldSpec("Gamma", "connection", "udd", SYM12)
GAUGE = FieldSpec("A", "gauge", "Ad")


def _entries(f=None, algebra=None):
    f = f if f is not None else default_f()
    ym_alg = algebra or geom.so3()
    fam = dict(local=None, group="gravity", params=(), f=f, dims=(4, 3))
    return [
        TheoryEntry("hilbert", (METRIC,), 2, _hilbert_density, closed_superpotential=_hilbert_U,
                    closed_reduced=_hilbert_reduced, printed_pc=_hilbert_pc, dims=(4, 3),
                    summary="sqrt(g) R"),
        TheoryEntry("palatini", (METRIC, CONNECTION), 1, _palatini_density, closed_superpotential=_palatini_U,
                    printed_pc=_palatini_pc, dims=(4, 3), summary="sqrt(g) g^{ab} R_(ab)(Gamma)"),
        TheoryEntry("einstein_first_order", (METRIC,), 1, _efo_density, local="affine",
                    closed_superpotential=_efo_U, printed_pc=_efo_pc, dims=(4, 3),
                    summary="sqrt(g) g^{ik} (G^m_il G^l_km - G^l_ik G^m_lm)"),
        TheoryEntry("chern_simons_so3_3d", (GAUGE,), 1, _cs_density, algebra=geom.so3(), local="global-gauge",
                    group="gauge", dims=(3,), closed_superpotential=_cs_U, printed_pc=_cs_pc,
                    summary="eps^{abl} (F_ab . A_l - 1/3 eps_ijk A^i_a A^j_b A^k_l)"),
        TheoryEntry("f_of_R", (METRIC,), 2, _f_R_density, closed_superpotential=_f_U_factory("R"),
                    summary="sqrt(g) f(R)", **fam),
        TheoryEntry("f_of_ricci2", (METRIC,), 2, _f_ric2_density, closed_superpotential=_f_U_factory("ric2"),
                    summary="sqrt(g) f(R_ab R^ab)", **fam),
        TheoryEntry("f_of_riemann2", (METRIC,), 2, _f_riem2_density, closed_superpotential=_f_U_factory("riem2"),
                    summary="sqrt(g) f(R_abcd R^abcd)", **fam),
        TheoryEntry("yang_mills", (METRIC, GAUGE), 1, _ym_density, algebra=ym_alg, group="gauge", dims=(4, 3),
                    closed_superpotential=_ym_U, printed_pc=_ym_pc, background=("g",),
                    summary="-1/4 sqrt(g) eta_AB F^A_mn F^B^mn"),
        TheoryEntry("spring_pair", (FieldSpec("x", "point-particle", ""), FieldSpec("q", "point-particle", "")),
                    1, _spring_density, local="translation", group="mechanics", dims=(1,), params=("m", "k"), printed_pc=_spring_pc,
                    summary="m (x'^2 + q'^2) - 2 k^2 q^2"),
    ]


_CATALOG: dict = {}


def build_catalog(f=None, algebra=None) -> list:
    """All catalog entries.  ``f`` (an Expr in the parameter ``X``) and the
    Yang-Mills ``algebra`` may be overridden; the defaults are cached."""
    if f is None and algebra is None:
        if not _CATALOG:
            for e in _entries():
                _CATALOG[e.name] = e
        return list(_CATALOG.values())
    return _entries(f, algebra)


def lookup(name: str, f=None, algebra=None) -> TheoryEntry:
    if f is None and algebra is None:
        build_catalog()
        if name not in _CATALOG:
            raise KeyError(f"unknown theory {name!r}; known: {', '.join(_CATALOG)}")
        return _CATALOG[name]
    for e in build_catalog(f, algebra):
        if e.name == name:
            return e
    raise KeyError(f"unknown theory {name!r}")


def printed_pc(theory: TheoryEntry, kit) -> list:
    """The per-theory printed contraction <F|dy>, deformation jets X.<field>."""
    if theory.printed_pc is None:
        raise NoetherError(f"no printed contraction registered for {theory.name}")
    names = list(theory.field_names)
    return theory.printed_pc(kit.fields, kit.chart, theory, lambda e: variation(e, names))


# ---------------------------------------------------------------------------
# divergence deformations

def _efo_shift(f, chart):
    """The vector whose divergence turns sqrt(g) R into the first-order
    density: L' = L - d_l beta^l."""
    return [sk.mul(-1, b) for b in efo_beta(f["g"])]


DIVERGENCES = {"hilbert": _efo_shift}


def divergence_twin(theory: TheoryEntry, shift=None) -> TheoryEntry:
    """L' = L + Div beta for the registered (or given) beta.  The twin's
    superpotential is U(L) + i_xi beta."""
    shift = shift or DIVERGENCES.get(theory.name)
    if shift is None:
        raise NoetherError(f"no divergence deformation registered for {theory.name}")

    def density(f, chart, th):
        beta = shift(f, chart)
        return sk.add(theory.density(f, chart, theory),
                      sk.total(sk.diff(beta[mu], chart.coords[mu]) for mu in range(chart.dim)))

    def U(f, gen, chart, th):
        base = theory.closed_superpotential(f, gen, chart, theory)
        beta = shift(f, chart)
        return _antisym(chart.dim, lambda mu, nu: sk.add(
            base[mu, nu], sk.mul(beta[mu], gen.xi[nu]), sk.mul(-1, beta[nu], gen.xi[mu])))

    return TheoryEntry(theory.name + "+div", theory.fields, theory.order, density, theory.algebra, "affine",
                       theory.group, theory.dims, U, None, None, theory.f, theory.params,
                       f"{theory.summary} + Div beta")
