"""Named verification suites.

Each suite returns a list of :class:`Check` records (identity, max residual,
tolerance, verdict) and is shared by the ``verify`` command and the test
suite.  Random configurations are seeded, so every run is reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import augment
from . import catalog
from . import evalnum
from . import geom
from . import mech
from . import noether as nt
from . import randomfields as rf
from .geom import SymmetryGenerator

__all__ = ["Check", "SUITES", "run_suite", "suite_names", "suite_chart", "schwarzschild_oracle"]


@dataclass
class Check:
    suite: str
    name: str
    residual: float
    tolerance: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tolerance)

    def to_dict(self) -> dict:
        return {"suite": self.suite, "name": self.name, "residual": self.residual,
                "tolerance": self.tolerance, "passed": self.passed, "details": self.details}


def _mx(a) -> float:
    a = np.asarray(a, dtype=float)
    return float(np.max(np.abs(a))) if a.size else 0.0


F_FAMILY = ("f_of_R", "f_of_ricci2", "f_of_riemann2")


def suite_chart(theory):
    """Chart used for the off-shell identity suites: the f-family runs in
    three dimensions to keep the quadratic-curvature expressions small."""
    m = 3 if theory.name in F_FAMILY else theory.dims[0]
    return rf.default_chart(m)


def _configs(theory, n, base_seed=0):
    chart = suite_chart(theory)
    for i in range(n):
        seed = base_seed + 11 * i + 1
        cfg = rf.random_config(theory, chart, seed=seed)
        gen = rf.random_generator(theory, chart, seed=seed)
        yield seed, cfg, gen, cfg.sample_points(5, seed=seed + 100)


# ---------------------------------------------------------------------------
# noether identities

def covariance_suite(theories=None, n_configs: int = 3) -> list:
    out = []
    for th in theories or catalog.build_catalog():
        worst, scale = 0.0, 0.0
        for seed, cfg, gen, pts in _configs(th, n_configs):
            worst = max(worst, _mx(nt.covariance_residual(th, cfg, gen).evaluate(pts)))
            scale = max(scale, _mx(nt.noether_current(th, cfg, gen).evaluate(pts)))
        out.append(Check("covariance", f"{th.name}: covariance identity", worst, 1e-7,
                         {"configs": n_configs, "points": 5, "current_scale": scale}))
    return out


def split_suite(theories=None, n_configs: int = 1) -> list:
    out = []
    for th in theories or catalog.build_catalog():
        dw, split = 0.0, 0.0
        for seed, cfg, gen, pts in _configs(th, n_configs):
            E = nt.noether_current(th, cfg, gen)
            W = nt.work_form(th, cfg, gen)
            dw = max(dw, _mx(E.divergence_values(pts) - W.evaluate(pts)))
            if cfg.chart.dim >= 2:
                Et = nt.reduced_current(th, cfg, gen)
                U = nt.superpotential(th, cfg, gen)
                split = max(split, _mx(E.evaluate(pts) - Et.evaluate(pts) - U.divergence_values(pts)))
        out.append(Check("noether-split", f"{th.name}: Div E - W", dw, 1e-6))
        if th.dims[0] >= 2:
            out.append(Check("noether-split", f"{th.name}: E - E~ - Div U", split, 1e-7))
    return out


def bianchi_suite(names=("hilbert", "yang_mills"), n_configs: int = 2) -> list:
    out = []
    for name in names:
        th = catalog.lookup(name)
        worst = 0.0
        for seed, cfg, gen, pts in _configs(th, n_configs):
            Et = nt.reduced_current(th, cfg, gen)
            W = nt.work_form(th, cfg, gen)
            worst = max(worst, _mx(W.evaluate(pts) - Et.divergence_values(pts)))
        out.append(Check("bianchi", f"{name}: W - Div E~", worst, 1e-6))
    return out


def first_variation_suite(theories=None) -> list:
    out = []
    for th in theories or catalog.build_catalog():
        for seed, cfg, gen, pts in _configs(th, 1):
            X = rf.random_deformation(cfg, th.field_names, seed=seed)
            r = _mx(nt.first_variation_residual(th, cfg, X).evaluate(pts))
        out.append(Check("first-variation", f"{th.name}: dL - <E|X> - Div<F|X>", r, 1e-7))
    return out


# ---------------------------------------------------------------------------
# augmented Lagrangians

def condition_suite() -> list:
    out = []
    H = catalog.lookup("hilbert")
    schw = evalnum.load_solution("schwarzschild")
    fam = augment.SolutionFamily.scaled_parameter(schw, "M")
    mink = evalnum.load_solution("minkowski_spherical")
    for meth, tol in (("fd", 1e-4), ("symbolic", 1e-12)):
        r = augment.verify_condition(H, fam, mink, method=meth, tol=tol)
        out.append(Check("condition", f"hilbert Schwarzschild mass family ({meth})", r.residual, tol,
                         {"scale": r.scale}))
    YM = catalog.lookup("yang_mills")
    chart = rf.default_chart(4)
    vac = rf.random_config(YM, chart, seed=21)
    direction = rf.random_deformation(vac, ["A"], seed=22)
    famy = augment.SolutionFamily.linear(vac, direction.fields)
    for meth, tol in (("fd", 1e-4), ("symbolic", 1e-12)):
        r = augment.verify_condition(YM, famy, vac, method=meth, tol=tol)
        out.append(Check("condition", f"yang_mills linear family ({meth})", r.residual, tol,
                         {"scale": r.scale}))
    return out


def dirichlet_suite() -> list:
    out = []
    chart = rf.default_chart(4)
    for name, fields in (("hilbert", ["g"]), ("yang_mills", ["g", "A"])):
        th = catalog.lookup(name)
        cfg = rf.random_config(th, chart, seed=31)
        vac = rf.random_config(th, chart, seed=32)
        X = rf.random_deformation(cfg, fields, seed=33)
        r = augment.dirichlet_pc_check(th, cfg, vac, X)
        out.append(Check("dirichlet", f"{name}: <F(l)|X> at y = ybar, dy = 0", r["substituted"], 1e-10,
                         {"unsubstituted": r["unsubstituted"]}))
    return out


def cohomology_suite() -> list:
    out = []
    H = catalog.lookup("hilbert")
    twin = catalog.divergence_twin(H)
    chart = rf.default_chart(4)
    cfg = rf.random_config(H, chart, seed=41)
    gen = rf.random_generator(twin, chart, seed=41)
    X = rf.random_deformation(cfg, ["g"], seed=42)
    pts = cfg.sample_points(5, seed=43)
    a = nt.corrected_variation(H, cfg, X, gen).evaluate(pts)
    b = nt.corrected_variation(twin, cfg, X, gen).evaluate(pts)
    out.append(Check("cohomology", "hilbert: corrected variation under L -> L + Div beta", _mx(a - b), 1e-8,
                     {"scale": _mx(a)}))
    E = catalog.lookup("einstein_first_order")
    vac = rf.random_config(H, chart, seed=44)
    lE = augment.augmented_lagrangian(E, cfg, vac).evaluate(pts)
    scale = _mx(lE)
    for variant in ("canonical", "tilde"):
        lH = augment.augmented_lagrangian(H, cfg, vac, variant=variant).evaluate(pts)
        out.append(Check("cohomology", f"robustness: l(hilbert, {variant} alpha) - l(einstein_first_order)",
                         _mx(lH - lE), 1e-8, {"scale": scale, "variant": variant}))
    return out


def cs_gauge_suite(angles=("0.7*t + 0.3*sin(x) + 0.2*x*y", "-0.4*x + 0.5*cos(y) + 0.1")) -> list:
    CS = catalog.lookup("chern_simons_so3_3d")
    chart = rf.default_chart(3)
    cfg = rf.random_config(CS, chart, seed=51)
    vac = rf.random_config(CS, chart, seed=52)
    pts = cfg.sample_points(5, seed=53)
    from . import symker as sk

    ang = [sk.parse(a, chart) for a in angles]

    def transformed(c):
        A = geom.so3_gauge_transform(c.fields["A"], ang)
        return geom.FieldConfig(chart, {"A": A}, {"A": "gauge"}, {}, c.algebra, check=False)

    l1 = augment.augmented_lagrangian(CS, cfg, vac).evaluate(pts)
    l2 = augment.augmented_lagrangian(CS, transformed(cfg), transformed(vac)).evaluate(pts)
    lb = augment.cs_covariant_lagrangian(CS, cfg, vac).evaluate(pts)
    L1 = CS.lagrangian_density(cfg).evaluate(pts)
    L2 = CS.lagrangian_density(transformed(cfg)).evaluate(pts)
    return [Check("cs-gauge", "l(A, Abar) - l(gA, gAbar)", _mx(l1 - l2), 1e-9,
                  {"bare_L_change": _mx(L1 - L2), "scale": _mx(l1)}),
            Check("cs-gauge", "l - covariant B-form", _mx(l1 - lb), 1e-9)]


# ---------------------------------------------------------------------------
# numerics

def schwarzschild_oracle(M: float, r: float) -> float:
    """Hand evaluation of the sphere integral of U(l) for Schwarzschild
    against spherical Minkowski with d/dt and the canonical correction:
    4 pi M (6 - f - 1/f), f = 1 - 2M/r."""
    f = 1.0 - 2.0 * M / r
    return 4.0 * math.pi * M * (6.0 - f - 1.0 / f)


def gravity_energy_suite() -> list:
    out = []
    S = evalnum.SurfaceSpec.sphere(100.0)

    def Q(sol, vac, radii):
        return evalnum.relative_quantity("hilbert", sol, vac, "t", S, radii=list(radii), check_shell=False)

    q1 = Q("schwarzschild:M=1", "minkowski_spherical", (50, 100, 200))
    vals = [row["value"] for row in q1.radii]
    spread = (max(vals) - min(vals)) / abs(np.mean(vals))
    out.append(Check("gravity-energy", "r-independence over r = 50M, 100M, 200M", spread, 1e-6,
                     {"values": vals, "extrapolated": q1.value}))
    q2 = Q("schwarzschild:M=2", "minkowski_spherical", (100, 200, 400))
    out.append(Check("gravity-energy", "value(2M) / value(M) - 2 (extrapolated)", abs(q2.value / q1.value - 2.0), 1e-6,
                     {"value_M": q1.value, "value_2M": q2.value}))
    radii = (1000, 2000, 4000)
    a = Q("schwarzschild:M=2", "minkowski_spherical", radii)
    b = Q("schwarzschild:M=1", "minkowski_spherical", radii)
    c = Q("schwarzschild:M=2", "schwarzschild:M=1", radii)
    out.append(Check("gravity-energy", "additivity minkowski -> M -> 2M (extrapolated)",
                     abs(a.value - b.value - c.value) / abs(c.value), 1e-6,
                     {"2M|0": a.value, "M|0": b.value, "2M|M": c.value}))
    r100 = next(row for row in q1.radii if row["r"] == 100.0)
    oracle = schwarzschild_oracle(1.0, 100.0)
    out.append(Check("gravity-energy", "absolute value at r = 100M against hand evaluation",
                     abs(r100["value"] - oracle) / oracle, 1e-10, {"value": r100["value"], "oracle": oracle}))
    return out


def formal_integration_suite() -> list:
    out = []
    H = catalog.lookup("hilbert")
    schw = evalnum.load_solution("schwarzschild")
    fam = augment.SolutionFamily.scaled_parameter(schw, "M")
    gen = SymmetryGenerator.coordinate(schw.chart, "t")
    r = augment.formal_integration_check(H, fam, gen, evalnum.SurfaceSpec.sphere(6.0))
    out.append(Check("formal-integration", "hilbert Schwarzschild mass family", r["relative"], 1e-5,
                     {"lhs": r["lhs"], "rhs": r["rhs"]}))
    cou = evalnum.load_solution("coulomb")
    YM = catalog.lookup("yang_mills").with_algebra(cou.algebra)
    famy = augment.SolutionFamily.scaled_parameter(cou, "Q")
    geny = SymmetryGenerator.parse(cou.chart, ["1", "0", "0", "0"], ["0.7"])
    r = augment.formal_integration_check(YM, famy, geny, evalnum.SurfaceSpec.sphere(6.0))
    out.append(Check("formal-integration", "yang_mills Coulomb charge family", r["relative"], 1e-5,
                     {"lhs": r["lhs"], "rhs": r["rhs"]}))
    return out


def stokes_suite(n: int = 10) -> list:
    out = []
    for seed in range(n):
        form = evalnum.random_polynomial_form(seed)
        rep = evalnum.stokes_check(form, evalnum.SurfaceSpec.sphere(1.5, t=0.4), evalnum.SurfaceSpec.sphere(3.5, t=0.4))
        out.append(Check("stokes", f"random polynomial form {seed}", rep.relative, 1e-6,
                         {"outer": rep.outer, "inner": rep.inner, "volume": rep.volume}))
    return out


def library_suite() -> list:
    out = []
    for cfg in evalnum.solution_library():
        th = catalog.lookup(cfg.meta["theory"])
        res = evalnum.el_residual(th, cfg)
        if cfg.meta.get("on_shell", True):
            out.append(Check("library", f"{cfg.name} solves {th.name}", res, 1e-7))
        else:
            out.append(Check("library", f"{cfg.name} flagged off-shell for {th.name}", 0.0, 0.0,
                             {"el_residual": res}))
    return out


def appendix_suite() -> list:
    out = []
    s1, s2 = mech.SpringSystem(1.0, 1.0, 0.0, 1.0), mech.SpringSystem(1.0, 1.0, 0.0, 2.0)
    rel = []
    for w in (0.0, 1.0, 5.0, 100.0):
        a, b = mech.SpringSystem(1.0, 1.0, w, 1.0), mech.SpringSystem(1.0, 1.0, w, 2.0)
        rel.append(mech.observer_energy(b) - mech.observer_energy(a))
    out.append(Check("appendix-a", "E2 - E1 = 6 in frames w = 0, 1, 5, 100", max(abs(v - 6.0) for v in rel), 1e-12,
                     {"values": rel}))
    out.append(Check("appendix-a", "relative energy formula", abs(mech.relative_energy(s1, s2) - 6.0), 1e-12))
    rng = np.random.default_rng(7)
    rep = mech.boost_invariance_check(s1, s2, rng.uniform(-5, 5, 100))
    out.append(Check("appendix-a", "boost invariance over 100 random boosts", rep.spread, 1e-12))
    aug = mech.augmented_mech_energy(s2, s1)
    out.append(Check("appendix-a", "augmented energy equals relative energy when w = wbar", abs(aug - 6.0), 1e-12))
    aug_w = mech.augmented_mech_energy(mech.SpringSystem(1.0, 1.0, 1.0, 1.0), s1)
    out.append(Check("appendix-a", "augmented energy offset m (w^2 - wbar^2)", abs(aug_w - 1.0), 1e-12))
    s3 = mech.SpringSystem(1.0, 1.0, 0.0, 3.0)
    add = mech.relative_energy(s1, s3) - mech.relative_energy(s1, s2) - mech.relative_energy(s2, s3)
    out.append(Check("appendix-a", "additivity A1 -> A2 -> A3", abs(add), 1e-12))
    sym = mech.symplectic_check(mech.SpringSystem(1.0, 1.0, 0.5, 1.3))
    out.append(Check("appendix-a", "symplectic form reproduces dE/dA", sym["relative"], 1e-6, sym))
    return out


SUITES: dict = {
    "appendix-a": ("two-point spring system: energies and boosts", appendix_suite),
    "covariance": ("covariance identity off-shell, every catalog theory", covariance_suite),
    "noether-split": ("Div E = W and E = E~ + Div U off-shell", split_suite),
    "first-variation": ("dL = <E|X> + Div<F|X> off-shell", first_variation_suite),
    "bianchi": ("W = Div E~ for hilbert and yang_mills", bianchi_suite),
    "condition": ("correction-term condition for solution families", condition_suite),
    "dirichlet": ("Dirichlet vanishing of <F(l)|X>", dirichlet_suite),
    "cohomology": ("divergence invariance and robustness of the augmented Lagrangian", cohomology_suite),
    "cs-gauge": ("gauge covariance of the augmented Chern-Simons Lagrangian", cs_gauge_suite),
    "gravity-energy": ("Schwarzschild relative energy: radii, ratio, additivity, absolute value", gravity_energy_suite),
    "formal-integration": ("derivative of the surface integral along a family", formal_integration_suite),
    "stokes": ("annulus Stokes identity for random polynomial forms", stokes_suite),
    "library": ("on-shell status of the solution library", library_suite),
}


def suite_names() -> list:
    return list(SUITES)


def run_suite(name: str) -> list:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; available: {', '.join(SUITES)}")
    fn: Callable = SUITES[name][1]
    return fn()
