import numpy as np
import pytest

from augvar import augment, catalog, evalnum, geom
from augvar import noether as nt
from augvar import randomfields as rf
from augvar import symker as sk


def mx(a):
    return float(np.max(np.abs(a)))


@pytest.fixture(scope="module")
def schw_family():
    schw = evalnum.load_solution("schwarzschild")
    return augment.SolutionFamily.scaled_parameter(schw, "M"), evalnum.load_solution("minkowski_spherical")


def test_bar_names():
    assert augment.bar("g").startswith("g")
    assert augment.bar("g") != "g"


def test_family_checks_against_its_vacuum(schw_family):
    fam, mink = schw_family
    info = fam.check(mink)
    assert info["initial"] < 1e-12
    assert info["generator"] < 1e-6


@pytest.mark.parametrize("method,tol", [("fd", 1e-4), ("symbolic", 1e-12)])
def test_condition_on_mass_family(schw_family, method, tol):
    fam, mink = schw_family
    rep = augment.verify_condition(catalog.lookup("hilbert"), fam, mink, method=method, tol=tol)
    assert rep.passed, rep
    assert rep.scale > 1e-3


@pytest.mark.parametrize("method,tol", [("fd", 1e-4), ("symbolic", 1e-12)])
def test_condition_on_gauge_family(method, tol):
    YM = catalog.lookup("yang_mills")
    vac = rf.random_config(YM, rf.default_chart(4), seed=21)
    fam = augment.SolutionFamily.linear(vac, rf.random_deformation(vac, ["A"], seed=22).fields)
    assert augment.verify_condition(YM, fam, vac, method=method, tol=tol).passed


def test_condition_unknown_method(schw_family):
    fam, mink = schw_family
    with pytest.raises(ValueError):
        augment.verify_condition(catalog.lookup("hilbert"), fam, mink, method="spectral")


@pytest.mark.parametrize("name,fields", [("hilbert", ["g"]), ("yang_mills", ["g", "A"])])
def test_dirichlet_vanishing(name, fields):
    th = catalog.lookup(name)
    chart = rf.default_chart(4)
    cfg = rf.random_config(th, chart, seed=31)
    vac = rf.random_config(th, chart, seed=32)
    r = augment.dirichlet_pc_check(th, cfg, vac, rf.random_deformation(cfg, fields, seed=33))
    assert r["substituted"] < 1e-10
    assert r["unsubstituted"] > 1e-6


@pytest.mark.parametrize("name", ["hilbert", "palatini", "chern_simons_so3_3d", "yang_mills"])
def test_augmented_lagrangian_vanishes_at_vacuum(name):
    th = catalog.lookup(name)
    chart = rf.default_chart(3)
    vac = rf.random_config(th, chart, seed=3)
    pts = vac.sample_points(4, seed=4)
    assert mx(augment.augmented_lagrangian(th, vac, vac).evaluate(pts)) < 1e-12


@pytest.mark.parametrize("name", ["hilbert", "yang_mills"])
def test_augmented_superpotential_vanishes_at_vacuum(name):
    th = catalog.lookup(name)
    chart = rf.default_chart(3)
    vac = rf.random_config(th, chart, seed=5)
    gen = rf.random_generator(th, chart, seed=5)
    pts = vac.sample_points(3, seed=6)
    assert mx(augment.augmented_superpotential(th, vac, vac, gen).evaluate(pts)) < 1e-12


def test_none_variant_is_plain_difference():
    th = catalog.lookup("hilbert")
    chart = rf.default_chart(3)
    cfg = rf.random_config(th, chart, seed=7)
    vac = rf.random_config(th, chart, seed=8)
    pts = cfg.sample_points(4, seed=9)
    l = augment.augmented_lagrangian(th, cfg, vac, variant="none").evaluate(pts)
    L = th.lagrangian_density(cfg).evaluate(pts)
    Lb = th.lagrangian_density(vac).evaluate(pts)
    np.testing.assert_allclose(l, L - Lb, atol=1e-12)


def test_unknown_variant():
    th = catalog.lookup("hilbert")
    cfg = rf.random_config(th, rf.default_chart(3), seed=1)
    with pytest.raises(nt.NoetherError):
        augment.augmented_lagrangian(th, cfg, cfg, variant="sideways")


def test_tilde_alpha_is_robust():
    H = catalog.lookup("hilbert")
    E = catalog.lookup("einstein_first_order")
    chart = rf.default_chart(4)
    cfg = rf.random_config(H, chart, seed=41)
    vac = rf.random_config(H, chart, seed=44)
    pts = cfg.sample_points(5, seed=43)
    lE = augment.augmented_lagrangian(E, cfg, vac).evaluate(pts)
    lH = augment.augmented_lagrangian(H, cfg, vac, variant="tilde").evaluate(pts)
    assert mx(lH - lE) < 1e-8


def _cs_setup():
    CS = catalog.lookup("chern_simons_so3_3d")
    chart = rf.default_chart(3)
    cfg = rf.random_config(CS, chart, seed=51)
    vac = rf.random_config(CS, chart, seed=52)
    return CS, chart, cfg, vac, cfg.sample_points(5, seed=53)


def test_cs_augmented_is_gauge_covariant():
    CS, chart, cfg, vac, pts = _cs_setup()
    ang = [sk.parse(a, chart) for a in ("0.7*t + 0.3*sin(x)", "-0.4*x*y + 0.1")]

    def g(c):
        A = geom.so3_gauge_transform(c.fields["A"], ang)
        return geom.FieldConfig(chart, {"A": A}, {"A": "gauge"}, {}, c.algebra, check=False)

    l1 = augment.augmented_lagrangian(CS, cfg, vac).evaluate(pts)
    l2 = augment.augmented_lagrangian(CS, g(cfg), g(vac)).evaluate(pts)
    assert mx(l1 - l2) < 1e-9
    bare = CS.lagrangian_density(cfg).evaluate(pts) - CS.lagrangian_density(g(cfg)).evaluate(pts)
    assert mx(bare) > 1e-3


def test_cs_b_form():
    CS, chart, cfg, vac, pts = _cs_setup()
    l = augment.augmented_lagrangian(CS, cfg, vac).evaluate(pts)
    lb = augment.cs_covariant_lagrangian(CS, cfg, vac).evaluate(pts)
    assert mx(l - lb) < 1e-9


def test_formal_integration_mass_family(schw_family):
    fam, mink = schw_family
    gen = geom.SymmetryGenerator.coordinate(fam.config.chart, "t")
    r = augment.formal_integration_check(catalog.lookup("hilbert"), fam, gen, evalnum.SurfaceSpec.sphere(6.0),
                                         vacuum=mink)
    assert r["passed"] and r["relative"] < 1e-5


def test_formal_integration_charge_family():
    cou = evalnum.load_solution("coulomb")
    YM = catalog.lookup("yang_mills").with_algebra(cou.algebra)
    fam = augment.SolutionFamily.scaled_parameter(cou, "Q")
    gen = geom.SymmetryGenerator.parse(cou.chart, ["1", "0", "0", "0"], ["0.7"])
    r = augment.formal_integration_check(YM, fam, gen, evalnum.SurfaceSpec.sphere(6.0))
    assert r["relative"] < 1e-5


def test_linear_family_endpoints():
    th = catalog.lookup("hilbert")
    vac = rf.random_config(th, rf.default_chart(3), seed=1)
    d = rf.random_deformation(vac, ["g"], seed=2)
    fam = augment.SolutionFamily.linear(vac, d.fields)
    pts = vac.sample_points(3, seed=3)
    g0 = fam.at(0.0).evaluate(list(fam.at(0.0)["g"].comps.reshape(-1)), pts)
    gv = vac.evaluate(list(vac["g"].comps.reshape(-1)), pts)
    np.testing.assert_allclose(g0, gv)


def test_merged_config_carries_both():
    th = catalog.lookup("yang_mills")
    chart = rf.default_chart(3)
    a, b = rf.random_config(th, chart, seed=1), rf.random_config(th, chart, seed=2)
    m = augment.merged_config(th, a, b)
    assert set(m.fields) >= {"g", "A", augment.bar("g"), augment.bar("A")}


def test_alpha_registry_covers_catalog():
    for th in catalog.build_catalog():
        aug = augment.augmented(th)
        assert isinstance(aug.entry, nt.TheoryEntry)
