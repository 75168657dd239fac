import math

import numpy as np
import pytest

from augvar import catalog, evalnum, geom
from augvar import noether as nt
from augvar import randomfields as rf
from augvar import symker as sk

FAST = ["hilbert", "palatini", "einstein_first_order", "chern_simons_so3_3d", "yang_mills", "spring_pair"]


def setup(name, seed=1):
    th = catalog.lookup(name)
    chart = rf.default_chart(min(th.dims))
    cfg = rf.random_config(th, chart, seed=seed)
    gen = rf.random_generator(th, chart, seed=seed)
    return th, cfg, gen, cfg.sample_points(4, seed=seed + 50)


def mx(a):
    return float(np.max(np.abs(a)))


def test_catalog_contents():
    names = [t.name for t in catalog.build_catalog()]
    assert names == ["hilbert", "palatini", "einstein_first_order", "chern_simons_so3_3d", "f_of_R",
                     "f_of_ricci2", "f_of_riemann2", "yang_mills", "spring_pair"]
    assert all(t.order <= 2 for t in catalog.build_catalog())


def test_unknown_theory():
    with pytest.raises(KeyError):
        catalog.lookup("brans_dicke")


@pytest.mark.parametrize("name", FAST)
def test_covariance_identity(name):
    th, cfg, gen, pts = setup(name)
    assert mx(nt.covariance_residual(th, cfg, gen).evaluate(pts)) < 1e-9


@pytest.mark.parametrize("name", FAST)
def test_first_variation(name):
    th, cfg, gen, pts = setup(name, seed=2)
    X = rf.random_deformation(cfg, th.field_names, seed=3)
    assert mx(nt.first_variation_residual(th, cfg, X).evaluate(pts)) < 1e-9


@pytest.mark.parametrize("name", FAST)
def test_current_divergence_is_work(name):
    th, cfg, gen, pts = setup(name, seed=3)
    E = nt.noether_current(th, cfg, gen)
    W = nt.work_form(th, cfg, gen)
    assert mx(E.divergence_values(pts) - W.evaluate(pts)) < 1e-9


@pytest.mark.parametrize("name", [n for n in FAST if n != "spring_pair"])
def test_split_and_closed_superpotential(name):
    th, cfg, gen, pts = setup(name, seed=4)
    E = nt.noether_current(th, cfg, gen)
    Et = nt.reduced_current(th, cfg, gen)
    U = nt.superpotential(th, cfg, gen)
    assert mx(E.evaluate(pts) - Et.evaluate(pts) - U.divergence_values(pts)) < 1e-9


@pytest.mark.parametrize("name", ["hilbert", "palatini", "yang_mills"])
def test_closed_superpotential_matches_canonical(name):
    # the canonical extraction needs full local covariance, so EFO and CS are excluded
    th, cfg, gen, pts = setup(name, seed=4)
    U = nt.superpotential(th, cfg, gen)
    Ua = nt.superpotential(th, cfg, gen, algorithmic=True)
    assert mx(U.evaluate(pts) - Ua.evaluate(pts)) < 1e-9


@pytest.mark.parametrize("name", ["hilbert", "yang_mills"])
def test_bianchi(name):
    th, cfg, gen, pts = setup(name, seed=5)
    Et = nt.reduced_current(th, cfg, gen)
    W = nt.work_form(th, cfg, gen)
    assert mx(W.evaluate(pts) - Et.divergence_values(pts)) < 1e-9


@pytest.mark.parametrize("name", [t.name for t in catalog.build_catalog() if t.printed_pc])
def test_printed_pc_matches(name):
    th, cfg, gen, pts = setup(name, seed=6)
    X = rf.random_deformation(cfg, th.field_names, seed=7)
    kit = th.kit(cfg.chart)
    P = nt.HorizontalForm(cfg.chart, cfg.chart.dim - 1, np.array(catalog.printed_pc(th, kit), dtype=object),
                          cfg, None, X.extra())
    assert mx((nt.pc_contract(th, cfg, X) - P).evaluate(pts)) < 1e-12


def test_reduced_current_vanishes_on_shell():
    s = evalnum.load_solution("schwarzschild")
    H = catalog.lookup("hilbert")
    gen = geom.SymmetryGenerator.parse(s.chart, ["1 + r", "0", "sin(theta)", "t"])
    pts = s.sample_points(3, seed=1)
    assert mx(nt.reduced_current(H, s, gen).evaluate(pts)) < 1e-10


@pytest.mark.parametrize("M", [0.5, 1.0, 2.0])
def test_komar_integral(M):
    s = evalnum.load_solution("schwarzschild", M=M)
    U = nt.superpotential(catalog.lookup("hilbert"), s, geom.SymmetryGenerator.coordinate(s.chart, "t"))
    assert evalnum.surface_integral(U, evalnum.SurfaceSpec.sphere(7.0)).value == pytest.approx(8 * math.pi * M, rel=1e-12)


def test_symplectic_pair_is_antisymmetric():
    th, cfg, gen, pts = setup("yang_mills", seed=8)
    X1 = rf.random_deformation(cfg, th.field_names, seed=1)
    X2 = rf.random_deformation(cfg, th.field_names, seed=2)
    a = nt.symplectic_pair(th, cfg, X1, X2).evaluate(pts)
    b = nt.symplectic_pair(th, cfg, X2, X1).evaluate(pts)
    assert mx(a + b) < 1e-12


def test_corrected_variation_under_divergence():
    H = catalog.lookup("hilbert")
    twin = catalog.divergence_twin(H)
    chart = rf.default_chart(3)
    cfg = rf.random_config(H, chart, seed=3)
    gen = rf.random_generator(twin, chart, seed=3)
    X = rf.random_deformation(cfg, ["g"], seed=4)
    pts = cfg.sample_points(4, seed=5)
    a = nt.corrected_variation(H, cfg, X, gen).evaluate(pts)
    b = nt.corrected_variation(twin, cfg, X, gen).evaluate(pts)
    assert mx(a - b) < 1e-10


def test_spring_current_is_mechanical_energy():
    th = catalog.lookup("spring_pair")
    chart = sk.Chart(("t",), 1, ((0.0, 3.0),))
    x = geom.TensorField(chart, "", np.array(sk.parse("0.5*t", chart), dtype=object))
    q = geom.TensorField(chart, "", np.array(sk.parse("0.7*cos(sqrt(2)*t)", chart), dtype=object))
    cfg = geom.FieldConfig(chart, {"x": x, "q": q}, {"x": "point-particle", "q": "point-particle"}, {"m": 1.0, "k": 1.0})
    pts = np.linspace(0, 3, 5)[:, None]
    el = cfg.evaluate(list(th.euler_lagrange(cfg).values()), pts)
    assert max(mx(v) for v in el) < 1e-12
    E = nt.noether_current(th, cfg, geom.SymmetryGenerator.coordinate(chart, "t")).evaluate(pts)[:, 0]
    np.testing.assert_allclose(E, 0.25 + 0.49 * 2.0)


def test_form_antisymmetry_enforced():
    ch = rf.default_chart(3)
    c = geom.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            c[i, j] = sk.ONE if i != j else sk.ZERO
    with pytest.raises(nt.NoetherError):
        nt.HorizontalForm(ch, 1, c)


def test_form_degree_checked():
    ch = rf.default_chart(3)
    with pytest.raises(nt.NoetherError):
        nt.HorizontalForm(ch, 0, np.array(sk.ONE, dtype=object))


def test_local_theory_rejects_generic_generator():
    th, cfg, _, pts = setup("einstein_first_order", seed=9)
    gen = rf.random_generator(th, cfg.chart, seed=9, kind=None)
    gen_bad = rf.random_generator(catalog.lookup("hilbert"), cfg.chart, seed=9)
    assert mx(nt.covariance_residual(th, cfg, gen).evaluate(pts)) < 1e-9
    assert mx(nt.covariance_residual(th, cfg, gen_bad).evaluate(pts)) > 1e-6
