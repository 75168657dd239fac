import math

import numpy as np
import pytest

from augvar import geom
from augvar import symker as sk
from augvar import evalnum

SPHERE = sk.Chart(("theta", "phi"), 1, ((0.3, 2.8), (0.0, 6.0)))


def sphere_metric(a=1.0):
    th = SPHERE.symbols[0]
    g = geom.zeros((2, 2))
    g[0, 0] = sk.const(a * a)
    g[1, 1] = sk.mul(a * a, sk.power(sk.sin(th), 2))
    g[0, 1] = g[1, 0] = sk.ZERO
    return geom.TensorField(SPHERE, "dd", g, ((0, 1, 1),))


def values(exprs, chart, pts):
    cfg = geom.FieldConfig(chart, {}, {}, check=False)
    return cfg.evaluate(list(exprs), pts)


def test_sphere_christoffel():
    g = sphere_metric()
    G = geom.christoffel(g)
    pts = SPHERE.sample(np.random.default_rng(0), 4)
    th = pts[:, 0]
    v = values([G.comps[0, 1, 1], G.comps[1, 0, 1], G.comps[0, 0, 0]], SPHERE, pts)
    np.testing.assert_allclose(v[0], -np.sin(th) * np.cos(th))
    np.testing.assert_allclose(v[1], np.cos(th) / np.sin(th))
    np.testing.assert_allclose(v[2], 0.0)


@pytest.mark.parametrize("a", [1.0, 2.5])
def test_sphere_scalar_curvature(a):
    g = sphere_metric(a)
    G = geom.christoffel(g)
    R = geom.scalar_curvature(g, G)
    pts = SPHERE.sample(np.random.default_rng(1), 5)
    np.testing.assert_allclose(values([R], SPHERE, pts)[0], 2.0 / a ** 2)


def test_schwarzschild_ricci_flat():
    cfg = evalnum.load_solution("schwarzschild")
    g = cfg["g"]
    G = geom.christoffel(g)
    Ric = geom.ricci(G)
    pts = cfg.sample_points(4, seed=2)
    v = cfg.evaluate(list(Ric.comps.reshape(-1)), pts)
    assert max(np.max(np.abs(x)) for x in v) < 1e-10


def test_first_bianchi_identity():
    cfg = evalnum.load_solution("schwarzschild")
    G = geom.christoffel(cfg["g"])
    Rm = geom.riemann(G)
    pts = cfg.sample_points(3, seed=4)
    cyc = [sk.add(Rm.comps[a, b, c, d], Rm.comps[a, c, d, b], Rm.comps[a, d, b, c])
           for a in range(4) for b in range(4) for c in range(4) for d in range(4)]
    assert max(np.max(np.abs(x)) for x in cfg.evaluate(cyc, pts)) < 1e-8


def test_metricity_of_levi_civita():
    cfg = evalnum.load_solution("schwarzschild")
    g = cfg["g"]
    res = geom.metricity_residual(g, geom.christoffel(g))
    pts = cfg.sample_points(3, seed=5)
    assert max(np.max(np.abs(x)) for x in cfg.evaluate(list(res.comps.reshape(-1)), pts)) < 1e-12


def test_inverse_metric():
    cfg = evalnum.load_solution("schwarzschild")
    g = cfg["g"]
    gi = geom.inverse_metric(g)
    pts = cfg.sample_points(3, seed=6)
    prod = [sk.total(sk.mul(gi.comps[i, k], g.comps[k, j]) for k in range(4)) for i in range(4) for j in range(4)]
    v = np.array(cfg.evaluate(prod, pts)).reshape(4, 4, -1)
    np.testing.assert_allclose(v, np.eye(4)[:, :, None] * np.ones(3), atol=1e-12)


def test_abelian_field_strength_of_pure_gauge_vanishes():
    cfg = evalnum.load_solution("flat_abelian")
    F = geom.field_strength(cfg["A"], cfg.algebra)
    pts = cfg.sample_points(3, seed=1)
    assert max(np.max(np.abs(x)) for x in cfg.evaluate(list(F.comps.reshape(-1)), pts)) < 1e-14


@pytest.mark.parametrize("angles", [("0.3*t + x", "y*z"), ("sin(x)", "0.5*t - cos(y)")])
def test_so3_pure_gauge_is_flat(angles):
    ch = sk.Chart(("t", "x", "y", "z"), -1)
    A = geom.pure_gauge_so3(ch, [sk.parse(a, ch) for a in angles])
    F = geom.field_strength(A, geom.so3())
    cfg = geom.FieldConfig(ch, {"A": A}, {"A": "gauge"}, {}, geom.so3())
    pts = cfg.sample_points(4, seed=3)
    assert max(np.max(np.abs(x)) for x in cfg.evaluate(list(F.comps.reshape(-1)), pts)) < 1e-13


def test_so3_structure_constants():
    alg = geom.so3()
    assert alg.dim == 3
    assert not alg.is_abelian
    assert geom.abelian(2).is_abelian


def test_symmetry_violation_rejected():
    ch = sk.Chart(("t", "x"), -1)
    g = geom.zeros((2, 2))
    g[0, 0], g[1, 1] = sk.const(-1), sk.const(1)
    g[0, 1], g[1, 0] = sk.const(0.2), sk.const(0.3)
    with pytest.raises(geom.GeomError):
        geom.TensorField(ch, "dd", g, ((0, 1, 1),))


def test_degenerate_metric_rejected():
    ch = sk.Chart(("t", "x"), -1)
    g = geom.zeros((2, 2))
    g[0, 0], g[1, 1] = sk.const(0), sk.const(1)
    g[0, 1] = g[1, 0] = sk.ZERO
    T = geom.TensorField(ch, "dd", g, ((0, 1, 1),))
    with pytest.raises(geom.GeomError):
        geom.FieldConfig(ch, {"g": T}, {"g": "metric"})


def test_unknown_role_rejected():
    ch = sk.Chart(("t",), 1)
    T = geom.TensorField(ch, "", np.array(sk.ONE, dtype=object))
    with pytest.raises(geom.GeomError):
        geom.FieldConfig(ch, {"q": T}, {"q": "spinor"})


def test_scalar_lie_derivative():
    ch = sk.Chart(("t", "x"), -1)
    gen = geom.SymmetryGenerator.parse(ch, ["x", "1"])
    f = geom.TensorField(ch, "", np.array(sk.parse("t*x^2", ch), dtype=object))
    L = geom.lie_derivative(f, gen, "tensor")
    assert sk.evaluate(L.comps[()], {"t": 2.0, "x": 3.0}) == pytest.approx(3 * 9 + 1 * 2 * 2 * 3)


def test_rotation_is_killing_on_the_sphere():
    g = sphere_metric()
    L = geom.lie_derivative(g, geom.SymmetryGenerator.coordinate(SPHERE, "phi"), "metric")
    assert all(x.is_zero for x in L.comps.reshape(-1))
    L2 = geom.lie_derivative(g, geom.SymmetryGenerator.parse(SPHERE, ["1", "0"]), "metric")
    pts = SPHERE.sample(np.random.default_rng(3), 3)
    assert np.max(np.abs(values([L2.comps[1, 1]], SPHERE, pts)[0])) > 0.1


def test_field_file_roundtrip(tmp_path):
    cfg = evalnum.load_solution("schwarzschild")
    path = tmp_path / "s.yaml"
    geom.dump_field_file(cfg, path)
    back = geom.load_field_file(path)
    pts = cfg.sample_points(3, seed=9)
    a = cfg.evaluate(list(cfg["g"].comps.reshape(-1)), pts)
    b = back.evaluate(list(back["g"].comps.reshape(-1)), pts)
    np.testing.assert_allclose(a, b)
    assert back.params == cfg.params
    assert back.meta["theory"] == "hilbert"


def test_field_file_mirrors_symmetric_components():
    text = """
name: t2
chart: {coords: [t, x], signature: -1}
fields:
  g:
    role: metric
    index: dd
    symmetries: [[0, 1, 1]]
    components: {"t,t": "-1", "t,x": "0.1", "x,x": "1"}
"""
    cfg = geom.load_field_file(text)
    assert cfg["g"].comps[1, 0] is cfg["g"].comps[0, 1]


@pytest.mark.parametrize("text,exc", [
    ("fields: {}", geom.FieldFileError),
    ("chart: {coords: [t]}\nfields: {q: {role: wizard}}", geom.FieldFileError),
    ("chart: {coords: [t]}\nfields: {q: {role: point-particle, index: '', components: {'': 't +'}}}", sk.ParseError),
    ("chart: [unclosed", geom.FieldFileError),
])
def test_field_file_errors(text, exc):
    with pytest.raises(exc):
        geom.load_field_file(text)
