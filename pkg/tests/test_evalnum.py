import json
import math
import warnings

import numpy as np
import pytest

from augvar import catalog, evalnum, geom
from augvar import noether as nt
from augvar import symker as sk

SPH = evalnum.spherical_chart()


def upper_form(entries):
    return nt.HorizontalForm.from_upper(SPH, {k: sk.parse(v, SPH) for k, v in entries.items()})


def test_zero_form_integrates_to_zero():
    q = evalnum.surface_integral(nt.HorizontalForm.from_upper(SPH, {}), evalnum.SurfaceSpec.sphere(2.0))
    assert q.value == 0.0


@pytest.mark.parametrize("c", [1.0, -0.5, 3.25])
def test_constant_form(c):
    q = evalnum.surface_integral(upper_form({(0, 1): str(c)}), evalnum.SurfaceSpec.sphere(2.0))
    assert q.value == pytest.approx(c * 2 * math.pi ** 2, rel=1e-13)


def test_sine_weight_gives_solid_angle():
    q = evalnum.surface_integral(upper_form({(0, 1): "sin(theta)"}), evalnum.SurfaceSpec.sphere(2.0))
    assert q.value == pytest.approx(4 * math.pi, rel=1e-13)


def test_order_of_fixed_coordinates_is_irrelevant():
    a = evalnum.surface_integral(upper_form({(0, 1): "sin(theta)"}), evalnum.SurfaceSpec.sphere(1.0)).value
    spec = evalnum.SurfaceSpec((("r", 1.0), ("t", 0.0)), (("theta", 0, math.pi), ("phi", 0, 2 * math.pi)))
    b = evalnum.surface_integral(upper_form({(0, 1): "sin(theta)"}), spec).value
    assert b == pytest.approx(a, rel=1e-14)


@pytest.mark.parametrize("P", [0.3, 1.0, 2.0])
def test_monopole_flux(P):
    F = geom.zeros((4, 4))
    F[2, 3] = sk.mul(P, sk.sin(SPH.symbols[2]))
    F[3, 2] = sk.mul(-1, F[2, 3])
    U = evalnum.two_form_superpotential(F, SPH)
    assert evalnum.surface_integral(U, evalnum.SurfaceSpec.sphere(3.0)).value == pytest.approx(4 * math.pi * P,
                                                                                               rel=1e-12)


def test_error_estimate_bounds_refinement():
    U = upper_form({(0, 1): "exp(cos(theta)) * (2 + sin(phi))^3"})
    s = evalnum.SurfaceSpec.sphere(1.0, order=16)
    lo = evalnum.surface_integral(U, s)
    hi = evalnum.surface_integral(U, s.with_orders((32, 32)))
    assert abs(hi.value - lo.value) <= max(lo.error, 1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_stokes_on_random_forms(seed):
    rep = evalnum.stokes_check(evalnum.random_polynomial_form(seed), evalnum.SurfaceSpec.sphere(1.5, t=0.4),
                               evalnum.SurfaceSpec.sphere(3.5, t=0.4))
    assert rep.passed, rep


def test_stokes_rejects_mismatched_surfaces():
    with pytest.raises(evalnum.EvalError):
        evalnum.stokes_check(evalnum.random_polynomial_form(0), evalnum.SurfaceSpec.sphere(1.0, t=0.0),
                             evalnum.SurfaceSpec.sphere(2.0, t=1.0))


@pytest.mark.parametrize("fixed,free", [
    ((("t", 0.0),), (("theta", 0, 1), ("phi", 0, 1))),
    ((("t", 0.0), ("t", 1.0)), (("theta", 0, 1),)),
])
def test_bad_surface_specs(fixed, free):
    with pytest.raises(evalnum.EvalError):
        evalnum.SurfaceSpec(fixed, free)


def test_low_order_rejected():
    with pytest.raises(evalnum.EvalError):
        evalnum.SurfaceSpec.sphere(1.0, order=4)


def test_order_from_environment(monkeypatch):
    monkeypatch.setenv(evalnum.ORDER_ENV, "12")
    assert evalnum.default_order() == 12
    assert evalnum.SurfaceSpec.sphere(1.0).resolved_orders() == (12, 12)
    monkeypatch.setenv(evalnum.ORDER_ENV, "lots")
    with pytest.raises(evalnum.EvalError):
        evalnum.default_order()
    monkeypatch.setenv(evalnum.ORDER_ENV, "3")
    with pytest.raises(evalnum.EvalError):
        evalnum.default_order()


def test_singular_surface():
    with pytest.raises(evalnum.SingularSurfaceError):
        evalnum.relative_quantity("hilbert", "schwarzschild", "minkowski_spherical", "t",
                                  evalnum.SurfaceSpec.sphere(2.0))


@pytest.mark.parametrize("h,vals,expected", [
    ([0.5, 0.25], [3.0, 2.0], 1.0),
    ([1.0, 0.5, 0.25], [1 + 1 + 1, 1 + 0.5 + 0.25, 1 + 0.25 + 0.0625], 1.0),
])
def test_richardson_exact_on_polynomials(h, vals, expected):
    v, w = evalnum.richardson(h, vals)
    assert v == pytest.approx(expected, abs=1e-13)
    assert w.sum() == pytest.approx(1.0)


def test_library_ids():
    ids = evalnum.library_ids()
    for name in ("schwarzschild", "minkowski_spherical", "coulomb", "wu_yang", "de_sitter"):
        assert name in ids


def test_library_on_shell_flags():
    for cfg in evalnum.solution_library():
        th = catalog.lookup(cfg.meta["theory"])
        res = evalnum.el_residual(th, cfg)
        if cfg.meta.get("on_shell", True):
            assert res < 1e-7, cfg.name
        else:
            assert res > 1e-5, cfg.name


def test_load_solution_overrides():
    s = evalnum.load_solution("schwarzschild:M=2.5")
    assert s.params["M"] == 2.5
    assert evalnum.load_solution("schwarzschild", M=3).params["M"] == 3
    with pytest.raises(evalnum.UnknownSolutionError):
        evalnum.load_solution("kerr")
    with pytest.raises(evalnum.EvalError):
        evalnum.load_solution("schwarzschild:Q=1")
    with pytest.raises(evalnum.EvalError):
        evalnum.load_solution("schwarzschild:M")


def test_load_solution_from_path(tmp_path):
    p = tmp_path / "s.yaml"
    geom.dump_field_file(evalnum.load_solution("coulomb"), p)
    assert evalnum.load_solution(str(p)).params == evalnum.load_solution("coulomb").params


@pytest.mark.parametrize("sol,vac", [("minkowski_spherical", "minkowski_spherical"),
                                     ("schwarzschild", "schwarzschild")])
def test_relative_quantity_of_vacuum_against_itself(sol, vac):
    q = evalnum.relative_quantity("hilbert", sol, vac, "t", evalnum.SurfaceSpec.sphere(10.0))
    assert abs(q.value) < 1e-12


def test_hand_oracle_at_fixed_radius():
    # 4 pi M (6 - f - 1/f), f = 1 - 2M/r, evaluated independently at M = 1, r = 100
    q = evalnum.relative_quantity("hilbert", "schwarzschild", "minkowski_spherical", "t",
                                  evalnum.SurfaceSpec.sphere(100.0))
    assert q.value == pytest.approx(50.260353326573686, rel=1e-10)


def test_ratio_with_scaled_radii():
    S = evalnum.SurfaceSpec.sphere(1.0)
    q1 = evalnum.relative_quantity("hilbert", "schwarzschild:M=1", "minkowski_spherical", "t", S, radii=[50, 100, 200])
    q2 = evalnum.relative_quantity("hilbert", "schwarzschild:M=2", "minkowski_spherical", "t", S,
                                   radii=[100, 200, 400])
    assert q2.value / q1.value == pytest.approx(2.0, rel=1e-6)
    assert q1.extrapolated and len(q1.radii) == 3


@pytest.mark.parametrize("c", [0.5, 3.0])
def test_linear_in_generator(c):
    S = evalnum.SurfaceSpec.sphere(20.0)
    a = evalnum.relative_quantity("hilbert", "schwarzschild", "minkowski_spherical", "t", S).value
    b = evalnum.relative_quantity("hilbert", "schwarzschild", "minkowski_spherical", ([str(c), "0", "0", "0"], []), S).value
    assert b == pytest.approx(c * a, rel=1e-10)


@pytest.mark.parametrize("Q,r", [(1.0, 5.0), (1.0, 10.0), (-0.5, 7.0)])
def test_coulomb_gauge_charge_is_gauss_flux(Q, r):
    q = evalnum.relative_quantity("yang_mills", f"coulomb:Q={Q}", "coulomb:Q=0",
                                  (["0", "0", "0", "0"], ["1"]), evalnum.SurfaceSpec.sphere(r))
    assert q.value == pytest.approx(4 * math.pi * Q, rel=1e-12)


def test_off_shell_warning():
    with pytest.warns(evalnum.OffShellWarning):
        q = evalnum.relative_quantity("hilbert", "de_sitter", "minkowski_spherical", "t",
                                      evalnum.SurfaceSpec.sphere(2.0))
    assert q.warnings


def test_report_json_is_stable():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        q = evalnum.relative_quantity("hilbert", "schwarzschild", "minkowski_spherical", "t",
                                      evalnum.SurfaceSpec.sphere(10.0))
    d = json.loads(q.to_json())
    assert set(d) >= {"theory", "solution", "vacuum", "generator", "surface", "value", "error"}
    assert q.to_json() == q.to_json()


def test_different_charts_rejected():
    with pytest.raises(evalnum.EvalError):
        evalnum.relative_quantity("hilbert", "schwarzschild", "minkowski_cartesian", "t",
                                  evalnum.SurfaceSpec.sphere(10.0))
