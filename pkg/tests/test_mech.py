import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from augvar import mech

S1 = mech.SpringSystem(1.0, 1.0, 0.0, 1.0)
S2 = mech.SpringSystem(1.0, 1.0, 0.0, 2.0)


def test_frequency():
    assert mech.SpringSystem(2.0, 3.0).omega2 == pytest.approx(9.0)
    assert S1.period == pytest.approx(2 * math.pi / math.sqrt(2))


@pytest.mark.parametrize("sys,expected", [(S1, 2.0), (S2, 8.0), (mech.SpringSystem(1.0, 1.0, 1.0, 1.0), 3.0)])
def test_observer_energy(sys, expected):
    assert mech.observer_energy(sys) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("w", [0.0, 1.0, 5.0, 100.0])
def test_relative_energy_is_frame_independent(w):
    a = mech.SpringSystem(1.0, 1.0, w, 1.0)
    b = mech.SpringSystem(1.0, 1.0, w, 2.0)
    assert mech.observer_energy(b) - mech.observer_energy(a) == pytest.approx(6.0, abs=1e-12 * max(1, w * w))


def test_relative_energy_formula():
    assert mech.relative_energy(S1, S2) == pytest.approx(6.0, abs=1e-12)
    assert mech.relative_energy(S2, S1) == pytest.approx(-6.0, abs=1e-12)


def test_additivity():
    s3 = mech.SpringSystem(1.0, 1.0, 0.0, 3.0)
    total = mech.relative_energy(S1, s3)
    assert total == pytest.approx(mech.relative_energy(S1, S2) + mech.relative_energy(S2, s3), abs=1e-12)


def test_energy_conserved_over_ten_periods():
    sys = mech.SpringSystem(1.3, 0.7, 2.0, 0.9)
    ts = np.linspace(0, 10 * sys.period, 101)
    e = [mech.mechanical_energy(sys, mech.state(sys, float(t))) for t in ts]
    assert np.ptp(e) < 1e-12 * max(e)


def test_exact_solution_solves_equations_of_motion():
    sys = mech.SpringSystem(1.0, 1.5, 0.4, 0.8)
    t = np.linspace(0, 5, 11)
    h = 1e-4
    x1p, x2p = mech.exact_solution(sys, t + h)
    x10, x20 = mech.exact_solution(sys, t)
    x1m, x2m = mech.exact_solution(sys, t - h)
    acc1 = (x1p - 2 * x10 + x1m) / h ** 2
    # m x1'' = -k^2 (x1 - x2)
    np.testing.assert_allclose(sys.m * acc1, -sys.k ** 2 * (x10 - x20), atol=1e-5)


def test_baricentric_roundtrip():
    st_ = mech.BaricentricState.from_positions(0.0, 3.0, 1.0, 0.5, -0.5)
    assert st_.positions() == (3.0, 1.0)
    assert (st_.x, st_.q, st_.u, st_.w) == (2.0, 1.0, 0.5, 0.0)


@pytest.mark.parametrize("kw", [{"m": 0.0}, {"k": -1.0}, {"A": math.nan}, {"w": math.inf}])
def test_invalid_parameters(kw):
    with pytest.raises(mech.MechError):
        mech.SpringSystem(**{"m": 1.0, "k": 1.0, **kw})


@pytest.mark.parametrize("other", [mech.SpringSystem(2.0, 1.0, 0.0, 2.0), mech.SpringSystem(1.0, 2.0, 0.0, 2.0),
                                   mech.SpringSystem(1.0, 1.0, 1.0, 2.0)])
def test_mismatched_pair(other):
    with pytest.raises(mech.MechError):
        mech.relative_energy(S1, other)


def test_hundred_random_boosts():
    boosts = np.random.default_rng(7).uniform(-5, 5, 100)
    rep = mech.boost_invariance_check(S1, S2, boosts)
    assert rep.passed
    assert len(rep.rows()) == 100


@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(-50, 50), st.floats(0, 5), st.floats(0, 5))
@settings(max_examples=50, deadline=None)
def test_relative_energy_matches_formula(m, k, w, a1, a2):
    s1, s2 = mech.SpringSystem(m, k, w, a1), mech.SpringSystem(m, k, w, a2)
    expected = 2 * k ** 2 * (a2 ** 2 - a1 ** 2)
    assert mech.relative_energy(s1, s2) == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_augmented_energy_equals_relative_energy():
    assert mech.augmented_mech_energy(S2, S1) == pytest.approx(6.0, abs=1e-12)


def test_augmented_energy_train_offset():
    assert mech.augmented_mech_energy(mech.SpringSystem(1.0, 1.0, 1.0, 1.0), S1) == pytest.approx(1.0, abs=1e-12)


def test_spring_config_is_on_shell():
    from augvar import catalog, evalnum

    cfg = mech.spring_config(mech.SpringSystem(1.0, 1.2, 0.3, 0.7))
    assert evalnum.el_residual(catalog.lookup("spring_pair"), cfg) < 1e-12


def test_symplectic_form_reproduces_energy_derivative():
    r = mech.symplectic_check(mech.SpringSystem(1.0, 1.0, 0.5, 1.3))
    assert r["relative"] < 1e-6
    assert r["sign"] == 1
    assert r["spread"] < 1e-10


def test_spring_report():
    rep = mech.appendix_report(1.0, 1.0, 0.0, 1.0, 2.0)
    assert (rep["E1"], rep["E2"], rep["E2-E1"]) == pytest.approx((2.0, 8.0, 6.0))
    assert [r["w"] for r in rep["frames"]] == [0.0, 1.0, 5.0, 100.0]
    assert rep["spread"] < 1e-10


@pytest.mark.parametrize("sys,expected", [(mech.SpringSystem(1.0, 1.0, 0.0, 0.0), 0.0),
                                          (mech.SpringSystem(1.0, 1.0, 3.0, 0.0), 9.0)])
def test_observer_energy_examples(sys, expected):
    assert mech.observer_energy(sys) == pytest.approx(expected, abs=1e-14)


def test_exact_solution_examples():
    sys = mech.SpringSystem(1.0, 1.0, 0.7, 1.5)
    assert mech.exact_solution(sys, 0.0) == (1.5, -1.5)
    t = math.pi / 2 / sys.omega
    x1, x2 = mech.exact_solution(sys, t)
    assert x1 == pytest.approx(0.7 * t) and x2 == pytest.approx(0.7 * t)
    flat = mech.SpringSystem(1.0, 1.0, 0.7, 0.0)
    assert mech.exact_solution(flat, 2.0) == (1.4, 1.4)


def test_equal_amplitudes_give_zero():
    assert mech.relative_energy(S1, S1) == 0.0
    assert mech.augmented_mech_energy(S1, S1) == pytest.approx(0.0, abs=1e-14)
    rep = mech.boost_invariance_check(S1, S1, [0.0, 1.0, 5.0])
    assert rep.values == (0.0, 0.0, 0.0)


def test_boost_table_examples():
    rep = mech.boost_invariance_check(S1, S2, [0.0, 1.0, 5.0])
    assert rep.values == pytest.approx((6.0, 6.0, 6.0), abs=1e-12)
