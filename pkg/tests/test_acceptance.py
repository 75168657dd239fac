"""Acceptance criteria, one test each, at their stated tolerances.

Every test prints a single ``ACCEPTANCE <n> PASS|FAIL`` line (visible in
``pytest -v`` output) before asserting.  Run directly with
``python tests/test_acceptance.py`` to get just the eleven lines.
"""

import sys
import time

from augvar import mech, suites

_LINES = []


def _report(capsys, n, title, ok, detail):
    line = f"ACCEPTANCE {n:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    _LINES.append(line)
    if capsys is None:
        print(line)
    else:
        with capsys.disabled():
            print("\n" + line)


def _timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - t0


def test_criterion_01_spring_exactness(capsys):
    def run():
        vals = []
        for w in (0.0, 1.0, 5.0, 100.0):
            a, b = mech.SpringSystem(1.0, 1.0, w, 1.0), mech.SpringSystem(1.0, 1.0, w, 2.0)
            vals.append(mech.observer_energy(b) - mech.observer_energy(a))
        return vals

    vals, dt = _timed(run)
    err = max(abs(v - 6.0) for v in vals)
    ok = err <= 1e-12 and dt < 1.0 and mech.SpringSystem(1.0, 1.0).omega2 == 2.0
    _report(capsys, 1, "relative spring energy = 6 in frames w = 0, 1, 5, 100",
            ok, f"max |E2 - E1 - 6| = {err:.2e} (tol 1e-12), {dt:.3f} s (limit 1 s)")
    assert ok


def test_criterion_02_covariance(capsys):
    checks, dt = _timed(suites.covariance_suite)
    worst = max(c.residual for c in checks)
    ok = worst <= 1e-7 and dt < 30.0 and len(checks) == 9
    _report(capsys, 2, "covariance identity off-shell, 9 theories x 3 configs x 5 points",
            ok, f"worst residual {worst:.2e} (tol 1e-7), {dt:.1f} s (limit 30 s)")
    assert ok


def test_criterion_03_noether_split(capsys):
    checks, dt = _timed(suites.split_suite)
    dw = max(c.residual for c in checks if "Div E - W" in c.name)
    sp = max(c.residual for c in checks if "Div U" in c.name)
    ok = dw <= 1e-6 and sp <= 1e-7 and dt < 60.0
    _report(capsys, 3, "Noether split off-shell, all theories",
            ok, f"Div E - W {dw:.2e} (tol 1e-6), E - E~ - Div U {sp:.2e} (tol 1e-7), {dt:.1f} s (limit 60 s)")
    assert ok


def test_criterion_04_bianchi(capsys):
    checks = suites.bianchi_suite()
    worst = max(c.residual for c in checks)
    ok = worst <= 1e-6 and {c.name.split(":")[0] for c in checks} == {"hilbert", "yang_mills"}
    _report(capsys, 4, "W - Div E~ off-shell for hilbert and yang_mills", ok, f"worst {worst:.2e} (tol 1e-6)")
    assert ok


def test_criterion_05_condition(capsys):
    checks = suites.condition_suite()
    fd = max(c.residual for c in checks if "(fd)" in c.name)
    sym = max(c.residual for c in checks if "(symbolic)" in c.name)
    ok = fd <= 1e-4 and sym <= 1e-12
    _report(capsys, 5, "correction-term condition, mass and gauge families",
            ok, f"finite difference {fd:.2e} (tol 1e-4), exact {sym:.2e} (tol 1e-12)")
    assert ok


def test_criterion_06_dirichlet(capsys):
    checks = suites.dirichlet_suite()
    worst = max(c.residual for c in checks)
    ok = worst <= 1e-10
    _report(capsys, 6, "<F(l)|X> with y = ybar, dy = 0 for hilbert and yang_mills", ok,
            f"worst {worst:.2e} (tol 1e-10)")
    assert ok


def test_criterion_07_cohomology(capsys):
    checks = suites.cohomology_suite()
    div = next(c for c in checks if "Div beta" in c.name)
    canon = next(c for c in checks if "canonical" in c.name)
    tilde = next(c for c in checks if "tilde" in c.name)
    ok = div.residual <= 1e-8 and canon.residual <= 1e-8
    _report(capsys, 7, "divergence invariance and robustness twin", ok,
            f"divergence {div.residual:.2e}, twin (canonical alpha) {canon.residual:.2e}, "
            f"twin (tilde alpha) {tilde.residual:.2e} (tol 1e-8)")
    assert ok


def test_criterion_08_chern_simons(capsys):
    checks = suites.cs_gauge_suite()
    worst = max(c.residual for c in checks)
    ok = worst <= 1e-9 and len(checks) == 2
    _report(capsys, 8, "Chern-Simons augmented Lagrangian gauge covariance and B-form", ok,
            f"worst {worst:.2e} (tol 1e-9)")
    assert ok


def test_criterion_09_gravitational_energy(capsys):
    checks, dt = _timed(suites.gravity_energy_suite)
    by = {c.name.split(" ")[0]: c for c in checks}
    spread = by["r-independence"].residual
    ratio = by["value(2M)"].residual
    add = by["additivity"].residual
    absv = by["absolute"].residual
    ok = spread <= 1e-6 and ratio <= 1e-6 and add <= 1e-6 and absv <= 1e-10 and dt < 60.0
    _report(capsys, 9, "Schwarzschild relative energy", ok,
            f"r-spread {spread:.2e}, ratio {ratio:.2e}, additivity {add:.2e} (tol 1e-6), "
            f"hand value {absv:.2e}, {dt:.1f} s")
    assert ok


def test_criterion_10_formal_integration(capsys):
    checks = suites.formal_integration_suite()
    worst = max(c.residual for c in checks)
    ok = worst <= 1e-5 and len(checks) == 2
    _report(capsys, 10, "derivative of the surface integral along mass and charge families", ok,
            f"worst relative {worst:.2e} (tol 1e-5)")
    assert ok


def test_criterion_11_stokes(capsys):
    checks = suites.stokes_suite(10)
    worst = max(c.residual for c in checks)
    ok = worst <= 1e-6 and len(checks) == 10
    _report(capsys, 11, "annulus Stokes identity, 10 random forms", ok, f"worst relative {worst:.2e} (tol 1e-6)")
    assert ok


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted((k, v) for k, v in dict(globals()).items() if k.startswith("test_criterion")):
        try:
            fn(None)
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
