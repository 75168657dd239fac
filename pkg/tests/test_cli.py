import json
import math

import pytest
from click.testing import CliRunner

from augvar import cli

QUANTITY = ["quantity", "--theory", "hilbert", "--solution", "schwarzschild", "--vacuum", "minkowski_spherical",
            "--surface", "sphere:r=20"]

BAD_FILE = """
name: broken
chart: {coords: [t, r, theta, phi], signature: -1}
fields:
  g:
    role: metric
    index: dd
    symmetries: [[0, 1, 1]]
    components: {"t,t": "-(1 - 2/r", "r,r": "1", "theta,theta": "r^2", "phi,phi": "r^2"}
"""


@pytest.fixture
def run():
    runner = CliRunner()

    def go(*args):
        return runner.invoke(cli.main, list(args), catch_exceptions=False)

    return go


def test_exit_code_table_is_complete():
    assert sorted(cli.EXIT_CODES) == [0, 1, 2, 3, 4, 5, 6]


def test_catalog(run):
    r = run("catalog", "--json")
    assert r.exit_code == 0
    names = [row["name"] for row in json.loads(r.output)]
    assert "hilbert" in names and "spring_pair" in names
    assert "hilbert" in run("catalog").output


def test_catalog_lists_mechanics_and_orders(run):
    rows = json.loads(run("catalog", "--json").output)
    by = {r["name"]: r for r in rows}
    assert {"hilbert", "yang_mills", "chern_simons_so3_3d"} <= set(by)
    assert by["spring_pair"]["group"] == "mechanics"
    assert all(r["order"] <= 2 for r in rows)


def test_describe(run):
    r = run("describe", "spring_pair", "--json")
    assert r.exit_code == 0
    d = json.loads(r.output)
    assert d["chart"] == ["t"] and d["momenta"]


def test_describe_bad_dimension(run):
    assert run("describe", "chern_simons_so3_3d", "--dim", "4").exit_code == 2


def test_quantity(run):
    r = run(*QUANTITY, "--json")
    assert r.exit_code == 0, r.output
    d = json.loads(r.output)
    f = 1 - 2 / 20
    assert d["value"] == pytest.approx(4 * math.pi * (6 - f - 1 / f), rel=1e-10)


def test_quantity_human_output(run):
    r = run(*QUANTITY, "--radii", "50,100,200")
    assert r.exit_code == 0
    assert "limit" in r.output


def test_quantity_radii_report(run):
    d = json.loads(run(*QUANTITY, "--radii", "50,100,200", "--json").output)
    assert [row["r"] for row in d["radii"]] == [50.0, 100.0, 200.0]
    assert d["extrapolated"]


def test_quantity_vacuum_against_itself(run):
    r = run("quantity", "--theory", "hilbert", "--solution", "minkowski_spherical", "--vacuum",
            "minkowski_spherical", "--json")
    assert abs(json.loads(r.output)["value"]) < 1e-12


def test_quantity_json_is_deterministic(run, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(*QUANTITY, "--out", str(a))
    run(*QUANTITY, "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_quantity_gauge_generator(run):
    r = run("quantity", "--theory", "yang_mills", "--solution", "coulomb", "--vacuum", "coulomb:Q=0",
            "--xi", "0,0,0,0", "--xi-gauge", "1", "--surface", "sphere:r=5", "--json")
    assert r.exit_code == 0
    assert json.loads(r.output)["value"] == pytest.approx(4 * math.pi, rel=1e-12)


def test_verify_pass(run):
    r = run("verify", "stokes", "--json")
    assert r.exit_code == 0
    d = json.loads(r.output)
    assert d["passed"] and len(d["checks"]) == 10


def test_verify_failure_exit_code(run):
    # the r-independence check of the Schwarzschild energy does not hold at 1e-6
    r = run("verify", "gravity-energy")
    assert r.exit_code == 1
    assert "FAIL" in r.output


def test_spring_command(run):
    r = run("appendix-a", "--json")
    assert r.exit_code == 0
    d = json.loads(r.output)
    assert (d["E1"], d["E2"], d["E2-E1"]) == pytest.approx((2.0, 8.0, 6.0))
    assert "E2 - E1 = 6" in run("appendix-a").output


@pytest.mark.parametrize("args,expected", [(["--A1", "1.5", "--A2", "1.5"], 0.0), (["--w", "5"], 6.0)])
def test_spring_command_examples(run, args, expected):
    d = json.loads(run("appendix-a", *args, "--json").output)
    assert d["E2-E1"] == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("args,code", [
    (["verify", "nonsense"], 2),
    (["quantity", "--theory", "hilbert"], 2),
    (QUANTITY[:-2] + ["--surface", "cube:r=3"], 2),
    (QUANTITY + ["--radii", "a,b"], 2),
    (["appendix-a", "--m", "-1"], 2),
    (["describe", "brans_dicke"], 4),
    (["quantity", "--theory", "brans_dicke", "--solution", "schwarzschild", "--vacuum", "minkowski_spherical"], 4),
    (QUANTITY[:-2] + ["--surface", "sphere:r=2"], 5),
    (["quantity", "--theory", "hilbert", "--solution", "no_such_file.yaml", "--vacuum", "minkowski_spherical"], 6),
    (QUANTITY + ["--out", "/nonexistent/dir/report.json"], 6),
])
def test_exit_codes(run, args, code):
    assert run(*args).exit_code == code


def test_parse_error_exit_code(run, tmp_path):
    p = tmp_path / "broken.yaml"
    p.write_text(BAD_FILE)
    r = run("quantity", "--theory", "hilbert", "--solution", str(p), "--vacuum", "minkowski_spherical")
    assert r.exit_code == 3
