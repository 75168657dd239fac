"""Command-line front end.

Verbs: catalog, describe, quantity, verify, appendix-a.  Human-readable
tables go to standard output; ``--json`` switches to machine output and
``--out`` writes the JSON report to a file.  Exit codes are listed in
``EXIT_CODES``.
"""

from __future__ import annotations

import json
import sys
import warnings

import click

from . import catalog as cat
from . import evalnum
from . import geom
from . import mech
from . import suites
from . import symker as sk

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_MISSING_THEORY = 4
EXIT_SINGULAR = 5
EXIT_IO = 6

EXIT_CODES = {
    EXIT_OK: "success",
    EXIT_VERIFY_FAILED: "a verification check failed",
    EXIT_USAGE: "usage error (bad option, unknown suite, invalid parameter)",
    EXIT_PARSE: "expression or field-file parse error",
    EXIT_MISSING_THEORY: "theory not in the catalog",
    EXIT_SINGULAR: "integrand singular on the requested surface",
    EXIT_IO: "file not found or not writable",
}


class _Exit(click.ClickException):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.exit_code = code


def _dump(payload, as_json: bool, out, human) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        try:
            with open(out, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        except OSError as exc:
            raise _Exit(f"cannot write {out}: {exc}", EXIT_IO) from exc
    if as_json:
        click.echo(text)
    else:
        human()


def _theory(name: str):
    try:
        return cat.lookup(name)
    except KeyError as exc:
        raise _Exit(str(exc.args[0]), EXIT_MISSING_THEORY) from exc


def _split_top(text: str) -> list:
    """Split on commas outside parentheses."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur).strip())
    return [p for p in parts if p]


def _surface(spec: str) -> evalnum.SurfaceSpec:
    """``sphere:r=100,t=0`` or ``torus:r=2,t=0``; other keys set the
    coordinate names (radial, time, polar, azimuth, angle) or ``order``."""
    kind, _, rest = spec.partition(":")
    opts = {}
    for item in _split_top(rest):
        k, eq, v = item.partition("=")
        if not eq:
            raise click.BadParameter(f"expected key=value in surface spec, got {item!r}", param_hint="--surface")
        opts[k.strip()] = v.strip()
    try:
        r = float(opts.pop("r", "10"))
        t = float(opts.pop("t", "0"))
        order = int(opts.pop("order")) if "order" in opts else None
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--surface") from exc
    try:
        if kind == "sphere":
            return evalnum.SurfaceSpec.sphere(r, t, order, **opts)
        if kind == "torus":
            return evalnum.SurfaceSpec.torus(r, t, order, **opts)
    except (TypeError, evalnum.EvalError) as exc:
        raise click.BadParameter(str(exc), param_hint="--surface") from exc
    raise click.BadParameter(f"unknown surface kind {kind!r} (sphere or torus)", param_hint="--surface")


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(package_name="artifact")
def main():
    """Noether currents, superpotentials and relative conserved quantities."""


@main.command("catalog")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
def cmd_catalog(as_json):
    """List the catalog theories with their fields and order."""
    rows = []
    for th in cat.build_catalog():
        rows.append({"name": th.name, "group": th.group, "order": th.order,
                     "fields": [{"name": s.name, "role": s.role, "index": s.index} for s in th.fields],
                     "dims": list(th.dims), "local": th.local, "lagrangian": th.summary})

    def human():
        click.echo(f"{'theory':24} {'group':10} {'k':>2}  fields")
        for r in rows:
            fields = ", ".join(f"{f['name']}:{f['role']}" for f in r["fields"])
            click.echo(f"{r['name']:24} {r['group']:10} {r['order']:>2}  {fields}")

    _dump(rows, as_json, None, human)


@main.command("describe")
@click.argument("theory")
@click.option("--dim", type=int, default=None, help="Chart dimension (default: smallest supported).")
@click.option("--max-chars", type=int, default=400, show_default=True, help="Truncate long expressions.")
@click.option("--json", "as_json", is_flag=True)
def cmd_describe(theory, dim, max_chars, as_json):
    """Print a theory's Lagrangian, momenta and Poincare-Cartan contraction."""
    from . import randomfields as rf

    th = _theory(theory)
    m = dim or min(th.dims)
    if m not in th.dims:
        raise click.BadParameter(f"{th.name} supports dimensions {list(th.dims)}", param_hint="--dim")
    kit = th.kit(rf.default_chart(m))

    def show(e):
        text = sk.to_text(e)
        if max_chars and len(text) > max_chars:
            return text[:max_chars] + f" ... [{sk.count_nodes(e)} nodes]"
        return text

    momenta = {}
    for fname, key in kit.comp_keys:
        for mu in range(m):
            p = kit.p(fname, key, mu)
            if not p.is_zero:
                momenta[f"p[{fname}{list(key)}]^{kit.X[mu]}"] = show(p)
    pc = kit.pc(kit.delta_fields())
    payload = {"name": th.name, "chart": list(kit.X), "order": th.order, "summary": th.summary,
               "lagrangian": show(kit.L), "momenta": momenta,
               "pc_contraction": {kit.X[mu]: show(pc[mu]) for mu in range(m)}}

    def human():
        click.echo(f"{th.name}  (order {th.order}, chart {', '.join(kit.X)})")
        click.echo(f"  L = {th.summary}")
        click.echo(f"  Lagrangian density: {payload['lagrangian']}")
        click.echo("  momenta:")
        for k, v in momenta.items():
            click.echo(f"    {k} = {v}")
        click.echo("  <F|X> (X.<field> are the deformation jets):")
        for k, v in payload["pc_contraction"].items():
            click.echo(f"    ds_{k}: {v}")

    _dump(payload, as_json, None, human)


@main.command("quantity")
@click.option("--theory", required=True, help="Catalog theory name.")
@click.option("--solution", required=True, help="Library id (optionally id:param=value) or field file.")
@click.option("--vacuum", required=True, help="Library id or field file for the vacuum.")
@click.option("--xi", default="t", show_default=True,
              help="Coordinate name, or comma-separated components xi^mu.")
@click.option("--xi-gauge", default="", help="Comma-separated vertical components xi^A.")
@click.option("--surface", "surface_spec", default="sphere:r=10", show_default=True,
              help="sphere:r=..,t=.. or torus:r=..,t=..")
@click.option("--radii", default="", help="Comma-separated radii; with two or more the limit is extrapolated.")
@click.option("--variant", default="canonical", show_default=True, help="Correction term variant.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the JSON report here.")
@click.option("--json", "as_json", is_flag=True)
def cmd_quantity(theory, solution, vacuum, xi, xi_gauge, surface_spec, radii, variant, out, as_json):
    """Relative conserved quantity of SOLUTION with respect to VACUUM."""
    th = _theory(theory)
    surf = _surface(surface_spec)
    try:
        rad = [float(r) for r in _split_top(radii)]
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--radii") from exc
    comps = _split_top(xi)
    gen = comps[0] if len(comps) == 1 and comps[0].isidentifier() and not xi_gauge else (comps, _split_top(xi_gauge))
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", evalnum.OffShellWarning)
            rep = evalnum.relative_quantity(th, solution, vacuum, gen, surf, radii=rad or None, variant=variant)
        with_warn = [str(w.message) for w in caught if issubclass(w.category, evalnum.OffShellWarning)]
    except evalnum.UnknownSolutionError as exc:
        raise _Exit(str(exc), EXIT_IO) from exc
    except (sk.ParseError, geom.FieldFileError) as exc:
        raise _Exit(f"parse error: {exc}", EXIT_PARSE) from exc
    except evalnum.SingularSurfaceError as exc:
        raise _Exit(str(exc), EXIT_SINGULAR) from exc
    except OSError as exc:
        raise _Exit(str(exc), EXIT_IO) from exc
    except (evalnum.EvalError, geom.GeomError, sk.SymkerError, ValueError) as exc:
        raise _Exit(str(exc), EXIT_USAGE) from exc
    for msg in with_warn:
        click.echo(f"warning: {msg}", err=True)

    def human():
        click.echo(f"theory    {rep.theory} [{rep.variant}]")
        click.echo(f"solution  {rep.solution}")
        click.echo(f"vacuum    {rep.vacuum}")
        click.echo(f"generator {rep.generator}")
        if rep.radii:
            click.echo(f"{'r':>12}  {'value':>22}  {'error':>10}")
            for row in rep.radii:
                click.echo(f"{row['r']:>12g}  {row['value']:>22.15g}  {row['error']:>10.2g}")
        label = "limit" if rep.extrapolated else "value"
        click.echo(f"{label:>12}  {rep.value:>22.15g}  {rep.error:>10.2g}")

    _dump(rep.to_dict(), as_json, out, human)


@main.command("verify")
@click.argument("suite")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--json", "as_json", is_flag=True)
def cmd_verify(suite, out, as_json):
    """Run a verification suite (or "all"); exits 1 if any check fails."""
    names = suites.suite_names() if suite == "all" else [suite]
    for n in names:
        if n not in suites.SUITES:
            raise _Exit(f"unknown suite {suite!r}; available: all, {', '.join(suites.suite_names())}", EXIT_USAGE)
    checks = []
    for n in names:
        checks.extend(suites.run_suite(n))
    ok = all(c.passed for c in checks)
    payload = {"suite": suite, "passed": ok, "checks": [c.to_dict() for c in checks]}

    def human():
        for c in checks:
            click.echo(f"{'PASS' if c.passed else 'FAIL'}  {c.suite:18} {c.name:70} "
                       f"{c.residual:10.3g} <= {c.tolerance:.0e}")
        click.echo(f"{sum(c.passed for c in checks)}/{len(checks)} passed")

    _dump(payload, as_json, out, human)
    if not ok:
        sys.exit(EXIT_VERIFY_FAILED)


@main.command("appendix-a")
@click.option("--m", "m", type=float, default=1.0, show_default=True, help="Mass of each point.")
@click.option("--k", "k", type=float, default=1.0, show_default=True, help="Spring constant.")
@click.option("--w", "w", type=float, default=0.0, show_default=True, help="Train velocity.")
@click.option("--A1", "A1", type=float, default=1.0, show_default=True)
@click.option("--A2", "A2", type=float, default=2.0, show_default=True)
@click.option("--boosts", default="0,1,5,100", show_default=True, help="Frames for the invariance table.")
@click.option("--json", "as_json", is_flag=True)
def cmd_appendix_a(m, k, w, A1, A2, boosts, as_json):
    """Energies of the two-point spring system and their frame dependence."""
    if m <= 0:
        raise click.BadParameter("must be positive", param_hint="--m")
    if k <= 0:
        raise click.BadParameter("must be positive", param_hint="--k")
    try:
        frames = [float(b) for b in _split_top(boosts)]
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--boosts") from exc
    rep = mech.appendix_report(m, k, w, A1, A2, frames)

    def human():
        click.echo(f"omega^2 = {rep['omega2']:.15g}")
        click.echo(f"E1 = {rep['E1']:.15g}")
        click.echo(f"E2 = {rep['E2']:.15g}")
        click.echo(f"E2 - E1 = {rep['E2-E1']:.15g}")
        click.echo(f"{'w':>10}  {'E1':>20}  {'E2':>20}  {'E2 - E1':>20}")
        for row in rep["frames"]:
            click.echo(f"{row['w']:>10g}  {row['E1']:>20.15g}  {row['E2']:>20.15g}  {row['E2-E1']:>20.15g}")

    _dump(rep, as_json, None, human)


if __name__ == "__main__":
    main()
