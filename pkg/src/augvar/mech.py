"""Two equal masses on a spring riding a train.

Positions x1, x2 of mass m each, spring constant k (potential k^2 (x1-x2)^2 / 2),
train velocity w.  In baricentric variables x = (x1+x2)/2, q = (x1-x2)/2
the Lagrangian is L = m (x'^2 + q'^2) - 2 k^2 q^2, with omega^2 = 2 k^2 / m,
and the solutions are x1 = w t + A cos(omega t), x2 = w t - A cos(omega t).

The observer energy m w^2 + m A^2 omega^2 depends on the frame through w;
the difference between two solutions with the same w does not.  The same
system is registered in the theory catalog as ``spring_pair`` on a
one-dimensional time chart so the field-theory machinery applies to it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import augment
from . import geom
from . import noether as nt
from . import symker as sk
from .geom import FieldConfig, SymmetryGenerator, TensorField
from .noether import DeformationX
from .symker import Chart

__all__ = [
    "MechError",
    "SpringSystem",
    "BaricentricState",
    "exact_solution",
    "state",
    "mechanical_energy",
    "observer_energy",
    "relative_energy",
    "augmented_mech_energy",
    "boost_invariance_check",
    "BoostReport",
    "spring_config",
    "symplectic_check",
    "appendix_report",
]

ENERGY_TOL = 1e-12


class MechError(ValueError):
    pass


@dataclass(frozen=True)
class SpringSystem:
    """Mass m per point, spring constant k, train velocity w, amplitude A."""

    m: float = 1.0
    k: float = 1.0
    w: float = 0.0
    A: float = 0.0

    def __post_init__(self):
        for name in ("m", "k", "w", "A"):
            if not math.isfinite(getattr(self, name)):
                raise MechError(f"{name} must be finite")
        if self.m <= 0 or self.k <= 0:
            raise MechError("m and k must be positive")

    @property
    def omega2(self) -> float:
        return 2.0 * self.k ** 2 / self.m

    @property
    def omega(self) -> float:
        return math.sqrt(self.omega2)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    def boosted(self, v: float) -> "SpringSystem":
        """The same motion seen from a frame moving with velocity -v."""
        return replace(self, w=self.w + v)


@dataclass(frozen=True)
class BaricentricState:
    """x = (x1+x2)/2, q = (x1-x2)/2 and their velocities w = x', u = q'."""

    t: float
    x: float
    q: float
    u: float
    w: float

    @classmethod
    def from_positions(cls, t, x1, x2, v1, v2) -> "BaricentricState":
        return cls(t, 0.5 * (x1 + x2), 0.5 * (x1 - x2), 0.5 * (v1 - v2), 0.5 * (v1 + v2))

    def positions(self) -> tuple:
        return self.x + self.q, self.x - self.q


def exact_solution(sys: SpringSystem, t):
    """(x1, x2) at time t (scalar or array)."""
    c = sys.A * np.cos(sys.omega * np.asarray(t, dtype=float))
    wt = sys.w * np.asarray(t, dtype=float)
    x1, x2 = wt + c, wt - c
    return (float(x1), float(x2)) if np.ndim(x1) == 0 else (x1, x2)


def state(sys: SpringSystem, t: float) -> BaricentricState:
    om = sys.omega
    return BaricentricState(t, sys.w * t, sys.A * math.cos(om * t), -sys.A * om * math.sin(om * t), sys.w)


def mechanical_energy(sys: SpringSystem, st: BaricentricState) -> float:
    """Kinetic plus potential energy m (w^2 + u^2) + 2 k^2 q^2."""
    return sys.m * (st.w ** 2 + st.u ** 2) + 2.0 * sys.k ** 2 * st.q ** 2


def _times(sys: SpringSystem, n: int = 10) -> np.ndarray:
    return np.linspace(0.0, 10.0 * sys.period, n)


def observer_energy(sys: SpringSystem, n_times: int = 10) -> float:
    """m w^2 + m A^2 omega^2, after checking that the full kinetic plus
    potential energy along the exact solution is constant at ``n_times``
    times over ten periods."""
    e = sys.m * sys.w ** 2 + sys.m * sys.A ** 2 * sys.omega2
    vals = [mechanical_energy(sys, state(sys, float(t))) for t in _times(sys, n_times)]
    spread = max(vals) - min(vals)
    if spread > ENERGY_TOL * max(1.0, abs(e)) or abs(vals[0] - e) > ENERGY_TOL * max(1.0, abs(e)):
        raise MechError(f"energy not conserved along the solution (spread {spread:.3g})")
    return e


def _same_system(s1: SpringSystem, s2: SpringSystem):
    if s1.m != s2.m or s1.k != s2.k:
        raise MechError("the two solutions must share m and k")


def relative_energy(sys1: SpringSystem, sys2: SpringSystem, check_frames: Sequence[float] = (0.0, 1.0, 5.0)) -> float:
    """E2 - E1 = m (A2^2 - A1^2) omega^2.

    The value is recomputed from observer energies in each frame of
    ``check_frames`` (train velocities); a frame dependence raises."""
    _same_system(sys1, sys2)
    if sys1.w != sys2.w:
        raise MechError("the two solutions must share the train velocity")
    d = sys1.m * (sys2.A ** 2 - sys1.A ** 2) * sys1.omega2
    for w in check_frames:
        e = observer_energy(replace(sys2, w=w)) - observer_energy(replace(sys1, w=w))
        if abs(e - d) > ENERGY_TOL * max(1.0, abs(d)):
            raise MechError(f"relative energy depends on the frame: {e} at w={w} against {d}")
    return d


# ---------------------------------------------------------------------------
# the catalog route

def time_chart(T: float = 10.0) -> Chart:
    return Chart(("t",), 1, ((0.0, T),), "time")


def spring_config(sys: SpringSystem, chart: Chart | None = None, name: str = "") -> FieldConfig:
    """The exact solution as a configuration of the ``spring_pair`` theory."""
    chart = chart or time_chart(sys.period)
    t = chart.symbols[0]
    x = sk.mul(sys.w, t)
    q = sk.mul(sys.A, sk.cos(sk.mul(sys.omega, t)))
    fields = {"x": TensorField(chart, "", np.array(x, dtype=object)),
              "q": TensorField(chart, "", np.array(q, dtype=object))}
    return FieldConfig(chart, fields, {"x": "point-particle", "q": "point-particle"},
                       {"m": sys.m, "k": sys.k}, name=name or f"spring(w={sys.w:g},A={sys.A:g})")


def _spring():
    return nt.lookup("spring_pair")


def augmented_mech_energy(config: SpringSystem, vacuum: SpringSystem, n_times: int = 7) -> float:
    """Noether energy of L - Lbar (no correction term) along the pair of
    solutions, read off the time component of the current of the
    generator d/dt.  Equals m (w^2 - wbar^2) + m omega^2 (A^2 - Abar^2)."""
    _same_system(config, vacuum)
    chart = time_chart(max(config.period, vacuum.period))
    y = spring_config(config, chart)
    yb = spring_config(vacuum, chart)
    aug = augment.augmented(_spring(), "none")
    cfg = augment.merged_config(aug.base, y, yb)
    gen = SymmetryGenerator.coordinate(chart, "t")
    E = nt.noether_current(aug.entry, cfg, gen)
    pts = np.linspace(0.0, chart.ranges[0][1], n_times)[:, None]
    vals = E.evaluate(pts)[:, 0]
    ref = float(np.max(np.abs(vals))) if len(vals) else 0.0
    if np.ptp(vals) > 1e-10 * max(1.0, ref):
        raise MechError("augmented energy is not conserved")
    return float(np.mean(vals))


@dataclass(frozen=True)
class BoostReport:
    boosts: tuple
    values: tuple
    spread: float

    @property
    def passed(self) -> bool:
        return self.spread <= ENERGY_TOL

    def rows(self) -> list:
        return [{"boost": b, "relative_energy": v} for b, v in zip(self.boosts, self.values)]


def boost_invariance_check(sys1: SpringSystem, sys2: SpringSystem, boosts: Sequence[float],
                           t: float = 0.0) -> BoostReport:
    """Relative energy of the pair after (x, q, xbar, qbar) -> (x + v t, q,
    xbar + v t, qbar) for every boost v, from the boosted states."""
    _same_system(sys1, sys2)
    if sys1.w != sys2.w:
        raise MechError("boost invariance needs equal train velocities")
    vals = []
    for v in boosts:
        b1, b2 = sys1.boosted(v), sys2.boosted(v)
        vals.append(mechanical_energy(b2, state(b2, t)) - mechanical_energy(b1, state(b1, t)))
    spread = float(max(vals) - min(vals)) if vals else 0.0
    return BoostReport(tuple(float(b) for b in boosts), tuple(vals), spread)


def symplectic_check(sys: SpringSystem, h: float = 1e-6, n_times: int = 5) -> dict:
    """omega(X, Lie_t y) for X = d y / dA against the finite-difference
    derivative of the observer energy in A."""
    chart = time_chart(sys.period)
    cfg = spring_config(sys, chart)
    t = chart.symbols[0]
    X = DeformationX({"x": TensorField(chart, "", np.array(sk.ZERO, dtype=object)),
                      "q": TensorField(chart, "", np.array(sk.cos(sk.mul(sys.omega, t)), dtype=object))},
                     label="d/dA")
    gen = SymmetryGenerator.coordinate(chart, "t")
    om = nt.symplectic_form(_spring(), cfg, X, gen)
    pts = np.linspace(0.0, sys.period, n_times)[:, None]
    vals = om.evaluate(pts)[:, 0]
    fd = (observer_energy(replace(sys, A=sys.A + h)) - observer_energy(replace(sys, A=sys.A - h))) / (2 * h)
    omega_val = float(np.mean(vals))
    scale = max(abs(fd), 1e-300)
    return {"omega": omega_val, "spread": float(np.ptp(vals)), "dE_dA": fd,
            "relative": abs(abs(omega_val) - abs(fd)) / scale,
            "sign": int(np.sign(omega_val * fd)) if fd else 0}


def appendix_report(m: float, k: float, w: float, A1: float, A2: float,
                    boosts: Sequence[float] = (0.0, 1.0, 5.0, 100.0)) -> dict:
    """Everything the appendix-a command prints."""
    s1, s2 = SpringSystem(m, k, w, A1), SpringSystem(m, k, w, A2)
    E1, E2 = observer_energy(s1), observer_energy(s2)
    rel = relative_energy(s1, s2)
    table = []
    for v in boosts:
        b1, b2 = replace(s1, w=v), replace(s2, w=v)
        table.append({"w": float(v), "E1": observer_energy(b1), "E2": observer_energy(b2),
                      "E2-E1": observer_energy(b2) - observer_energy(b1)})
    spread = max(r["E2-E1"] for r in table) - min(r["E2-E1"] for r in table)
    return {"m": m, "k": k, "w": w, "A1": A1, "A2": A2, "omega2": s1.omega2, "E1": E1, "E2": E2,
            "E2-E1": rel, "frames": table, "spread": spread}
