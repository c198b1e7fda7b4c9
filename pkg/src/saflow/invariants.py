"""Energy functionals E1-E4 of a loop and drift bookkeeping along trajectories."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .loopfield import covariant_derivatives, loop_integral


@dataclass(frozen=True)
class EnergyReport:
    t: float
    e1: float
    e2: float
    e3: float
    e4: float

    def as_row(self):
        return (self.t, self.e1, self.e2, self.e3, self.e4)

    def as_dict(self):
        return asdict(self)


def _terms(u):
    g = u.geometry
    p = u.points
    ux, t1, t2 = (f.vectors for f in covariant_derivatives(u, 2))
    jux = g.complex_structure(p, ux)
    return g, p, ux, t1, t2, jux


def e1(u):
    g = u.geometry
    ux = covariant_derivatives(u, 0)[0].vectors
    return 0.5 * loop_integral(g.metric(u.points, ux, ux), u.grid)


def e2(u):
    """Pseudo-helicity: integral of h(nabla_x u_x, J u_x)."""
    g, p, ux, t1, _, jux = _terms(u)
    return loop_integral(g.metric(p, t1, jux), u.grid)


def e3(u):
    g, p, ux, t1, _, jux = _terms(u)
    dens = g.metric(p, t1, t1) - 0.25 * g.metric(p, ux, g.curvature(p, ux, jux, jux))
    return loop_integral(dens, u.grid)


def e4(u):
    g, p, ux, t1, t2, jux = _terms(u)
    dens = (
        2.0 * g.metric(p, t2, t2)
        - 3.0 * g.metric(p, t1, g.curvature(p, t1, ux, ux))
        - 5.0 * g.metric(p, t1, g.curvature(p, t1, jux, jux))
    )
    return loop_integral(dens, u.grid)


def energy_report(u, t=0.0):
    g, p, ux, t1, t2, jux = _terms(u)
    h = g.metric
    R = g.curvature
    dens1 = 0.5 * h(p, ux, ux)
    dens2 = h(p, t1, jux)
    dens3 = h(p, t1, t1) - 0.25 * h(p, ux, R(p, ux, jux, jux))
    dens4 = 2.0 * h(p, t2, t2) - 3.0 * h(p, t1, R(p, t1, ux, ux)) - 5.0 * h(p, t1, R(p, t1, jux, jux))
    grid = u.grid
    return EnergyReport(
        float(t),
        loop_integral(dens1, grid),
        loop_integral(dens2, grid),
        loop_integral(dens3, grid),
        loop_integral(dens4, grid),
    )


def e3_rate(u, beta):
    """Predicted dE3/dt = beta * integral h(R(nabla u_x, u_x)u_x, R(u_x, Ju_x)Ju_x)."""
    g, p, ux, t1, _, jux = _terms(u)
    dens = g.metric(p, g.curvature(p, t1, ux, ux), g.curvature(p, ux, jux, jux))
    return beta * loop_integral(dens, u.grid)


def relative_drift(values):
    v = np.asarray(values, dtype=float)
    return float(np.max(np.abs(v - v[0])) / max(abs(v[0]), 1.0))


@dataclass(frozen=True)
class GrowthCheck:
    """Fit-and-extrapolate test of E4(t) + 1 <= (E4(0) + 1) exp(C t).

    E4 is shifted by its minimum so the logarithm is defined; the rate C is
    the smallest slope keeping ``log(E4 + 1 - min E4)`` under a line from
    t = 0 on the fitting window, and ``violation`` is the largest relative
    excess of ``E4 + 1 - min E4`` over the extrapolated bound afterwards.
    """

    rate: float
    violation: float
    tolerance: float

    @property
    def ok(self):
        return math.isfinite(self.violation) and self.violation <= self.tolerance


def e4_growth_check(times, values, fit_until=None, tolerance=0.1):
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.size < 3:
        raise ValueError("need at least three samples")
    if fit_until is None:
        fit_until = t[0] + 0.5 * (t[-1] - t[0])
    f = np.log(v + 1.0 - v.min())
    fit = (t > t[0]) & (t <= fit_until + 1e-12)
    test = t > fit_until + 1e-12
    rate = 0.0
    if np.any(fit):
        rate = max(0.0, float(np.max((f[fit] - f[0]) / (t[fit] - t[0]))))
    if not np.any(test):
        return GrowthCheck(rate, 0.0, tolerance)
    excess = np.max(f[test] - (f[0] + rate * (t[test] - t[0])))
    return GrowthCheck(rate, float(max(0.0, math.expm1(excess))), tolerance)


def drift_series(reports, tolerance=0.1):
    """Max relative drift of E1-E3 and the E4 growth check over a report series."""
    if len(reports) < 2:
        raise ValueError("need at least two reports")
    t = [r.t for r in reports]
    out = {
        "e1": relative_drift([r.e1 for r in reports]),
        "e2": relative_drift([r.e2 for r in reports]),
        "e3": relative_drift([r.e3 for r in reports]),
    }
    if len(reports) >= 3:
        chk = e4_growth_check(t, [r.e4 for r in reports], tolerance=tolerance)
        out["e4_rate"] = chk.rate
        out["e4_violation"] = chk.violation
        out["e4_bounded"] = chk.ok
    return out


def write_energy_csv(path, reports, header_lines=()):
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("t,E1,E2,E3,E4\n")
        for r in reports:
            fh.write(",".join(f"{v:.17g}" for v in r.as_row()) + "\n")
