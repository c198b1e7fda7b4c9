"""Schrodinger-Airy loop flow: right-hand side, RK4 stepping, trajectories."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .invariants import EnergyReport, energy_report
from .loopfield import LoopField, LoopMap, covariant_derivatives
from .manifold import ChartBlowUp, ConformalChart, FlatTorus2, Sphere2

STABILITY_SAFETY = 0.5
_TINY = 1e-300


class BlowUpError(RuntimeError):
    """The solution left the representable range (NaN or |coordinate| > 1e8).

    ``t`` is the last time at which the state was valid and ``partial`` the
    :class:`FlowResult` accumulated up to that time (may be ``None``).
    """

    def __init__(self, message, t=None, node=None, partial=None):
        super().__init__(message)
        self.t = t
        self.node = node
        self.partial = partial


@dataclass(frozen=True)
class FlowParams:
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "epsilon"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.alpha == 0 and self.beta == 0 and self.gamma == 0:
            warnings.warn("alpha, beta and gamma are all zero: degenerate flow", stacklevel=2)


@dataclass(frozen=True)
class StepperConfig:
    t_end: float
    dt: float | None = None
    snapshot_stride: int = 1000
    energy_stride: int = 100
    allow_unstable_dt: bool = False

    def __post_init__(self):
        if not self.t_end >= 0:
            raise ValueError("t_end must be >= 0")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be > 0")
        if int(self.snapshot_stride) < 1 or int(self.energy_stride) < 1:
            raise ValueError("strides must be positive integers")


def stability_dt(p, grid):
    """Heuristic explicit-RK4 step limit for the linearised flow on ``grid``.

    The gamma contribution (a first-order transport term for |u_x| ~ 1) is
    an addition to the dispersive/parabolic bounds so that gamma-only runs
    get a finite step.
    """
    k = grid.m / 2
    dispersive = 2.8 / (abs(p.beta) * k**3 + abs(p.alpha) * k**2 + abs(p.gamma) * k + _TINY)
    parabolic = 2.0 / (p.epsilon * k**4 + _TINY)
    return min(dispersive, parabolic) * STABILITY_SAFETY


def flow_rhs(u, p):
    """u_t assembled from the geometry and covariant-derivative primitives."""
    g = u.geometry
    if not g.supports_flow:
        raise TypeError(f"{g!r} has no flow")
    fields = covariant_derivatives(u, 3 if p.epsilon else 2)
    pts = u.points
    ux, t1, t2 = (f.vectors for f in fields[:3])
    jux = g.complex_structure(pts, ux)
    rhs = (
        p.alpha * g.complex_structure(pts, t1)
        + p.beta * (t2 + 0.5 * g.curvature(pts, ux, jux, jux))
        + p.gamma * g.metric(pts, ux, ux)[:, None] * ux
    )
    if p.epsilon:
        rhs = rhs - p.epsilon * fields[3].vectors
    rhs = g.project(pts, rhs)
    bad = np.flatnonzero(~np.all(np.isfinite(rhs), axis=1))
    if bad.size:
        raise BlowUpError(f"field blow-up at node {int(bad[0])}", node=int(bad[0]))
    return LoopField(u, rhs)


class _Stepper:
    """Binds a loop's geometry to the matching compiled advance kernel."""

    def __init__(self, u0, p):
        g = u0.geometry
        self.geometry = g
        self.grid = u0.grid
        self.p = p
        self.mult = K.derivative_multiplier(u0.grid.m, 1)
        coeffs = (p.alpha, p.beta, p.gamma, p.epsilon)
        if isinstance(g, Sphere2):
            self.state = np.ascontiguousarray(u0.points, dtype=float)
            self._advance = lambda s, n, dt: K.sphere_advance(s, n, dt, self.mult, *coeffs)
        elif isinstance(g, (FlatTorus2, ConformalChart)):
            periodic, slope = g.lift(u0.points)
            nodes = u0.grid.nodes
            self.state = np.ascontiguousarray(periodic + np.outer(nodes, slope))
            conformal = isinstance(g, ConformalChart)
            curv = g.gaussian_curvature
            guard = g.guard if conformal else np.inf
            slope = np.asarray(slope, dtype=float)
            self._advance = lambda s, n, dt: K.chart_advance(
                s, n, dt, slope, nodes, self.mult, *coeffs, curv, conformal, guard
            )
        else:
            raise TypeError(f"no flow on {g!r}")

    def advance(self, nsteps, dt):
        new, done, node, status = self._advance(self.state, int(nsteps), float(dt))
        self.state = new
        return done, node, status

    def loop(self):
        return LoopMap(self.geometry, self.geometry.wrap(self.state.copy()), self.grid)


def step(u, p, dt):
    """One RK4 step (stage velocities tangent, final update retracted)."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    if dt == 0:
        return u.copy()
    st = _Stepper(u, p)
    _, node, status = st.advance(1, dt)
    _raise_for_status(status, node, 0.0)
    return st.loop()


def _raise_for_status(status, node, t_last, partial=None):
    if status == K.BLOW_UP:
        raise BlowUpError(
            f"field blow-up at node {node}; last valid time t = {t_last:.6g}", t=t_last, node=node, partial=partial
        )
    if status == K.CHART_GUARD:
        raise ChartBlowUp(
            f"chart blow-up at node {node} (|z| > 1 - 1e-6) after t = {t_last:.6g}; reduce the step size"
        )


@dataclass
class FlowResult:
    final: LoopMap
    dt: float
    steps: int
    dt_overridden: bool
    snapshot_times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    energies: list = field(default_factory=list)


def resolve_dt(p, grid, cfg):
    """Step actually used: the stability step unless overridden, shortened to land on t_end."""
    limit = stability_dt(p, grid)
    dt = limit if cfg.dt is None else float(cfg.dt)
    if dt > limit * (1 + 1e-12) and not cfg.allow_unstable_dt:
        raise ValueError(f"dt = {dt:.3g} exceeds the stability limit {limit:.3g}; set allow_unstable_dt to force it")
    if cfg.t_end == 0:
        return dt, 0
    n = max(1, math.ceil(cfg.t_end / dt - 1e-9))
    return cfg.t_end / n, n


def evolve(u0, p, cfg, sinks=()):
    """Integrate from t = 0 to ``cfg.t_end``.

    Snapshots and :class:`EnergyReport` records are emitted every
    ``snapshot_stride`` / ``energy_stride`` steps (and always at t = 0 and
    at the final time).  Each sink may define ``on_snapshot(t, loop)`` and
    ``on_energy(report)``.
    """
    dt, nsteps = resolve_dt(p, u0.grid, cfg)
    result = FlowResult(final=u0.copy(), dt=dt, steps=nsteps, dt_overridden=cfg.dt is not None)
    st = _Stepper(u0, p)

    def emit(i, loop):
        t = i * dt
        if i % cfg.snapshot_stride == 0 or i == nsteps:
            result.snapshot_times.append(t)
            result.snapshots.append(loop)
            for s in sinks:
                if hasattr(s, "on_snapshot"):
                    s.on_snapshot(t, loop)
        if i % cfg.energy_stride == 0 or i == nsteps:
            rep = energy_report(loop, t)
            result.energies.append(rep)
            for s in sinks:
                if hasattr(s, "on_energy"):
                    s.on_energy(rep)

    emit(0, u0.copy())
    i = 0
    while i < nsteps:
        nxt = min(
            nsteps,
            (i // cfg.snapshot_stride + 1) * cfg.snapshot_stride,
            (i // cfg.energy_stride + 1) * cfg.energy_stride,
        )
        done, node, status = st.advance(nxt - i, dt)
        if status != K.OK:
            result.final = st.loop()
            _raise_for_status(status, node, (i + done) * dt, partial=result)
        i = nxt
        emit(i, st.loop())
    result.final = st.loop()
    return result


def sup_distance(a, b):
    """Max node-wise coordinate distance between two loops (torus-aware)."""
    d = a.points - b.points
    if isinstance(a.geometry, FlatTorus2):
        d = (d + np.pi) % (2 * np.pi) - np.pi
    return float(np.max(np.linalg.norm(d, axis=1)))


__all__ = [
    "BlowUpError",
    "EnergyReport",
    "FlowParams",
    "FlowResult",
    "StepperConfig",
    "evolve",
    "flow_rhs",
    "resolve_dt",
    "stability_dt",
    "step",
    "sup_distance",
]
