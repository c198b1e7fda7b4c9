"""Vortex filaments in R^3 and their tangent loops on the sphere.

A filament is stored on the uniform grid s_j in [0, 2pi) as

    points = periodic(s) + closure * s / (2 pi)

so closed curves have ``closure = 0`` and helices carry their axial
advance per period in ``closure``.  The filament velocity

    u_t = alpha u_s x u_ss + beta (u_sss + 3/2 u_ss x (u_s x u_ss))

differentiated in s gives the sphere flow of :mod:`saflow.flow` for the
tangent loop u_s.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .flow import BlowUpError, FlowParams, resolve_dt
from .loopfield import GridSpec, LoopMap, spectral_antiderivative, spectral_derivative
from .manifold import Sphere2, TWO_PI

ARCLENGTH_TOL = 1e-6
FRAME_THRESHOLD = 1e-6


@dataclass
class FilamentCurve:
    points: np.ndarray
    closure: np.ndarray = field(default_factory=lambda: np.zeros(3))
    grid: GridSpec | None = None
    arclength_tol: float | None = ARCLENGTH_TOL

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.closure = np.asarray(self.closure, dtype=float).reshape(3)
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise ValueError("filament points must have shape (m, 3)")
        if self.grid is None:
            self.grid = GridSpec(self.points.shape[0])
        if not np.all(np.isfinite(self.points)):
            raise ValueError("non-finite filament coordinates")
        if self.arclength_tol is not None and self.arclength_defect() > self.arclength_tol:
            raise ValueError(
                f"curve is not arclength-parametrized: max ||u_s| - 1| = {self.arclength_defect():.3g}"
            )

    def periodic_part(self):
        return self.points - np.outer(self.grid.nodes, self.closure / TWO_PI)

    def derivative(self, order=1):
        d = spectral_derivative(self.periodic_part(), order)
        if order == 1:
            d = d + self.closure / TWO_PI
        return d

    def arclength_defect(self):
        return float(np.max(np.abs(np.linalg.norm(self.derivative(1), axis=1) - 1.0)))

    def copy(self):
        return FilamentCurve(self.points.copy(), self.closure.copy(), self.grid, None)


def planar_circle(grid, center=(0.0, 0.0, 0.0)):
    """Unit circle in the xy-plane, counterclockwise seen from +z."""
    s = grid.nodes
    pts = np.stack([np.cos(s), np.sin(s), np.zeros_like(s)], axis=1) + np.asarray(center, dtype=float)
    return FilamentCurve(pts, np.zeros(3), grid)


def helix(grid, a, b):
    """(a cos s, a sin s, b s) with a^2 + b^2 = 1 so that s is arclength.

    Curvature is ``a`` and torsion ``b``.
    """
    if abs(a * a + b * b - 1.0) > 1e-12:
        raise ValueError("helix on the 2 pi grid needs a^2 + b^2 = 1")
    s = grid.nodes
    pts = np.stack([a * np.cos(s), a * np.sin(s), b * s], axis=1)
    return FilamentCurve(pts, np.array([0.0, 0.0, TWO_PI * b]), grid)


def straight_line(grid, direction=(0.0, 0.0, 1.0)):
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    return FilamentCurve(np.outer(grid.nodes, d), TWO_PI * d, grid)


def filament_velocity(c, alpha, beta):
    mult = K.derivative_multiplier(c.grid.m, 1)
    return K.filament_rhs(
        np.ascontiguousarray(c.points), c.closure, c.grid.nodes, mult, float(alpha), float(beta)
    )


def tangent_field(c):
    """u_s renormalized onto the unit sphere."""
    us = c.derivative(1)
    return LoopMap(Sphere2(), us / np.linalg.norm(us, axis=1, keepdims=True), c.grid)


def reconstruct(u, base=(0.0, 0.0, 0.0), arclength_tol=ARCLENGTH_TOL):
    """Integrate a sphere loop back into a filament starting at ``base``.

    The mean of u becomes the closure vector; the mean-free part is
    integrated spectrally, shifted so that node 0 sits at ``base``.
    """
    if not isinstance(u.geometry, Sphere2):
        raise TypeError("reconstruct expects a loop on Sphere2")
    closure = u.grid.dx * np.sum(u.points, axis=0)
    periodic = spectral_antiderivative(u.points)
    pts = periodic - periodic[0] + np.asarray(base, dtype=float) + np.outer(u.grid.nodes, closure / TWO_PI)
    return FilamentCurve(pts, closure, u.grid, arclength_tol)


@dataclass
class FrenetData:
    k: np.ndarray
    tau: np.ndarray
    t: np.ndarray
    n: np.ndarray
    b: np.ndarray
    flags: np.ndarray

    def orthonormality_defect(self):
        """Largest deviation of (t, n, b) from orthonormal over unflagged nodes."""
        ok = ~self.flags
        if not np.any(ok):
            return 0.0
        F = np.stack([self.t[ok], self.n[ok], self.b[ok]], axis=1)
        gram = np.einsum("jai,jbi->jab", F, F)
        return float(np.max(np.abs(gram - np.eye(3))))


def frenet(c, threshold=FRAME_THRESHOLD):
    """Curvature, torsion and Frenet frame; nodes with k <= threshold are flagged.

    Torsion is evaluated as det(u_s, u_ss, u_sss) / k^2, which equals
    h(n_s, b) for an arclength parametrization; flagged nodes get tau = 0
    and zero normal/binormal.
    """
    t = c.derivative(1)
    uss = c.derivative(2)
    usss = c.derivative(3)
    k = np.linalg.norm(uss, axis=1)
    flags = k <= threshold
    safe = np.where(flags, 1.0, k)
    n = np.where(flags[:, None], 0.0, uss / safe[:, None])
    b = np.cross(t, n)
    tau = np.where(flags, 0.0, np.einsum("ij,ij->i", usss, np.cross(t, uss)) / safe**2)
    return FrenetData(k, tau, t, n, b, flags)


@dataclass
class FilamentTrajectory:
    dt: float
    times: list = field(default_factory=list)
    curves: list = field(default_factory=list)

    @property
    def final(self):
        return self.curves[-1]

    def arclength_drift(self):
        return max(c.arclength_defect() for c in self.curves)


def evolve_filament(c0, alpha, beta, cfg):
    """RK4 in time at the sphere-flow step limit; no reparametrization."""
    params = FlowParams(alpha, beta, 0.0, 0.0)
    dt, nsteps = resolve_dt(params, c0.grid, cfg)
    mult = K.derivative_multiplier(c0.grid.m, 1)
    state = np.ascontiguousarray(c0.points)
    traj = FilamentTrajectory(dt)
    traj.times.append(0.0)
    traj.curves.append(c0.copy())
    i = 0
    while i < nsteps:
        nxt = min(nsteps, (i // cfg.snapshot_stride + 1) * cfg.snapshot_stride)
        state, done, node, status = K.filament_advance(
            state, nxt - i, dt, c0.closure, c0.grid.nodes, mult, params.alpha, params.beta
        )
        if status != K.OK:
            t_last = (i + done) * dt
            raise BlowUpError(f"filament blow-up at node {node}; last valid time t = {t_last:.6g}", t=t_last, node=node)
        i = nxt
        traj.times.append(i * dt)
        traj.curves.append(FilamentCurve(state.copy(), c0.closure, c0.grid, None))
    return traj


def write_filament_csv(path, c, header_lines=()):
    fr = frenet(c)
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("s_j,x,y,z,k,tau\n")
        for s, p, k, tau in zip(c.grid.nodes, c.points, fr.k, fr.tau):
            fh.write(",".join(f"{v:.17g}" for v in (s, *p, k, tau)) + "\n")


__all__ = [
    "FilamentCurve",
    "FilamentTrajectory",
    "FrenetData",
    "evolve_filament",
    "filament_velocity",
    "frenet",
    "helix",
    "planar_circle",
    "reconstruct",
    "straight_line",
    "tangent_field",
    "write_filament_csv",
]
