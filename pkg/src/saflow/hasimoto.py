"""Parallel frames along loops and the Hasimoto wavefunction.

Along a loop u the field u_x is written in a parallel orthonormal frame
{e, Je} as u_x = q1 e + q2 Je, giving the complex function q = q1 + i q2.
On a closed loop the transported frame generally fails to close up; the
mismatch is the holonomy angle, which on a surface equals the enclosed
area times the curvature (mod 2 pi).  Only |q| is gauge invariant, so
cross-solver comparisons use moduli.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .loopfield import LoopField, spectral_refine, spectral_shift, velocity
from .manifold import ConformalChart, FlatTorus2, GeometryError, Sphere2, TWO_PI
from .scalarpde import ComplexLoop

DEGENERATE_CURVATURE = 1e-8


@dataclass
class FrameField:
    """Parallel unit field ``e`` along a loop plus the wrap-around mismatch.

    ``wrap`` is the transported vector after one full turn, expressed at
    node 0, so ``holonomy_angle = atan2(h(wrap, Je0), h(wrap, e0))``.
    """

    e: LoopField
    holonomy_angle: float
    wrap: np.ndarray = field(repr=False)

    @property
    def loop(self):
        return self.e.loop

    def je(self):
        u = self.loop
        return u.geometry.complex_structure(u.points, self.e.vectors)


def _kind(g):
    if isinstance(g, Sphere2):
        return K.KIND_SPHERE
    if isinstance(g, FlatTorus2):
        return K.KIND_FLAT
    if isinstance(g, ConformalChart):
        return K.KIND_CONFORMAL
    raise GeometryError(f"no parallel transport on {g!r}")


def _half_nodes(u, ux):
    """Points and velocities at x_j + dx/2 by trigonometric interpolation."""
    g = u.geometry
    h = u.grid.dx
    periodic, slope = g.lift(u.points)
    pts = spectral_shift(periodic, 0.5 * h) + np.outer(u.grid.nodes + 0.5 * h, slope)
    if isinstance(g, Sphere2):
        pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    v = spectral_shift(ux, 0.5 * h)
    return pts, g.project(pts, v)


def initial_frame_vector(g, p0):
    """First reference direction projected at ``p0`` and normalized (second as fallback)."""
    for d in g.reference_directions():
        v = g.project(p0[None], d[None])[0]
        n = float(g.norm(p0[None], v[None])[0])
        if n > 1e-8:
            return v / n
    raise GeometryError("both reference directions are degenerate at the base point")


def parallel_frame(u, e0=None):
    """Solve nabla_x e = 0 from node 0 with RK4 on the grid, renormalizing per node."""
    g = u.geometry
    kind = _kind(g)
    pts = np.ascontiguousarray(u.points)
    ux = np.ascontiguousarray(velocity(u).vectors)
    if e0 is None:
        e0 = initial_frame_vector(g, pts[0])
    else:
        e0 = np.asarray(e0, dtype=float)
        e0 = g.project(pts[:1], e0[None])[0]
        e0 = e0 / g.norm(pts[:1], e0[None])[0]
    pts_half, ux_half = _half_nodes(u, ux)
    frames = K.transport_frame(
        kind,
        float(g.gaussian_curvature),
        pts,
        ux,
        np.ascontiguousarray(pts_half),
        np.ascontiguousarray(ux_half),
        np.ascontiguousarray(e0),
        u.grid.dx,
    )
    e = frames[:-1]
    wrap = frames[-1]
    p0 = pts[:1]
    je0 = g.complex_structure(p0, e[:1])
    angle = math.atan2(float(g.metric(p0, wrap[None], je0)[0]), float(g.metric(p0, wrap[None], e[:1])[0]))
    return FrameField(LoopField(u, e), angle, wrap)


def transport_residual(frame):
    """max_j |nabla_x e| of the frame after removing its holonomy.

    The field ``e~ = cos(theta x / 2pi) e - sin(theta x / 2pi) Je`` is
    periodic and satisfies ``nabla_x e~ = -(theta/2pi) J e~`` exactly when
    ``e`` is parallel, so the spectral residual of that identity measures
    the transport error.
    """
    from .loopfield import covariant_derivative

    u = frame.loop
    g = u.geometry
    rate = frame.holonomy_angle / TWO_PI
    phi = rate * u.grid.nodes
    e = frame.e.vectors
    je = frame.je()
    et = np.cos(phi)[:, None] * e - np.sin(phi)[:, None] * je
    de = covariant_derivative(u, LoopField(u, et)).vectors
    res = de + rate * g.complex_structure(u.points, et)
    return float(np.max(g.norm(u.points, res)))


def extract_q(u, frame):
    """q_j = h(u_x, e) + i h(u_x, Je) at every node."""
    g = u.geometry
    ux = velocity(u).vectors
    e = frame.e.vectors
    je = g.complex_structure(u.points, e)
    return ComplexLoop(u.grid, g.metric(u.points, ux, e) + 1j * g.metric(u.points, ux, je))


def hasimoto_q(u, e0=None):
    frame = parallel_frame(u, e0)
    return extract_q(u, frame), frame


@dataclass
class HasimotoSeries:
    """q for each snapshot of a trajectory with the per-snapshot holonomy."""

    times: list
    values: list
    holonomy: list

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def moduli(self):
        return np.array([q.modulus for q in self.values])


def hasimoto_series(snapshots, times=None):
    """Rebuild the frame for each snapshot and extract q.

    The time-dependent gauge phase is not reconstructed; only ``|q|`` is
    meaningful across snapshots.
    """
    snaps = list(snapshots)
    if times is None:
        times = list(range(len(snaps)))
    vals, hol = [], []
    for u in snaps:
        q, f = hasimoto_q(u)
        vals.append(q)
        hol.append(f.holonomy_angle)
    return HasimotoSeries(list(times), vals, hol)


def classic_hasimoto(curve):
    """Psi = k exp(i * cumulative trapezoid of tau) for a filament curve.

    Nodes where the curvature is below ``DEGENERATE_CURVATURE`` get Psi = 0
    and are marked in ``flags``.
    """
    from .filament import frenet

    fr = frenet(curve, threshold=DEGENERATE_CURVATURE)
    h = curve.grid.dx
    tau = np.where(fr.flags, 0.0, fr.tau)
    phase = np.concatenate([[0.0], np.cumsum(0.5 * h * (tau[1:] + tau[:-1]))])
    psi = np.where(fr.flags, 0.0, fr.k * np.exp(1j * phase))
    return ComplexLoop(curve.grid, psi, flags=fr.flags)


# --- holonomy oracle ---------------------------------------------------------------


def _triangle_solid_angle(a, b, c):
    """Signed solid angle of the spherical triangle (a, b, c), rowwise."""
    num = np.einsum("ij,ij->i", a, np.cross(b, c))
    den = 1.0 + np.einsum("ij,ij->i", a, b) + np.einsum("ij,ij->i", b, c) + np.einsum("ij,ij->i", c, a)
    return 2.0 * np.arctan2(num, den)


def _fan_area(pts):
    pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    a = np.broadcast_to(_apex(pts), pts.shape)
    return float(np.sum(_triangle_solid_angle(a, pts, np.roll(pts, -1, axis=0))))


def enclosed_area(u, refine=16):
    """Area to the left of a loop on the unit sphere, modulo 4 pi.

    The loop is refined spectrally and fanned into geodesic triangles from
    an apex chosen away from the curve.  Replacing each arc by a chord
    costs O(h^2), so the fan sums at ``refine`` and ``2 * refine`` are
    Richardson-extrapolated.  Independent of the transport code.
    """
    if not isinstance(u.geometry, Sphere2):
        raise GeometryError("enclosed_area is defined for Sphere2 loops")
    coarse = _fan_area(spectral_refine(u.points, refine))
    fine = _fan_area(spectral_refine(u.points, 2 * refine))
    return (fine + (fine - coarse) / 3.0) % (2.0 * TWO_PI)


def _apex(pts):
    """A unit vector maximizing the minimum distance to ``pts`` among a few candidates."""
    cand = np.vstack([np.eye(3), -np.eye(3), -np.mean(pts, axis=0, keepdims=True)])
    norms = np.linalg.norm(cand, axis=1)
    cand = cand[norms > 1e-12] / norms[norms > 1e-12, None]
    closest = np.max(cand @ pts.T, axis=1)
    return cand[int(np.argmin(closest))]


def angle_difference(a, b):
    """a - b wrapped to [-pi, pi)."""
    return (a - b + math.pi) % TWO_PI - math.pi


def write_hasimoto_csv(path, q, header_lines=(), metadata=None):
    """ComplexLoop CSV plus a ``<path>.meta.json`` side file with holonomy and flags."""
    from .scalarpde import write_complex_csv

    write_complex_csv(path, q, header_lines)
    meta = dict(metadata or {})
    if q.flags is not None:
        meta["degenerate_nodes"] = [int(i) for i in np.flatnonzero(q.flags)]
    with open(f"{path}.meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


__all__ = [
    "FrameField",
    "HasimotoSeries",
    "angle_difference",
    "classic_hasimoto",
    "enclosed_area",
    "extract_q",
    "hasimoto_q",
    "hasimoto_series",
    "parallel_frame",
    "transport_residual",
    "write_hasimoto_csv",
]
