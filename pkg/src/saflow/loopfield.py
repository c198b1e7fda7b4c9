"""Uniformly sampled loops, Fourier differentiation and bundle-valued quadrature."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .manifold import TWO_PI, TargetGeometry


@dataclass(frozen=True)
class GridSpec:
    m: int

    def __post_init__(self):
        m = int(self.m)
        if m < 16 or m & (m - 1):
            raise ValueError(f"grid size must be a power of two >= 16, got {self.m}")
        object.__setattr__(self, "m", m)

    @property
    def dx(self):
        return TWO_PI / self.m

    @property
    def nodes(self):
        return np.arange(self.m) * self.dx

    @property
    def wavenumbers(self):
        """rfft wavenumbers with the Nyquist entry zeroed."""
        k = np.arange(self.m // 2 + 1, dtype=float)
        k[-1] = 0.0
        return k

    @property
    def full_wavenumbers(self):
        """fft wavenumbers (complex data) with the Nyquist entry zeroed."""
        k = np.fft.fftfreq(self.m, 1.0 / self.m)
        k[self.m // 2] = 0.0
        return k


@dataclass
class LoopMap:
    geometry: TargetGeometry
    points: np.ndarray
    grid: GridSpec = field(default=None)

    def __post_init__(self):
        pts = self.geometry.validate_point(np.asarray(self.points, dtype=float))
        if pts.ndim != 2 or pts.shape[1] != self.geometry.dim:
            raise ValueError(f"points must have shape (m, {self.geometry.dim}), got {pts.shape}")
        self.points = pts
        if self.grid is None:
            self.grid = GridSpec(pts.shape[0])
        elif self.grid.m != pts.shape[0]:
            raise ValueError("grid size does not match the number of points")

    def copy(self):
        return LoopMap(self.geometry, self.points.copy(), self.grid)


@dataclass
class LoopField:
    loop: LoopMap
    vectors: np.ndarray

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=float)
        if self.vectors.shape != self.loop.points.shape:
            raise ValueError("field shape must match its loop")

    @property
    def grid(self):
        return self.loop.grid


def spectral_derivative(f, order=1, axis=0):
    """Fourier derivative of real periodic samples along ``axis``.

    The Nyquist coefficient is zeroed for every order, so applying the
    first derivative twice is identical to asking for ``order=2``.
    """
    f = np.asarray(f, dtype=float)
    m = f.shape[axis]
    if order == 0:
        return f.copy()
    k = np.arange(m // 2 + 1, dtype=float)
    mult = (1j * k) ** order
    mult[-1] = 0.0 if m % 2 == 0 else mult[-1]
    shape = [1] * f.ndim
    shape[axis] = -1
    F = np.fft.rfft(f, axis=axis) * mult.reshape(shape)
    return np.fft.irfft(F, n=m, axis=axis)


def spectral_shift(f, shift, axis=0):
    """Evaluate the trigonometric interpolant of ``f`` at ``x_j + shift``."""
    f = np.asarray(f, dtype=float)
    m = f.shape[axis]
    k = np.arange(m // 2 + 1, dtype=float)
    phase = np.exp(1j * k * shift)
    phase[-1] = 0.0
    shape = [1] * f.ndim
    shape[axis] = -1
    F = np.fft.rfft(f, axis=axis)
    nyq = np.take(F, [m // 2], axis=axis) * np.cos(m // 2 * shift)
    F = F * phase.reshape(shape)
    idx = [slice(None)] * f.ndim
    idx[axis] = slice(m // 2, m // 2 + 1)
    F[tuple(idx)] = nyq
    return np.fft.irfft(F, n=m, axis=axis)


def spectral_refine(f, factor, axis=0):
    """Trigonometric interpolation onto a grid ``factor`` times finer."""
    f = np.asarray(f, dtype=float)
    m = f.shape[axis]
    F = np.fft.rfft(f, axis=axis)
    n = m * factor
    shape = list(F.shape)
    shape[axis] = n // 2 + 1
    G = np.zeros(shape, dtype=complex)
    idx = [slice(None)] * f.ndim
    idx[axis] = slice(0, m // 2)
    G[tuple(idx)] = np.take(F, np.arange(m // 2), axis=axis)
    # split the Nyquist coefficient symmetrically
    idx[axis] = slice(m // 2, m // 2 + 1)
    G[tuple(idx)] = 0.5 * np.take(F, [m // 2], axis=axis)
    return np.fft.irfft(G, n=n, axis=axis) * factor


def spectral_antiderivative(f, axis=0):
    """Zero-mean antiderivative of the mean-free part of ``f`` (Nyquist dropped)."""
    f = np.asarray(f, dtype=float)
    m = f.shape[axis]
    k = np.arange(m // 2 + 1, dtype=float)
    mult = np.zeros(m // 2 + 1, dtype=complex)
    mult[1 : m // 2] = 1.0 / (1j * k[1 : m // 2])
    shape = [1] * f.ndim
    shape[axis] = -1
    return np.fft.irfft(np.fft.rfft(f, axis=axis) * mult.reshape(shape), n=m, axis=axis)


def ambient_derivative(u):
    """Coordinate derivative of a loop or field, handling torus winding."""
    if isinstance(u, LoopField):
        return spectral_derivative(u.vectors)
    periodic, slope = u.geometry.lift(u.points)
    return spectral_derivative(periodic) + slope


def velocity(u):
    """u_x as a tangent field (projected onto the tangent plane on S^2)."""
    g = u.geometry
    return LoopField(u, g.project(u.points, ambient_derivative(u)))


def covariant_derivative(u, X):
    """nabla_x X along the loop ``u``."""
    g = u.geometry
    ux = velocity(u).vectors
    return LoopField(u, g.connection(u.points, ux, X.vectors, spectral_derivative(X.vectors)))


def covariant_derivatives(u, order):
    """[u_x, nabla_x u_x, ..., nabla_x^order u_x]."""
    fields = [velocity(u)]
    for _ in range(order):
        fields.append(covariant_derivative(u, fields[-1]))
    return fields


def loop_integral(f, grid):
    """Periodic trapezoid rule dx * sum(f)."""
    return float(grid.dx * np.sum(np.asarray(f, dtype=float)))


# --- CSV --------------------------------------------------------------------


def _axis_names(geometry):
    return ["x", "y", "z"][: geometry.dim] if geometry.dim <= 3 else [f"c{i}" for i in range(geometry.dim)]


def loop_csv_rows(u, X=None):
    names = ["x_j"] + [f"u_{a}" for a in _axis_names(u.geometry)]
    cols = [u.grid.nodes[:, None], u.points]
    if X is not None:
        names += [f"v_{a}" for a in _axis_names(u.geometry)]
        cols.append(X.vectors)
    return names, np.hstack(cols)


def write_loop_csv(path, u, X=None, header_lines=()):
    names, data = loop_csv_rows(u, X)
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(",".join(names) + "\n")
        for row in data:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_loop_csv(path, geometry):
    """Inverse of :func:`write_loop_csv` (point columns only)."""
    with open(path) as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    if not rows or rows[0][:1] != ["x_j"]:
        raise ValueError(f"{path}: not a loop CSV")
    body = np.array(rows[1:], dtype=float)
    return LoopMap(geometry, body[:, 1 : 1 + geometry.dim])
