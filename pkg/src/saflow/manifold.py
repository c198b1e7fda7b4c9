"""Target geometries: metric, complex structure, curvature, projection, retraction.

Every geometry works on batched numpy arrays whose last axis holds the
coordinates, so a whole loop (shape ``(m, d)``) is processed in one call.
The point-checked helpers at the bottom of the module (:func:`metric`,
:func:`curvature`, ...) take :class:`TangentVector` objects and check that
the base points agree before delegating to the geometry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi
DISK_GUARD = 1.0 - 1e-6
BASE_TOL = 1e-12


class GeometryError(ValueError):
    pass


class BasePointMismatch(GeometryError):
    pass


class ChartBlowUp(GeometryError):
    """A chart update left the admissible region (Poincare disk guard)."""


def _dot(a, b):
    return np.sum(a * b, axis=-1)


def _rot90(v):
    out = np.empty_like(v)
    out[..., 0] = -v[..., 1]
    out[..., 1] = v[..., 0]
    return out


@dataclass(frozen=True)
class TangentVector:
    base: np.ndarray
    vec: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))
        object.__setattr__(self, "vec", np.asarray(self.vec, dtype=float))


class TargetGeometry:
    """Base class.  Subclasses fill in the coordinate formulas."""

    name = "abstract"
    dim = 2  # coordinate dimension of points and vectors
    gaussian_curvature = 0.0
    supports_flow = True

    # -- pointwise algebra -------------------------------------------------
    def metric(self, p, X, Y):
        raise NotImplementedError

    def complex_structure(self, p, X):
        raise NotImplementedError

    def curvature(self, p, X, Y, Z):
        """R(X,Y)Z for a real 2-dimensional space form."""
        K = self.gaussian_curvature
        return K * (self.metric(p, Y, Z)[..., None] * X - self.metric(p, X, Z)[..., None] * Y)

    def norm(self, p, X):
        return np.sqrt(np.maximum(self.metric(p, X, X), 0.0))

    def project(self, p, V):
        return np.array(V, dtype=float, copy=True)

    def retract(self, p, V):
        raise NotImplementedError

    def validate_point(self, p):
        return np.asarray(p, dtype=float)

    # -- along a loop ------------------------------------------------------
    def connection(self, p, ux, X, dX):
        """Covariant derivative along a curve with velocity ``ux``.

        ``dX`` is the coordinate derivative of the field ``X``.
        """
        raise NotImplementedError

    def transport_rate(self, p, ux, e):
        """Coordinate derivative of ``e`` that makes it parallel along the curve."""
        raise NotImplementedError

    def lift(self, points):
        """Split loop coordinates into a periodic part and a winding slope.

        The coordinates satisfy ``points = periodic + slope * x`` with ``x``
        the grid nodes.  Only the torus has a nonzero slope.
        """
        pts = np.asarray(points, dtype=float)
        return pts, np.zeros(pts.shape[-1])

    def wrap(self, points):
        return points

    def reference_directions(self):
        return np.eye(self.dim)[:2]

    def __repr__(self):
        return f"{type(self).__name__}()"


class Sphere2(TargetGeometry):
    """Unit sphere in R^3 with J = p x (.)"""

    name = "sphere2"
    dim = 3
    gaussian_curvature = 1.0

    def metric(self, p, X, Y):
        return _dot(X, Y)

    def complex_structure(self, p, X):
        return np.cross(p, X)

    def project(self, p, V):
        p = np.asarray(p, dtype=float)
        V = np.asarray(V, dtype=float)
        return V - _dot(V, p)[..., None] * p

    def retract(self, p, V):
        q = np.asarray(p, dtype=float) + V
        return q / np.linalg.norm(q, axis=-1, keepdims=True)

    def validate_point(self, p):
        p = np.asarray(p, dtype=float)
        n = np.linalg.norm(p, axis=-1, keepdims=True)
        if np.any(n == 0):
            raise GeometryError("zero vector is not a point of the sphere")
        return p / n

    def connection(self, p, ux, X, dX):
        return self.project(p, dX)

    def transport_rate(self, p, ux, e):
        return -_dot(e, ux)[..., None] * p

    def reference_directions(self):
        return np.eye(3)[:2]


class FlatTorus2(TargetGeometry):
    """R^2 / (2 pi Z)^2 with the Euclidean metric."""

    name = "flat_torus2"
    dim = 2
    gaussian_curvature = 0.0

    def metric(self, p, X, Y):
        return _dot(X, Y)

    def complex_structure(self, p, X):
        return _rot90(np.asarray(X, dtype=float))

    def curvature(self, p, X, Y, Z):
        return np.zeros(np.broadcast(X, Y, Z).shape)

    def retract(self, p, V):
        return np.mod(np.asarray(p, dtype=float) + V, TWO_PI)

    def validate_point(self, p):
        return np.mod(np.asarray(p, dtype=float), TWO_PI)

    def wrap(self, points):
        return np.mod(points, TWO_PI)

    def connection(self, p, ux, X, dX):
        return np.array(dX, dtype=float, copy=True)

    def transport_rate(self, p, ux, e):
        return np.zeros_like(e)

    def lift(self, points):
        pts = np.asarray(points, dtype=float)
        m = pts.shape[0]
        steps = np.diff(pts, axis=0, append=pts[:1])
        steps = (steps + np.pi) % TWO_PI - np.pi
        winding = np.rint(steps.sum(axis=0) / TWO_PI)
        unwrapped = pts[0] + np.concatenate([np.zeros((1, pts.shape[1])), np.cumsum(steps[:-1], axis=0)])
        x = np.arange(m) * (TWO_PI / m)
        return unwrapped - np.outer(x, winding), winding


class ConformalChart(TargetGeometry):
    """Chart with metric lambda(z)^2 |dz|^2, lambda = 2 / (1 + K |z|^2).

    K = -1 is the Poincare disk, K = +1 the stereographic sphere (projection
    from the south pole, so that the chart rotation matches p x (.) on S^2).
    """

    dim = 2
    guard = np.inf

    def __init__(self, K):
        self.gaussian_curvature = float(K)

    def conformal_factor(self, p):
        p = np.asarray(p, dtype=float)
        return 2.0 / (1.0 + self.gaussian_curvature * _dot(p, p))

    def grad_log_factor(self, p):
        p = np.asarray(p, dtype=float)
        return -self.gaussian_curvature * self.conformal_factor(p)[..., None] * p

    def metric(self, p, X, Y):
        return self.conformal_factor(p) ** 2 * _dot(X, Y)

    def complex_structure(self, p, X):
        return _rot90(np.asarray(X, dtype=float))

    def retract(self, p, V):
        q = np.asarray(p, dtype=float) + V
        r = np.linalg.norm(q, axis=-1)
        if np.any(r > self.guard):
            raise ChartBlowUp(
                f"chart blow-up: |z| = {float(np.max(r)):.9f} exceeds {self.guard}; reduce the step size"
            )
        return q

    def validate_point(self, p):
        p = np.asarray(p, dtype=float)
        if np.any(np.linalg.norm(p, axis=-1) > self.guard):
            raise ChartBlowUp(f"point outside the chart guard radius {self.guard}")
        return p

    def connection(self, p, ux, X, dX):
        return dX - self.transport_rate(p, ux, X)

    def transport_rate(self, p, ux, e):
        g = self.grad_log_factor(p)
        return -(
            _dot(ux, g)[..., None] * e + _dot(e, g)[..., None] * ux - _dot(ux, e)[..., None] * g
        )

    def to_sphere(self, z):
        """Inverse stereographic map (only meaningful for K = +1)."""
        z = np.asarray(z, dtype=float)
        s = _dot(z, z)[..., None]
        out = np.concatenate([2.0 * z, 1.0 - s], axis=-1)
        return out / (1.0 + s)

    def pushforward(self, z, V):
        """Differential of :meth:`to_sphere` applied to chart vectors ``V``."""
        z = np.asarray(z, dtype=float)
        s = _dot(z, z)[..., None]
        zv = _dot(z, V)[..., None]
        top = 2.0 * V / (1.0 + s) - 4.0 * z * zv / (1.0 + s) ** 2
        bottom = -4.0 * zv / (1.0 + s) ** 2
        return np.concatenate([top, bottom], axis=-1)


class PoincareDisk(ConformalChart):
    name = "poincare_disk"
    guard = DISK_GUARD

    def __init__(self):
        super().__init__(-1.0)

    def __repr__(self):
        return "PoincareDisk()"


class StereographicSphere(ConformalChart):
    """Unit sphere seen through the stereographic chart (cross-checks only)."""

    name = "stereographic_sphere"

    def __init__(self):
        super().__init__(1.0)

    def __repr__(self):
        return "StereographicSphere()"


class HolomorphicSpaceForm(TargetGeometry):
    """Model tangent space R^{2n} of a space of constant holomorphic sectional curvature c.

    Coordinates are interleaved ``(x_1, y_1, ..., x_n, y_n)`` and J maps each
    pair ``(x_i, y_i)`` to ``(-y_i, x_i)``.  Only the curvature algebra is
    available; there is no flow on this target.
    """

    name = "holomorphic_space_form"
    supports_flow = False

    def __init__(self, n, c):
        if int(n) < 1:
            raise GeometryError("complex dimension n must be >= 1")
        self.n = int(n)
        self.c = float(c)
        self.dim = 2 * self.n

    def __repr__(self):
        return f"HolomorphicSpaceForm(n={self.n}, c={self.c})"

    @property
    def origin(self):
        return np.zeros(self.dim)

    def metric(self, p, X, Y):
        return _dot(X, Y)

    def complex_structure(self, p, X):
        X = np.asarray(X, dtype=float)
        out = np.empty_like(X)
        out[..., 0::2] = -X[..., 1::2]
        out[..., 1::2] = X[..., 0::2]
        return out

    def curvature(self, p, X, Y, Z):
        J = self.complex_structure
        d = _dot
        JX, JY, JZ = J(p, X), J(p, Y), J(p, Z)
        s = lambda a: a[..., None]  # noqa: E731
        return (self.c / 4.0) * (
            s(d(Y, Z)) * X
            - s(d(X, Z)) * Y
            + s(d(JY, Z)) * JX
            - s(d(JX, Z)) * JY
            + 2.0 * s(d(JY, X)) * JZ
        )

    def retract(self, p, V):
        raise GeometryError("HolomorphicSpaceForm supports curvature algebra only")

    def connection(self, p, ux, X, dX):
        raise GeometryError("HolomorphicSpaceForm supports curvature algebra only")

    def transport_rate(self, p, ux, e):
        raise GeometryError("HolomorphicSpaceForm supports curvature algebra only")


def make_geometry(kind, **params):
    """Build a geometry from its configuration name."""
    key = kind.strip().lower().replace("-", "_")
    if key in ("sphere2", "sphere", "s2"):
        return Sphere2()
    if key in ("flat_torus2", "flattorus2", "torus", "flat_torus"):
        return FlatTorus2()
    if key in ("poincare_disk", "poincaredisk", "disk", "hyperbolic_disk"):
        return PoincareDisk()
    if key in ("stereographic_sphere", "sphere_chart"):
        return StereographicSphere()
    if key in ("holomorphic_space_form", "holomorphicspaceform", "space_form"):
        return HolomorphicSpaceForm(params.get("n", 1), params.get("c", 4.0))
    raise GeometryError(f"unknown geometry kind {kind!r}")


# --- TangentVector level API ---------------------------------------------


def _same_base(*vectors):
    b0 = vectors[0].base
    for v in vectors[1:]:
        if v.base.shape != b0.shape or not np.allclose(v.base, b0, rtol=0.0, atol=BASE_TOL):
            raise BasePointMismatch("tangent vectors live at different base points")
    return b0


def metric(g, X, Y):
    p = _same_base(X, Y)
    return g.metric(p, X.vec, Y.vec)


def complex_structure(g, X):
    return TangentVector(X.base, g.complex_structure(X.base, X.vec))


def curvature(g, X, Y, Z):
    p = _same_base(X, Y, Z)
    return TangentVector(p, g.curvature(p, X.vec, Y.vec, Z.vec))


def project_tangent(g, p, V):
    p = np.asarray(p, dtype=float)
    return TangentVector(p, g.project(p, V))


def retract(g, p, V):
    vec = V.vec if isinstance(V, TangentVector) else np.asarray(V, dtype=float)
    return g.retract(np.asarray(p, dtype=float), vec)


def symmetric_identity_residual(g, X, Y):
    """h(R(Y,X)X, R(X,JX)JX); vanishes on every supported target."""
    p = _same_base(X, Y)
    x, y = X.vec, Y.vec
    jx = g.complex_structure(p, x)
    return g.metric(p, g.curvature(p, y, x, x), g.curvature(p, x, jx, jx))


def identity_residual_batch(g, p, X, Y):
    """Vectorized :func:`symmetric_identity_residual` over leading axes."""
    jx = g.complex_structure(p, X)
    return g.metric(p, g.curvature(p, Y, X, X), g.curvature(p, X, jx, jx))


def sample_points(g, n, rng):
    """``n`` random valid points of ``g`` (well inside the disk guard)."""
    if isinstance(g, Sphere2):
        p = rng.standard_normal((n, 3))
        return p / np.linalg.norm(p, axis=1, keepdims=True)
    if isinstance(g, FlatTorus2):
        return rng.uniform(0.0, TWO_PI, (n, 2))
    if isinstance(g, ConformalChart):
        r = 0.9 * np.sqrt(rng.uniform(0.0, 1.0, n))
        th = rng.uniform(0.0, TWO_PI, n)
        return np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
    return np.zeros((n, g.dim))


def sample_tangents(g, p, rng, count=1):
    """``count`` arrays of random tangent vectors at the points ``p``."""
    out = []
    for _ in range(count):
        v = rng.standard_normal(p.shape)
        out.append(g.project(p, v))
    return out
