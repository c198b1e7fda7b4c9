"""Deterministic initial-data families for the loop flow and the scalar solver."""

from __future__ import annotations

import re

import numpy as np

from .loopfield import GridSpec, LoopMap, velocity
from .manifold import ConformalChart, FlatTorus2, Sphere2, TWO_PI
from .scalarpde import ComplexLoop


class InitialDataError(ValueError):
    pass


_SELECTOR = re.compile(r"^\s*([a-z][a-z0-9-]*)\s*(?:\((.*)\))?\s*$")


def parse_selector(text):
    """``"latitude(0.8)"`` -> ``("latitude", [0.8])``."""
    mt = _SELECTOR.match(text.lower())
    if not mt:
        raise InitialDataError(f"cannot parse initial-data selector {text!r}")
    name, args = mt.group(1), mt.group(2)
    vals = []
    if args and args.strip():
        try:
            vals = [float(a) for a in args.split(",")]
        except ValueError as exc:
            raise InitialDataError(f"non-numeric argument in {text!r}") from exc
    return name, vals


def periodic_bump(x, width, center=np.pi):
    """exp(-2 sin^2((x - center)/2) / width^2): a smooth periodic Gaussian."""
    return np.exp(-2.0 * np.sin(0.5 * (x - center)) ** 2 / width**2)


def great_circle(geometry, grid, winding=1):
    x = grid.nodes
    if isinstance(geometry, Sphere2):
        w = winding
        return LoopMap(geometry, np.stack([np.cos(w * x), np.sin(w * x), np.zeros_like(x)], axis=1), grid)
    if isinstance(geometry, FlatTorus2):
        return LoopMap(geometry, np.stack([winding * x, np.zeros_like(x)], axis=1), grid)
    raise InitialDataError(f"great-circle is not defined on {geometry!r}")


def latitude(geometry, grid, r):
    if not 0 < r < 1:
        raise InitialDataError("latitude radius r must lie in (0, 1)")
    x = grid.nodes
    if isinstance(geometry, Sphere2):
        z0 = np.sqrt(1.0 - r * r)
        return LoopMap(geometry, np.stack([r * np.cos(x), r * np.sin(x), np.full_like(x, z0)], axis=1), grid)
    if isinstance(geometry, ConformalChart):
        return LoopMap(geometry, np.stack([r * np.cos(x), r * np.sin(x)], axis=1), grid)
    raise InitialDataError(f"latitude is not defined on {geometry!r}")


def perturbed_latitude(geometry, grid, r, amp, mode):
    """Latitude displaced by amp*sin(mode x) along its unit normal J u_x / |u_x|, then retracted."""
    base = latitude(geometry, grid, r)
    g = geometry
    ux = velocity(base).vectors
    normal = g.complex_structure(base.points, ux)
    normal = normal / g.norm(base.points, normal)[:, None]
    disp = amp * np.sin(mode * grid.nodes)[:, None] * normal
    try:
        pts = g.retract(base.points, disp)
    except ValueError as exc:
        raise InitialDataError(f"amplitude {amp} too large to retract: {exc}") from exc
    return LoopMap(g, pts, grid)


def random_latitude(geometry, grid, r, amp, modes, seed=0):
    """Latitude displaced along its normal by a random smooth profile.

    The profile is a sum of ``modes`` Fourier modes with coefficients drawn
    from ``numpy.random.default_rng(seed)``, decaying like 1/k^2 and scaled
    so its maximum magnitude is ``amp``.
    """
    if modes < 1:
        raise InitialDataError("random-latitude needs at least one mode")
    rng = np.random.default_rng(seed)
    x = grid.nodes
    coef = rng.standard_normal((int(modes), 2))
    prof = sum((a * np.cos(k * x) + b * np.sin(k * x)) / k**2 for k, (a, b) in enumerate(coef, start=1))
    prof = amp * prof / np.max(np.abs(prof))
    base = latitude(geometry, grid, r)
    g = geometry
    ux = velocity(base).vectors
    normal = g.complex_structure(base.points, ux)
    normal = normal / g.norm(base.points, normal)[:, None]
    try:
        pts = g.retract(base.points, prof[:, None] * normal)
    except ValueError as exc:
        raise InitialDataError(f"amplitude {amp} too large to retract: {exc}") from exc
    return LoopMap(g, pts, grid)


def bump(geometry, grid, amp, width):
    """Localized displacement of a constant loop along one fixed direction.

    The loop runs out and back along a geodesic, so it encloses no area and
    its parallel frame has trivial holonomy.
    """
    if width <= 0:
        raise InitialDataError("bump width must be positive")
    b = amp * periodic_bump(grid.nodes, width)
    if isinstance(geometry, Sphere2):
        p0 = np.array([0.0, 0.0, 1.0])
        v = np.array([1.0, 0.0, 0.0])
    elif isinstance(geometry, FlatTorus2):
        p0 = np.array([np.pi, np.pi])
        v = np.array([1.0, 0.0])
    elif isinstance(geometry, ConformalChart):
        p0 = np.zeros(2)
        v = np.array([1.0, 0.0])
    else:
        raise InitialDataError(f"bump is not defined on {geometry!r}")
    base = np.tile(p0, (grid.m, 1))
    try:
        pts = geometry.retract(base, b[:, None] * v)
    except ValueError as exc:
        raise InitialDataError(f"amplitude {amp} too large to retract: {exc}") from exc
    return LoopMap(geometry, pts, grid)


def constant(geometry, grid):
    p0 = {3: np.array([0.0, 0.0, 1.0])}.get(geometry.dim, np.full(geometry.dim, 0.5))
    return LoopMap(geometry, np.tile(p0, (grid.m, 1)), grid)


def plane_wave(grid, A, k):
    return ComplexLoop(grid, A * np.exp(1j * k * grid.nodes))


def gauss_packet(grid, A, width, k0=0.0):
    x = grid.nodes
    return ComplexLoop(grid, A * periodic_bump(x, width) * np.exp(1j * k0 * x))


_LOOP_FAMILIES = {
    "great-circle": (great_circle, (0, 1), (1.0,)),
    "latitude": (latitude, (1, 1), ()),
    "perturbed-latitude": (perturbed_latitude, (3, 3), ()),
    "random-latitude": (random_latitude, (3, 3), ()),
    "bump": (bump, (2, 2), ()),
    "constant": (constant, (0, 0), ()),
}

_SCALAR_FAMILIES = {
    "plane-wave": (plane_wave, (2, 2), ()),
    "gauss-packet": (gauss_packet, (2, 3), (0.0,)),
}


def make_initial_data(selector, grid, geometry=None, seed=0):
    """Build initial data from a selector such as ``"perturbed-latitude(0.8, 0.1, 3)"``.

    Loop families need ``geometry``; scalar families (``plane-wave``,
    ``gauss-packet``) return a :class:`ComplexLoop`.  Every family is
    deterministic; ``seed`` only affects ``random-latitude``.
    """
    if not isinstance(grid, GridSpec):
        grid = GridSpec(grid)
    name, args = parse_selector(selector)
    if name in _SCALAR_FAMILIES:
        fn, (lo, hi), defaults = _SCALAR_FAMILIES[name]
        args = _fill(name, args, lo, hi, defaults)
        return fn(grid, *args)
    if name not in _LOOP_FAMILIES:
        raise InitialDataError(f"unknown initial-data family {name!r}")
    if geometry is None:
        raise InitialDataError(f"{name} needs a target geometry")
    fn, (lo, hi), defaults = _LOOP_FAMILIES[name]
    args = _fill(name, args, lo, hi, defaults)
    if name == "great-circle":
        args = [int(args[0])]
    if name == "perturbed-latitude":
        args = [args[0], args[1], int(args[2])]
    if name == "random-latitude":
        return fn(geometry, grid, args[0], args[1], int(args[2]), seed=seed)
    return fn(geometry, grid, *args)


def _fill(name, args, lo, hi, defaults):
    if not lo <= len(args) <= hi:
        raise InitialDataError(f"{name} takes {lo}..{hi} arguments, got {len(args)}")
    missing = hi - len(args)
    return list(args) + list(defaults[len(defaults) - missing :]) if missing else list(args)


__all__ = ["InitialDataError", "TWO_PI", "make_initial_data", "parse_selector"]
