"""Hot loops: fused flow right-hand sides, RK4 stepping and frame transport.

Everything here is written in the numpy subset numba understands, so the
same source serves as the compiled path and as the pure-numpy fallback
(see :mod:`saflow._accel`).  Arrays are ``(m, d)`` with one row per node.
The readable reference assembly of the flow lives in :mod:`saflow.flow`;
the test-suite checks that both agree.
"""

import numpy as np

from ._accel import kernel

# stepping status codes
OK = 0
BLOW_UP = 1
CHART_GUARD = 2

BLOW_UP_MAGNITUDE = 1e8

KIND_SPHERE = 0
KIND_FLAT = 1
KIND_CONFORMAL = 2


@kernel
def derivative_multiplier(m, order):
    k = np.arange(m // 2 + 1).astype(np.float64)
    mult = (1j * k) ** order
    mult[m // 2] = 0.0
    return mult


@kernel
def sdiff(f, mult):
    m = f.shape[0]
    F = np.fft.rfft(f, axis=0)
    for j in range(F.shape[1]):
        F[:, j] *= mult
    return np.fft.irfft(F, m, axis=0)


@kernel
def rowdot(a, b):
    return np.sum(a * b, axis=1)


@kernel
def scale_rows(c, v):
    return c.reshape((-1, 1)) * v


@kernel
def tangent_part(p, v):
    return v - scale_rows(rowdot(p, v), p)


@kernel
def cross_rows(a, b):
    out = np.empty_like(a)
    out[:, 0] = a[:, 1] * b[:, 2] - a[:, 2] * b[:, 1]
    out[:, 1] = a[:, 2] * b[:, 0] - a[:, 0] * b[:, 2]
    out[:, 2] = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    return out


@kernel
def rot90_rows(v):
    out = np.empty_like(v)
    out[:, 0] = -v[:, 1]
    out[:, 1] = v[:, 0]
    return out


# --- sphere -------------------------------------------------------------


@kernel
def sphere_rhs(u, mult, alpha, beta, gamma, eps):
    p = scale_rows(1.0 / np.sqrt(rowdot(u, u)), u)
    ux = tangent_part(p, sdiff(p, mult))
    t1 = tangent_part(p, sdiff(ux, mult))
    t2 = tangent_part(p, sdiff(t1, mult))
    jux = cross_rows(p, ux)
    curv = scale_rows(rowdot(jux, jux), ux) - scale_rows(rowdot(ux, jux), jux)
    out = alpha * cross_rows(p, t1) + beta * (t2 + 0.5 * curv) + gamma * scale_rows(rowdot(ux, ux), ux)
    if eps != 0.0:
        out = out - eps * tangent_part(p, sdiff(t2, mult))
    return tangent_part(p, out)


@kernel
def sphere_advance(u, nsteps, dt, mult, alpha, beta, gamma, eps):
    """RK4 on the ambient coordinates, renormalising after every step.

    Returns ``(u, steps_done, bad_node, status)``.
    """
    m = u.shape[0]
    for s in range(nsteps):
        k1 = sphere_rhs(u, mult, alpha, beta, gamma, eps)
        k2 = sphere_rhs(u + 0.5 * dt * k1, mult, alpha, beta, gamma, eps)
        k3 = sphere_rhs(u + 0.5 * dt * k2, mult, alpha, beta, gamma, eps)
        k4 = sphere_rhs(u + dt * k3, mult, alpha, beta, gamma, eps)
        v = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        for j in range(m):
            for a in range(3):
                if not np.isfinite(v[j, a]) or abs(v[j, a]) > BLOW_UP_MAGNITUDE:
                    return u, s, j, BLOW_UP
        u = scale_rows(1.0 / np.sqrt(rowdot(v, v)), v)
    return u, nsteps, -1, OK


# --- planar charts (flat torus, conformal disk / sphere chart) ----------------


@kernel
def christoffel_term(ux, X, g):
    """Gamma(u_x, X) for a conformal metric with grad log(lambda) = g."""
    return scale_rows(rowdot(ux, g), X) + scale_rows(rowdot(X, g), ux) - scale_rows(rowdot(ux, X), g)


@kernel
def chart_rhs(z, slope, nodes, mult, alpha, beta, gamma, eps, K, conformal):
    m = z.shape[0]
    periodic = z.copy()
    for j in range(m):
        periodic[j, 0] -= slope[0] * nodes[j]
        periodic[j, 1] -= slope[1] * nodes[j]
    ux = sdiff(periodic, mult)
    ux[:, 0] += slope[0]
    ux[:, 1] += slope[1]
    if conformal:
        lam = 2.0 / (1.0 + K * rowdot(z, z))
        g = scale_rows(-K * lam, z)
    else:
        lam = np.ones(m)
        g = np.zeros_like(z)
    lam2 = lam * lam
    t1 = sdiff(ux, mult) + christoffel_term(ux, ux, g)
    t2 = sdiff(t1, mult) + christoffel_term(ux, t1, g)
    jux = rot90_rows(ux)
    curv = K * (scale_rows(lam2 * rowdot(jux, jux), ux) - scale_rows(lam2 * rowdot(ux, jux), jux))
    out = alpha * rot90_rows(t1) + beta * (t2 + 0.5 * curv) + gamma * scale_rows(lam2 * rowdot(ux, ux), ux)
    if eps != 0.0:
        t3 = sdiff(t2, mult) + christoffel_term(ux, t2, g)
        out = out - eps * t3
    return out


@kernel
def chart_advance(z, nsteps, dt, slope, nodes, mult, alpha, beta, gamma, eps, K, conformal, guard):
    m = z.shape[0]
    for s in range(nsteps):
        k1 = chart_rhs(z, slope, nodes, mult, alpha, beta, gamma, eps, K, conformal)
        k2 = chart_rhs(z + 0.5 * dt * k1, slope, nodes, mult, alpha, beta, gamma, eps, K, conformal)
        k3 = chart_rhs(z + 0.5 * dt * k2, slope, nodes, mult, alpha, beta, gamma, eps, K, conformal)
        k4 = chart_rhs(z + dt * k3, slope, nodes, mult, alpha, beta, gamma, eps, K, conformal)
        v = z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        for j in range(m):
            for a in range(2):
                if not np.isfinite(v[j, a]) or abs(v[j, a]) > BLOW_UP_MAGNITUDE:
                    return z, s, j, BLOW_UP
            if np.sqrt(v[j, 0] ** 2 + v[j, 1] ** 2) > guard:
                return z, s, j, CHART_GUARD
        z = v
    return z, nsteps, -1, OK


# --- parallel transport ---------------------------------------------------------


@kernel
def _transport_rate(kind, K, p, ux, e):
    if kind == KIND_SPHERE:
        return -np.dot(e, ux) * p
    if kind == KIND_FLAT:
        return np.zeros_like(e)
    lam = 2.0 / (1.0 + K * np.dot(p, p))
    g = -K * lam * p
    return -(np.dot(ux, g) * e + np.dot(e, g) * ux - np.dot(ux, e) * g)


@kernel
def _renormalize(kind, K, p, e):
    if kind == KIND_SPHERE:
        e = e - np.dot(e, p) * p
        return e / np.sqrt(np.dot(e, e))
    if kind == KIND_FLAT:
        return e / np.sqrt(np.dot(e, e))
    lam = 2.0 / (1.0 + K * np.dot(p, p))
    return e / (lam * np.sqrt(np.dot(e, e)))


@kernel
def transport_frame(kind, K, pts, ux, pts_half, ux_half, e0, h):
    """Solve nabla_x e = 0 node to node with RK4; row m is the wrap-around value."""
    m = pts.shape[0]
    frames = np.empty((m + 1, pts.shape[1]))
    e = e0.copy()
    frames[0] = e
    for j in range(m):
        jn = (j + 1) % m
        k1 = _transport_rate(kind, K, pts[j], ux[j], e)
        k2 = _transport_rate(kind, K, pts_half[j], ux_half[j], e + 0.5 * h * k1)
        k3 = _transport_rate(kind, K, pts_half[j], ux_half[j], e + 0.5 * h * k2)
        k4 = _transport_rate(kind, K, pts[jn], ux[jn], e + h * k3)
        e = e + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        e = _renormalize(kind, K, pts[jn], e)
        frames[j + 1] = e
    return frames


# --- filament -------------------------------------------------------------------


@kernel
def filament_rhs(c, closure, nodes, mult, alpha, beta):
    m = c.shape[0]
    periodic = c.copy()
    for j in range(m):
        for a in range(3):
            periodic[j, a] -= closure[a] * nodes[j] / (2.0 * np.pi)
    us = sdiff(periodic, mult)
    for a in range(3):
        us[:, a] += closure[a] / (2.0 * np.pi)
    uss = sdiff(us, mult)
    usss = sdiff(uss, mult)
    return alpha * cross_rows(us, uss) + beta * (usss + 1.5 * cross_rows(uss, cross_rows(us, uss)))


@kernel
def filament_advance(c, nsteps, dt, closure, nodes, mult, alpha, beta):
    m = c.shape[0]
    for s in range(nsteps):
        k1 = filament_rhs(c, closure, nodes, mult, alpha, beta)
        k2 = filament_rhs(c + 0.5 * dt * k1, closure, nodes, mult, alpha, beta)
        k3 = filament_rhs(c + 0.5 * dt * k2, closure, nodes, mult, alpha, beta)
        k4 = filament_rhs(c + dt * k3, closure, nodes, mult, alpha, beta)
        v = c + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        for j in range(m):
            for a in range(3):
                if not np.isfinite(v[j, a]) or abs(v[j, a]) > BLOW_UP_MAGNITUDE:
                    return c, s, j, BLOW_UP
        c = v
    return c, nsteps, -1, OK


# --- scalar integrating-factor RK4 ------------------------------------------------


@kernel
def scalar_nonlinear(psihat, k, mask, alpha, beta, gamma, K):
    """Fourier coefficients of the dealiased cubic terms."""
    psi = np.fft.ifft(psihat)
    psix = np.fft.ifft(1j * k * psihat)
    a2 = (psi * np.conj(psi)).real
    cubic = a2 * psi
    nl = np.fft.fft(1j * alpha * 0.5 * K * cubic + beta * 1.5 * K * a2 * psix)
    nl = nl + gamma * 1j * k * np.fft.fft(cubic)
    return nl * mask


@kernel
def scalar_advance(psihat, nsteps, dt, lin, k, mask, alpha, beta, gamma, K):
    """Integrating-factor RK4 (Lawson form); returns (psihat, steps_done, status)."""
    E = np.exp(lin * dt)
    Eh = np.exp(lin * 0.5 * dt)
    for s in range(nsteps):
        a = scalar_nonlinear(psihat, k, mask, alpha, beta, gamma, K)
        b = scalar_nonlinear(Eh * (psihat + 0.5 * dt * a), k, mask, alpha, beta, gamma, K)
        c = scalar_nonlinear(Eh * psihat + 0.5 * dt * b, k, mask, alpha, beta, gamma, K)
        d = scalar_nonlinear(E * psihat + dt * Eh * c, k, mask, alpha, beta, gamma, K)
        w = E * psihat + (dt / 6.0) * (E * a + 2.0 * Eh * (b + c) + d)
        for j in range(w.shape[0]):
            if not np.isfinite(w[j].real) or not np.isfinite(w[j].imag):
                return psihat, s, BLOW_UP
        psihat = w
    return psihat, nsteps, OK
