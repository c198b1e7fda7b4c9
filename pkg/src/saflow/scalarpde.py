"""Pseudo-spectral reference solver for the constant-curvature scalar family

    psi_t = i a (psi_xx + K/2 |psi|^2 psi) + b (psi_xxx + 3K/2 |psi|^2 psi_x) + g (|psi|^2 psi)_x

which covers cubic NLS (b = g = 0), complex mKdV (a = g = 0), Hirota and the
derivative NLS (b = 0, K = 0).  The linear part is integrated exactly per
Fourier mode, the cubic terms with RK4 and 2/3-rule dealiasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .loopfield import GridSpec, loop_integral


@dataclass
class ComplexLoop:
    """Periodic complex samples; ``flags`` optionally marks degenerate nodes."""

    grid: GridSpec
    values: np.ndarray
    flags: np.ndarray | None = None

    def __post_init__(self):
        if not isinstance(self.grid, GridSpec):
            self.grid = GridSpec(self.grid)
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.m,):
            raise ValueError("values must have one entry per grid node")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite values in ComplexLoop")
        if self.flags is not None:
            self.flags = np.asarray(self.flags, dtype=bool)
            if self.flags.shape != self.values.shape:
                raise ValueError("flags must have one entry per grid node")

    @property
    def modulus(self):
        return np.abs(self.values)


@dataclass(frozen=True)
class ScalarParams:
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    K: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "K"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)

    @classmethod
    def from_schrodinger_airy(cls, l1, l2, l3, l4, l5, tol=1e-12):
        """Map u_t + i l1 u_xx + l2 u_xxx + i l3 |u|^2 u + l4 |u|^2 u_x + l5 u^2 conj(u)_x = 0.

        Only coefficient sets of the form reachable from (alpha, beta, gamma, K)
        are accepted; anything else raises ``ValueError``.
        """
        l1, l2, l3, l4, l5 = (complex(v) for v in (l1, l2, l3, l4, l5))
        for name, v in (("l1", l1), ("l2", l2), ("l3", l3), ("l4", l4), ("l5", l5)):
            if abs(v.imag) > tol:
                raise ValueError(f"{name} must be real to be representable")
        a, b, g = -l1.real, -l2.real, -l5.real
        if a != 0:
            curv = 2.0 * l3.real / l1.real
        elif abs(l3) > tol:
            raise ValueError("cubic phase term without second-order dispersion is not representable")
        elif b != 0:
            curv = 2.0 * (-l4.real - 2.0 * g) / (3.0 * b)
        else:
            curv = 0.0
        if abs(-l4.real - (1.5 * b * curv + 2.0 * g)) > tol * max(1.0, abs(l4)):
            raise ValueError("l4 is inconsistent with the (alpha, beta, gamma, K) family")
        return cls(a, b, g, curv)


def _dealias_mask(m):
    k = np.abs(np.fft.fftfreq(m, 1.0 / m))
    return (k < m / 3.0).astype(float)


def _linear_symbol(p, k):
    # i a (ik)^2 + b (ik)^3
    return -1j * p.alpha * k**2 - 1j * p.beta * k**3


def scalar_rhs(psi, p):
    """Right-hand side as a ComplexLoop (dealiased cubic terms)."""
    m = psi.grid.m
    k = psi.grid.full_wavenumbers
    hat = np.fft.fft(psi.values)
    nl = K.scalar_nonlinear(hat, k, _dealias_mask(m), p.alpha, p.beta, p.gamma, p.K)
    return ComplexLoop(psi.grid, np.fft.ifft(_linear_symbol(p, k) * hat + nl))


def mass(psi):
    return loop_integral(np.abs(psi.values) ** 2, psi.grid)


def plane_wave_frequency(A, k, p):
    """omega with psi = A exp(i(k x - omega t)); the measured phase slope is -omega."""
    A2 = A * A
    return p.alpha * (k**2 - 0.5 * p.K * A2) + p.beta * (k**3 - 1.5 * p.K * A2 * k) - p.gamma * A2 * k


@dataclass
class ScalarTrajectory:
    params: ScalarParams
    dt: float
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    dealias: str = "2/3"

    @property
    def final(self):
        return self.states[-1]


def default_scalar_dt(p, grid):
    """Step for the nonlinear remainder (the linear part is exact)."""
    k = grid.m / 3.0
    rate = abs(p.alpha) * abs(p.K) + (1.5 * abs(p.beta * p.K) + 3.0 * abs(p.gamma)) * k + 1.0
    return min(1e-3, 0.5 / rate)


def evolve_scalar(psi0, p, cfg):
    """Integrate with the integrating-factor RK4 scheme.

    ``cfg`` is a :class:`saflow.flow.StepperConfig`; ``cfg.dt`` defaults to
    :func:`default_scalar_dt` and is shortened to land on ``t_end``.
    States are recorded every ``snapshot_stride`` steps and at the end.
    """
    from .flow import BlowUpError

    grid = psi0.grid
    dt = cfg.dt if cfg.dt is not None else default_scalar_dt(p, grid)
    n = 0 if cfg.t_end == 0 else max(1, math.ceil(cfg.t_end / dt - 1e-9))
    dt = cfg.t_end / n if n else dt
    k = grid.full_wavenumbers
    lin = _linear_symbol(p, k)
    mask = _dealias_mask(grid.m)
    traj = ScalarTrajectory(p, dt)
    hat = np.fft.fft(psi0.values)
    traj.times.append(0.0)
    traj.states.append(ComplexLoop(grid, psi0.values.copy()))
    i = 0
    stride = cfg.snapshot_stride
    while i < n:
        nxt = min(n, (i // stride + 1) * stride)
        hat, done, status = K.scalar_advance(hat, nxt - i, dt, lin, k, mask, p.alpha, p.beta, p.gamma, p.K)
        if status != K.OK:
            raise BlowUpError(f"scalar blow-up; last valid time t = {(i + done) * dt:.6g}", t=(i + done) * dt)
        i = nxt
        traj.times.append(i * dt)
        traj.states.append(ComplexLoop(grid, np.fft.ifft(hat)))
    return traj


def measured_phase_slope(traj, k):
    """Least-squares slope of the unwrapped phase of Fourier mode ``k``."""
    m = traj.states[0].grid.m
    idx = int(k) % m
    phases = np.unwrap([np.angle(np.fft.fft(s.values)[idx]) for s in traj.states])
    t = np.asarray(traj.times)
    return float(np.polyfit(t, phases, 1)[0])


def write_complex_csv(path, psi, header_lines=()):
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("x_j,re,im,abs\n")
        for x, v in zip(psi.grid.nodes, psi.values):
            fh.write(f"{x:.17g},{v.real:.17g},{v.imag:.17g},{abs(v):.17g}\n")
