"""Built-in studies behind the command line: each writes artifacts and a pass/fail summary."""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._accel import backend_name
from .config import ConfigError, RunConfig
from .filament import (
    evolve_filament,
    helix,
    planar_circle,
    reconstruct,
    tangent_field,
    write_filament_csv,
)
from .flow import BlowUpError, FlowParams, StepperConfig, evolve, stability_dt, sup_distance
from .hasimoto import classic_hasimoto, hasimoto_q, hasimoto_series, write_hasimoto_csv
from .initial import InitialDataError, make_initial_data, parse_selector
from .invariants import drift_series, energy_report, write_energy_csv
from .loopfield import GridSpec, LoopMap, write_loop_csv
from .manifold import (
    ChartBlowUp,
    GeometryError,
    Sphere2,
    identity_residual_batch,
    make_geometry,
    sample_points,
    sample_tangents,
)
from .scalarpde import (
    ComplexLoop,
    ScalarParams,
    evolve_scalar,
    mass,
    measured_phase_slope,
    plane_wave_frequency,
    write_complex_csv,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_BLOW_UP = 3

DEFAULT_TOLERANCES = {
    "conservation": 1e-4,
    "traveling_wave": 1e-4,
    "hasimoto": 5e-3,
    "commuting": 1e-3,
    "arclength": 1e-4,
    "identity": 1e-12,
    "phase_slope": 1e-6,
    "mass": 1e-8,
    "e4_violation": 0.1,
}

# The epsilon-study checks sup-distance <= slack * C * eps, with C taken
# from the two largest epsilons.  The measured d/eps creeps up by a few
# percent as eps -> 0, so a strict C * eps bound would be too tight.
EPSILON_RATE_SLACK = 1.1


@dataclass
class Check:
    name: str
    value: float
    limit: float
    passed: bool
    note: str = ""

    def as_dict(self):
        d = {"name": self.name, "value": _num(self.value), "limit": _num(self.limit), "passed": bool(self.passed)}
        if self.note:
            d["note"] = self.note
        return d


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else str(v)


def upper(name, value, limit, note=""):
    return Check(name, value, limit, bool(np.isfinite(value) and value <= limit), note)


@dataclass
class Outcome:
    command: str
    checks: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    status: str = "pass"
    message: str = ""

    @property
    def exit_code(self):
        if self.status == "blow-up":
            return EXIT_BLOW_UP
        if self.status == "error":
            return EXIT_CONFIG
        return EXIT_OK if all(c.passed for c in self.checks) else EXIT_CHECK_FAILED

    def finalize(self):
        if self.status == "pass" and not all(c.passed for c in self.checks):
            self.status = "fail"
        return self


class Artifacts:
    """Writes files under one output directory, each with the config as header."""

    def __init__(self, root, cfg):
        self.root = root
        self.cfg = cfg
        self.written = []
        os.makedirs(root, exist_ok=True)

    def header(self, *extra):
        return ["saflow run configuration"] + self.cfg.resolved_lines() + list(extra)

    def path(self, rel):
        full = os.path.join(self.root, rel)
        os.makedirs(os.path.dirname(full), exist_ok=True)
        self.written.append(rel)
        return full

    def energies(self, reports, rel="energies.csv"):
        write_energy_csv(self.path(rel), reports, self.header())

    def loop(self, rel, t, u):
        write_loop_csv(self.path(rel), u, header_lines=self.header(f"t = {t!r}"))

    def complex(self, rel, t, psi):
        write_complex_csv(self.path(rel), psi, self.header(f"t = {t!r}"))

    def summary(self, outcome):
        data = {
            "command": outcome.command,
            "status": outcome.status,
            "exit_code": outcome.exit_code,
            "message": outcome.message,
            "backend": backend_name(),
            "config": self.cfg.as_dict(),
            "checks": [c.as_dict() for c in outcome.checks],
            "results": _jsonable(outcome.results),
            "artifacts": sorted(set(self.written)),
        }
        with open(os.path.join(self.root, "summary.json"), "w") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return data


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (str, type(None))):
        return obj
    return _num(obj)


class _SnapshotWriter:
    def __init__(self, art, prefix="snapshots/loop"):
        self.art = art
        self.prefix = prefix
        self.count = 0

    def on_snapshot(self, t, loop):
        self.art.loop(f"{self.prefix}_{self.count:05d}.csv", t, loop)
        self.count += 1


def _tol(cfg, key):
    return cfg.tolerance if cfg.tolerance is not None else DEFAULT_TOLERANCES[key]


def _geometry(cfg):
    return make_geometry(cfg.geometry, **cfg.geometry_kwargs())


def _loop_initial(cfg, g, grid):
    u0 = make_initial_data(cfg.initial, grid, g, seed=cfg.seed)
    if not isinstance(u0, LoopMap):
        raise ConfigError(f"{cfg.command} needs loop initial data, got {cfg.initial!r}")
    return u0


# --- run-flow ---------------------------------------------------------------------------


def traveling_wave_error(u, p, winding, t):
    """Sup distance of ``u`` from the great circle of given winding advanced to time t."""
    x = u.grid.nodes
    shift = winding * (0.5 * p.beta * winding**2 * t)
    exact = np.stack([np.cos(winding * x + shift), np.sin(winding * x + shift), np.zeros_like(x)], axis=1)
    return float(np.max(np.linalg.norm(u.points - exact, axis=1)))


def conservation_checks(cfg, p, reports):
    out = []
    res = {}
    if len(reports) < 2:
        return out, res
    ds = drift_series(reports)
    res["drift"] = ds
    if p.epsilon == 0 and p.gamma == 0:
        tol = _tol(cfg, "conservation")
        for key in ("e1", "e2", "e3"):
            out.append(upper(f"{key}_drift", ds[key], tol))
    if p.epsilon > 0:
        e1 = np.array([r.e1 for r in reports])
        rise = float(np.max(np.diff(e1))) if e1.size > 1 else 0.0
        out.append(upper("e1_non_increasing", rise, 1e-8 * max(1.0, abs(e1[0]))))
    if "e4_violation" in ds:
        out.append(upper("e4_growth_violation", ds["e4_violation"], DEFAULT_TOLERANCES["e4_violation"]))
    return out, res


def run_flow(cfg, art):
    g = _geometry(cfg)
    grid = GridSpec(cfg.m)
    u0 = _loop_initial(cfg, g, grid)
    p = cfg.flow
    out = Outcome(cfg.command)
    writer = _SnapshotWriter(art)
    try:
        res = evolve(u0, p, cfg.stepper, sinks=[writer])
    except BlowUpError as exc:
        out.status = "blow-up"
        out.message = str(exc)
        if exc.partial is not None:
            art.energies(exc.partial.energies)
        out.results["last_valid_time"] = exc.t
        return out
    except ChartBlowUp as exc:
        out.status = "blow-up"
        out.message = str(exc)
        return out
    art.energies(res.energies)
    out.results.update(dt=res.dt, steps=res.steps, dt_overridden=res.dt_overridden,
                       stability_dt=stability_dt(p, grid))
    out.results["final_energy"] = res.energies[-1].as_dict()
    checks, extra = conservation_checks(cfg, p, res.energies)
    out.checks += checks
    out.results.update(extra)
    name, args = parse_selector(cfg.initial)
    if name == "great-circle" and isinstance(g, Sphere2) and p.epsilon == 0 and p.gamma == 0:
        w = int(args[0]) if args else 1
        err = traveling_wave_error(res.final, p, w, cfg.stepper.t_end)
        out.results["traveling_wave_error"] = err
        out.checks.append(upper("traveling_wave_error", err, _tol(cfg, "traveling_wave")))
    return out


# --- run-scalar -------------------------------------------------------------------------


def _scalar_params(cfg):
    if cfg.scalar_k_given:
        return cfg.scalar
    K = _geometry(cfg).gaussian_curvature
    return ScalarParams(cfg.scalar.alpha, cfg.scalar.beta, cfg.scalar.gamma, K)


def run_scalar(cfg, art):
    grid = GridSpec(cfg.m)
    psi0 = make_initial_data(cfg.initial, grid, seed=cfg.seed)
    if not isinstance(psi0, ComplexLoop):
        raise ConfigError(f"run-scalar needs plane-wave or gauss-packet data, got {cfg.initial!r}")
    p = _scalar_params(cfg)
    out = Outcome(cfg.command)
    try:
        traj = evolve_scalar(psi0, p, cfg.stepper)
    except BlowUpError as exc:
        out.status = "blow-up"
        out.message = str(exc)
        return out
    masses = []
    for i, (t, psi) in enumerate(zip(traj.times, traj.states)):
        art.complex(f"snapshots/psi_{i:05d}.csv", t, psi)
        masses.append((t, mass(psi)))
    with open(art.path("mass.csv"), "w") as fh:
        for line in art.header():
            fh.write(f"# {line}\n")
        fh.write("t,mass\n")
        for t, mv in masses:
            fh.write(f"{t!r},{mv!r}\n")
    mv = np.array([m_ for _, m_ in masses])
    drift = float(np.max(np.abs(mv - mv[0])) / max(mv[0], 1e-300)) if mv[0] > 0 else float(np.max(np.abs(mv)))
    out.results.update(dt=traj.dt, K=p.K, mass_drift=drift, dealias=traj.dealias)
    out.checks.append(upper("mass_drift", drift, DEFAULT_TOLERANCES["mass"]))
    name, args = parse_selector(cfg.initial)
    if name == "plane-wave" and len(traj.times) >= 3:
        A, k = args
        omega = plane_wave_frequency(A, k, p)
        slope = measured_phase_slope(traj, k)
        rel = abs(slope + omega) / max(abs(omega), 1.0)
        out.results.update(omega=omega, measured_phase_slope=slope)
        out.checks.append(upper("phase_slope_error", rel, _tol(cfg, "phase_slope")))
    return out


# --- run-filament -----------------------------------------------------------------------


def make_filament(selector, grid, seed=0):
    """``planar-circle``, ``helix(a, b)``, or any sphere-loop selector integrated into a curve."""
    name, args = parse_selector(selector)
    if name == "planar-circle":
        return planar_circle(grid)
    if name == "helix":
        if len(args) != 2:
            raise InitialDataError("helix takes (a, b)")
        return helix(grid, *args)
    u = make_initial_data(selector, grid, Sphere2(), seed=seed)
    return reconstruct(u)


def run_filament(cfg, art):
    grid = GridSpec(cfg.m)
    c0 = make_filament(cfg.initial, grid, cfg.seed)
    p = FlowParams(cfg.flow.alpha, cfg.flow.beta, 0.0, 0.0)
    out = Outcome(cfg.command)
    try:
        traj = evolve_filament(c0, p.alpha, p.beta, cfg.stepper)
        flow = evolve(tangent_field(c0), p, StepperConfig(
            cfg.stepper.t_end, cfg.stepper.dt, cfg.stepper.snapshot_stride, cfg.stepper.snapshot_stride,
            cfg.stepper.allow_unstable_dt))
    except BlowUpError as exc:
        out.status = "blow-up"
        out.message = str(exc)
        return out
    for i, (t, c) in enumerate(zip(traj.times, traj.curves)):
        write_filament_csv(art.path(f"snapshots/filament_{i:05d}.csv"), c, art.header(f"t = {t!r}"))
    art.energies([energy_report(tangent_field(c), t) for t, c in zip(traj.times, traj.curves)])
    diag = max(sup_distance(tangent_field(c), u) for c, u in zip(traj.curves, flow.snapshots))
    drift = traj.arclength_drift()
    psi = classic_hasimoto(c0)
    q, _ = hasimoto_q(tangent_field(c0))
    ok = ~psi.flags
    hdiff = float(np.max(np.abs(psi.modulus[ok] - q.modulus[ok]))) if np.any(ok) else 0.0
    out.results.update(dt=traj.dt, closure=c0.closure, commuting_error=diag, arclength_drift=drift,
                       hasimoto_modulus_difference=hdiff, degenerate_nodes=int(np.sum(psi.flags)))
    out.checks.append(upper("commuting_diagram_error", diag, _tol(cfg, "commuting")))
    out.checks.append(upper("arclength_drift", drift, DEFAULT_TOLERANCES["arclength"]))
    out.checks.append(upper("hasimoto_modulus_difference", hdiff, 1e-6))
    return out


# --- hasimoto-compare -------------------------------------------------------------------


def run_hasimoto_compare(cfg, art):
    g = _geometry(cfg)
    grid = GridSpec(cfg.m)
    u0 = _loop_initial(cfg, g, grid)
    p = cfg.flow
    out = Outcome(cfg.command)
    if p.epsilon != 0:
        raise ConfigError("hasimoto-compare needs epsilon = 0")
    try:
        res = evolve(u0, p, cfg.stepper)
    except (BlowUpError, ChartBlowUp) as exc:
        out.status = "blow-up"
        out.message = str(exc)
        return out
    art.energies(res.energies)
    series = hasimoto_series(res.snapshots, res.snapshot_times)
    sp = ScalarParams(p.alpha, p.beta, p.gamma, g.gaussian_curvature)
    psi = series[0]
    t_prev = 0.0
    errs = []
    for i, (t, q, hol) in enumerate(zip(series.times, series.values, series.holonomy)):
        if t > t_prev:
            step_cfg = StepperConfig(t - t_prev, snapshot_stride=10**9)
            psi = evolve_scalar(psi, sp, step_cfg).final
            t_prev = t
        errs.append(float(np.max(np.abs(q.modulus - psi.modulus))))
        write_hasimoto_csv(art.path(f"snapshots/q_{i:05d}.csv"), q, art.header(f"t = {t!r}"),
                           {"t": t, "holonomy_angle": hol})
        art.written.append(f"snapshots/q_{i:05d}.csv.meta.json")
        art.complex(f"snapshots/psi_{i:05d}.csv", t, psi)
    hol0 = abs(series.holonomy[0])
    out.results.update(dt=res.dt, K=sp.K, modulus_errors=errs, holonomy=series.holonomy)
    out.checks.append(upper("initial_holonomy", hol0, 1e-6,
                            "the scalar comparison needs a periodic gauge, i.e. trivial holonomy"))
    out.checks.append(upper("max_modulus_error", max(errs), _tol(cfg, "hasimoto")))
    return out


# --- epsilon-study ----------------------------------------------------------------------


def run_epsilon_study(cfg, art):
    g = _geometry(cfg)
    grid = GridSpec(cfg.m)
    u0 = _loop_initial(cfg, g, grid)
    base = cfg.flow
    eps = sorted(set(cfg.epsilons) - {0.0}, reverse=True)
    if len(eps) < 2:
        raise ConfigError("epsilon-study needs at least two positive epsilons")
    params = [FlowParams(base.alpha, base.beta, base.gamma, 0.0)]
    params += [FlowParams(base.alpha, base.beta, base.gamma, e) for e in eps]
    dt = cfg.stepper.dt
    if dt is None:
        dt = min(stability_dt(pp, grid) for pp in params)
    st = StepperConfig(cfg.stepper.t_end, dt, cfg.stepper.snapshot_stride, cfg.stepper.energy_stride,
                       cfg.stepper.allow_unstable_dt)
    out = Outcome(cfg.command)

    def one(pp):
        return evolve(u0, pp, st)

    try:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            runs = list(pool.map(one, params))
    except (BlowUpError, ChartBlowUp) as exc:
        out.status = "blow-up"
        out.message = str(exc)
        return out
    ref = runs[0].final
    dists = []
    for i, (pp, r) in enumerate(zip(params, runs)):
        art.energies(r.energies, f"epsilon_{i:02d}/energies.csv")
        art.loop(f"epsilon_{i:02d}/final.csv", cfg.stepper.t_end, r.final)
        if i:
            dists.append(sup_distance(r.final, ref))
            e1 = np.array([x.e1 for x in r.energies])
            rise = float(np.max(np.diff(e1))) if e1.size > 1 else 0.0
            out.checks.append(upper(f"e1_non_increasing[eps={pp.epsilon:g}]", rise, 1e-8 * max(1.0, abs(e1[0]))))
    decreasing = all(a > b for a, b in zip(dists, dists[1:]))
    out.checks.append(Check("distance_strictly_decreasing", float(decreasing), 1.0, decreasing))
    rate = max(dists[0] / eps[0], dists[1] / eps[1])
    bound = EPSILON_RATE_SLACK * rate * eps[-1]
    out.checks.append(upper("linear_rate_bound", dists[-1], bound,
                            f"C = {rate:.6g} from the two largest epsilons, slack {EPSILON_RATE_SLACK}"))
    out.results.update(dt=dt, epsilons=eps, distances=dists, rate_constant=rate)
    return out


# --- identity-check ---------------------------------------------------------------------


IDENTITY_GEOMETRIES = (
    ("sphere2", {}),
    ("flat_torus2", {}),
    ("poincare_disk", {}),
    *[("holomorphic_space_form", {"n": n, "c": c}) for n in (1, 2, 3) for c in (-4.0, 4.0)],
)


def identity_scan(g, samples, rng):
    """Max of |h(R(Y,X)X, R(X,JX)JX)| / (|X|^5 |Y|) over random tangent pairs."""
    p = sample_points(g, samples, rng)
    X, Y = sample_tangents(g, p, rng, 2)
    res = identity_residual_batch(g, p, X, Y)
    scale = g.norm(p, X) ** 5 * g.norm(p, Y)
    return float(np.max(np.abs(res) / scale))


def run_identity_check(cfg, art):
    rng = np.random.default_rng(cfg.seed)
    targets = IDENTITY_GEOMETRIES if cfg.geometry == "all" else ((cfg.geometry, cfg.geometry_kwargs()),)
    out = Outcome(cfg.command)
    rows = []
    tol = _tol(cfg, "identity")
    for kind, params in targets:
        g = make_geometry(kind, **params)
        val = identity_scan(g, cfg.samples, rng)
        rows.append((repr(g), val))
        out.checks.append(upper(f"identity_residual[{g!r}]", val, tol))
    with open(art.path("identity.csv"), "w") as fh:
        for line in art.header():
            fh.write(f"# {line}\n")
        fh.write("geometry,max_normalized_residual\n")
        for name, val in rows:
            fh.write(f"\"{name}\",{val!r}\n")
    out.results["residuals"] = {name: val for name, val in rows}
    out.results["samples"] = cfg.samples
    return out


# --- convergence ------------------------------------------------------------------------


def run_convergence(cfg, art):
    g = _geometry(cfg)
    grid = GridSpec(cfg.m)
    u0 = _loop_initial(cfg, g, grid)
    p = cfg.flow
    base_dt = cfg.stepper.dt or stability_dt(p, grid)
    factors = sorted(cfg.dt_factors, reverse=True)
    name, args = parse_selector(cfg.initial)
    exact = name == "great-circle" and isinstance(g, Sphere2) and p.epsilon == 0 and p.gamma == 0
    out = Outcome(cfg.command)

    def run(f):
        st = StepperConfig(cfg.stepper.t_end, base_dt * f, 10**9, 10**9, True)
        return evolve(u0, p, st).final

    try:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            finals = list(pool.map(run, factors))
            ref = None if exact else run(factors[-1] / 4.0)
    except (BlowUpError, ChartBlowUp) as exc:
        out.status = "blow-up"
        out.message = str(exc)
        return out
    if exact:
        w = int(args[0]) if args else 1
        errors = [traveling_wave_error(u, p, w, cfg.stepper.t_end) for u in finals]
    else:
        errors = [sup_distance(u, ref) for u in finals]
    for i, (f, u) in enumerate(zip(factors, finals)):
        art.loop(f"runs/final_{i:02d}.csv", cfg.stepper.t_end, u)
    orders = []
    for i in range(len(factors) - 1):
        expected = (factors[i] / factors[i + 1]) ** 4
        ratio = errors[i] / errors[i + 1] if errors[i + 1] > 0 else math.inf
        orders.append(math.log(ratio) / math.log(factors[i] / factors[i + 1]) if ratio > 0 else math.nan)
        ok = expected / 2.0 <= ratio <= expected * 2.0
        out.checks.append(Check(f"error_ratio[{i}]", ratio, expected, ok, "dt^4 scaling within a factor 2"))
    out.results.update(base_dt=base_dt, factors=factors, errors=errors, observed_orders=orders,
                       oracle="exact traveling wave" if exact else "reference run at dt/4 of the finest")
    return out


COMMAND_TABLE = {
    "run-flow": run_flow,
    "run-scalar": run_scalar,
    "run-filament": run_filament,
    "hasimoto-compare": run_hasimoto_compare,
    "epsilon-study": run_epsilon_study,
    "identity-check": run_identity_check,
    "convergence": run_convergence,
}


def run(cfg: RunConfig):
    """Execute the configured command; returns ``(exit_code, summary_dict)``."""
    art = Artifacts(cfg.output, cfg)
    try:
        outcome = COMMAND_TABLE[cfg.command](cfg, art)
    except (ConfigError, InitialDataError, GeometryError, TypeError) as exc:
        outcome = Outcome(cfg.command, status="error", message=f"{type(exc).__name__}: {exc}")
    outcome.finalize()
    summary = art.summary(outcome)
    return outcome.exit_code, summary


__all__ = ["Check", "Outcome", "run", "make_filament", "identity_scan", "traveling_wave_error"]
