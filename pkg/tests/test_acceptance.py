"""Acceptance gate: nine criteria at their stated tolerances.

Each test prints one PASS/FAIL line and the lines are collected again in
the terminal summary under "acceptance criteria".
"""

import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from saflow.config import parse_config
from saflow.flow import FlowParams, StepperConfig, evolve, stability_dt
from saflow.initial import make_initial_data
from saflow.invariants import drift_series, e4_growth_check
from saflow.loopfield import GridSpec
from saflow.manifold import Sphere2, make_geometry
from saflow.scalarpde import ComplexLoop, ScalarParams, evolve_scalar, measured_phase_slope, plane_wave_frequency
from saflow.studies import IDENTITY_GEOMETRIES, identity_scan, run, traveling_wave_error

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

CONSERVATION_DATA = "perturbed-latitude(0.8, 0.1, 8)"


def test_1_traveling_wave(acceptance_line):
    grid = GridSpec(128)
    u0 = make_initial_data("great-circle", grid, Sphere2())
    p = FlowParams(1, 1)
    res = evolve(u0, p, StepperConfig(0.5, dt=5e-6, snapshot_stride=10**9, energy_stride=10**9))
    err = traveling_wave_error(res.final, p, 1, 0.5)
    ok = acceptance_line(1, "traveling wave", err <= 1e-4, f"sup node error {err:.3e} <= 1e-4 after {res.steps} steps")
    assert ok


@pytest.fixture(scope="module")
def conservation_runs():
    grid = GridSpec(128)
    u0 = make_initial_data(CONSERVATION_DATA, grid, Sphere2())
    p = FlowParams(1, 1)
    dt = stability_dt(p, grid)
    out = {}
    t0 = time.perf_counter()
    for label, step in (("dt", dt), ("dt/2", dt / 2)):
        stride = max(1, round(0.2 / step / 80))
        out[label] = evolve(u0, p, StepperConfig(0.2, dt=step, energy_stride=stride, snapshot_stride=10**9))
    out["runtime"] = time.perf_counter() - t0
    return out


def test_2_conservation(conservation_runs, acceptance_line):
    coarse = drift_series(conservation_runs["dt"].energies)
    fine = drift_series(conservation_runs["dt/2"].energies)
    details, ok = [], conservation_runs["runtime"] <= 300
    for key in ("e1", "e2", "e3"):
        a, b = coarse[key], fine[key]
        ratio = a / b if b > 0 else math.inf
        ok &= a <= 1e-4 and b <= 1e-4 and ratio >= 4
        details.append(f"{key} {a:.2e}->{b:.2e} (x{ratio:.1f})")
    details.append(f"runtime {conservation_runs['runtime']:.0f}s")
    assert acceptance_line(2, "conservation of E1-E3", ok, ", ".join(details))


def test_3_semi_conservation(conservation_runs, acceptance_line):
    reps = conservation_runs["dt"].energies
    chk = e4_growth_check([r.t for r in reps], [r.e4 for r in reps], fit_until=0.1, tolerance=0.1)
    ok = chk.ok
    detail = f"fitted rate {chk.rate:.3e}, violation {chk.violation:.3e} <= 0.1 on [0.1, 0.2]"
    assert acceptance_line(3, "E4 semi-conservation", ok, detail)


def test_4_curvature_identity(acceptance_line):
    rng = np.random.default_rng(0)
    worst, names = 0.0, []
    for kind, params in IDENTITY_GEOMETRIES:
        g = make_geometry(kind, **params)
        worst = max(worst, identity_scan(g, 1000, rng))
        names.append(repr(g))
    ok = worst <= 1e-12 and len(names) == 9
    assert acceptance_line(4, "curvature identity", ok, f"max normalized residual {worst:.2e} over {len(names)} targets")


def _study(tmp_path, text):
    cfg = parse_config(text).with_overrides(output=str(tmp_path))
    code, summary = run(cfg)
    return code, summary


def test_5_epsilon_convergence(tmp_path, acceptance_line):
    code, s = _study(
        tmp_path,
        "[run]\ncommand = epsilon-study\n[initial]\nselector = perturbed-latitude(0.8, 0.1, 3)\n"
        "[stepper]\nm = 128\nt_end = 0.1\nenergy_stride = 200\n[study]\nepsilons = 1e-2, 1e-3, 1e-4\nworkers = 4\n",
    )
    d = s["results"]["distances"]
    decreasing = all(a > b for a, b in zip(d, d[1:]))
    monotone = all(c["passed"] for c in s["checks"] if c["name"].startswith("e1_non_increasing"))
    ok = s["status"] != "blow-up" and decreasing and monotone and len(d) == 3
    detail = f"sup-distances {', '.join(f'{v:.3e}' for v in d)}; E1 non-increasing: {monotone}"
    assert acceptance_line(5, "epsilon convergence", ok, detail)


def test_6_hasimoto_cross_validation(tmp_path, acceptance_line):
    code, s = _study(
        tmp_path,
        "[run]\ncommand = hasimoto-compare\n[initial]\nselector = bump(0.1, 0.5)\n"
        "[flow]\nalpha = 1\nbeta = 1\n[stepper]\nm = 128\nt_end = 0.1\nsnapshot_stride = 1000\n",
    )
    err = max(s["results"]["modulus_errors"])
    ok = code == 0 and s["results"]["K"] == 1.0 and err <= 5e-3
    n = len(s["results"]["modulus_errors"])
    assert acceptance_line(6, "Hasimoto vs scalar solver", ok, f"max | |q| - |Psi| | = {err:.3e} <= 5e-3 over {n} times")


def test_7_filament_commuting_diagram(tmp_path, acceptance_line):
    code, s = _study(
        tmp_path,
        "[run]\ncommand = run-filament\n[initial]\nselector = planar-circle\n"
        "[flow]\nalpha = 1\nbeta = 1\n[stepper]\nm = 128\nt_end = 0.1\nsnapshot_stride = 2000\n",
    )
    diag = s["results"]["commuting_error"]
    drift = s["results"]["arclength_drift"]
    ok = diag <= 1e-3 and drift <= 1e-4
    assert acceptance_line(7, "filament commuting diagram", ok,
                           f"diagram error {diag:.3e} <= 1e-3, arclength drift {drift:.3e} <= 1e-4")


PARAMETER_SETS = {
    "alpha": ScalarParams(1.0, 0.0, 0.0, 2.0),
    "beta": ScalarParams(0.0, 1.0, 0.0, 2.0),
    "mixed": ScalarParams(1.0, 1.0, 0.5, 2.0),
}


def test_8_scalar_dispersion(acceptance_line):
    grid = GridSpec(32)
    worst = 0.0
    for p in PARAMETER_SETS.values():
        for A, k in ((1.0, 1), (1.0, 2), (0.5, 3)):
            psi0 = ComplexLoop(grid, A * np.exp(1j * k * grid.nodes))
            traj = evolve_scalar(psi0, p, StepperConfig(1.0, snapshot_stride=50))
            omega = plane_wave_frequency(A, k, p)
            rel = abs(measured_phase_slope(traj, k) + omega) / max(abs(omega), 1.0)
            worst = max(worst, rel)
    ok = worst <= 1e-6
    assert acceptance_line(8, "scalar dispersion", ok, f"max relative phase-slope error {worst:.2e} <= 1e-6 (9 waves)")


PROPERTY_SUITES = [
    "tests/test_manifold.py::TestCurvatureSymmetries",
    "tests/test_manifold.py::TestComplexStructure",
    "tests/test_loopfield.py::TestCovariantDerivative::test_integration_by_parts",
    "tests/test_hasimoto.py::TestExtractQ::test_gauge_invariance",
    "tests/test_hasimoto.py::TestParallelFrame::test_orthonormal",
    "tests/test_hasimoto.py::TestGaussBonnet",
    "tests/test_scalarpde.py::TestEvolve::test_mass_conservation",
]


def test_9_property_suites(acceptance_line):
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    t0 = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *PROPERTY_SUITES],
        cwd=root, capture_output=True, text=True,
    )
    elapsed = time.perf_counter() - t0
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    ok = proc.returncode == 0 and elapsed <= 600
    assert acceptance_line(9, "property suites", ok, f"{tail} ({len(PROPERTY_SUITES)} suites)"), proc.stdout[-3000:]
