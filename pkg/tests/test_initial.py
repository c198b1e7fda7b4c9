import math

import numpy as np
import pytest

from saflow.initial import InitialDataError, make_initial_data, parse_selector, periodic_bump
from saflow.invariants import e1
from saflow.loopfield import GridSpec, LoopMap, velocity
from saflow.manifold import FlatTorus2, PoincareDisk, Sphere2, StereographicSphere
from saflow.scalarpde import ComplexLoop


class TestSelector:
    @pytest.mark.parametrize(
        "text, expected",
        [
            ("great-circle", ("great-circle", [])),
            ("latitude(0.8)", ("latitude", [0.8])),
            ("  Perturbed-Latitude( 0.8, 0.1 ,3 ) ", ("perturbed-latitude", [0.8, 0.1, 3.0])),
            ("constant()", ("constant", [])),
        ],
    )
    def test_parse(self, text, expected):
        assert parse_selector(text) == expected

    @pytest.mark.parametrize("text", ["latitude(0.8", "9lives", "latitude(a)", "bump(0.1,,0.2)"])
    def test_parse_errors(self, text):
        with pytest.raises(InitialDataError):
            parse_selector(text)

    @pytest.mark.parametrize(
        "selector, geometry",
        [
            ("spiral(1)", Sphere2()),
            ("latitude(1.2)", Sphere2()),
            ("latitude(0)", Sphere2()),
            ("latitude", Sphere2()),
            ("latitude(0.5, 0.1)", Sphere2()),
            ("great-circle", PoincareDisk()),
            ("bump(0.1, 0)", Sphere2()),
            ("perturbed-latitude(0.95, 5, 2)", PoincareDisk()),
            ("random-latitude(0.5, 0.1, 0)", Sphere2()),
            ("latitude(0.5)", None),
        ],
    )
    def test_rejects(self, selector, geometry):
        with pytest.raises(InitialDataError):
            make_initial_data(selector, GridSpec(32), geometry)


class TestLoopFamilies:
    def test_great_circle_is_equator(self, sphere, grid64):
        u = make_initial_data("great-circle", grid64, sphere)
        x = grid64.nodes
        np.testing.assert_allclose(u.points, np.stack([np.cos(x), np.sin(x), 0 * x], 1), rtol=0, atol=1e-15)

    def test_latitude_energy(self, sphere, grid64):
        assert e1(make_initial_data("latitude(0.8)", grid64, sphere)) == pytest.approx(math.pi * 0.64, rel=1e-12)

    def test_great_circle_winding_on_torus(self):
        u = make_initial_data("great-circle(3)", GridSpec(32), FlatTorus2())
        assert u.geometry.lift(u.points)[1] == pytest.approx([3.0, 0.0])

    def test_latitude_in_charts(self):
        for g in (PoincareDisk(), StereographicSphere()):
            u = make_initial_data("latitude(0.4)", GridSpec(32), g)
            np.testing.assert_allclose(np.linalg.norm(u.points, axis=1), 0.4)

    def test_perturbed_latitude_on_sphere(self, sphere, grid128):
        u = make_initial_data("perturbed-latitude(0.8, 0.1, 3)", grid128, sphere)
        assert np.max(np.abs(np.linalg.norm(u.points, axis=1) - 1)) <= 1e-15
        # the normal of a latitude is tangent to the meridian, so the height changes
        z = u.points[:, 2]
        assert np.ptp(z) == pytest.approx(2 * math.sin(0.1) * 0.8, rel=1e-2)

    def test_zero_amplitude_is_latitude(self, sphere, grid64):
        a = make_initial_data("perturbed-latitude(0.8, 0, 5)", grid64, sphere)
        b = make_initial_data("latitude(0.8)", grid64, sphere)
        np.testing.assert_allclose(a.points, b.points, atol=1e-15)

    @pytest.mark.parametrize("g", [Sphere2(), FlatTorus2(), PoincareDisk()], ids=["sphere", "torus", "disk"])
    def test_bump_is_localized(self, g):
        u = make_initial_data("bump(0.2, 0.3)", GridSpec(128), g)
        speed = g.norm(u.points, velocity(u).vectors)
        assert speed[0] < 1e-10 and speed.max() > 0.1

    @pytest.mark.parametrize("g", [Sphere2(), FlatTorus2(), StereographicSphere()], ids=["sphere", "torus", "chart"])
    def test_constant(self, g):
        u = make_initial_data("constant", GridSpec(16), g)
        assert isinstance(u, LoopMap)
        assert np.ptp(u.points, axis=0).max() == 0.0

    def test_selectors_are_deterministic(self, sphere, grid64):
        for sel in ("perturbed-latitude(0.8, 0.1, 3)", "bump(0.1, 0.5)", "random-latitude(0.7, 0.1, 4)"):
            a = make_initial_data(sel, grid64, sphere, seed=3)
            b = make_initial_data(sel, grid64, sphere, seed=3)
            assert a.points.tobytes() == b.points.tobytes()

    def test_seed_changes_random_data(self, sphere, grid64):
        a = make_initial_data("random-latitude(0.7, 0.1, 4)", grid64, sphere, seed=1)
        b = make_initial_data("random-latitude(0.7, 0.1, 4)", grid64, sphere, seed=2)
        assert np.max(np.abs(a.points - b.points)) > 1e-3

    def test_seed_ignored_by_fixed_families(self, sphere, grid64):
        a = make_initial_data("perturbed-latitude(0.8, 0.1, 3)", grid64, sphere, seed=1)
        b = make_initial_data("perturbed-latitude(0.8, 0.1, 3)", grid64, sphere, seed=2)
        np.testing.assert_array_equal(a.points, b.points)

    def test_int_grid(self, sphere):
        assert make_initial_data("great-circle", 32, sphere).grid == GridSpec(32)


class TestScalarFamilies:
    def test_plane_wave(self):
        psi = make_initial_data("plane-wave(0.5, 2)", GridSpec(32))
        assert isinstance(psi, ComplexLoop)
        np.testing.assert_allclose(psi.values, 0.5 * np.exp(2j * GridSpec(32).nodes))

    def test_gauss_packet_default_carrier(self):
        grid = GridSpec(64)
        psi = make_initial_data("gauss-packet(1.0, 0.5)", grid)
        np.testing.assert_allclose(psi.values, periodic_bump(grid.nodes, 0.5))
        assert psi.modulus.max() == pytest.approx(1.0)

    def test_gauss_packet_carrier(self):
        grid = GridSpec(64)
        psi = make_initial_data("gauss-packet(1.0, 0.5, 3)", grid)
        np.testing.assert_allclose(psi.values, periodic_bump(grid.nodes, 0.5) * np.exp(3j * grid.nodes))
