import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from saflow.manifold import (
    BasePointMismatch,
    ChartBlowUp,
    FlatTorus2,
    HolomorphicSpaceForm,
    PoincareDisk,
    Sphere2,
    StereographicSphere,
    TangentVector,
    complex_structure,
    curvature,
    make_geometry,
    metric,
    project_tangent,
    retract,
    sample_points,
    sample_tangents,
    symmetric_identity_residual,
)

NORTH = np.array([0.0, 0.0, 1.0])

GEOMETRIES = [
    Sphere2(),
    FlatTorus2(),
    PoincareDisk(),
    StereographicSphere(),
    HolomorphicSpaceForm(1, 4.0),
    HolomorphicSpaceForm(2, -4.0),
    HolomorphicSpaceForm(3, 4.0),
]
IDS = [repr(g) for g in GEOMETRIES]


def tv(p, v):
    return TangentVector(np.asarray(p, float), np.asarray(v, float))


class TestMetric:
    def test_sphere_unit_vector(self):
        X = tv(NORTH, [1, 0, 0])
        assert metric(Sphere2(), X, X) == pytest.approx(1.0)

    def test_poincare_origin_is_four(self):
        # lambda(0) = 2, so h = lambda^2 * |v|^2 = 4
        X = tv([0, 0], [1, 0])
        assert metric(PoincareDisk(), X, X) == pytest.approx(4.0, abs=1e-15)

    @pytest.mark.parametrize("g", GEOMETRIES, ids=IDS)
    def test_zero_vector(self, g, rng):
        p = sample_points(g, 1, rng)[0]
        (X,) = sample_tangents(g, p[None], rng)
        assert metric(g, tv(p, X[0]), tv(p, np.zeros(g.dim))) == 0.0

    def test_mismatched_base_rejected(self):
        X = tv(NORTH, [1, 0, 0])
        Y = tv([1, 0, 0], [0, 1, 0])
        with pytest.raises(BasePointMismatch):
            metric(Sphere2(), X, Y)

    def test_poincare_conformal_factor_off_origin(self):
        z = np.array([0.5, 0.0])
        lam = 2.0 / (1.0 - 0.25)
        assert metric(PoincareDisk(), tv(z, [0, 1]), tv(z, [0, 1])) == pytest.approx(lam**2)


class TestComplexStructure:
    def test_sphere_cross_product(self):
        out = complex_structure(Sphere2(), tv(NORTH, [1, 0, 0]))
        np.testing.assert_allclose(out.vec, [0, 1, 0], atol=1e-15)

    def test_torus_rotation(self):
        out = complex_structure(FlatTorus2(), tv([1.0, 2.0], [3.0, 5.0]))
        np.testing.assert_allclose(out.vec, [-5.0, 3.0])

    def test_space_form_block_rotation(self):
        g = HolomorphicSpaceForm(2, 4.0)
        out = g.complex_structure(g.origin, np.array([1.0, 2.0, 3.0, 4.0]))
        np.testing.assert_allclose(out, [-2.0, 1.0, -4.0, 3.0])

    @pytest.mark.parametrize("g", GEOMETRIES, ids=IDS)
    def test_j_squared_is_minus_identity(self, g, rng):
        p = sample_points(g, 200, rng)
        (X,) = sample_tangents(g, p, rng)
        JJ = g.complex_structure(p, g.complex_structure(p, X))
        assert np.max(np.abs(JJ + X)) <= 1e-14 * np.max(np.abs(X))

    @pytest.mark.parametrize("g", GEOMETRIES, ids=IDS)
    def test_j_is_isometry(self, g, rng):
        p = sample_points(g, 200, rng)
        X, Y = sample_tangents(g, p, rng, 2)
        lhs = g.metric(p, g.complex_structure(p, X), g.complex_structure(p, Y))
        rhs = g.metric(p, X, Y)
        scale = g.norm(p, X) * g.norm(p, Y)
        assert np.max(np.abs(lhs - rhs) / scale) <= 1e-12


class TestCurvature:
    def test_sphere_holomorphic_section(self):
        X = tv(NORTH, [1, 0, 0])
        JX = tv(NORTH, [0, 1, 0])
        np.testing.assert_allclose(curvature(Sphere2(), X, JX, JX).vec, [1, 0, 0], atol=1e-15)

    def test_torus_flat(self, rng):
        g = FlatTorus2()
        p = sample_points(g, 50, rng)
        X, Y, Z = sample_tangents(g, p, rng, 3)
        assert np.all(g.curvature(p, X, Y, Z) == 0.0)

    def test_sphere_normalization_random(self, rng):
        g = Sphere2()
        p = sample_points(g, 100, rng)
        (X,) = sample_tangents(g, p, rng)
        JX = g.complex_structure(p, X)
        lhs = g.curvature(p, X, JX, JX)
        rhs = g.metric(p, X, X)[:, None] * X
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(rhs))

    @pytest.mark.parametrize("c", [-4.0, 4.0])
    def test_space_form_n1_matches_surface(self, c, rng):
        # n = 1: holomorphic sectional curvature equals the Gaussian curvature
        g = HolomorphicSpaceForm(1, c)
        X, Y, Z = rng.standard_normal((3, 2))
        expected = c * (np.dot(Y, Z) * X - np.dot(X, Z) * Y)
        np.testing.assert_allclose(g.curvature(g.origin, X, Y, Z), expected, atol=1e-13)

    @pytest.mark.parametrize("g", [HolomorphicSpaceForm(2, 4.0), HolomorphicSpaceForm(3, -4.0)], ids=repr)
    def test_space_form_holomorphic_sectional_curvature(self, g, rng):
        X = rng.standard_normal((50, g.dim))
        JX = g.complex_structure(None, X)
        k = g.metric(None, g.curvature(None, X, JX, JX), X) / g.metric(None, X, X) ** 2
        np.testing.assert_allclose(k, g.c, rtol=1e-12)


class TestCurvatureSymmetries:
    """Symmetries of the curvature tensor on random tangent tuples."""

    @pytest.fixture(params=GEOMETRIES, ids=IDS)
    def sample(self, request, rng):
        g = request.param
        p = sample_points(g, 300, rng)
        X, Y, Z, W = sample_tangents(g, p, rng, 4)
        # coordinate size of R(X,Y)Z and h(R(X,Y)Z, W), including the conformal factor
        e = np.broadcast_to(np.eye(g.dim)[0], p.shape)
        lam2 = np.max(g.metric(p, e, e))
        euclid = [np.linalg.norm(v, axis=1) for v in (X, Y, Z, W)]
        scale = lam2**2 * np.max(euclid[0] * euclid[1] * euclid[2] * np.maximum(euclid[3], 1.0))
        return g, p, X, Y, Z, W, scale

    def test_antisymmetry(self, sample):
        g, p, X, Y, Z, _, s = sample
        assert np.max(np.abs(g.curvature(p, X, Y, Z) + g.curvature(p, Y, X, Z))) <= 1e-12 * s

    def test_pair_symmetry(self, sample):
        g, p, X, Y, Z, W, s = sample
        a = g.metric(p, g.curvature(p, X, Y, Z), W)
        b = g.metric(p, g.curvature(p, Z, W, X), Y)
        assert np.max(np.abs(a - b)) <= 1e-12 * s

    def test_first_bianchi(self, sample):
        g, p, X, Y, Z, _, s = sample
        tot = g.curvature(p, X, Y, Z) + g.curvature(p, Y, Z, X) + g.curvature(p, Z, X, Y)
        assert np.max(np.abs(tot)) <= 1e-12 * s

    def test_kahler_compatibility(self, sample):
        g, p, X, Y, Z, _, s = sample
        a = g.curvature(p, X, Y, g.complex_structure(p, Z))
        b = g.complex_structure(p, g.curvature(p, X, Y, Z))
        assert np.max(np.abs(a - b)) <= 1e-12 * s


class TestProjection:
    def test_removes_normal_component(self):
        out = project_tangent(Sphere2(), NORTH, np.array([3.0, 4.0, 5.0]))
        np.testing.assert_allclose(out.vec, [3.0, 4.0, 0.0])

    def test_idempotent(self, rng):
        g = Sphere2()
        p = sample_points(g, 20, rng)
        v = g.project(p, rng.standard_normal((20, 3)))
        np.testing.assert_allclose(g.project(p, v), v, atol=1e-15)

    def test_normal_direction_vanishes(self):
        assert np.allclose(project_tangent(Sphere2(), NORTH, NORTH).vec, 0.0)

    def test_chart_identity(self):
        v = np.array([0.3, -0.2])
        np.testing.assert_array_equal(PoincareDisk().project(np.zeros(2), v), v)


class TestRetract:
    def test_zero_step(self):
        p = np.array([1.0, 0.0, 0.0])
        np.testing.assert_array_equal(retract(Sphere2(), p, np.zeros(3)), p)

    def test_sphere_normalizes(self):
        out = retract(Sphere2(), np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
        np.testing.assert_allclose(out, np.array([1.0, 1.0, 0]) / np.sqrt(2), atol=1e-15)

    def test_torus_wraps(self):
        out = retract(FlatTorus2(), np.array([6.0, 0.0]), np.array([0.5, 0.0]))
        np.testing.assert_allclose(out, [6.5 - 2 * np.pi, 0.0], atol=1e-15)

    def test_disk_guard(self):
        with pytest.raises(ChartBlowUp, match="reduce the step size"):
            retract(PoincareDisk(), np.array([0.9, 0.0]), np.array([0.2, 0.0]))

    def test_sphere_norm_invariant(self, rng):
        g = Sphere2()
        p = sample_points(g, 100, rng)
        (V,) = sample_tangents(g, p, rng)
        q = g.retract(p, V)
        assert np.max(np.abs(np.linalg.norm(q, axis=1) - 1.0)) <= 1e-12

    @pytest.mark.parametrize("t", [1e-2, 1e-3])
    def test_first_order_consistent_with_exponential(self, t):
        p = np.array([0.0, 0.0, 1.0])
        v = np.array([1.0, 0.0, 0.0])
        exp = np.array([np.sin(t), 0.0, np.cos(t)])
        err = np.linalg.norm(Sphere2().retract(p, t * v) - exp)
        assert err <= t**2


class TestIdentityResidual:
    @pytest.mark.parametrize("g", GEOMETRIES, ids=IDS)
    def test_vanishes(self, g, rng):
        p = sample_points(g, 1, rng)[0]
        X, Y = (v[0] for v in sample_tangents(g, p[None], rng, 2))
        r = symmetric_identity_residual(g, tv(p, X), tv(p, Y))
        scale = (g.norm(p[None], X[None]) ** 5 * g.norm(p[None], Y[None]))[0]
        assert abs(r) <= 1e-12 * scale

    def test_torus_exact_zero(self, rng):
        g = FlatTorus2()
        assert symmetric_identity_residual(g, tv([1, 1], [1, 2]), tv([1, 1], [3, -1])) == 0.0

    @settings(max_examples=200, deadline=None)
    @given(
        st.lists(st.floats(-3, 3, allow_nan=False), min_size=4, max_size=4),
        st.lists(st.floats(-3, 3, allow_nan=False), min_size=4, max_size=4),
        st.sampled_from([-4.0, 4.0]),
    )
    def test_space_form_property(self, xs, ys, c):
        g = HolomorphicSpaceForm(2, c)
        X, Y = np.array(xs), np.array(ys)
        r = symmetric_identity_residual(g, tv(g.origin, X), tv(g.origin, Y))
        scale = max(np.linalg.norm(X) ** 5 * np.linalg.norm(Y), 1e-300)
        assert abs(r) <= 1e-12 * max(scale, 1.0)


class TestMakeGeometry:
    @pytest.mark.parametrize(
        "kind, cls",
        [("sphere2", Sphere2), ("flat-torus2", FlatTorus2), ("poincare_disk", PoincareDisk)],
    )
    def test_names(self, kind, cls):
        assert isinstance(make_geometry(kind), cls)

    def test_space_form_params(self):
        g = make_geometry("holomorphic_space_form", n=3, c=-4.0)
        assert (g.n, g.c, g.dim) == (3, -4.0, 6)
        assert not g.supports_flow

    def test_unknown(self):
        with pytest.raises(ValueError, match="unknown geometry"):
            make_geometry("klein-bottle")

    def test_curvature_signs(self):
        assert Sphere2().gaussian_curvature == 1.0
        assert PoincareDisk().gaussian_curvature == -1.0
        assert FlatTorus2().gaussian_curvature == 0.0
