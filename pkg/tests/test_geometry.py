import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import fd_normal, quad_arclength, quat_to_matrix, random_quat, random_unit, rodrigues, trace_angle
from surfwarp.errors import DomainError
from surfwarp.geometry import (
    Family,
    GuideCurve,
    Rotation,
    Surface,
    angle_between,
    build_guide,
    exp_rotation,
    geodesic_angle,
    rotation_between,
    surface_height,
    surface_normal,
    surface_slope,
)

Z = np.array([0.0, 0.0, 1.0])
X = np.array([1.0, 0.0, 0.0])

unit_vec = st.tuples(*[st.floats(-1, 1, allow_nan=False)] * 3).filter(lambda v: np.linalg.norm(v) > 0.1).map(
    lambda v: np.asarray(v) / np.linalg.norm(v)
)
angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)


def same_rotation(a: Rotation, b: Rotation, tol=1e-9):
    return min(np.abs(a.q - b.q).max(), np.abs(a.q + b.q).max()) <= tol


class TestSurfaces:
    def test_height_examples(self):
        assert surface_height(Surface("sin", 1.0, 1.0), 0.0) == 0.0
        assert surface_height(Surface("cos", 2.0, 1.0), 0.0) == 2.0
        assert surface_height(Surface("parabolic", 0.5, height_offset=0.1), 2.0) == pytest.approx(2.1, abs=1e-12)

    def test_all_families_formulas(self):
        x = 0.3
        assert surface_height(Surface("exp", 0.2, scale=5.0), x) == pytest.approx(0.2 * math.exp(-5 * x * x))
        assert surface_height(Surface("cubic", 0.05), x) == pytest.approx(0.05 * x**3)

    def test_non_finite_x_rejected(self):
        with pytest.raises(DomainError):
            surface_height(Surface("sin", 1.0), float("nan"))

    def test_normal_examples(self):
        s = Surface("sin", 1.0, 1.0)
        assert np.allclose(surface_normal(s, math.pi / 2), Z, atol=1e-12)
        assert np.allclose(surface_normal(s, 0.0), np.array([-1.0, 0.0, 1.0]) / math.sqrt(2), atol=1e-12)
        assert np.allclose(surface_normal(Surface("parabolic", 1.0), 0.0), Z)

    @pytest.mark.parametrize("fam", list(Family))
    def test_normal_matches_finite_differences(self, fam):
        s = Surface(fam, 0.3, 4.0, 3.0)
        rng = np.random.default_rng(1)
        for x in rng.uniform(-1.5, 1.5, 1000):
            n = surface_normal(s, x)
            assert abs(np.linalg.norm(n) - 1) <= 1e-9 and n[2] > 0
            assert np.abs(n - fd_normal(lambda t: surface_height(s, t), x)).max() <= 1e-6

    def test_vectorised_normal_shape(self):
        s = Surface("cos", 0.1, 5.0)
        x = np.linspace(0, 1, 7)
        assert surface_normal(s, x).shape == (7, 3)
        assert np.allclose(surface_normal(s, x)[3], surface_normal(s, x[3]))

    def test_shifted_surface(self):
        s = Surface("sin", 0.1, 3.0)
        assert surface_height(s.shifted(-0.01), 0.4) == pytest.approx(surface_height(s, 0.4) - 0.01, abs=1e-15)


class TestRotations:
    def test_geodesic_examples(self):
        I = Rotation.identity()
        assert geodesic_angle(I, I) == 0.0
        assert geodesic_angle(I, exp_rotation(Z, math.pi / 2)) == pytest.approx(math.pi / 2, abs=1e-12)

    def test_geodesic_matches_trace_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(1000):
            q1, q2 = random_quat(rng), random_quat(rng)
            got = geodesic_angle(Rotation(q1), Rotation(q2))
            assert abs(got - trace_angle(quat_to_matrix(q1), quat_to_matrix(q2))) <= 1e-9
        # Relative rotations of known size, including fairly small ones.
        for _ in range(1000):
            q1 = random_quat(rng)
            q2 = (Rotation(q1) * exp_rotation(random_unit(rng), rng.uniform(0.01, 3.0))).q
            got = geodesic_angle(Rotation(q1), Rotation(q2))
            assert abs(got - trace_angle(quat_to_matrix(q1), quat_to_matrix(q2))) <= 1e-9

    def test_geodesic_sign_invariant(self):
        q = random_quat(np.random.default_rng(3))
        assert geodesic_angle(Rotation(q), Rotation(-q)) == 0.0

    def test_angle_between_examples(self):
        assert angle_between(X, X) == 0.0
        assert angle_between(X, [0, 1, 0]) == pytest.approx(math.pi / 2)
        assert angle_between([1, 1, 0], X) == pytest.approx(math.pi / 4, abs=1e-15)

    def test_angle_between_zero_vector(self):
        with pytest.raises(DomainError):
            angle_between([0, 0, 0], X)

    def test_rotation_between_examples(self):
        assert rotation_between(X, X) == Rotation.identity()
        assert same_rotation(rotation_between(X, [0, 1, 0]), exp_rotation(Z, math.pi / 2))
        r = rotation_between(X, -X)
        assert np.allclose(r.apply(X), -X, atol=1e-12)
        assert same_rotation(r, exp_rotation([0, 0, 1], math.pi)) or same_rotation(r, exp_rotation([0, 1, 0], math.pi))

    def test_exp_rotation_examples(self):
        assert exp_rotation(Z, 0.0) == Rotation.identity()
        assert np.allclose(exp_rotation(Z, math.pi).apply(X), -X, atol=1e-12)

    def test_exp_rotation_matches_rodrigues(self):
        rng = np.random.default_rng(4)
        for _ in range(1000):
            a, t = random_unit(rng), rng.uniform(-math.pi, math.pi)
            m = rodrigues(a, t)
            r = exp_rotation(a, t)
            for e in np.eye(3):
                assert np.abs(r.apply(e) - m @ e).max() <= 1e-9

    def test_from_matrix_round_trip(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            r = Rotation(random_quat(rng))
            assert same_rotation(Rotation.from_matrix(quat_to_matrix(r.q)), r, 1e-12)

    def test_norm_preserved_over_long_chain(self):
        rng = np.random.default_rng(6)
        r = Rotation.identity()
        for _ in range(10_000):
            r = r * Rotation(random_quat(rng))
        assert abs(np.linalg.norm(r.q) - 1.0) <= 1e-9

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_triangle_inequality(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = (Rotation(random_quat(rng)) for _ in range(3))
        assert geodesic_angle(a, c) <= geodesic_angle(a, b) + geodesic_angle(b, c) + 1e-9

    @settings(max_examples=300, deadline=None)
    @given(unit_vec, unit_vec)
    def test_rotation_between_maps_u_to_v(self, u, v):
        if angle_between(u, v) > math.pi - 1e-3:
            return
        r = rotation_between(u, v)
        assert np.abs(r.apply(u) - v).max() <= 1e-9
        assert abs(geodesic_angle(r, Rotation.identity()) - angle_between(u, v)) <= 1e-9

    def test_rotation_between_many_pairs(self):
        rng = np.random.default_rng(7)
        U, V = random_unit(rng, 10_000), random_unit(rng, 10_000)
        for u, v in zip(U, V):
            if angle_between(u, v) > math.pi - 1e-3:
                continue
            assert np.abs(rotation_between(u, v).apply(u) - v).max() <= 1e-9

    @settings(max_examples=200, deadline=None)
    @given(unit_vec, angles, angles)
    def test_exp_rotation_additive(self, a, t1, t2):
        assert same_rotation(exp_rotation(a, t1) * exp_rotation(a, t2), exp_rotation(a, t1 + t2))


class TestGuide:
    def test_flat_span(self):
        g = build_guide(Surface("sin", 0.0), 0.0, 10.0, 11)
        assert g.cumulative_arclength[0] == 0.0 and g.length == pytest.approx(10.0)

    def test_two_samples(self):
        g = build_guide(Surface("cos", 0.0, height_offset=0.2), -1.0, 2.0, 2)
        assert len(g.samples) == 2 and g.length == pytest.approx(3.0)

    def test_sine_arclength_against_quadrature(self):
        s = Surface("sin", 1.0, 1.0)
        g = build_guide(s, 0.0, 2 * math.pi, 10001)
        ref = quad_arclength(lambda x: math.cos(x), 0.0, 2 * math.pi)
        assert abs(ref - 7.6404) < 1e-3
        assert abs(g.length - ref) <= 1e-3

    def test_samples_on_surface(self):
        s = Surface("exp", 0.3, scale=10.0)
        g = build_guide(s, -1.0, 1.0, 501)
        assert np.abs(g.samples[:, 2] - surface_height(s, g.samples[:, 0])).max() <= 1e-9

    def test_invalid_range(self):
        with pytest.raises(DomainError):
            build_guide(Surface("sin", 0.1), 1.0, 0.0, 10)
        with pytest.raises(DomainError):
            build_guide(Surface("sin", 0.1), 0.0, 1.0, 1)

    def test_off_surface_samples_rejected(self):
        s = Surface("sin", 0.1, 2.0)
        pts = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.5]])
        with pytest.raises(DomainError):
            GuideCurve(pts, np.array([0.0, 1.1]), s)

    def test_point_at_interpolates(self):
        g = build_guide(Surface("sin", 0.0), 0.0, 1.0, 11)
        assert np.allclose(g.point_at(0.25), [0.25, 0.0, 0.0])

    def test_slope_matches_height(self):
        s = Surface("cubic", 0.05)
        assert surface_slope(s, 0.5) == pytest.approx(3 * 0.05 * 0.25)
