import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lorentzgas.geometry import (
    diff_cross_section,
    direction,
    exit_parameter,
    impact_parameter,
    random_direction,
    reflect,
    rotate,
    rotation_to_e1,
    scatter_from_impact,
)

angles = st.floats(min_value=-math.pi, max_value=math.pi, exclude_min=True)
impacts = st.floats(min_value=-0.999999, max_value=0.999999)


def unit(a):
    return np.array([math.cos(a), math.sin(a)])


class TestRotationToE1:
    def test_e1_fixed_point(self):
        assert np.allclose(rotation_to_e1(unit(0.0)), np.eye(2), atol=1e-15)

    def test_axis_swap(self):
        r = rotation_to_e1(np.array([0.0, 1.0]))
        assert np.allclose(r, [[0.0, 1.0], [-1.0, 0.0]], atol=1e-15)

    def test_three_four_five(self):
        r = rotation_to_e1(np.array([0.6, 0.8]))
        assert np.allclose(r[0], [0.6, 0.8], atol=1e-15)
        assert np.allclose(r @ np.array([0.6, 0.8]), [1.0, 0.0], atol=1e-12)

    @given(angles)
    def test_maps_to_e1_and_special_orthogonal(self, a):
        v = unit(a)
        r = rotation_to_e1(v)
        assert np.allclose(r @ v, [1.0, 0.0], atol=1e-12)
        assert np.allclose(r.T @ r, np.eye(2), atol=1e-12)
        assert np.linalg.det(r) == pytest.approx(1.0, abs=1e-12)


class TestReflect:
    def test_head_on_reversal(self):
        out = reflect(unit(0.0), np.array([-1.0, 0.0]))
        assert np.allclose(out, [-1.0, 0.0], atol=1e-15)

    def test_grazing_unchanged(self):
        out = reflect(unit(0.0), np.array([0.0, 1.0]))
        assert np.allclose(out, [1.0, 0.0], atol=1e-15)

    def test_sixty_degree_normal(self):
        out = reflect(unit(0.0), np.array([-math.sqrt(3.0) / 2.0, 0.5]))
        assert np.allclose(out, [-0.5, math.sqrt(3.0) / 2.0], atol=1e-12)

    def test_norm_preserved_bulk(self, rng):
        for _ in range(10000):
            v = random_direction(rng)
            n = random_direction(rng)
            out = reflect(v, n)
            assert abs(math.hypot(out[0], out[1]) - 1.0) < 1e-12


class TestImpactParameter:
    def test_head_on_is_zero(self):
        assert impact_parameter(unit(0.0), np.array([-1.0, 0.0])) == pytest.approx(0.0, abs=1e-15)

    def test_raytraced_disk(self):
        # shoot a ray at a unit disk with offset b and reflect it by hand
        b = 0.6
        v = np.array([1.0, 0.0])
        hit = np.array([-math.sqrt(1.0 - b * b), b])
        out = reflect(v, hit)
        assert np.allclose(out, [2 * b * b - 1, 2 * b * math.sqrt(1 - b * b)], atol=1e-12)
        assert impact_parameter(v, out) == pytest.approx(b, abs=1e-12)

    def test_right_angle(self):
        b = impact_parameter(unit(0.0), np.array([0.0, 1.0]))
        assert b == pytest.approx(math.sqrt(2.0) / 2.0, abs=1e-12)

    def test_equal_directions_error(self):
        with pytest.raises(ValueError):
            impact_parameter(unit(0.3), unit(0.3))

    @given(angles, impacts)
    def test_roundtrip_from_impact(self, a, b):
        v = unit(a)
        out = scatter_from_impact(v, b)
        assert impact_parameter(v, out) == pytest.approx(b, abs=1e-10)

    @given(angles, angles, angles)
    def test_rotation_equivariance(self, a, b, phi):
        if abs(a - b) < 1e-9:
            return
        v1, v2 = unit(a), unit(b)
        lhs = impact_parameter(rotate(v1, phi), rotate(v2, phi))
        assert lhs == pytest.approx(impact_parameter(v1, v2), abs=1e-10)


class TestScatterFromImpact:
    def test_head_on(self):
        assert np.allclose(scatter_from_impact(unit(0.0), 0.0), [-1.0, 0.0], atol=1e-15)

    def test_b_point_six(self):
        out = scatter_from_impact(unit(0.0), 0.6)
        assert np.allclose(out, [-0.28, 0.96], atol=1e-12)

    def test_head_on_rotated(self):
        out = scatter_from_impact(np.array([0.0, 1.0]), 0.0)
        assert np.allclose(out, [0.0, -1.0], atol=1e-12)

    def test_no_collision_error(self):
        with pytest.raises(ValueError):
            scatter_from_impact(unit(0.0), 1.0)

    @given(angles, angles)
    def test_roundtrip_to_impact(self, a, b):
        v1, v2 = unit(a), unit(b)
        bb = impact_parameter(v1, v2) if abs(a - b) > 1e-9 else 1.0
        if abs(bb) > 1.0 - 1e-9:
            return  # grazing limit: the angle-impact map is ill-conditioned
        out = scatter_from_impact(v1, bb)
        assert np.allclose(out, v2, atol=1e-10)


class TestExitParameter:
    def test_head_on_symmetric(self):
        assert exit_parameter(np.array([-1.0, 0.0]), unit(0.0)) == pytest.approx(0.0, abs=1e-15)

    def test_time_reversal_definition(self, rng):
        for _ in range(1000):
            v = random_direction(rng)
            v0 = random_direction(rng)
            if abs(v[0] - v0[0]) + abs(v[1] - v0[1]) < 1e-12:
                continue
            assert exit_parameter(v, v0) == impact_parameter(-v, -v0)

    def test_matches_ray_offset_after_collision(self, rng):
        # the exit parameter is the signed perpendicular offset of the
        # outgoing ray from the scatterer center, in disk radii
        for _ in range(200):
            v0 = random_direction(rng)
            b = rng.random() * 1.8 - 0.9
            # construct the collision on a unit disk at the origin
            perp = np.array([-v0[1], v0[0]])
            hit = -math.sqrt(1.0 - b * b) * v0 + b * perp
            v = reflect(v0, hit)
            s = exit_parameter(v, v0)
            measured = v[0] * (-hit[1]) - v[1] * (-hit[0])
            assert s == pytest.approx(measured, abs=1e-10)
            assert s == pytest.approx(-b, abs=1e-10)


class TestDiffCrossSection:
    def test_head_on(self):
        assert diff_cross_section(unit(0.0), np.array([-1.0, 0.0])) == pytest.approx(0.5)

    def test_zero_separation(self):
        assert diff_cross_section(unit(0.3), unit(0.3)) == 0.0

    def test_right_angle(self):
        got = diff_cross_section(unit(0.0), np.array([0.0, 1.0]))
        assert got == pytest.approx(math.sqrt(2.0) / 4.0, abs=1e-14)

    def test_total_cross_section_is_two(self):
        # integrate over outgoing angles with the trapezoid rule
        thetas = np.linspace(0.0, 2.0 * math.pi, 200001)
        vals = 0.25 * np.hypot(1.0 - np.cos(thetas), -np.sin(thetas))
        total = np.trapezoid(vals, thetas)
        assert total == pytest.approx(2.0, abs=1e-8)

    def test_jacobian_relation(self, rng):
        # |db/dtheta| equals the differential cross section
        for _ in range(50):
            theta = rng.random() * 2.8 + 0.1
            h = 1e-6
            b1 = impact_parameter(unit(0.0), unit(theta + h))
            b0 = impact_parameter(unit(0.0), unit(theta - h))
            num = abs(b1 - b0) / (2.0 * h)
            sigma = diff_cross_section(unit(0.0), unit(theta))
            assert num == pytest.approx(sigma, rel=1e-4)


def test_direction_normalizes():
    d = direction(3.0, 4.0)
    assert np.allclose(d, [0.6, 0.8])
    with pytest.raises(ValueError):
        direction(0.0, 0.0)
