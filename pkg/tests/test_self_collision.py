import math

import numpy as np
import pytest

from jitstar.robot.kinematics import KinematicChain, KinematicSystem
from jitstar.robot.self_collision import (
    LinkSegment,
    ScdfConfig,
    is_self_collision_free,
    link_segments,
    scdf_between_arms,
    scdf_within_arm,
    segment_distance_squared,
    self_collision_predicate,
)


def grid_min_distance(p: LinkSegment, q: LinkSegment, n: int = 201) -> float:
    """Brute-force minimum distance on an n x n parameter grid, refined once around the best node."""

    def search(lo1, hi1, lo2, hi2):
        u1 = np.linspace(lo1, hi1, n)
        u2 = np.linspace(lo2, hi2, n)
        a = p.p1[None, :] + u1[:, None] * (p.p2 - p.p1)[None, :]
        b = q.p1[None, :] + u2[:, None] * (q.p2 - q.p1)[None, :]
        d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)
        i, j = np.unravel_index(np.argmin(d), d.shape)
        return float(d[i, j]), float(u1[i]), float(u2[j])

    coarse, u1, u2 = search(0.0, 1.0, 0.0, 1.0)
    h = 1.0 / (n - 1)
    fine, _, _ = search(max(0.0, u1 - h), min(1.0, u1 + h), max(0.0, u2 - h), min(1.0, u2 + h))
    return min(coarse, fine)


class TestSegmentDistance:
    def test_parallel_offset(self):
        d_sq, _, _ = segment_distance_squared(
            LinkSegment.of([0, 0, 0], [1, 0, 0]), LinkSegment.of([0, 1, 0], [1, 1, 0])
        )
        assert d_sq == pytest.approx(1.0)

    def test_crossing(self):
        d_sq, u1, u2 = segment_distance_squared(
            LinkSegment.of([0, 0, 0], [1, 0, 0]), LinkSegment.of([0.5, -0.5, 0], [0.5, 0.5, 0])
        )
        assert d_sq == pytest.approx(0.0, abs=1e-15)
        assert u1 == pytest.approx(0.5)
        assert u2 == pytest.approx(0.5)

    def test_clamped_to_endpoints(self):
        d_sq, u1, u2 = segment_distance_squared(
            LinkSegment.of([0, 0, 0], [1, 0, 0]), LinkSegment.of([2, 1, 0], [3, 1, 0])
        )
        assert d_sq == pytest.approx(2.0)
        assert (u1, u2) == (1.0, 0.0)

    def test_swapping_segments_swaps_parameters(self):
        rng = np.random.default_rng(11)
        for _ in range(500):
            p = LinkSegment(rng.random(3), rng.random(3))
            q = LinkSegment(rng.random(3), rng.random(3))
            d_pq, u1, u2 = segment_distance_squared(p, q)
            d_qp, v1, v2 = segment_distance_squared(q, p)
            assert d_qp == pytest.approx(d_pq, abs=1e-12)
            assert (v1, v2) == (pytest.approx(u2, abs=1e-6), pytest.approx(u1, abs=1e-6))

    def test_degenerate_point_segment(self):
        d_sq, _, _ = segment_distance_squared(
            LinkSegment.of([0, 0, 0], [1, 0, 0]), LinkSegment.of([0.3, 2, 0], [0.3, 2, 0])
        )
        assert d_sq == pytest.approx(4.0)

    def test_matches_grid_search(self):
        rng = np.random.default_rng(21)
        for _ in range(1000):
            pts = rng.uniform(0.0, 1.0, size=(4, 3))
            p, q = LinkSegment(pts[0], pts[1]), LinkSegment(pts[2], pts[3])
            d_sq, u1, u2 = segment_distance_squared(p, q)
            closed = math.sqrt(d_sq)
            oracle = grid_min_distance(p, q)
            assert closed <= oracle + 1e-12
            assert oracle - closed <= 1e-3
            assert 0.0 <= u1 <= 1.0 and 0.0 <= u2 <= 1.0
            assert d_sq == pytest.approx(float(np.sum((p.at(u1) - q.at(u2)) ** 2)))

    def test_constructed_intersections(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            x = rng.uniform(-1.0, 1.0, 3)
            d1, d2 = rng.normal(size=3), rng.normal(size=3)
            t1, t2 = rng.uniform(0.1, 0.9, 2)
            p = LinkSegment(x - t1 * d1, x + (1 - t1) * d1)
            q = LinkSegment(x - t2 * d2, x + (1 - t2) * d2)
            assert segment_distance_squared(p, q)[0] == pytest.approx(0.0, abs=1e-20)


class TestDangerFields:
    def test_between_arms_single_pair(self):
        cfg = ScdfConfig(kappa=1.0)
        a = [LinkSegment.of([0, 0, 0], [1, 0, 0])]
        assert scdf_between_arms(a, [LinkSegment.of([0, 1, 0], [1, 1, 0])], cfg) == pytest.approx(1.0)
        assert scdf_between_arms(a, [LinkSegment.of([0, 2, 0], [1, 2, 0])], cfg) == pytest.approx(0.5)

    def test_gain_is_linear(self):
        a = [LinkSegment.of([0, 0, 0], [1, 0, 0])]
        b = [LinkSegment.of([0, 1, 0], [1, 1, 0]), LinkSegment.of([0, 3, 0], [1, 3, 0])]
        once = scdf_between_arms(a, b, ScdfConfig(kappa=0.5))
        assert scdf_between_arms(a, b, ScdfConfig(kappa=1.0)) == pytest.approx(2 * once)

    def test_strictly_decreasing_in_distance(self):
        a = [LinkSegment.of([0, 0, 0], [1, 0, 0])]
        fields = [
            scdf_between_arms(a, [LinkSegment.of([0, d, 0], [1, d, 0])], ScdfConfig())
            for d in np.linspace(0.01, 3.0, 40)
        ]
        assert all(near > far for near, far in zip(fields, fields[1:]))

    def test_touching_links_are_infinite(self):
        a = [LinkSegment.of([0, 0, 0], [1, 0, 0])]
        b = [LinkSegment.of([0.5, -1, 0], [0.5, 1, 0])]
        assert scdf_between_arms(a, b, ScdfConfig()) == math.inf

    def test_within_arm_needs_three_links(self):
        links = [LinkSegment.of([0, 0, 0], [1, 0, 0]), LinkSegment.of([1, 0, 0], [1, 1, 0])]
        assert scdf_within_arm(links, ScdfConfig(kappa=1.0)) == 0.0

    def test_within_arm_folded(self):
        h = math.sqrt(0.5)
        links = [
            LinkSegment.of([0, 0, 0], [1, 0, 0]),
            LinkSegment.of([1, 0, 0], [1, 0, h]),
            LinkSegment.of([1, 0, h], [0, 0, h]),
        ]
        assert scdf_within_arm(links, ScdfConfig(kappa=1.0)) == pytest.approx(1.41421, abs=1e-5)

    def test_within_arm_straight(self):
        links = [LinkSegment.of([i, 0, 0], [i + 1, 0, 0]) for i in range(3)]
        assert scdf_within_arm(links, ScdfConfig(kappa=1.0)) == pytest.approx(1.0)

    def test_link_segments_follow_joint_origins(self, dual_3r):
        arms = link_segments(dual_3r, np.zeros(6))
        assert [len(links) for links in arms] == [3, 3]
        np.testing.assert_allclose(arms[1][0].p1[:2], [2.0, 0.0])
        np.testing.assert_allclose(arms[1][2].p2[:2], [3.5, 0.0])

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ScdfConfig(kappa=0.0)
        assert ScdfConfig.from_mapping({"lambda_tol": 0.5, "other": 1}).lambda_tol == 0.5


class TestSelfCollisionFree:
    def test_two_link_arm_always_free(self, planar_2r):
        rng = np.random.default_rng(3)
        for q in rng.uniform(-math.pi, math.pi, size=(50, 2)):
            assert is_self_collision_free(planar_2r, q, ScdfConfig())

    def test_distant_arms(self):
        system = KinematicSystem.of(
            [
                KinematicChain.planar([0.5, 0.5], origin=(0.0, 0.0)),
                KinematicChain.planar([0.5, 0.5], origin=(10.0, 0.0)),
            ]
        )
        rng = np.random.default_rng(8)
        for q in rng.uniform(-math.pi, math.pi, size=(50, 4)):
            assert is_self_collision_free(system, q, ScdfConfig())

    def test_overlapping_arms(self):
        system = KinematicSystem.of(
            [KinematicChain.planar([0.5, 0.5]), KinematicChain.planar([0.5, 0.5])]
        )
        assert not is_self_collision_free(system, np.array([0.3, 0.2, 0.3, 0.2]), ScdfConfig())

    def test_folded_arm_collides_with_itself(self, planar_3r):
        # third link folds back across the first
        assert not is_self_collision_free(planar_3r, np.array([0.0, 2.5, 2.5]), ScdfConfig())

    def test_invariant_to_translating_both_arms(self):
        def pair(offset):
            x, y = offset
            return KinematicSystem.of(
                [
                    KinematicChain.planar([0.5, 0.5, 0.5], origin=(x, y)),
                    KinematicChain.planar([0.5, 0.5, 0.5], origin=(x + 0.6, y)),
                ]
            )

        here, there = pair((0.0, 0.0)), pair((3.7, -2.1))
        rng = np.random.default_rng(5)
        verdicts = []
        for q in rng.uniform(-math.pi, math.pi, size=(300, 6)):
            verdict = is_self_collision_free(here, q, ScdfConfig())
            assert is_self_collision_free(there, q, ScdfConfig()) == verdict
            verdicts.append(verdict)
        assert set(verdicts) == {True, False}

    def test_predicate(self, dual_3r):
        predicate = self_collision_predicate(dual_3r, ScdfConfig())
        assert predicate(np.array([2.6, -0.6, -0.6, 0.5, 0.6, 0.6]))
        # both arms stretched towards each other overlap at x = 1.5 .. 2.0
        assert not predicate(np.array([0.0, 0.0, 0.0, math.pi, 0.0, 0.0]))
