import json
import math

import numpy as np
import pytest

from jitstar.core.state import StateVector
from jitstar.robot.kinematics import (
    ChainLoadError,
    DHLink,
    KinematicChain,
    KinematicsError,
    KinematicSystem,
    forward_kinematics,
    geometric_jacobian,
    load_system,
    min_singular_value,
    null_space_basis,
    numerical_rank,
    svd,
    yoshikawa,
)


def spatial_chain() -> KinematicChain:
    links = (
        DHLink(a=0.0, alpha=math.pi / 2, d=0.3),
        DHLink(a=0.4, alpha=0.0),
        DHLink(a=0.35, alpha=0.0),
        DHLink(a=0.0, alpha=-math.pi / 2, d=0.1),
    )
    return KinematicChain(links, np.eye(4), task_dim=3)


class TestForwardKinematics:
    @pytest.mark.parametrize(
        "q, expected",
        [((0.0, 0.0), (2.0, 0.0)), ((math.pi / 2, 0.0), (0.0, 2.0)), ((0.0, math.pi / 2), (1.0, 1.0))],
    )
    def test_planar_2r(self, planar_2r, q, expected):
        position = forward_kinematics(planar_2r, q).position
        np.testing.assert_allclose(position[:2], expected, atol=1e-12)

    def test_base_offset(self):
        chain = KinematicChain.planar([1.0], origin=(2.0, -1.0))
        np.testing.assert_allclose(forward_kinematics(chain, [0.0]).position[:2], [3.0, -1.0])

    def test_origins(self, planar_2r):
        origins = forward_kinematics(planar_2r, (0.0, math.pi / 2)).origins
        np.testing.assert_allclose(origins[:, :2], [[0, 0], [1, 0], [1, 1]], atol=1e-12)

    def test_wrong_joint_count(self, planar_2r):
        with pytest.raises(KinematicsError):
            forward_kinematics(planar_2r, (0.0, 0.0, 0.0))


class TestJacobian:
    def test_bent_elbow(self, planar_2r):
        np.testing.assert_allclose(
            geometric_jacobian(planar_2r, (0.0, math.pi / 2)), [[-1, -1], [1, 0]], atol=1e-12
        )

    def test_straight_arm_is_rank_one(self, planar_2r):
        j = geometric_jacobian(planar_2r, (0.0, 0.0))
        np.testing.assert_allclose(j, [[0, 0], [2, 1]], atol=1e-12)
        assert numerical_rank(svd(j).s) == 1

    @pytest.mark.parametrize("make_chain", [spatial_chain, lambda: KinematicChain.planar([0.5, 0.3, 0.2])])
    def test_finite_differences(self, make_chain):
        chain = make_chain()
        rng = np.random.default_rng(4)
        rows = min(chain.task_dim, 3)
        h = 1e-6
        for _ in range(100):
            q = rng.uniform(-math.pi, math.pi, chain.dof)
            j = geometric_jacobian(chain, q)[:rows]
            for i in range(chain.dof):
                step = np.zeros(chain.dof)
                step[i] = h
                column = (
                    forward_kinematics(chain, q + step).position
                    - forward_kinematics(chain, q - step).position
                ) / (2 * h)
                np.testing.assert_allclose(j[:, i], column[:rows], atol=1e-5)

    def test_full_twist_rows(self):
        chain = KinematicChain(spatial_chain().links, np.eye(4), task_dim=6)
        assert geometric_jacobian(chain, np.zeros(4)).shape == (6, 4)

    def test_unsupported_task_dim(self):
        with pytest.raises(KinematicsError):
            KinematicChain(spatial_chain().links, np.eye(4), task_dim=4)


class TestSingularValues:
    def test_diagonal(self):
        assert min_singular_value(np.diag([2.0, 1.0])) == pytest.approx(1.0)

    def test_planar_2r_reference(self, planar_2r):
        j = geometric_jacobian(planar_2r, (0.0, math.pi / 2))
        assert min_singular_value(j) == pytest.approx(math.sqrt((3 - math.sqrt(5)) / 2), abs=1e-9)
        assert min_singular_value(j) == pytest.approx(0.6180340, abs=1e-7)

    def test_rank_deficient(self):
        assert min_singular_value(np.array([[1.0, 2.0], [2.0, 4.0]])) == pytest.approx(0.0, abs=1e-12)

    def test_svd_invariants(self):
        rng = np.random.default_rng(0)
        for shape in [(2, 3), (3, 3), (6, 4), (2, 7)]:
            j = rng.normal(size=shape)
            result = svd(j)
            m, n = shape
            sigma = np.zeros(shape)
            sigma[: len(result.s), : len(result.s)] = np.diag(result.s)
            np.testing.assert_allclose(result.u @ sigma @ result.vt, j, atol=1e-10)
            np.testing.assert_allclose(result.u.T @ result.u, np.eye(m), atol=1e-10)
            np.testing.assert_allclose(result.v.T @ result.v, np.eye(n), atol=1e-10)
            assert np.all(np.diff(result.s) <= 0)

    def test_smallest_stretch_over_unit_vectors(self, planar_2r):
        rng = np.random.default_rng(6)
        for q in rng.uniform(-math.pi, math.pi, size=(5, 2)):
            j = geometric_jacobian(planar_2r, q)
            sigma = min_singular_value(j)
            v = rng.standard_normal((1000, 2))
            v /= np.linalg.norm(v, axis=1, keepdims=True)
            assert np.all(np.linalg.norm(v @ j.T, axis=1) >= sigma - 1e-12)
            weakest = svd(j).vt[-1]
            assert np.linalg.norm(j @ weakest) == pytest.approx(sigma, abs=1e-9)

    def test_yoshikawa(self, planar_2r):
        j = geometric_jacobian(planar_2r, (0.0, math.pi / 2))
        assert yoshikawa(j) == pytest.approx(1.0)
        assert yoshikawa(geometric_jacobian(planar_2r, (0.0, 0.0))) == pytest.approx(0.0, abs=1e-9)


class TestNullSpace:
    def test_square_nonsingular(self, planar_2r):
        assert null_space_basis(geometric_jacobian(planar_2r, (0.0, 1.0))).shape == (0, 2)

    def test_redundant_planar_3r(self, planar_3r):
        assert null_space_basis(geometric_jacobian(planar_3r, (0.3, 0.7, -0.4))).shape == (1, 3)

    def test_singular_2r(self, planar_2r):
        j = geometric_jacobian(planar_2r, (0.0, 0.0))
        basis = null_space_basis(j)
        assert basis.shape == (1, 2)
        np.testing.assert_allclose(j @ basis.T, 0.0, atol=1e-10)


class TestKinematicSystem:
    def test_split_and_sigma(self, dual_3r):
        q = np.array([0.1, 0.5, 0.5, 0.0, 0.0, 0.0])
        left, right = dual_3r.split(q)
        np.testing.assert_array_equal(left, q[:3])
        per_chain = dual_3r.sigma_min_per_chain(q)
        assert per_chain[1] == pytest.approx(0.0, abs=1e-9)
        assert dual_3r.sigma_min(q) == min(per_chain)

    def test_wrong_length(self, dual_3r):
        with pytest.raises(KinematicsError):
            dual_3r.split(np.zeros(5))

    def test_end_effectors(self, dual_3r):
        tips = dual_3r.end_effectors(StateVector.of([0.0] * 6))
        np.testing.assert_allclose(tips[0][:2], [1.5, 0.0], atol=1e-12)
        np.testing.assert_allclose(tips[1][:2], [3.5, 0.0], atol=1e-12)

    def test_limits(self, dual_3r):
        assert dual_3r.dof == 6
        np.testing.assert_allclose(dual_3r.lower, [-math.pi] * 6)

    def test_dict_round_trip(self, dual_3r):
        restored = KinematicSystem.from_dict(json.loads(json.dumps(dual_3r.to_dict())))
        q = np.array([0.2, -0.4, 0.9, 1.0, 0.3, -0.2])
        np.testing.assert_allclose(restored.end_effectors(q), dual_3r.end_effectors(q))

    def test_single_chain_file(self, tmp_path, planar_3r):
        path = tmp_path / "arm.json"
        path.write_text(json.dumps(planar_3r.to_dict()))
        system = load_system(path)
        assert len(system.chains) == 1 and system.dof == 3

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "arm.json"
        path.write_text(json.dumps({"links": [{"alpha": 0.0}]}))
        with pytest.raises(ChainLoadError):
            load_system(path)
        with pytest.raises(ChainLoadError):
            load_system(tmp_path / "missing.json")

    def test_unsupported_convention(self):
        with pytest.raises(ChainLoadError):
            KinematicChain.from_dict({"convention": "modified-dh", "links": []})
