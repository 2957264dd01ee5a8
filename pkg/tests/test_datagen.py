import math

import numpy as np
import pytest
from pydantic import ValidationError

from core import datagen, numerics
from core.datagen import TrajectorySet, UnionSpec
from core.exceptions import DimensionError, InfeasibleSpecError, InputError, ParameterError


class TestUnionSpec:
    def test_counts(self):
        assert UnionSpec(ambient_dim=5, subspace_dim=2, num_subspaces=3, points_per_subspace=4).counts == [4, 4, 4]
        assert UnionSpec(ambient_dim=5, subspace_dim=2, num_subspaces=2,
                         points_per_subspace=[3, 6]).counts == [3, 6]

    def test_orthogonal_needs_room(self):
        with pytest.raises(ValidationError):
            UnionSpec(ambient_dim=7, subspace_dim=4, num_subspaces=2, min_principal_angle=math.pi / 2)

    def test_subspace_larger_than_ambient(self):
        with pytest.raises(ValidationError):
            UnionSpec(ambient_dim=3, subspace_dim=4, num_subspaces=1)

    def test_count_list_length(self):
        with pytest.raises(ValidationError):
            UnionSpec(ambient_dim=5, subspace_dim=2, num_subspaces=3, points_per_subspace=[3, 3])


class TestSampleUnion:
    def test_single_subspace_rank(self):
        spec = UnionSpec(ambient_dim=12, subspace_dim=3, num_subspaces=1, points_per_subspace=30)
        W, labels = datagen.sample_union(spec)
        assert W.shape == (12, 30)
        assert numerics.numerical_rank(W) == 3
        np.testing.assert_array_equal(labels, 0)

    @pytest.mark.parametrize("ambient, expected", [(30, 12), (10, 10)])
    def test_union_rank(self, ambient, expected):
        spec = UnionSpec(ambient_dim=ambient, subspace_dim=4, num_subspaces=3, points_per_subspace=40)
        W, labels = datagen.sample_union(spec)
        assert numerics.numerical_rank(W) == expected
        np.testing.assert_array_equal(np.bincount(labels), [40, 40, 40])

    def test_points_lie_on_their_subspace(self):
        spec = UnionSpec(ambient_dim=20, subspace_dim=4, num_subspaces=3, points_per_subspace=[10, 20, 30], seed=3)
        W, labels, bases = datagen.sample_union(spec, return_bases=True)
        for j in range(W.shape[1]):
            basis = numerics.OrthonormalBasis(bases[labels[j]])
            assert numerics.residual_distance(W[:, j], basis) <= 1e-12
            assert np.linalg.norm(W[:, j]) == pytest.approx(1.0)

    def test_seeded(self):
        spec = UnionSpec(ambient_dim=10, subspace_dim=2, num_subspaces=2, noise_sigma=0.1, seed=9)
        first, _ = datagen.sample_union(spec)
        second, _ = datagen.sample_union(spec)
        assert first.tobytes() == second.tobytes()
        other, _ = datagen.sample_union(spec.model_copy(update={"seed": 10}))
        assert not np.array_equal(first, other)

    def test_noise_statistics(self):
        clean = UnionSpec(ambient_dim=50, subspace_dim=3, num_subspaces=2, points_per_subspace=100, seed=5)
        noisy = clean.model_copy(update={"noise_sigma": 0.05})
        noise = (datagen.sample_union(noisy)[0] - datagen.sample_union(clean)[0]).reshape(-1)
        sigma = 0.05
        band = 3 * sigma * math.sqrt(1 - 2 / math.pi) / math.sqrt(noise.size)
        assert abs(np.mean(np.abs(noise)) - sigma * math.sqrt(2 / math.pi)) <= band
        assert np.std(noise) == pytest.approx(sigma, rel=0.05)

    def test_orthogonal_subspaces(self):
        spec = UnionSpec(ambient_dim=12, subspace_dim=3, num_subspaces=4, min_principal_angle=math.pi / 2)
        _, _, bases = datagen.sample_union(spec, return_bases=True)
        for a in range(4):
            for b in range(a + 1, 4):
                angles = numerics.principal_angles(numerics.OrthonormalBasis(bases[a]),
                                                   numerics.OrthonormalBasis(bases[b]))
                np.testing.assert_allclose(angles, np.pi / 2, atol=1e-8)

    def test_minimum_angle_is_honoured(self):
        spec = UnionSpec(ambient_dim=20, subspace_dim=3, num_subspaces=3,
                         min_principal_angle=math.radians(40), seed=2)
        _, _, bases = datagen.sample_union(spec, return_bases=True)
        for a in range(3):
            for b in range(a + 1, 3):
                angles = numerics.principal_angles(numerics.OrthonormalBasis(bases[a]),
                                                   numerics.OrthonormalBasis(bases[b]))
                assert angles[0] >= math.radians(40)

    def test_infeasible_angle(self):
        # two planes in R^3 always share a line
        spec = UnionSpec(ambient_dim=3, subspace_dim=2, num_subspaces=2, min_principal_angle=math.radians(80))
        with pytest.raises(InfeasibleSpecError):
            datagen.sample_union(spec)


class TestAffineMotion:
    def test_rotation_matrix(self, rng):
        R = datagen.rotation_matrix([0.0, 0.0, np.pi / 2])
        np.testing.assert_allclose(R @ [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], atol=1e-12)
        R = datagen.rotation_matrix(rng.standard_normal(3))
        np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-12)
        assert np.linalg.det(R) == pytest.approx(1.0)
        np.testing.assert_allclose(datagen.rotation_matrix(np.zeros(3)), np.eye(3))

    def test_static_scene(self):
        rng = np.random.default_rng(0)
        obj = datagen.random_rigid_object(rng, 10, 5, static=True)
        camera = datagen.random_affine_camera(rng, 5, static=True)
        ts = datagen.synth_affine_motion(5, [obj], camera)
        for f in range(1, 5):
            np.testing.assert_allclose(ts.tracks[:, f], ts.tracks[:, 0])
        assert numerics.numerical_rank(datagen.trajectory_matrix(ts)) <= 2

    def test_rigid_object_rank(self):
        rng = np.random.default_rng(1)
        obj = datagen.random_rigid_object(rng, 30, 20)
        ts = datagen.synth_affine_motion(20, [obj], datagen.random_affine_camera(rng, 20))
        assert numerics.numerical_rank(datagen.trajectory_matrix(ts)) <= 4

    def test_two_objects_rank(self):
        ts = datagen.random_motion_scene(num_frames=25, num_objects=2, points_per_object=30, seed=4)
        W = datagen.trajectory_matrix(ts)
        assert W.shape == (50, 60)
        assert numerics.numerical_rank(W) <= 8
        for label in (0, 1):
            assert numerics.numerical_rank(W[:, ts.labels == label]) <= 4

    def test_single_camera_matrix(self):
        rng = np.random.default_rng(2)
        obj = datagen.random_rigid_object(rng, 6, 4)
        camera = np.hstack([np.eye(2), np.zeros((2, 2))])
        ts = datagen.synth_affine_motion(4, [obj], camera)
        np.testing.assert_allclose(ts.tracks[:, 2, :], obj.world_points(2)[:2].T)

    def test_zero_camera(self):
        rng = np.random.default_rng(3)
        obj = datagen.random_rigid_object(rng, 6, 4)
        with pytest.raises(InputError):
            datagen.synth_affine_motion(4, [obj], np.zeros((2, 4)))

    def test_too_few_frames(self):
        rng = np.random.default_rng(3)
        obj = datagen.random_rigid_object(rng, 6, 1)
        with pytest.raises(ParameterError):
            datagen.synth_affine_motion(1, [obj], datagen.random_affine_camera(rng, 1))

    def test_too_few_points(self):
        rng = np.random.default_rng(3)
        obj = datagen.random_rigid_object(rng, 3, 4)
        with pytest.raises(ParameterError):
            datagen.synth_affine_motion(4, [obj], datagen.random_affine_camera(rng, 4))

    def test_seeded(self):
        first = datagen.random_motion_scene(10, 2, 8, noise_sigma=0.5, seed=6)
        second = datagen.random_motion_scene(10, 2, 8, noise_sigma=0.5, seed=6)
        assert first.tracks.tobytes() == second.tracks.tobytes()


class TestTrajectoryMatrix:
    def test_column_layout(self):
        ts = TrajectorySet(tracks=np.array([[[1.0, 2.0], [3.0, 4.0]]]))
        np.testing.assert_array_equal(datagen.trajectory_matrix(ts), [[1.0], [2.0], [3.0], [4.0]])

    def test_inverse(self, rng):
        tracks = rng.standard_normal((5, 3, 2))
        ts = datagen.tracks_from_matrix(datagen.trajectory_matrix(TrajectorySet(tracks=tracks)))
        np.testing.assert_array_equal(ts.tracks, tracks)

    def test_odd_rows(self):
        with pytest.raises(DimensionError):
            datagen.tracks_from_matrix(np.ones((3, 2)))

    def test_label_count_checked(self):
        with pytest.raises(DimensionError):
            TrajectorySet(tracks=np.zeros((2, 3, 2)), labels=np.array([0]))
