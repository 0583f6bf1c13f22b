"""Skeleton, rotations, shape scaling, and forward kinematics.

The FK oracle below is an independent reimplementation on top of
scipy.spatial.transform.Rotation; the package's own code never touches scipy.
"""

import json
import pathlib

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

import handsmooth as hs
from handsmooth.errors import ModelFileError
from handsmooth.hand_model import (
    axis_angle_to_matrix,
    canonicalize_axis_angle,
    default_model_dict,
    fk_joints,
    rotation_matrices,
    skeleton_from_dict,
    skeleton_to_dict,
)

MODEL_JSON = (
    pathlib.Path(__file__).parent.parent
    / "src"
    / "handsmooth"
    / "data"
    / "hand_model_v1.json"
)


def fk_oracle(skeleton, beta, pose):
    """Brute-force FK: scipy rotations, explicit parent recursion."""
    scales = np.exp(skeleton.shape_basis @ beta)
    rot = {0: Rotation.from_rotvec(np.array(pose.global_orient)).as_matrix()}
    pos = {0: np.array(pose.position, dtype=float)}
    slot = {j: k for k, j in enumerate(skeleton.articulated_joints)}
    for j in range(1, skeleton.joint_count):
        parent = skeleton.parents[j]
        offset = scales[j] * skeleton.rest_offsets[j]
        pos[j] = pos[parent] + rot[parent] @ offset
        if j in slot:
            aa = np.array(pose.joint_rotations[slot[j]])
            rot[j] = rot[parent] @ Rotation.from_rotvec(aa).as_matrix()
    return np.stack([pos[j] for j in range(skeleton.joint_count)])


def random_pose(rng, scale=0.4):
    return hs.FramePose(
        global_orient=rng.normal(0.0, scale, 3),
        position=rng.normal(0.0, 0.1, 3),
        joint_rotations=rng.normal(0.0, scale, (15, 3)),
    )


class TestRotations:
    def test_zero_is_identity_exactly(self):
        assert np.array_equal(axis_angle_to_matrix(np.zeros(3)), np.eye(3))

    def test_quarter_turn_about_z_sends_x_to_y(self):
        r = axis_angle_to_matrix(np.array([0.0, 0.0, np.pi / 2]))
        assert np.allclose(r @ np.array([1.0, 0.0, 0.0]), [0.0, 1.0, 0.0], atol=1e-12)

    def test_orthonormal_and_proper(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            r = axis_angle_to_matrix(rng.normal(0.0, 2.0, 3))
            assert np.allclose(r.T @ r, np.eye(3), atol=1e-12)
            assert np.isclose(np.linalg.det(r), 1.0, atol=1e-12)

    def test_matches_scipy_batch(self):
        rng = np.random.default_rng(2)
        aa = rng.normal(0.0, 1.5, (50, 3))
        ours = rotation_matrices(aa)
        theirs = Rotation.from_rotvec(aa).as_matrix()
        assert np.allclose(ours, theirs, atol=1e-12)

    def test_small_angle_branch_matches_scipy(self):
        aa = np.array(
            [
                [1e-9, 0.0, 0.0],
                [0.0, -3e-10, 4e-10],
                [1e-12, 1e-12, 1e-12],
                [0.0, 0.0, 0.0],
            ]
        )
        assert np.allclose(
            rotation_matrices(aa), Rotation.from_rotvec(aa).as_matrix(), atol=1e-15
        )

    def test_half_turn_sign_ambiguity(self):
        axis = np.array([1.0, 2.0, 2.0]) / 3.0
        assert np.allclose(
            axis_angle_to_matrix(np.pi * axis),
            axis_angle_to_matrix(-np.pi * axis),
            atol=1e-12,
        )

    def test_axis_angle_validation(self):
        with pytest.raises(ValueError):
            axis_angle_to_matrix(np.zeros(4))
        with pytest.raises(ValueError):
            axis_angle_to_matrix(np.array([np.nan, 0.0, 0.0]))


class TestCanonicalize:
    def test_full_turn_collapses_to_zero(self):
        out = canonicalize_axis_angle(np.array([2.0 * np.pi, 0.0, 0.0]))
        assert np.allclose(out, 0.0, atol=1e-12)

    def test_magnitude_bounded_by_pi(self):
        rng = np.random.default_rng(3)
        aa = rng.normal(0.0, 5.0, (100, 3))
        out = canonicalize_axis_angle(aa)
        assert np.all(np.linalg.norm(out, axis=-1) <= np.pi + 1e-12)

    def test_rotation_unchanged(self):
        rng = np.random.default_rng(4)
        aa = rng.normal(0.0, 5.0, (30, 3))
        assert np.allclose(
            rotation_matrices(aa),
            rotation_matrices(canonicalize_axis_angle(aa)),
            atol=1e-9,
        )

    def test_fk_agrees_after_canonicalization(self, skeleton):
        rng = np.random.default_rng(5)
        pose = random_pose(rng, scale=4.0)
        canon = hs.FramePose(
            global_orient=canonicalize_axis_angle(pose.global_orient),
            position=pose.position,
            joint_rotations=canonicalize_axis_angle(pose.joint_rotations),
        )
        a = hs.forward_kinematics(skeleton, hs.ShapeParams.zeros(), pose)
        b = hs.forward_kinematics(skeleton, hs.ShapeParams.zeros(), canon)
        assert np.allclose(a, b, atol=1e-9)


class TestSkeletonStructure:
    def test_basic_counts(self, skeleton):
        assert skeleton.joint_count == 21
        assert skeleton.fingertips == (4, 8, 12, 16, 20)
        assert len(skeleton.articulated_joints) == 15
        assert skeleton.parents[0] == -1

    def test_five_linear_chains(self, skeleton):
        roots = [j for j in range(1, 21) if skeleton.parents[j] == 0]
        assert len(roots) == 5
        for root in roots:
            chain = [root]
            while True:
                children = [j for j in range(21) if skeleton.parents[j] == chain[-1]]
                if not children:
                    break
                assert len(children) == 1
                chain.append(children[0])
            assert len(chain) == 4

    def test_fingertips_carry_no_rotation_slot(self, skeleton):
        assert set(skeleton.fingertips).isdisjoint(skeleton.articulated_joints)

    def test_invalid_parents_rejected(self, skeleton):
        bad = np.array(skeleton.parents)
        bad[5] = 9  # forward reference
        with pytest.raises(ValueError):
            hs.HandSkeleton(
                version=skeleton.version,
                parents=bad,
                rest_offsets=skeleton.rest_offsets,
                shape_basis=skeleton.shape_basis,
            )

    def test_oversized_basis_rows_rejected(self, skeleton):
        with pytest.raises(ValueError):
            hs.HandSkeleton(
                version=skeleton.version,
                parents=skeleton.parents,
                rest_offsets=skeleton.rest_offsets,
                shape_basis=skeleton.shape_basis * 5.0,
            )


class TestShape:
    def test_zero_beta_is_identity(self, skeleton):
        scaled = hs.apply_shape(skeleton, hs.ShapeParams.zeros())
        assert np.array_equal(scaled.rest_offsets, skeleton.rest_offsets)

    def test_scales_match_direct_formula(self, skeleton):
        rng = np.random.default_rng(6)
        beta = rng.normal(0.0, 1.0, 10)
        ours = np.asarray(hs.bone_scales(skeleton, beta))
        direct = np.exp(skeleton.shape_basis @ beta)
        assert np.allclose(ours, direct, atol=1e-15)

    def test_opposite_betas_cancel(self, skeleton):
        rng = np.random.default_rng(7)
        beta = rng.normal(0.0, 1.0, 10)
        up = np.asarray(hs.bone_scales(skeleton, beta))
        down = np.asarray(hs.bone_scales(skeleton, -beta))
        assert np.allclose(up * down, 1.0, atol=1e-12)

    def test_scales_are_bounded_multiplicatively(self, skeleton):
        # row norms <= 0.1 and |beta| <= 3 bound log-scales by 0.3 per row
        rng = np.random.default_rng(8)
        beta = rng.uniform(-3.0, 3.0, 10)
        scales = np.asarray(hs.bone_scales(skeleton, beta))
        assert np.all(scales > np.exp(-0.3 * np.sqrt(10)) - 1e-12)
        assert np.all(scales < np.exp(0.3 * np.sqrt(10)) + 1e-12)


class TestForwardKinematics:
    def test_flat_pose_accumulates_offsets(self, skeleton):
        joints = hs.forward_kinematics(
            skeleton, hs.ShapeParams.zeros(), hs.FramePose.identity()
        )
        expected = np.zeros((21, 3))
        for j in range(1, 21):
            expected[j] = expected[skeleton.parents[j]] + skeleton.rest_offsets[j]
        assert np.allclose(joints, expected, atol=1e-15)

    def test_matches_oracle_on_random_poses(self, skeleton):
        rng = np.random.default_rng(9)
        for _ in range(10):
            beta = rng.normal(0.0, 0.8, 10)
            pose = random_pose(rng)
            ours = hs.forward_kinematics(skeleton, hs.ShapeParams(beta), pose)
            assert np.allclose(ours, fk_oracle(skeleton, beta, pose), atol=1e-12)

    def test_bone_lengths_are_pose_invariant(self, skeleton):
        rng = np.random.default_rng(10)
        beta = rng.normal(0.0, 0.5, 10)
        scales = np.exp(skeleton.shape_basis @ beta)
        for _ in range(5):
            joints = hs.forward_kinematics(
                skeleton, hs.ShapeParams(beta), random_pose(rng)
            )
            for j in range(1, 21):
                length = np.linalg.norm(joints[j] - joints[skeleton.parents[j]])
                expected = scales[j] * np.linalg.norm(skeleton.rest_offsets[j])
                assert abs(length - expected) < 1e-10

    def test_rigid_motion_equivariance(self, skeleton):
        rng = np.random.default_rng(11)
        pose = random_pose(rng)
        g_rot = Rotation.from_rotvec(rng.normal(0.0, 1.0, 3))
        g_t = rng.normal(0.0, 0.5, 3)
        moved = hs.FramePose(
            global_orient=(
                g_rot * Rotation.from_rotvec(np.array(pose.global_orient))
            ).as_rotvec(),
            position=g_rot.as_matrix() @ pose.position + g_t,
            joint_rotations=pose.joint_rotations,
        )
        base = hs.forward_kinematics(skeleton, hs.ShapeParams.zeros(), pose)
        transformed = hs.forward_kinematics(skeleton, hs.ShapeParams.zeros(), moved)
        assert np.allclose(transformed, base @ g_rot.as_matrix().T + g_t, atol=1e-10)

    def test_batched_fk_matches_per_frame(self, skeleton):
        rng = np.random.default_rng(12)
        n = 4
        beta = rng.normal(0.0, 0.5, 10)
        orients = rng.normal(0.0, 0.4, (n, 3))
        positions = rng.normal(0.0, 0.1, (n, 3))
        rots = rng.normal(0.0, 0.4, (n, 15, 3))
        batched = np.asarray(fk_joints(skeleton, beta, orients, positions, rots))
        assert batched.shape == (n, 21, 3)
        for t in range(n):
            pose = hs.FramePose(orients[t], positions[t], rots[t])
            single = hs.forward_kinematics(skeleton, hs.ShapeParams(beta), pose)
            assert np.allclose(batched[t], single, atol=1e-14)

    def test_wrist_is_position_exactly(self, skeleton):
        rng = np.random.default_rng(13)
        pose = random_pose(rng)
        joints = hs.forward_kinematics(skeleton, hs.ShapeParams.zeros(), pose)
        assert np.array_equal(joints[0], pose.position)


class TestModelFile:
    def test_committed_model_equals_generator(self):
        with open(MODEL_JSON) as f:
            on_disk = json.load(f)
        assert on_disk == default_model_dict()

    def test_load_skeleton_roundtrip(self, skeleton):
        again = skeleton_from_dict(skeleton_to_dict(skeleton))
        assert np.array_equal(again.rest_offsets, skeleton.rest_offsets)
        assert np.array_equal(again.shape_basis, skeleton.shape_basis)
        assert np.array_equal(again.parents, skeleton.parents)

    def test_unknown_model_name(self):
        with pytest.raises(ModelFileError):
            hs.load_skeleton("no_such_model")

    def test_missing_field_rejected(self, skeleton):
        d = skeleton_to_dict(skeleton)
        del d["rest_offsets"]
        with pytest.raises(ModelFileError):
            skeleton_from_dict(d)

    def test_wrong_version_rejected(self, skeleton):
        d = skeleton_to_dict(skeleton)
        d["version"] = "999"
        with pytest.raises(ModelFileError):
            skeleton_from_dict(d)

    def test_pose_validation(self):
        with pytest.raises(ValueError):
            hs.FramePose(np.zeros(2), np.zeros(3), np.zeros((15, 3)))
        with pytest.raises(ValueError):
            hs.FramePose(np.zeros(3), np.zeros(3), np.zeros((14, 3)))
        with pytest.raises(ValueError):
            hs.ShapeParams(np.zeros(11))
