"""Articulated 21-joint right-hand skeleton: shape scaling and forward kinematics.

Joint layout is wrist (0) plus five 4-joint chains in thumb, index, middle,
ring, pinky order. Within a chain the last joint is the fingertip and carries
no rotation parameters; the remaining 15 joints are articulated. The rest
pose is a flat right hand at the origin, fingers along +y, palm normal +z,
all lengths in meters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import autodiff as ad
from .errors import ModelFileError

NUM_JOINTS = 21
NUM_ARTICULATED = 15
NUM_SHAPE_PARAMS = 10
CHAIN_LENGTH = 4

DEFAULT_MODEL = "hand_model_v1"
MODEL_SCHEMA_VERSION = "1"

# Rodrigues switches to series coefficients below this squared angle
# (theta < 1e-8 rad), which keeps the map and its gradients finite at zero.
SMALL_ANGLE_SQ = 1e-16

_BASIS_SEED = 20240817
_MAX_BASIS_ROW_NORM = 0.1


def _readonly(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class HandSkeleton:
    """Rest-pose kinematic tree loaded from a versioned model file.

    parents[0] == -1 and parents[j] < j, so any topological walk can simply
    iterate j = 1..20. ``rest_offsets[j]`` is joint j's offset from its
    parent, expressed in the parent's frame. ``shape_basis`` rows are
    log-scale directions per joint with norm <= 0.1.
    """

    version: str
    parents: np.ndarray       # (21,) int
    rest_offsets: np.ndarray  # (21, 3) meters
    shape_basis: np.ndarray   # (21, 10)

    def __post_init__(self):
        parents = _readonly(self.parents, dtype=int)
        offsets = _readonly(self.rest_offsets)
        basis = _readonly(self.shape_basis)
        if parents.shape != (NUM_JOINTS,):
            raise ValueError("parents must have shape (21,)")
        if offsets.shape != (NUM_JOINTS, 3):
            raise ValueError("rest_offsets must have shape (21, 3)")
        if basis.shape != (NUM_JOINTS, NUM_SHAPE_PARAMS):
            raise ValueError("shape_basis must have shape (21, 10)")
        if parents[0] != -1:
            raise ValueError("joint 0 must be the root (parent -1)")
        for j in range(1, NUM_JOINTS):
            if not 0 <= parents[j] < j:
                raise ValueError(f"parents[{j}] must point to an earlier joint")
        children = [[] for _ in range(NUM_JOINTS)]
        for j in range(1, NUM_JOINTS):
            children[parents[j]].append(j)
        if len(children[0]) != 5:
            raise ValueError("the wrist must have exactly 5 finger chains")
        for base in children[0]:
            j, depth = base, 1
            while children[j]:
                if len(children[j]) != 1:
                    raise ValueError("finger chains must be linear")
                j = children[j][0]
                depth += 1
            if depth != CHAIN_LENGTH:
                raise ValueError("each finger chain must have 4 joints")
        if not (np.all(np.isfinite(offsets)) and np.all(np.isfinite(basis))):
            raise ValueError("model arrays must be finite")
        if np.any(np.linalg.norm(offsets[1:], axis=1) <= 0.0):
            raise ValueError("non-root rest offsets must have positive length")
        if np.any(np.linalg.norm(basis, axis=1) > _MAX_BASIS_ROW_NORM + 1e-12):
            raise ValueError("shape basis row norms must be <= 0.1")
        tips = tuple(j for j in range(NUM_JOINTS) if not children[j])
        articulated = tuple(
            j for j in range(1, NUM_JOINTS) if j not in tips
        )
        object.__setattr__(self, "parents", parents)
        object.__setattr__(self, "rest_offsets", offsets)
        object.__setattr__(self, "shape_basis", basis)
        object.__setattr__(self, "_fingertips", tips)
        object.__setattr__(self, "_articulated", articulated)

    @property
    def joint_count(self) -> int:
        return NUM_JOINTS

    @property
    def fingertips(self) -> tuple:
        return self._fingertips

    @property
    def articulated_joints(self) -> tuple:
        """Joint indices that carry rotation parameters, in parameter order."""
        return self._articulated


@dataclass(frozen=True)
class ShapeParams:
    """Low-dimensional hand shape coefficients, shared across a sequence."""

    beta: np.ndarray  # (10,)

    def __post_init__(self):
        beta = _readonly(self.beta)
        if beta.shape != (NUM_SHAPE_PARAMS,):
            raise ValueError("beta must have shape (10,)")
        if not np.all(np.isfinite(beta)):
            raise ValueError("beta must be finite")
        object.__setattr__(self, "beta", beta)

    @classmethod
    def zeros(cls) -> "ShapeParams":
        return cls(np.zeros(NUM_SHAPE_PARAMS))


@dataclass(frozen=True)
class FramePose:
    """One frame of hand state: wrist placement plus articulated rotations.

    ``joint_rotations[k]`` is the axis-angle rotation of
    ``skeleton.articulated_joints[k]`` relative to its parent.
    """

    global_orient: np.ndarray    # (3,) axis-angle, radians
    position: np.ndarray         # (3,) wrist position, meters
    joint_rotations: np.ndarray  # (15, 3) axis-angle per articulated joint

    def __post_init__(self):
        orient = _readonly(self.global_orient)
        position = _readonly(self.position)
        rots = _readonly(self.joint_rotations)
        if orient.shape != (3,) or position.shape != (3,):
            raise ValueError("global_orient and position must have shape (3,)")
        if rots.shape != (NUM_ARTICULATED, 3):
            raise ValueError("joint_rotations must have shape (15, 3)")
        if not (
            np.all(np.isfinite(orient))
            and np.all(np.isfinite(position))
            and np.all(np.isfinite(rots))
        ):
            raise ValueError("pose values must be finite")
        object.__setattr__(self, "global_orient", orient)
        object.__setattr__(self, "position", position)
        object.__setattr__(self, "joint_rotations", rots)

    @classmethod
    def identity(cls) -> "FramePose":
        return cls(np.zeros(3), np.zeros(3), np.zeros((NUM_ARTICULATED, 3)))


def canonicalize_axis_angle(aa: np.ndarray) -> np.ndarray:
    """Wrap axis-angle magnitudes into (-pi, pi]; the rotation is unchanged."""
    aa = np.asarray(aa, dtype=float)
    theta = np.linalg.norm(aa, axis=-1)
    wrapped = np.remainder(theta, 2.0 * np.pi)
    wrapped = np.where(wrapped > np.pi, wrapped - 2.0 * np.pi, wrapped)
    scale = np.where(theta > 0.0, wrapped / np.where(theta > 0.0, theta, 1.0), 1.0)
    return aa * scale[..., None]


def rotation_matrices(aa):
    """Rodrigues map for a batch of axis-angle vectors, shape (..., 3) -> (..., 3, 3).

    Accepts a Tensor or a plain array. Below 1e-8 rad the sin(t)/t and
    (1-cos t)/t^2 coefficients come from their quadratic series, so there is
    no division by the vanishing angle and gradients stay finite at zero.
    """
    x = aa[..., 0]
    y = aa[..., 1]
    z = aa[..., 2]
    t2 = x * x + y * y + z * z
    small = (ad.value_of(t2) < SMALL_ANGLE_SQ).astype(float)  # constant mask
    big = 1.0 - small
    t2_safe = t2 * big + small  # 1.0 where masked, keeps sqrt and div finite
    theta = ad.sqrt(t2_safe)
    sin_c = ad.sin(theta) / theta
    s_half = ad.sin(theta * 0.5)
    ver_c = (s_half * s_half) * 2.0 / t2_safe  # (1 - cos t)/t^2 without cancellation
    a = big * sin_c + small * (1.0 - t2 * (1.0 / 6.0))
    b = big * ver_c + small * (0.5 - t2 * (1.0 / 24.0))

    zeros = np.zeros(ad.value_of(x).shape)
    k = ad.stack(
        [
            ad.stack([zeros, -z, y], axis=-1),
            ad.stack([z, zeros, -x], axis=-1),
            ad.stack([-y, x, zeros], axis=-1),
        ],
        axis=-2,
    )
    lead = ad.value_of(aa).shape[:-1]
    col = ad.reshape(aa, lead + (3, 1))
    row = ad.reshape(aa, lead + (1, 3))
    outer = col * row  # K^2 = outer - t2 * I for the unnormalized axis
    eye = np.eye(3)
    a_m = ad.reshape(a, lead + (1, 1))
    b_m = ad.reshape(b, lead + (1, 1))
    t2_m = ad.reshape(t2, lead + (1, 1))
    return eye + a_m * k + b_m * (outer - t2_m * eye)


def axis_angle_to_matrix(aa: np.ndarray) -> np.ndarray:
    """Rotation matrix of a single axis-angle vector."""
    aa = np.asarray(aa, dtype=float)
    if aa.shape != (3,):
        raise ValueError("axis-angle must have shape (3,)")
    if not np.all(np.isfinite(aa)):
        raise ValueError("axis-angle must be finite")
    return rotation_matrices(aa[np.newaxis, :])[0]


def bone_scales(skeleton: HandSkeleton, beta):
    """Per-joint offset scale factors exp(shape_basis @ beta); generic over tapes."""
    return ad.exp(ad.sum(skeleton.shape_basis * beta, axis=-1))


def apply_shape(skeleton: HandSkeleton, shape: ShapeParams) -> HandSkeleton:
    """Skeleton with rest offsets scaled by the shape coefficients.

    beta = 0 reproduces the input offsets exactly.
    """
    scales = np.asarray(bone_scales(skeleton, shape.beta))
    return HandSkeleton(
        version=skeleton.version,
        parents=skeleton.parents,
        rest_offsets=skeleton.rest_offsets * scales[:, None],
        shape_basis=skeleton.shape_basis,
    )


def fk_joints(skeleton: HandSkeleton, beta, orients, positions, joint_rotations):
    """World joint positions for a batch of frames, shape (N, 21, 3).

    Shapes: beta (10,), orients (N, 3), positions (N, 3), joint_rotations
    (N, 15, 3). Any argument may be a tape Tensor. Joint j sits at
    parent + parent_world_rotation @ (scale_j * rest_offset_j); a joint's own
    rotation only affects its descendants, and fingertips carry none.
    """
    scales = bone_scales(skeleton, beta)
    n = ad.value_of(orients).shape[0]
    aa_all = ad.concat([ad.reshape(orients, (n, 1, 3)), joint_rotations], axis=1)
    rots = rotation_matrices(aa_all)  # (N, 16, 3, 3)
    slot = {j: k + 1 for k, j in enumerate(skeleton.articulated_joints)}
    world_rot = {0: rots[:, 0]}
    world_pos = {0: positions}
    for j in range(1, NUM_JOINTS):
        p = int(skeleton.parents[j])
        offset = scales[j] * skeleton.rest_offsets[j]
        rp = world_rot[p]
        world_pos[j] = world_pos[p] + ad.sum(rp * ad.reshape(offset, (1, 1, 3)), axis=-1)
        if j in slot:
            world_rot[j] = ad.matmul(rp, rots[:, slot[j]])
    return ad.stack([world_pos[j] for j in range(NUM_JOINTS)], axis=1)


def forward_kinematics(
    skeleton: HandSkeleton, shape: ShapeParams, pose: FramePose
) -> np.ndarray:
    """World positions of all 21 joints for one frame, shape (21, 3)."""
    joints = fk_joints(
        skeleton,
        shape.beta,
        pose.global_orient[np.newaxis],
        pose.position[np.newaxis],
        pose.joint_rotations[np.newaxis],
    )
    return np.asarray(joints)[0]


# ----- model file -----


def skeleton_to_dict(skeleton: HandSkeleton) -> dict:
    return {
        "version": skeleton.version,
        "parents": [int(p) for p in skeleton.parents],
        "rest_offsets": skeleton.rest_offsets.tolist(),
        "shape_basis": skeleton.shape_basis.tolist(),
    }


def skeleton_from_dict(d: dict) -> HandSkeleton:
    if not isinstance(d, dict):
        raise ModelFileError("model must be a JSON object")
    for key in ("version", "parents", "rest_offsets", "shape_basis"):
        if key not in d:
            raise ModelFileError(f"model is missing field '{key}'")
    if d["version"] != MODEL_SCHEMA_VERSION:
        raise ModelFileError(f"unsupported model version {d['version']!r}")
    try:
        return HandSkeleton(
            version=str(d["version"]),
            parents=np.asarray(d["parents"], dtype=int),
            rest_offsets=np.asarray(d["rest_offsets"], dtype=float),
            shape_basis=np.asarray(d["shape_basis"], dtype=float),
        )
    except (ValueError, TypeError) as e:
        raise ModelFileError(str(e)) from e


def load_skeleton(name: str = DEFAULT_MODEL) -> HandSkeleton:
    """Load a packaged skeleton by name (currently only ``hand_model_v1``)."""
    ref = resources.files(__package__) / "data" / f"{name}.json"
    try:
        text = ref.read_text()
    except (FileNotFoundError, OSError) as e:
        raise ModelFileError(f"unknown model '{name}'") from e
    return skeleton_from_dict(json.loads(text))


# Rest offsets in meters for a median adult right hand, flat, fingers +y,
# palm normal +z, thumb toward +x. Rows are offsets from the parent joint.
_REST_OFFSETS = [
    [0.000, 0.000, 0.000],    # 0  wrist
    [0.030, 0.020, -0.010],   # 1  thumb base
    [0.025, 0.030, 0.000],    # 2  thumb middle
    [0.010, 0.028, 0.000],    # 3  thumb distal
    [0.008, 0.022, 0.000],    # 4  thumb tip
    [0.027, 0.088, 0.000],    # 5  index base
    [0.002, 0.042, 0.000],    # 6  index middle
    [0.000, 0.026, 0.000],    # 7  index distal
    [0.000, 0.023, 0.000],    # 8  index tip
    [0.008, 0.092, 0.000],    # 9  middle base
    [0.000, 0.047, 0.000],    # 10 middle middle
    [0.000, 0.029, 0.000],    # 11 middle distal
    [0.000, 0.025, 0.000],    # 12 middle tip
    [-0.011, 0.086, 0.000],   # 13 ring base
    [-0.002, 0.042, 0.000],   # 14 ring middle
    [0.000, 0.027, 0.000],    # 15 ring distal
    [0.000, 0.024, 0.000],    # 16 ring tip
    [-0.028, 0.076, 0.000],   # 17 pinky base
    [-0.004, 0.033, 0.000],   # 18 pinky middle
    [0.000, 0.021, 0.000],    # 19 pinky distal
    [0.000, 0.019, 0.000],    # 20 pinky tip
]

_PARENTS = [-1, 0, 1, 2, 3, 0, 5, 6, 7, 0, 9, 10, 11, 0, 13, 14, 15, 0, 17, 18, 19]


def _make_shape_basis() -> np.ndarray:
    """Fixed pseudo-random log-scale basis: orthonormal-ish columns via QR,
    rows renormalized to norm 0.1. Pinned by seed and by the committed file."""
    rng = np.random.default_rng(_BASIS_SEED)
    m = rng.standard_normal((NUM_JOINTS, NUM_SHAPE_PARAMS))
    q, _ = np.linalg.qr(m)
    rows = np.linalg.norm(q, axis=1, keepdims=True)
    return q / rows * _MAX_BASIS_ROW_NORM


def default_model_dict() -> dict:
    """The canonical content of ``data/hand_model_v1.json``."""
    return {
        "version": MODEL_SCHEMA_VERSION,
        "parents": list(_PARENTS),
        "rest_offsets": [list(map(float, row)) for row in _REST_OFFSETS],
        "shape_basis": _make_shape_basis().tolist(),
    }
