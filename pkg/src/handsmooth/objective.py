"""Trajectory refinement objective: multi-view reprojection consistency plus
temporal acceleration penalties on pose, orientation, and position series.

All loss code is written against the autodiff dispatch helpers, so the same
functions evaluate with plain arrays (fast, tape-free) or record onto a tape
for gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import camera as cam
from .errors import DegenerateObservationError
from .hand_model import (
    NUM_ARTICULATED,
    NUM_SHAPE_PARAMS,
    FramePose,
    HandSkeleton,
    fk_joints,
)

# Flat layout per frame: orient (3), position (3), joint rotations (45).
FRAME_PARAMS = 51
MIN_FRAMES = 3

REPROJECTION_NORMS = ("l2", "l2_squared", "l1")

DELTA = ad.ABS_SMOOTH_DELTA


def _readonly(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LossWeights:
    """Weights of the four objective terms."""

    acce_pose: float = 0.5
    acce_orients: float = 0.5
    acce_position: float = 0.5
    reprojection: float = 1.0

    def __post_init__(self):
        vals = (self.acce_pose, self.acce_orients, self.acce_position, self.reprojection)
        if not np.all(np.isfinite(vals)):
            raise ValueError("loss weights must be finite")
        if any(v < 0 for v in vals):
            raise ValueError("loss weights must be >= 0")


@dataclass(frozen=True)
class TrajectoryParams:
    """Per-sequence trainable state: one shared shape vector plus per-frame
    wrist orientation, wrist position, and articulated joint rotations.

    Flattening order is [shape, then per frame: orient, position,
    joint_rotations], giving 10 + 51 * num_frames values.
    """

    shape: np.ndarray            # (10,)
    orients: np.ndarray          # (N, 3)
    positions: np.ndarray        # (N, 3)
    joint_rotations: np.ndarray  # (N, 15, 3)

    def __post_init__(self):
        shape = _readonly(self.shape)
        orients = _readonly(self.orients)
        positions = _readonly(self.positions)
        rots = _readonly(self.joint_rotations)
        if shape.shape != (NUM_SHAPE_PARAMS,):
            raise ValueError("shape must have shape (10,)")
        n = orients.shape[0] if orients.ndim else 0
        if orients.shape != (n, 3) or positions.shape != (n, 3):
            raise ValueError("orients and positions must have shape (N, 3)")
        if rots.shape != (n, NUM_ARTICULATED, 3):
            raise ValueError("joint_rotations must have shape (N, 15, 3)")
        if n < MIN_FRAMES:
            raise ValueError(f"a trajectory needs at least {MIN_FRAMES} frames")
        for a in (shape, orients, positions, rots):
            if not np.all(np.isfinite(a)):
                raise ValueError("trajectory values must be finite")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "orients", orients)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "joint_rotations", rots)

    @property
    def num_frames(self) -> int:
        return self.orients.shape[0]

    def frame(self, t: int) -> FramePose:
        return FramePose(self.orients[t], self.positions[t], self.joint_rotations[t])

    def to_flat(self) -> np.ndarray:
        n = self.num_frames
        frames = np.concatenate(
            [self.orients, self.positions, self.joint_rotations.reshape(n, 45)], axis=1
        )
        return np.concatenate([self.shape, frames.ravel()])

    @classmethod
    def from_flat(cls, vec: np.ndarray, num_frames: int) -> "TrajectoryParams":
        vec = np.asarray(vec, dtype=float)
        expected = NUM_SHAPE_PARAMS + FRAME_PARAMS * num_frames
        if vec.shape != (expected,):
            raise ValueError(f"flat vector must have length {expected}")
        frames = vec[NUM_SHAPE_PARAMS:].reshape(num_frames, FRAME_PARAMS)
        return cls(
            shape=vec[:NUM_SHAPE_PARAMS],
            orients=frames[:, 0:3],
            positions=frames[:, 3:6],
            joint_rotations=frames[:, 6:51].reshape(num_frames, NUM_ARTICULATED, 3),
        )

    def to_dict(self) -> dict:
        return {
            "shape": self.shape.tolist(),
            "orients": self.orients.tolist(),
            "positions": self.positions.tolist(),
            "joint_rotations": self.joint_rotations.reshape(self.num_frames, 45).tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrajectoryParams":
        rots = np.asarray(d["joint_rotations"], dtype=float)
        return cls(
            shape=np.asarray(d["shape"], dtype=float),
            orients=np.asarray(d["orients"], dtype=float),
            positions=np.asarray(d["positions"], dtype=float),
            joint_rotations=rots.reshape(rots.shape[0], NUM_ARTICULATED, 3),
        )


@dataclass(frozen=True)
class SequenceObservation:
    """Detected 2D landmarks with visibility over frames and views."""

    landmarks_2d: np.ndarray  # (N, V, 21, 2) pixels
    visibility: np.ndarray    # (N, V, 21) bool
    rig: cam.CameraRig

    def __post_init__(self):
        lm = _readonly(self.landmarks_2d)
        vis = _readonly(self.visibility, dtype=bool)
        n_views = self.rig.num_views
        if lm.ndim != 4 or lm.shape[1] != n_views or lm.shape[2:] != (21, 2):
            raise ValueError("landmarks_2d must have shape (N, V, 21, 2)")
        if vis.shape != lm.shape[:3]:
            raise ValueError("visibility must have shape (N, V, 21)")
        if not np.all(np.isfinite(lm)):
            raise ValueError("landmarks must be finite")
        if not vis.any():
            raise ValueError("at least one landmark must be visible")
        object.__setattr__(self, "landmarks_2d", lm)
        object.__setattr__(self, "visibility", vis)

    @property
    def num_frames(self) -> int:
        return self.landmarks_2d.shape[0]

    @property
    def num_views(self) -> int:
        return self.landmarks_2d.shape[1]


def acceleration_loss(series):
    """Mean smoothed-|.| of discrete second differences along axis 0.

    ``series`` is (N, ...) with N >= 3, Tensor or array. Equals
    sum_t |x_t - 2 x_{t-1} + x_{t-2}| / ((N - 2) * D) with D the number of
    trailing dimensions, using the smoothed absolute value, so a constant or
    constant-velocity series scores 0 and gradients exist there.
    """
    n = ad.value_of(series).shape[0]
    if n < MIN_FRAMES:
        raise ValueError("acceleration needs at least 3 frames")
    d2 = series[2:] - series[1:-1] * 2.0 + series[:-2]
    return ad.mean(ad.abs_smooth(d2))


def trajectory_joints(traj: TrajectoryParams, skeleton: HandSkeleton) -> np.ndarray:
    """World joint positions for every frame, shape (N, 21, 3)."""
    return np.asarray(
        fk_joints(skeleton, traj.shape, traj.orients, traj.positions, traj.joint_rotations)
    )


def _view_residual_terms(joints, obs: SequenceObservation, norm: str):
    """Per-view masked pixel distances.

    Returns a list of (dist, mask) pairs, dist (N, 21) of the input kind and
    mask (N, 21) plain float; mask entries are 1 only for landmarks that are
    visible and strictly in front of the camera.
    """
    if norm not in REPROJECTION_NORMS:
        raise ValueError(f"norm must be one of {REPROJECTION_NORMS}")
    terms = []
    for vi, view in enumerate(obs.rig.views):
        u, v, in_front = cam.project_points_masked(joints, view)
        mask = (obs.visibility[:, vi] & in_front).astype(float)
        du = u - obs.landmarks_2d[:, vi, :, 0]
        dv = v - obs.landmarks_2d[:, vi, :, 1]
        if norm == "l2":
            dist = ad.sqrt(du * du + dv * dv + DELTA * DELTA) - DELTA
        elif norm == "l2_squared":
            dist = du * du + dv * dv
        else:
            dist = ad.abs_smooth(du) + ad.abs_smooth(dv)
        terms.append((dist, mask))
    return terms


def _reprojection_generic(joints, obs: SequenceObservation, norm: str):
    terms = _view_residual_terms(joints, obs, norm)
    count = 0.0
    total = None
    for dist, mask in terms:
        count += mask.sum()
        s = ad.sum(dist * mask)
        total = s if total is None else total + s
    if count == 0.0:
        raise DegenerateObservationError(
            "no landmark is visible and in front of a camera"
        )
    return total / count


def reprojection_loss(
    traj: TrajectoryParams,
    obs: SequenceObservation,
    skeleton: HandSkeleton,
    norm: str = "l2",
) -> float:
    """Mean pixel distance between projected joints and visible landmarks.

    Landmarks behind a camera (depth <= 1e-6 m) are excluded, not errors.
    The averaging is over included landmark terms, so the value does not
    scale with the number of views. Raises DegenerateObservationError when
    nothing is left to average.
    """
    joints = trajectory_joints(traj, skeleton)
    return float(ad.value_of(_reprojection_generic(joints, obs, norm)))


def _total_generic(shape_vec, orients, positions, joint_rots, obs, skeleton, weights, norm):
    total = None

    def add(term, weight):
        nonlocal total
        scaled = term * weight
        total = scaled if total is None else total + scaled

    if weights.acce_pose != 0.0:
        add(acceleration_loss(joint_rots), weights.acce_pose)
    if weights.acce_orients != 0.0:
        add(acceleration_loss(orients), weights.acce_orients)
    if weights.acce_position != 0.0:
        add(acceleration_loss(positions), weights.acce_position)
    if weights.reprojection != 0.0:
        joints = fk_joints(skeleton, shape_vec, orients, positions, joint_rots)
        add(_reprojection_generic(joints, obs, norm), weights.reprojection)
    if total is None:
        # all weights zero: a constant zero that still depends on the tape
        total = ad.sum(orients) * 0.0
    return total


def total_loss(
    traj: TrajectoryParams,
    obs: SequenceObservation,
    skeleton: HandSkeleton,
    weights: LossWeights = LossWeights(),
    norm: str = "l2",
) -> float:
    """Weighted sum of the four loss terms. Zero-weight terms are skipped,
    which leaves the value unchanged and decouples them from the gradient."""
    val = _total_generic(
        traj.shape,
        traj.orients,
        traj.positions,
        traj.joint_rotations,
        obs,
        skeleton,
        weights,
        norm,
    )
    return float(ad.value_of(val))


def loss_components(
    traj: TrajectoryParams,
    obs: SequenceObservation,
    skeleton: HandSkeleton,
    weights: LossWeights = LossWeights(),
    norm: str = "l2",
) -> dict:
    """All four unweighted components plus the weighted total, as floats.

    Components are evaluated regardless of their weights, so reports stay
    truthful when a term is disabled.
    """
    acce_pose = float(ad.value_of(acceleration_loss(traj.joint_rotations)))
    acce_orients = float(ad.value_of(acceleration_loss(traj.orients)))
    acce_position = float(ad.value_of(acceleration_loss(traj.positions)))
    loss_2d = reprojection_loss(traj, obs, skeleton, norm)
    total = (
        weights.acce_pose * acce_pose
        + weights.acce_orients * acce_orients
        + weights.acce_position * acce_position
        + weights.reprojection * loss_2d
    )
    return {
        "acce_pose": acce_pose,
        "acce_orients": acce_orients,
        "acce_position": acce_position,
        "loss_2d": loss_2d,
        "total": total,
    }


def make_flat_objective(
    obs: SequenceObservation,
    skeleton: HandSkeleton,
    weights: LossWeights = LossWeights(),
    norm: str = "l2",
):
    """Objective over the flat parameter vector, for the tape and the
    finite-difference checker. The vector layout matches
    ``TrajectoryParams.to_flat``."""
    n = obs.num_frames

    def objective(vec):
        shape_vec = vec[:NUM_SHAPE_PARAMS]
        frames = ad.reshape(vec[NUM_SHAPE_PARAMS:], (n, FRAME_PARAMS))
        orients = frames[:, 0:3]
        positions = frames[:, 3:6]
        joint_rots = ad.reshape(frames[:, 6:51], (n, NUM_ARTICULATED, 3))
        return _total_generic(
            shape_vec, orients, positions, joint_rots, obs, skeleton, weights, norm
        )

    return objective
