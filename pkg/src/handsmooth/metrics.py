"""Trajectory quality metrics.

Positional error against ground truth, temporal acceleration magnitude, and
mean reprojection distance, reported in millimeters and pixels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hand_model import HandSkeleton
from .objective import (
    SequenceObservation,
    TrajectoryParams,
    _view_residual_terms,
    trajectory_joints,
)

MM_PER_M = 1000.0


def mpjpe(pred_joints: np.ndarray, gt_joints: np.ndarray) -> float:
    """Mean per-joint position error in millimeters, no alignment.

    Both inputs are (N, 21, 3) world-space joint arrays in meters.
    """
    pred_joints = np.asarray(pred_joints, dtype=float)
    gt_joints = np.asarray(gt_joints, dtype=float)
    if pred_joints.shape != gt_joints.shape or pred_joints.ndim != 3:
        raise ValueError("joint arrays must have matching (N, J, 3) shapes")
    dist = np.linalg.norm(pred_joints - gt_joints, axis=-1)
    return float(dist.mean() * MM_PER_M)


def acceleration_error(joints: np.ndarray) -> float:
    """Mean norm of the per-joint second difference, in mm per frame^2."""
    joints = np.asarray(joints, dtype=float)
    if joints.ndim != 3 or joints.shape[0] < 3:
        raise ValueError("need an (N, J, 3) array with N >= 3")
    d2 = joints[2:] - 2.0 * joints[1:-1] + joints[:-2]
    return float(np.linalg.norm(d2, axis=-1).mean() * MM_PER_M)


def reprojection_px(
    traj: TrajectoryParams,
    obs: SequenceObservation,
    skeleton: HandSkeleton,
    norm: str = "l2",
) -> float:
    """Mean pixel distance between projected joints and visible landmarks.

    Unlike the optimization objective, an observation with nothing visible
    in front of any camera scores 0.0 here instead of raising.
    """
    joints = trajectory_joints(traj, skeleton)
    total = 0.0
    count = 0.0
    for dist, mask in _view_residual_terms(joints, obs, norm):
        total += float(np.sum(dist * mask))
        count += float(np.sum(mask))
    if count == 0:
        return 0.0
    return total / count


@dataclass(frozen=True)
class MetricReport:
    """Evaluation summary for one trajectory.

    mpjpe_mm is None when no ground truth was available. Per-frame arrays
    carry the same quantities frame by frame; acceleration has N - 2 rows.
    """

    accel_error_mm: float
    reproj_px: float
    mpjpe_mm: float | None = None
    per_frame_mpjpe_mm: np.ndarray | None = None
    per_frame_accel_mm: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def to_dict(self) -> dict:
        return {
            "mpjpe_mm": self.mpjpe_mm,
            "accel_error_mm": self.accel_error_mm,
            "reproj_px": self.reproj_px,
            "per_frame_mpjpe_mm": (
                None
                if self.per_frame_mpjpe_mm is None
                else np.asarray(self.per_frame_mpjpe_mm).tolist()
            ),
            "per_frame_accel_mm": np.asarray(self.per_frame_accel_mm).tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        pf_mpjpe = d.get("per_frame_mpjpe_mm")
        return cls(
            mpjpe_mm=d.get("mpjpe_mm"),
            accel_error_mm=float(d["accel_error_mm"]),
            reproj_px=float(d["reproj_px"]),
            per_frame_mpjpe_mm=(
                None if pf_mpjpe is None else np.asarray(pf_mpjpe, dtype=float)
            ),
            per_frame_accel_mm=np.asarray(
                d.get("per_frame_accel_mm", ()), dtype=float
            ),
        )

    def format_table(self) -> str:
        rows = [("acceleration (mm/frame^2)", self.accel_error_mm),
                ("reprojection (px)", self.reproj_px)]
        if self.mpjpe_mm is not None:
            rows.insert(0, ("position error (mm)", self.mpjpe_mm))
        width = max(len(name) for name, _ in rows)
        lines = [f"{name:<{width}}  {value:12.6f}" for name, value in rows]
        return "\n".join(lines)


def evaluate(
    refined: TrajectoryParams,
    gt: TrajectoryParams | None,
    obs: SequenceObservation,
    skeleton: HandSkeleton,
    norm: str = "l2",
) -> MetricReport:
    """All metrics for a trajectory; position error needs ground truth."""
    joints = trajectory_joints(refined, skeleton)
    d2 = joints[2:] - 2.0 * joints[1:-1] + joints[:-2]
    per_frame_accel = np.linalg.norm(d2, axis=-1).mean(axis=-1) * MM_PER_M
    mpjpe_mm = None
    per_frame_mpjpe = None
    if gt is not None:
        gt_joints = trajectory_joints(gt, skeleton)
        dist = np.linalg.norm(joints - gt_joints, axis=-1) * MM_PER_M
        per_frame_mpjpe = dist.mean(axis=-1)
        mpjpe_mm = float(dist.mean())
    return MetricReport(
        mpjpe_mm=mpjpe_mm,
        accel_error_mm=float(per_frame_accel.mean()),
        reproj_px=reprojection_px(refined, obs, skeleton, norm),
        per_frame_mpjpe_mm=per_frame_mpjpe,
        per_frame_accel_mm=per_frame_accel,
    )
