"""Pinhole cameras: intrinsics, world-to-camera extrinsics, projection,
and extrinsic translation perturbation for robustness experiments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import BehindCameraError

# Points with camera depth at or below this are treated as unprojectable.
MIN_DEPTH = 1e-6


def _readonly(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics in pixels; principal point (cx, cy)."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (self.width > 0 and self.height > 0):
            raise ValueError("image size must be positive")
        vals = (self.fx, self.fy, self.cx, self.cy)
        if not np.all(np.isfinite(vals)):
            raise ValueError("intrinsics must be finite")


@dataclass(frozen=True)
class Extrinsics:
    """World-to-camera transform p_cam = rotation @ p_world + translation."""

    rotation: np.ndarray     # (3, 3)
    translation: np.ndarray  # (3,)

    def __post_init__(self):
        r = _readonly(self.rotation)
        t = _readonly(self.translation)
        if r.shape != (3, 3) or t.shape != (3,):
            raise ValueError("rotation must be (3, 3) and translation (3,)")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(t))):
            raise ValueError("extrinsics must be finite")
        if not np.allclose(r.T @ r, np.eye(3), atol=1e-9):
            raise ValueError("rotation must be orthonormal within 1e-9")
        if not np.isclose(np.linalg.det(r), 1.0, atol=1e-9):
            raise ValueError("rotation must have determinant +1")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)


@dataclass(frozen=True)
class CameraRig:
    """Ordered views; each view is an (Intrinsics, Extrinsics) pair."""

    views: tuple

    def __post_init__(self):
        views = tuple(tuple(v) for v in self.views)
        if len(views) < 1:
            raise ValueError("a rig needs at least one view")
        for v in views:
            if len(v) != 2 or not isinstance(v[0], Intrinsics) or not isinstance(v[1], Extrinsics):
                raise ValueError("each view must be an (Intrinsics, Extrinsics) pair")
        object.__setattr__(self, "views", views)

    @property
    def num_views(self) -> int:
        return len(self.views)


def project(point_world, view) -> np.ndarray:
    """Project one world point into pixel coordinates (u, v).

    Raises BehindCameraError when the camera-frame depth is <= MIN_DEPTH.
    No clamping to the image bounds is applied.
    """
    intr, extr = view
    p = np.asarray(point_world, dtype=float)
    if p.shape != (3,):
        raise ValueError("point must have shape (3,)")
    if not np.all(np.isfinite(p)):
        raise ValueError("point must be finite")
    cam = extr.rotation @ p + extr.translation
    if cam[2] <= MIN_DEPTH:
        raise BehindCameraError(f"depth {cam[2]:.3e} is at or behind the camera plane")
    return np.array(
        [
            intr.fx * cam[0] / cam[2] + intr.cx,
            intr.fy * cam[1] / cam[2] + intr.cy,
        ]
    )


def project_points_masked(points, view):
    """Project a batch of world points, masking instead of raising.

    Args:
        points: (..., 3) world points, Tensor or array.
    Returns:
        (u, v, in_front) where u, v are (...,) pixel coordinates of the same
        kind as ``points`` and in_front is a plain bool array. Entries behind
        the camera use a placeholder depth of 1 so the division stays finite;
        callers must ignore those pixels via the mask.

    The objective and the synthetic renderer both project through this
    function, so exact observations reproduce bitwise under re-evaluation.
    """
    intr, extr = view
    cam = ad.matmul(points, extr.rotation.T) + extr.translation
    x = cam[..., 0]
    y = cam[..., 1]
    z = cam[..., 2]
    in_front = ad.value_of(z) > MIN_DEPTH
    m = in_front.astype(float)
    z_safe = z * m + (1.0 - m)
    u = x / z_safe * intr.fx + intr.cx
    v = y / z_safe * intr.fy + intr.cy
    return u, v, in_front


def perturb_extrinsics(
    extr: Extrinsics, rng: np.random.Generator, noise_range: float = 0.5
) -> Extrinsics:
    """Add per-component Uniform(-noise_range, noise_range) meters to the
    translation; the rotation is untouched. Deterministic given the rng state.
    """
    if noise_range < 0:
        raise ValueError("noise_range must be >= 0")
    delta = rng.uniform(-noise_range, noise_range, size=3)
    return Extrinsics(extr.rotation, extr.translation + delta)
