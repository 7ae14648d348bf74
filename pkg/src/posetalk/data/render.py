"""Stick-figure rendering: orthographic 3/4-view projection and 1-pixel
bone rasterization (white on black), one video frame per motion frame.

The paired video of a record is exactly this function applied to its
motion, which is what makes captions transfer verbatim across modalities.
"""

from __future__ import annotations

import numpy as np

from .. import _kernels
from ..core import MotionSequence, VideoClip
from . import skeleton as sk

VIEW_YAW = np.deg2rad(35.0)
VIEW_PITCH = np.deg2rad(18.0)
WINDOW = 2.2  # world half-extent mapped onto the image


def project_points(frames: np.ndarray, height: int, width: int) -> np.ndarray:
    """World joints (F, J, 3) -> integer pixel (row, col), clamped to the
    frame borders."""
    x, y, z = frames[..., 0], frames[..., 1], frames[..., 2]
    cy, sy = np.cos(VIEW_YAW), np.sin(VIEW_YAW)
    cp, sp = np.cos(VIEW_PITCH), np.sin(VIEW_PITCH)
    x_img = x * cy + z * sy
    z_rot = -x * sy + z * cy
    y_img = y * cp - z_rot * sp

    col = np.floor((x_img + WINDOW) / (2.0 * WINDOW) * (width - 1) + 0.5)
    row = np.floor((WINDOW - y_img) / (2.0 * WINDOW) * (height - 1) + 0.5)
    col = np.clip(col, 0, width - 1).astype(np.int64)
    row = np.clip(row, 0, height - 1).astype(np.int64)
    return np.stack([row, col], axis=-1)


def render_stick_figure(motion: MotionSequence, height: int = 64, width: int = 64) -> VideoClip:
    """Rasterize every motion frame; deterministic and engine-independent
    (numba and numpy paths draw identical bytes)."""
    pts = project_points(motion.frames[:, : sk.NUM_JOINTS, :], height, width)
    frames = _kernels.rasterize_frames(pts, sk.EDGES, height, width)
    return VideoClip(frames=frames[..., None])
