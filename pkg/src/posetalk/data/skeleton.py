"""15-joint stick skeleton: joint indices, bone edges, and the neutral
standing pose.

World axes: y up, z the direction the figure initially faces, +x the
figure's left.  Coordinates are meters with the origin at the root's
frame-0 position.
"""

from __future__ import annotations

import numpy as np

ROOT = 0
SPINE = 1
HEAD = 2
L_SHOULDER, L_ELBOW, L_WRIST = 3, 4, 5
R_SHOULDER, R_ELBOW, R_WRIST = 6, 7, 8
L_HIP, L_KNEE, L_ANKLE = 9, 10, 11
R_HIP, R_KNEE, R_ANKLE = 12, 13, 14

NUM_JOINTS = 15

JOINT_NAMES = (
    "root", "spine", "head",
    "l_shoulder", "l_elbow", "l_wrist",
    "r_shoulder", "r_elbow", "r_wrist",
    "l_hip", "l_knee", "l_ankle",
    "r_hip", "r_knee", "r_ankle",
)

EDGES = np.array(
    [
        (ROOT, SPINE), (SPINE, HEAD),
        (SPINE, L_SHOULDER), (L_SHOULDER, L_ELBOW), (L_ELBOW, L_WRIST),
        (SPINE, R_SHOULDER), (R_SHOULDER, R_ELBOW), (R_ELBOW, R_WRIST),
        (ROOT, L_HIP), (L_HIP, L_KNEE), (L_KNEE, L_ANKLE),
        (ROOT, R_HIP), (R_HIP, R_KNEE), (R_KNEE, R_ANKLE),
    ],
    dtype=np.int64,
)

# neutral standing pose, offsets from the root (x left, y up, z forward)
NEUTRAL_POSE = np.array(
    [
        (0.00, 0.00, 0.00),   # root
        (0.00, 0.30, 0.00),   # spine
        (0.00, 0.58, 0.00),   # head
        (0.18, 0.42, 0.00),   # l_shoulder
        (0.27, 0.18, 0.00),   # l_elbow
        (0.31, -0.04, 0.00),  # l_wrist
        (-0.18, 0.42, 0.00),  # r_shoulder
        (-0.27, 0.18, 0.00),  # r_elbow
        (-0.31, -0.04, 0.00),  # r_wrist
        (0.10, -0.05, 0.00),  # l_hip
        (0.12, -0.50, 0.00),  # l_knee
        (0.13, -0.95, 0.00),  # l_ankle
        (-0.10, -0.05, 0.00),  # r_hip
        (-0.12, -0.50, 0.00),  # r_knee
        (-0.13, -0.95, 0.00),  # r_ankle
    ],
    dtype=np.float64,
)
NEUTRAL_POSE.setflags(write=False)


def side_joints(side: str) -> tuple[int, int, int]:
    """(shoulder, elbow, wrist) for an arm side."""
    if side == "left":
        return L_SHOULDER, L_ELBOW, L_WRIST
    if side == "right":
        return R_SHOULDER, R_ELBOW, R_WRIST
    raise ValueError(f"unknown side: {side!r}")


def leg_joints(side: str) -> tuple[int, int, int]:
    """(hip, knee, ankle) for a leg side."""
    if side == "left":
        return L_HIP, L_KNEE, L_ANKLE
    if side == "right":
        return R_HIP, R_KNEE, R_ANKLE
    raise ValueError(f"unknown side: {side!r}")


def yaw_matrix(angle: float) -> np.ndarray:
    """Rotation about the vertical axis; positive turns the facing toward
    the figure's left."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([(c, 0.0, s), (0.0, 1.0, 0.0), (-s, 0.0, c)])
