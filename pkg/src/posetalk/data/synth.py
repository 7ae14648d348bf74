"""Closed-form skeleton trajectories for each motion primitive.

Primitives play back to back.  Walking displaces the root and turning
rotates the heading; both persist into later primitives, while limb poses
reset between primitives.  Small seeded noise (under one centimeter) is
added at the end, so the clean formulas stay testable via ``noise=0``.
"""

from __future__ import annotations

import numpy as np

from ..core import MotionSequence
from ..errors import ContractError
from . import skeleton as sk
from .scripts import CompositeScript, MotionPrimitive

WALK_SPEED = 1.0  # m/s
ARM_RAISE_TARGET_WRIST = np.array([0.12, 0.80, 0.02])
ARM_RAISE_TARGET_ELBOW = np.array([0.16, 0.45, 0.02])
WAVE_BASE_WRIST = np.array([0.30, 0.55, 0.02])
WAVE_BASE_ELBOW = np.array([0.24, 0.30, 0.02])

_WALK_DIR_VECTORS = {
    "forward": np.array([0.0, 0.0, 1.0]),
    "backward": np.array([0.0, 0.0, -1.0]),
    "left": np.array([1.0, 0.0, 0.0]),
    "right": np.array([-1.0, 0.0, 0.0]),
}


def _smoothstep(u: float) -> float:
    return u * u * (3.0 - 2.0 * u)


def _mirror(v: np.ndarray, side: str) -> np.ndarray:
    """Targets above are written for the left side; flip x for the right."""
    if side == "left":
        return v
    return v * np.array([-1.0, 1.0, 1.0])


def _pose_for(prim: MotionPrimitive, u: float, fps: float) -> tuple[np.ndarray, np.ndarray, float]:
    """Body-frame joint offsets plus root displacement (body frame) and yaw
    delta at phase u in [0, 1] of one primitive."""
    pose = sk.NEUTRAL_POSE.copy()
    droot = np.zeros(3)
    dyaw = 0.0
    kind = prim.kind

    if kind == "raise-arm":
        _, elbow, wrist = sk.side_joints(prim.side)
        s = _smoothstep(u)
        pose[wrist] = pose[wrist] + s * (_mirror(ARM_RAISE_TARGET_WRIST, prim.side) - pose[wrist])
        pose[elbow] = pose[elbow] + s * (_mirror(ARM_RAISE_TARGET_ELBOW, prim.side) - pose[elbow])
    elif kind == "wave":
        _, elbow, wrist = sk.side_joints(prim.side)
        ramp = _smoothstep(min(1.0, 3.0 * u))
        base_w = _mirror(WAVE_BASE_WRIST, prim.side)
        base_e = _mirror(WAVE_BASE_ELBOW, prim.side)
        pose[wrist] = pose[wrist] + ramp * (base_w - pose[wrist])
        pose[elbow] = pose[elbow] + ramp * (base_e - pose[elbow])
        pose[wrist, 0] += 0.10 * ramp * np.sin(2.0 * np.pi * 3.0 * u)
    elif kind == "squat":
        dip = 0.30 * np.sin(np.pi * u)
        upper = (sk.ROOT, sk.SPINE, sk.HEAD, sk.L_SHOULDER, sk.L_ELBOW, sk.L_WRIST,
                 sk.R_SHOULDER, sk.R_ELBOW, sk.R_WRIST, sk.L_HIP, sk.R_HIP)
        for j in upper:
            pose[j, 1] -= dip
        for j in (sk.L_KNEE, sk.R_KNEE):
            pose[j, 1] -= 0.5 * dip
            pose[j, 2] += 0.6 * dip
    elif kind == "jump":
        lift = 0.32 * np.sin(np.pi * u)
        pose[:, 1] += lift
    elif kind == "kick":
        _, knee, ankle = sk.leg_joints(prim.side)
        swing = np.sin(np.pi * u)
        pose[ankle] += swing * np.array([0.0, 0.28, 0.45])
        pose[knee] += swing * np.array([0.0, 0.14, 0.22])
    elif kind == "walk":
        direction = _WALK_DIR_VECTORS[prim.direction]
        dist = WALK_SPEED * prim.duration_frames / fps
        droot = direction * dist * u
        stride = 2.0 * np.pi * 2.0 * u
        for ankle, knee, phase in (
            (sk.L_ANKLE, sk.L_KNEE, 0.0),
            (sk.R_ANKLE, sk.R_KNEE, np.pi),
        ):
            swing = 0.16 * np.sin(stride + phase)
            pose[ankle] += direction * swing
            pose[knee] += direction * (0.5 * swing)
            pose[ankle, 1] += 0.05 * abs(np.sin(stride + phase))
        for wrist, phase in ((sk.L_WRIST, np.pi), (sk.R_WRIST, 0.0)):
            pose[wrist] += direction * (0.08 * np.sin(stride + phase))
    elif kind == "turn":
        sign = 1.0 if prim.direction == "left" else -1.0
        dyaw = sign * (np.pi / 2.0) * u
    else:  # unreachable: MotionPrimitive validates kinds
        raise ContractError(f"unknown primitive kind: {kind!r}")
    return pose, droot, dyaw


def synth_motion(
    script: CompositeScript,
    joints: int = sk.NUM_JOINTS,
    fps: float = 24.0,
    seed: int = 0,
    noise: float = 0.004,
) -> MotionSequence:
    """Deterministic skeleton trajectories for a script.

    ``joints`` must be at least 15; any extra joints ride along at the
    spine so downstream shape contracts still hold.
    """
    if joints < sk.NUM_JOINTS:
        raise ContractError(f"need at least {sk.NUM_JOINTS} joints, got {joints}")
    root_pos = np.zeros(3)
    heading = 0.0
    frames = []
    for prim in script.primitives:
        n = prim.duration_frames
        heading_r = sk.yaw_matrix(heading)
        end_droot = np.zeros(3)
        end_dyaw = 0.0
        for k in range(n):
            u = k / (n - 1)
            pose, droot, dyaw = _pose_for(prim, u, fps)
            rot = sk.yaw_matrix(heading + dyaw)
            world = root_pos + heading_r @ droot + pose @ rot.T
            if joints > sk.NUM_JOINTS:
                extra = np.repeat(world[sk.SPINE][None, :], joints - sk.NUM_JOINTS, axis=0)
                world = np.concatenate([world, extra], axis=0)
            frames.append(world)
            end_droot, end_dyaw = droot, dyaw
        root_pos = root_pos + heading_r @ end_droot
        heading += end_dyaw
    arr = np.stack(frames, axis=0)
    if noise > 0:
        rng = np.random.default_rng([seed, 31])
        arr = arr + rng.uniform(-noise, noise, size=arr.shape)
    return MotionSequence(frames=arr, fps=fps)
