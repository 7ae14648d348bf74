"""Frozen deterministic feature extractors for motion and video.

Both encoders are fixed seeded random projections combined with pooling
(temporal chunks for motion, a spatial patch grid for video).  They expose
zero trainable parameters; repeated encoding of equal inputs is
bit-identical, which stands in for the frozen pretrained encoders of the
full-scale system while keeping every downstream contract testable.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import MotionSequence, VideoClip
from .errors import ContractError

_MOTION_STREAM = 101
_VIDEO_STREAM = 102


@dataclass(frozen=True)
class EncoderConfig:
    """Widths and pooling shape of the frozen encoders."""

    d_motion: int = 64
    d_video: int = 64
    motion_tokens: int = 16  # temporal chunk count K_m
    patch_grid: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.d_motion < 4 or self.d_video < 4:
            raise ContractError("encoder widths must be >= 4")
        if self.motion_tokens < 1:
            raise ContractError("motion_tokens must be >= 1")
        if self.patch_grid < 1:
            raise ContractError("patch_grid must be >= 1")


@dataclass(frozen=True)
class MotionFeatures:
    tokens: np.ndarray  # (K_m, d_motion) float64
    warning: str | None = None

    def __post_init__(self):
        arr = np.asarray(self.tokens, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ContractError(f"motion features must be (K, d), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ContractError("motion features contain non-finite values")
        object.__setattr__(self, "tokens", arr)


@dataclass(frozen=True)
class VideoFeatures:
    tokens: np.ndarray  # (T, d_video) float64

    def __post_init__(self):
        arr = np.asarray(self.tokens, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ContractError(f"video features must be (T, d), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ContractError("video features contain non-finite values")
        object.__setattr__(self, "tokens", arr)


@lru_cache(maxsize=32)
def _motion_projection(seed: int, joints: int, d_motion: int) -> np.ndarray:
    """Fixed zero-bias projection from flattened pose to d_motion."""
    rng = np.random.default_rng([seed, _MOTION_STREAM, joints, d_motion])
    mat = rng.standard_normal((d_motion, joints * 3)) / np.sqrt(joints * 3)
    mat.setflags(write=False)
    return mat


@lru_cache(maxsize=32)
def _video_projection(seed: int, grid: int, channels: int, d_video: int) -> np.ndarray:
    rng = np.random.default_rng([seed, _VIDEO_STREAM, grid, channels, d_video])
    fan_in = grid * grid * channels
    mat = rng.standard_normal((d_video, fan_in)) / np.sqrt(fan_in)
    mat.setflags(write=False)
    return mat


def encoder_constants(cfg: EncoderConfig, joints: int = 15, channels: int = 1) -> dict[str, np.ndarray]:
    """The frozen matrices for a given skeleton/channel layout (for
    freezing audits; these are constants, not parameters)."""
    return {
        "motion_projection": _motion_projection(cfg.seed, joints, cfg.d_motion),
        "video_projection": _video_projection(cfg.seed, cfg.patch_grid, channels, cfg.d_video),
    }


def downsample_keyframes(video: VideoClip, target_frames: int) -> VideoClip:
    """Pick ``target_frames`` keyframes, endpoint-inclusive.

    For N > target frames the indices are ``floor(i * (N - 1) / (target - 1))``;
    a single target frame takes index 0; short clips keep all frames and
    repeat the last one as padding.
    """
    if target_frames < 1:
        raise ContractError("target_frames must be >= 1")
    n = video.num_frames
    if target_frames == 1:
        idx = np.array([0])
    elif n <= target_frames:
        idx = np.concatenate([np.arange(n), np.full(target_frames - n, n - 1)])
    else:
        i = np.arange(target_frames)
        idx = (i * (n - 1)) // (target_frames - 1)
    return VideoClip(frames=video.frames[idx])


def _chunk_bounds(total: int, chunks: int) -> list[tuple[int, int]]:
    """Contiguous, equal-as-possible partition of range(total)."""
    base, extra = divmod(total, chunks)
    bounds = []
    start = 0
    for c in range(chunks):
        size = base + (1 if c < extra else 0)
        bounds.append((start, start + size))
        start += size
    return bounds


def encode_motion(motion: MotionSequence, cfg: EncoderConfig) -> MotionFeatures:
    """Project each frame's flattened pose, then average frames within
    contiguous temporal chunks.  Linear (no bias) and deterministic."""
    n_frames, joints, _ = motion.frames.shape
    proj = _motion_projection(cfg.seed, joints, cfg.d_motion)
    per_frame = motion.frames.reshape(n_frames, joints * 3) @ proj.T  # (F, d_motion)

    warning = None
    k = cfg.motion_tokens
    if n_frames < k:
        warning = f"motion has {n_frames} frames < {k} tokens; token count reduced to {n_frames}"
        k = n_frames
    tokens = np.empty((k, cfg.d_motion))
    for c, (lo, hi) in enumerate(_chunk_bounds(n_frames, k)):
        tokens[c] = per_frame[lo:hi].mean(axis=0)
    return MotionFeatures(tokens=tokens, warning=warning)


def encode_video(video: VideoClip, cfg: EncoderConfig) -> VideoFeatures:
    """Patch-grid mean intensities per frame (per channel, scaled to [0, 1]),
    flattened and projected; one token per frame."""
    frames = video.frames.astype(np.float64) / 255.0  # (T, H, W, C)
    t, h, w, c = frames.shape
    grid = cfg.patch_grid
    if h < grid or w < grid:
        raise ContractError(f"frame size {h}x{w} smaller than patch grid {grid}")
    row_bounds = _chunk_bounds(h, grid)
    col_bounds = _chunk_bounds(w, grid)
    pooled = np.empty((t, grid, grid, c))
    for i, (r0, r1) in enumerate(row_bounds):
        for j, (c0, c1) in enumerate(col_bounds):
            pooled[:, i, j, :] = frames[:, r0:r1, c0:c1, :].mean(axis=(1, 2))
    flat = pooled.reshape(t, grid * grid * c)
    proj = _video_projection(cfg.seed, grid, c, cfg.d_video)
    return VideoFeatures(tokens=flat @ proj.T)
