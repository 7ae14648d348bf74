"""Hot rasterization kernels with a numba fast path and a numpy fallback.

The stick-figure renderer draws tens of thousands of short line segments
when a dataset is generated; that inner loop is the one hot spot numpy
cannot express well, so it is compiled with ``@njit`` when numba is
available.  Set ``POSETALK_NUMBA=0`` to force the pure-numpy path (the
fallback also engages automatically when numba is not importable).

Both paths use the same endpoint-inclusive sampled-line rule with
``floor(x + 0.5)`` rounding over identical float64 arithmetic, so rendered
bytes are bit-identical regardless of the engine.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_requested() -> bool:
    flag = os.environ.get("POSETALK_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "off", "no")


def rasterize_frames_numpy(points_px: np.ndarray, edges: np.ndarray, height: int, width: int) -> np.ndarray:
    """Draw white 1-pixel bone segments on black frames.

    Args:
        points_px: (F, J, 2) int64 pixel coordinates (row, col), already
            clamped to the frame.
        edges: (E, 2) int64 joint-index pairs.
        height, width: frame size in pixels.

    Returns:
        (F, height, width) uint8 frames with drawn pixels set to 255.
    """
    n_frames = points_px.shape[0]
    frames = np.zeros((n_frames, height, width), dtype=np.uint8)
    for f in range(n_frames):
        pts = points_px[f]
        for a, b in edges:
            r0, c0 = pts[a]
            r1, c1 = pts[b]
            dr = int(r1) - int(r0)
            dc = int(c1) - int(c0)
            n = max(abs(dr), abs(dc)) + 1
            if n == 1:
                frames[f, r0, c0] = 255
                continue
            denom = float(n - 1)
            t = np.arange(n, dtype=np.float64)
            rows = (r0 + np.floor(t * float(dr) / denom + 0.5)).astype(np.int64)
            cols = (c0 + np.floor(t * float(dc) / denom + 0.5)).astype(np.int64)
            frames[f, rows, cols] = 255
    return frames


_rasterize_frames_jit = None
if _numba_requested():
    try:
        from numba import njit

        @njit(cache=True)
        def _rasterize_frames_jit(points_px, edges, height, width):  # pragma: no cover - numpy twin is the tested spec
            n_frames = points_px.shape[0]
            n_edges = edges.shape[0]
            frames = np.zeros((n_frames, height, width), dtype=np.uint8)
            for f in range(n_frames):
                for e in range(n_edges):
                    a = edges[e, 0]
                    b = edges[e, 1]
                    r0 = points_px[f, a, 0]
                    c0 = points_px[f, a, 1]
                    r1 = points_px[f, b, 0]
                    c1 = points_px[f, b, 1]
                    dr = r1 - r0
                    dc = c1 - c0
                    n = max(abs(dr), abs(dc)) + 1
                    if n == 1:
                        frames[f, r0, c0] = 255
                    else:
                        denom = float(n - 1)
                        for k in range(n):
                            rr = r0 + np.int64(np.floor(k * float(dr) / denom + 0.5))
                            cc = c0 + np.int64(np.floor(k * float(dc) / denom + 0.5))
                            frames[f, rr, cc] = 255
            return frames

    except ImportError:
        _rasterize_frames_jit = None


def using_numba() -> bool:
    """True when the jitted path is active."""
    return _rasterize_frames_jit is not None


def rasterize_frames(points_px: np.ndarray, edges: np.ndarray, height: int, width: int) -> np.ndarray:
    """Dispatch to the jitted kernel or the numpy fallback."""
    points_px = np.ascontiguousarray(points_px, dtype=np.int64)
    edges = np.ascontiguousarray(edges, dtype=np.int64)
    if _rasterize_frames_jit is not None:
        return _rasterize_frames_jit(points_px, edges, height, width)
    return rasterize_frames_numpy(points_px, edges, height, width)
