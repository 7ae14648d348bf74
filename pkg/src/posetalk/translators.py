"""Vision-to-language translators.

Two structurally distinct trainable maps carry encoder features into the
LM embedding space: a single affine layer for motion and a two-layer MLP
for video.  Forward passes are pure; gradients are analytic and checked
against finite differences in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .encoders import MotionFeatures, VideoFeatures
from .errors import ContractError

_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x / _SQRT2))


def _gelu_grad(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + erf(x / _SQRT2)) + x * np.exp(-0.5 * x * x) * _INV_SQRT_2PI


# name -> (value, derivative); "identity" exists for affine-collapse tests
ACTIVATIONS = {
    "gelu": (_gelu, _gelu_grad),
    "identity": (lambda x: x, lambda x: np.ones_like(x)),
}


@dataclass
class MotionTranslatorParams:
    """Single affine map: y = W x + b."""

    w: np.ndarray  # (d_lm, d_motion)
    b: np.ndarray  # (d_lm,)

    @classmethod
    def init(cls, d_lm: int, d_motion: int, seed: int) -> "MotionTranslatorParams":
        rng = np.random.default_rng([seed, 201])
        return cls(
            w=rng.standard_normal((d_lm, d_motion)) / np.sqrt(d_motion),
            b=np.zeros(d_lm),
        )

    def params(self) -> dict[str, np.ndarray]:
        return {"motion.w": self.w, "motion.b": self.b}


@dataclass
class VideoTranslatorParams:
    """Two-layer MLP: y = W2 act(W1 x + b1) + b2."""

    w1: np.ndarray  # (d_hidden, d_video)
    b1: np.ndarray
    w2: np.ndarray  # (d_lm, d_hidden)
    b2: np.ndarray
    activation: str = "gelu"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ContractError(f"unknown activation: {self.activation!r}")
        if self.w1.shape[0] < self.w2.shape[0] / 2:
            raise ContractError("video translator hidden width must be >= d_lm / 2")

    @classmethod
    def init(cls, d_lm: int, d_video: int, d_hidden: int, seed: int, activation: str = "gelu") -> "VideoTranslatorParams":
        rng = np.random.default_rng([seed, 202])
        return cls(
            w1=rng.standard_normal((d_hidden, d_video)) / np.sqrt(d_video),
            b1=np.zeros(d_hidden),
            w2=rng.standard_normal((d_lm, d_hidden)) / np.sqrt(d_hidden),
            b2=np.zeros(d_lm),
            activation=activation,
        )

    def params(self) -> dict[str, np.ndarray]:
        return {
            "video.w1": self.w1,
            "video.b1": self.b1,
            "video.w2": self.w2,
            "video.b2": self.b2,
        }


@dataclass(frozen=True)
class VisualEmbeddings:
    """Translator output tokens living in the LM embedding space."""

    tokens: np.ndarray  # (K, d_lm)

    def __post_init__(self):
        arr = np.asarray(self.tokens, dtype=np.float64)
        if arr.ndim != 2:
            raise ContractError(f"visual embeddings must be (K, d_lm), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ContractError("visual embeddings contain non-finite values")
        object.__setattr__(self, "tokens", arr)


def translate_motion(features: MotionFeatures, params: MotionTranslatorParams) -> VisualEmbeddings:
    x = features.tokens
    if x.shape[1] != params.w.shape[1]:
        raise ContractError(
            f"motion feature width {x.shape[1]} does not match translator {params.w.shape[1]}"
        )
    return VisualEmbeddings(tokens=x @ params.w.T + params.b)


def translate_video(features: VideoFeatures, params: VideoTranslatorParams) -> VisualEmbeddings:
    x = features.tokens
    if x.shape[1] != params.w1.shape[1]:
        raise ContractError(
            f"video feature width {x.shape[1]} does not match translator {params.w1.shape[1]}"
        )
    act, _ = ACTIVATIONS[params.activation]
    hidden = act(x @ params.w1.T + params.b1)
    return VisualEmbeddings(tokens=hidden @ params.w2.T + params.b2)


def translator_grads(
    params: MotionTranslatorParams | VideoTranslatorParams,
    features: MotionFeatures | VideoFeatures,
    upstream: np.ndarray,
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Analytic parameter and input gradients given dLoss/dOutput.

    Returns (grads keyed like ``params.params()``, dLoss/dFeatures).
    """
    x = features.tokens
    dy = np.asarray(upstream, dtype=np.float64)
    if dy.shape[0] != x.shape[0]:
        raise ContractError("upstream gradient token count does not match features")

    if isinstance(params, MotionTranslatorParams):
        grads = {"motion.w": dy.T @ x, "motion.b": dy.sum(axis=0)}
        return grads, dy @ params.w

    act, act_grad = ACTIVATIONS[params.activation]
    pre = x @ params.w1.T + params.b1
    hidden = act(pre)
    d_hidden = (dy @ params.w2) * act_grad(pre)
    grads = {
        "video.w2": dy.T @ hidden,
        "video.b2": dy.sum(axis=0),
        "video.w1": d_hidden.T @ x,
        "video.b1": d_hidden.sum(axis=0),
    }
    return grads, d_hidden @ params.w1
