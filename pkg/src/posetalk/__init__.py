"""posetalk: desk-scale dual-modality (skeleton motion + video) instruction
tuning into a small autoregressive LM, with frozen encoders, trainable
vision-to-language translators, LoRA adaptation, a synthetic paired-data
generator, and a five-category behavior benchmark."""

__version__ = "0.1.0"

from .adaptation import LoraParams, LoraSpec, ParamGroup, stage_param_groups
from .core import (
    MOTION,
    VIDEO,
    InstructionSample,
    MotionSequence,
    Prompt,
    VideoClip,
    Vocabulary,
    build_prompt,
    detokenize,
    tokenize,
)
from .encoders import (
    EncoderConfig,
    MotionFeatures,
    VideoFeatures,
    downsample_keyframes,
    encode_motion,
    encode_video,
)
from .lm import LMConfig, LMParams, embed_with_visual, forward, generate, loss_and_grad
from .pipeline import ModelBundle, build_bundle, generate_reply, sample_loss
from .training import StageConfig, train_stage1, train_stage2

__all__ = [
    "EncoderConfig",
    "InstructionSample",
    "LMConfig",
    "LMParams",
    "LoraParams",
    "LoraSpec",
    "MOTION",
    "ModelBundle",
    "MotionFeatures",
    "MotionSequence",
    "ParamGroup",
    "Prompt",
    "StageConfig",
    "VIDEO",
    "VideoClip",
    "VideoFeatures",
    "Vocabulary",
    "build_bundle",
    "build_prompt",
    "detokenize",
    "downsample_keyframes",
    "embed_with_visual",
    "encode_motion",
    "encode_video",
    "forward",
    "generate",
    "generate_reply",
    "loss_and_grad",
    "sample_loss",
    "stage_param_groups",
    "tokenize",
    "train_stage1",
    "train_stage2",
]
