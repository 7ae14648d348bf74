"""Glue between encoders, translators, and the LM: a model bundle plus the
per-sample forward/backward used by training, and prompt-level generation
used by inference and the bench harness."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adaptation import LoraParams, LoraSpec
from .core import MOTION, InstructionSample, Prompt, Vocabulary, detokenize
from .encoders import EncoderConfig, downsample_keyframes, encode_motion, encode_video
from .errors import NumericError
from .lm import (
    GenerationResult,
    LMConfig,
    LMParams,
    backward,
    embed_with_visual,
    forward,
    generate,
    loss_and_grad,
    sequence_param_grads,
)
from .translators import (
    MotionTranslatorParams,
    VideoTranslatorParams,
    VisualEmbeddings,
    translate_motion,
    translate_video,
    translator_grads,
)


@dataclass
class ModelBundle:
    """Everything needed to run the full pipeline on a sample."""

    vocab: Vocabulary
    enc_cfg: EncoderConfig
    lm_cfg: LMConfig
    lm: LMParams
    motion_translator: MotionTranslatorParams
    video_translator: VideoTranslatorParams
    lora: LoraParams | None = None
    lora_spec: LoraSpec = LoraSpec()
    video_frames: int = 8
    seed: int = 0

    def translator_params(self) -> dict[str, np.ndarray]:
        return {**self.motion_translator.params(), **self.video_translator.params()}

    def attach_lora(self) -> LoraParams:
        """Create zero-init adapters (idempotent)."""
        if self.lora is None:
            self.lora = LoraParams.init(
                self.lora_spec, self.lm_cfg.n_layers, self.lm_cfg.d_lm, self.seed
            )
        return self.lora

    def config_snapshot(self) -> dict:
        """Plain-dict description sufficient to rebuild the frozen parts."""
        return {
            "seed": self.seed,
            "video_frames": self.video_frames,
            "encoder": {
                "d_motion": self.enc_cfg.d_motion,
                "d_video": self.enc_cfg.d_video,
                "motion_tokens": self.enc_cfg.motion_tokens,
                "patch_grid": self.enc_cfg.patch_grid,
                "seed": self.enc_cfg.seed,
            },
            "lm": {
                "vocab_size": self.lm_cfg.vocab_size,
                "d_lm": self.lm_cfg.d_lm,
                "n_layers": self.lm_cfg.n_layers,
                "n_heads": self.lm_cfg.n_heads,
                "d_ff": self.lm_cfg.d_ff,
                "max_len": self.lm_cfg.max_len,
                "init_std": self.lm_cfg.init_std,
            },
            "video_hidden": self.video_translator.w1.shape[0],
            "video_activation": self.video_translator.activation,
            "lora": {
                "rank": self.lora_spec.rank,
                "alpha": self.lora_spec.alpha,
                "targets": list(self.lora_spec.targets),
            },
        }


def build_bundle(
    vocab: Vocabulary,
    seed: int = 0,
    enc_cfg: EncoderConfig | None = None,
    lm_cfg: LMConfig | None = None,
    lora_spec: LoraSpec = LoraSpec(),
    video_hidden: int | None = None,
    video_frames: int = 8,
    video_activation: str = "gelu",
) -> ModelBundle:
    """Deterministically initialize a bundle from a seed.  LoRA adapters are
    not attached here; stage 2 does that."""
    enc_cfg = enc_cfg or EncoderConfig(seed=seed)
    lm_cfg = lm_cfg or LMConfig(vocab_size=len(vocab))
    hidden = video_hidden or lm_cfg.d_lm
    return ModelBundle(
        vocab=vocab,
        enc_cfg=enc_cfg,
        lm_cfg=lm_cfg,
        lm=LMParams.init(lm_cfg, seed),
        motion_translator=MotionTranslatorParams.init(lm_cfg.d_lm, enc_cfg.d_motion, seed),
        video_translator=VideoTranslatorParams.init(
            lm_cfg.d_lm, enc_cfg.d_video, hidden, seed, video_activation
        ),
        lora_spec=lora_spec,
        video_frames=video_frames,
        seed=seed,
    )


def encode_prompt(bundle: ModelBundle, prompt: Prompt):
    """Run the frozen encoder and the matching translator.

    Returns (features, visual embeddings, translator params used).
    """
    if prompt.modality == MOTION:
        feats = encode_motion(prompt.payload, bundle.enc_cfg)
        return feats, translate_motion(feats, bundle.motion_translator), bundle.motion_translator
    # fixed keyframe budget: long clips are downsampled, short ones padded
    clip = downsample_keyframes(prompt.payload, bundle.video_frames)
    feats = encode_video(clip, bundle.enc_cfg)
    return feats, translate_video(feats, bundle.video_translator), bundle.video_translator


def sample_loss(bundle: ModelBundle, sample: InstructionSample) -> float:
    """Masked cross-entropy of one sample, no gradients."""
    _, vis, _ = encode_prompt(bundle, sample.prompt)
    seq = embed_with_visual(sample.prompt, vis, sample.response_tokens, bundle.lm, bundle.vocab)
    logits = forward(seq, bundle.lm, bundle.lora)
    loss, _ = loss_and_grad(logits, seq.token_ids, seq.loss_mask)
    return loss


def sample_loss_and_grads(
    bundle: ModelBundle, sample: InstructionSample
) -> tuple[float, dict[str, np.ndarray]]:
    """Forward and backward through the whole trainable pipeline.

    Encoders receive no gradient by construction; returned grads cover LM
    base tensors, LoRA tensors when attached, and the translator that
    carried this sample's modality.
    """
    feats, vis, tr = encode_prompt(bundle, sample.prompt)
    seq = embed_with_visual(sample.prompt, vis, sample.response_tokens, bundle.lm, bundle.vocab)
    logits, cache = forward(seq, bundle.lm, bundle.lora, want_cache=True)
    loss, dlogits = loss_and_grad(logits, seq.token_ids, seq.loss_mask)
    if not np.isfinite(loss):
        raise NumericError(f"non-finite loss on sample {sample.sample_id!r}")
    grads, d_vectors = backward(dlogits, cache, bundle.lm, bundle.lora)
    emb_grads, d_vis = sequence_param_grads(seq, d_vectors, bundle.lm)
    tr_grads, _ = translator_grads(tr, feats, d_vis)
    grads.update(emb_grads)
    grads.update(tr_grads)
    return loss, grads


def generate_reply(
    bundle: ModelBundle,
    prompt: Prompt,
    max_new: int = 32,
    strategy: str = "greedy",
    temperature: float = 1.0,
    seed: int = 0,
) -> tuple[str, GenerationResult]:
    """Generate a response for a prompt and detokenize it."""
    _, vis, _ = encode_prompt(bundle, prompt)
    result = generate(
        prompt,
        vis,
        bundle.lm,
        bundle.vocab,
        lora=bundle.lora,
        strategy=strategy,
        max_new=max_new,
        temperature=temperature,
        seed=seed,
    )
    return detokenize(result.ids, bundle.vocab), result
