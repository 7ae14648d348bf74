"""Two-stage training: stage-1 vision-language alignment (translators only)
and stage-2 joint instruction tuning (translators + LoRA), with Adam-style
updates, global gradient clipping, seeded resumable batch streams, and
checkpointing."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adaptation import (
    DEFAULT_STAGE1_LRS,
    DEFAULT_STAGE2_LRS,
    LoraSpec,
    ParamGroup,
    stage_param_groups,
)
from .checkpoint import Checkpoint, tensor_dict_digest
from .core import InstructionSample, Vocabulary
from .encoders import EncoderConfig
from .errors import CheckpointCorruptError, ContractError, NumericError
from .lm import LMConfig
from .pipeline import ModelBundle, build_bundle, sample_loss_and_grads

_STAGE1_STREAM = 71
_STAGE2_STREAM = 72


@dataclass
class StageConfig:
    """Knobs of one training phase.  ``mix_ratio`` is the motion-sample
    fraction and only matters for stage 2."""

    stage: int
    steps: int = 200
    batch_size: int = 8
    group_lrs: dict[str, float] = field(default_factory=dict)
    mix_ratio: float = 0.5
    seed: int = 0
    grad_clip: float = 1.0

    def __post_init__(self):
        if self.stage not in (1, 2):
            raise ContractError(f"unknown stage: {self.stage!r}")
        if self.steps < 0:
            raise ContractError("steps must be >= 0")
        if self.batch_size < 1:
            raise ContractError("batch_size must be >= 1")
        if not 0.0 <= self.mix_ratio <= 1.0:
            raise ContractError("mix_ratio must lie in [0, 1]")
        if self.grad_clip <= 0:
            raise ContractError("grad_clip must be positive")
        defaults = DEFAULT_STAGE1_LRS if self.stage == 1 else DEFAULT_STAGE2_LRS
        merged = dict(defaults)
        merged.update(self.group_lrs)
        if any(lr <= 0 for lr in merged.values()):
            raise ContractError("learning rates must be positive")
        self.group_lrs = merged


class OptimizerState:
    """Adam accumulators for the trainable tensors."""

    def __init__(self, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    @classmethod
    def for_groups(cls, groups: list[ParamGroup]) -> "OptimizerState":
        state = cls()
        for g in groups:
            if not g.trainable:
                continue
            for name, p in g.params.items():
                state.m[name] = np.zeros_like(p)
                state.v[name] = np.zeros_like(p)
        return state

    def update(self, groups: list[ParamGroup], grads: dict[str, np.ndarray]) -> None:
        self.step += 1
        bc1 = 1.0 - self.beta1**self.step
        bc2 = 1.0 - self.beta2**self.step
        for g in groups:
            if not g.trainable:
                continue
            for name, p in g.params.items():
                grad = grads[name]
                m = self.m[name]
                v = self.v[name]
                m *= self.beta1
                m += (1.0 - self.beta1) * grad
                v *= self.beta2
                v += (1.0 - self.beta2) * grad * grad
                p -= g.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)

    def tensors(self) -> dict[str, np.ndarray]:
        out = {f"opt.m.{k}": v for k, v in self.m.items()}
        out.update({f"opt.v.{k}": v for k, v in self.v.items()})
        return out


def clip_global_norm(grads: dict[str, np.ndarray], names: list[str], max_norm: float) -> float:
    """Scale the named gradients in place so their global norm is at most
    ``max_norm``; returns the pre-clip norm."""
    total = 0.0
    for name in names:
        g = grads[name]
        total += float((g * g).sum())
    norm = float(np.sqrt(total))
    if norm > max_norm:
        scale = max_norm / norm
        for name in names:
            grads[name] *= scale
    return norm


def training_step(
    batch: list[InstructionSample],
    bundle: ModelBundle,
    groups: list[ParamGroup],
    opt: OptimizerState,
    grad_clip: float = 1.0,
) -> float:
    """One optimization step over a batch: mean sample loss, mean gradients
    on the trainable groups, global-norm clip, Adam update."""
    if not batch:
        raise ContractError("training batch must be non-empty")
    trainable = [name for g in groups if g.trainable for name in g.params]
    acc = {name: None for name in trainable}
    losses = []
    for sample in batch:
        loss, grads = sample_loss_and_grads(bundle, sample)
        losses.append(loss)
        for name in trainable:
            if name not in grads:
                continue
            if acc[name] is None:
                acc[name] = grads[name].copy()
            else:
                acc[name] += grads[name]
    batch_loss = float(np.mean(losses))
    if not np.isfinite(batch_loss):
        ids = [s.sample_id for s in batch]
        raise NumericError(f"non-finite loss at optimizer step {opt.step + 1}: samples {ids}")
    scale = 1.0 / len(batch)
    mean_grads = {}
    for g in groups:
        if not g.trainable:
            continue
        for name, p in g.params.items():
            mean_grads[name] = acc[name] * scale if acc[name] is not None else np.zeros_like(p)
    clip_global_norm(mean_grads, trainable, grad_clip)
    opt.update(groups, mean_grads)
    return batch_loss


def uniform_batches(
    samples: list[InstructionSample],
    batch_size: int,
    seed: int,
    start_step: int,
    end_step: int,
):
    """Seeded uniform-with-replacement batch stream, reproducible per step."""
    for step in range(start_step, end_step + 1):
        rng = np.random.default_rng([seed, _STAGE1_STREAM, step])
        idx = rng.integers(0, len(samples), size=batch_size)
        yield step, [samples[i] for i in idx]


def mix_batches(
    motion_samples: list[InstructionSample],
    video_samples: list[InstructionSample],
    ratio: float,
    seed: int,
    batch_size: int = 8,
    start_step: int = 1,
    end_step: int = 1,
):
    """Stage-2 batch stream: each slot picks the modality by a seeded coin
    with P(motion) = ratio, then a uniform sample of that modality."""
    if not 0.0 <= ratio <= 1.0:
        raise ContractError("mix ratio must lie in [0, 1]")
    if ratio > 0.0 and not motion_samples:
        raise ContractError("mix ratio > 0 requires motion samples")
    if ratio < 1.0 and not video_samples:
        raise ContractError("mix ratio < 1 requires video samples")
    for step in range(start_step, end_step + 1):
        rng = np.random.default_rng([seed, _STAGE2_STREAM, step])
        batch = []
        for _ in range(batch_size):
            if rng.random() < ratio:
                batch.append(motion_samples[int(rng.integers(0, len(motion_samples)))])
            else:
                batch.append(video_samples[int(rng.integers(0, len(video_samples)))])
        yield step, batch


class LossLog:
    """Plain-text, diff-friendly step/loss log."""

    def __init__(self, path: str | Path | None, stage: int, groups: list[ParamGroup], append: bool = False):
        self.path = Path(path) if path else None
        self.lines: list[str] = []
        if self.path and not append:
            header = [f"# posetalk stage {stage} loss log"]
            for g in groups:
                if g.trainable:
                    header.append(f"# group {g.name} lr={g.lr:g}")
            header.append("# step\tloss")
            self.path.write_text("\n".join(header) + "\n", encoding="utf-8")

    def record(self, step: int, loss: float) -> None:
        line = f"{step}\t{loss:.6f}"
        self.lines.append(line)
        if self.path:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")


def make_checkpoint(bundle: ModelBundle, opt: OptimizerState | None, step: int) -> Checkpoint:
    tensors = dict(bundle.translator_params())
    if bundle.lora is not None:
        tensors.update(bundle.lora.tensors)
    if opt is not None:
        tensors.update(opt.tensors())
    return Checkpoint(
        config=bundle.config_snapshot(),
        step=step,
        vocab_tokens=list(bundle.vocab.id_to_token),
        lm_base_digest=tensor_dict_digest(bundle.lm.tensors),
        tensors={k: v.copy() for k, v in tensors.items()},
        opt_step=opt.step if opt else 0,
    )


def restore_into_bundle(bundle: ModelBundle, ckpt: Checkpoint) -> None:
    """Copy translator (and LoRA) tensors from a checkpoint into a bundle
    built from the same config/seed."""
    if ckpt.lm_base_digest != tensor_dict_digest(bundle.lm.tensors):
        raise CheckpointCorruptError("checkpoint references a different base LM")
    if ckpt.vocab_tokens != list(bundle.vocab.id_to_token):
        raise CheckpointCorruptError("checkpoint vocabulary does not match")
    targets = bundle.translator_params()
    if any(name.startswith("lora.") for name in ckpt.tensors):
        bundle.attach_lora()
        targets.update(bundle.lora.tensors)
    for name, arr in targets.items():
        if name in ckpt.tensors:
            arr[...] = ckpt.tensors[name]


def restore_optimizer(opt: OptimizerState, ckpt: Checkpoint) -> None:
    for name in opt.m:
        m_key, v_key = f"opt.m.{name}", f"opt.v.{name}"
        if m_key in ckpt.tensors:
            opt.m[name][...] = ckpt.tensors[m_key]
            opt.v[name][...] = ckpt.tensors[v_key]
    opt.step = ckpt.opt_step


def bundle_from_checkpoint(ckpt: Checkpoint) -> ModelBundle:
    """Rebuild the full bundle: frozen parts from the config snapshot's
    seed, trainable parts from the checkpoint tensors."""
    cfg = ckpt.config
    vocab = Vocabulary(
        token_to_id={t: i for i, t in enumerate(ckpt.vocab_tokens)},
        id_to_token=tuple(ckpt.vocab_tokens),
    )
    bundle = build_bundle(
        vocab,
        seed=cfg["seed"],
        enc_cfg=EncoderConfig(**cfg["encoder"]),
        lm_cfg=LMConfig(**cfg["lm"]),
        lora_spec=LoraSpec(
            rank=cfg["lora"]["rank"],
            alpha=cfg["lora"]["alpha"],
            targets=tuple(cfg["lora"]["targets"]),
        ),
        video_hidden=cfg["video_hidden"],
        video_frames=cfg["video_frames"],
        video_activation=cfg["video_activation"],
    )
    restore_into_bundle(bundle, ckpt)
    return bundle


def _run_stage(
    bundle: ModelBundle,
    batches,
    groups: list[ParamGroup],
    opt: OptimizerState,
    cfg: StageConfig,
    log: LossLog,
) -> int:
    last_step = 0
    for step, batch in batches:
        loss = training_step(batch, bundle, groups, opt, cfg.grad_clip)
        log.record(step, loss)
        last_step = step
    return last_step


def train_stage1(
    bundle: ModelBundle,
    caption_samples: list[InstructionSample],
    cfg: StageConfig,
    log_path: str | Path | None = None,
    resume_from: Checkpoint | None = None,
) -> Checkpoint:
    """Alignment phase: only the translators move; encoders and the LM stay
    frozen."""
    if cfg.stage != 1:
        raise ContractError("train_stage1 requires a stage-1 config")
    if not caption_samples:
        raise ContractError("stage-1 dataset is empty")
    groups = stage_param_groups(
        1, bundle.translator_params(), bundle.lm.tensors, None, cfg.group_lrs
    )
    opt = OptimizerState.for_groups(groups)
    start = 1
    if resume_from is not None:
        restore_into_bundle(bundle, resume_from)
        restore_optimizer(opt, resume_from)
        start = resume_from.step + 1
    log = LossLog(log_path, 1, groups, append=resume_from is not None)
    batches = uniform_batches(caption_samples, cfg.batch_size, cfg.seed, start, cfg.steps)
    last = _run_stage(bundle, batches, groups, opt, cfg, log)
    return make_checkpoint(bundle, opt, max(last, start - 1))


def train_stage2(
    bundle: ModelBundle,
    motion_samples: list[InstructionSample],
    video_samples: list[InstructionSample],
    cfg: StageConfig,
    stage1_ckpt: Checkpoint | None,
    log_path: str | Path | None = None,
    resume_from: Checkpoint | None = None,
) -> Checkpoint:
    """Joint instruction tuning: warm-start translators from stage 1, attach
    zero-init LoRA, and draw modality-mixed batches."""
    if cfg.stage != 2:
        raise ContractError("train_stage2 requires a stage-2 config")
    if resume_from is None:
        if stage1_ckpt is None:
            raise ContractError("stage 2 requires a stage-1 checkpoint")
        restore_into_bundle(bundle, stage1_ckpt)
    bundle.attach_lora()
    groups = stage_param_groups(
        2, bundle.translator_params(), bundle.lm.tensors, bundle.lora, cfg.group_lrs
    )
    opt = OptimizerState.for_groups(groups)
    start = 1
    if resume_from is not None:
        restore_into_bundle(bundle, resume_from)
        restore_optimizer(opt, resume_from)
        start = resume_from.step + 1
    log = LossLog(log_path, 2, groups, append=resume_from is not None)
    batches = mix_batches(
        motion_samples,
        video_samples,
        cfg.mix_ratio,
        cfg.seed,
        cfg.batch_size,
        start_step=start,
        end_step=cfg.steps,
    )
    last = _run_stage(bundle, batches, groups, opt, cfg, log)
    return make_checkpoint(bundle, opt, max(last, start - 1))
