"""Low-rank adaptation of the LM attention projections and the stage-wise
trainability map.

LoRA adds a delta (alpha / rank) * B @ A to a frozen base matrix.  B starts
at zero, so a freshly adapted model is bit-identical to its base; merging
folds the delta into a copy of the base weights, never mutating them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ContractError

ATTN_TARGETS = ("wq", "wk", "wv", "wo")

DEFAULT_STAGE1_LRS = {"translators": 1e-3}
DEFAULT_STAGE2_LRS = {"translators": 2e-5, "lora": 2e-4}


@dataclass(frozen=True)
class LoraSpec:
    rank: int = 4
    alpha: float | None = None  # defaults to rank (unit scale)
    targets: tuple[str, ...] = ATTN_TARGETS

    def __post_init__(self):
        if self.rank < 1:
            raise ContractError("LoRA rank must be >= 1")
        if self.alpha is None:
            object.__setattr__(self, "alpha", float(self.rank))
        if self.alpha <= 0:
            raise ContractError("LoRA alpha must be positive")
        bad = [t for t in self.targets if t not in ATTN_TARGETS]
        if bad or not self.targets:
            raise ContractError(f"invalid LoRA targets: {bad or self.targets}")
        object.__setattr__(self, "targets", tuple(self.targets))

    @property
    def scaling(self) -> float:
        return self.alpha / self.rank


class LoraParams:
    """Per-target adapter factors, flat name -> ndarray."""

    def __init__(self, spec: LoraSpec, n_layers: int, tensors: dict[str, np.ndarray]):
        self.spec = spec
        self.n_layers = n_layers
        self.tensors = tensors

    @staticmethod
    def names(layer: int, target: str) -> tuple[str, str]:
        return (f"lora.layers.{layer}.{target}.a", f"lora.layers.{layer}.{target}.b")

    def has(self, layer: int, target: str) -> bool:
        return f"lora.layers.{layer}.{target}.a" in self.tensors

    @classmethod
    def init(cls, spec: LoraSpec, n_layers: int, d_lm: int, seed: int) -> "LoraParams":
        """A from scaled noise, B zero; the adapted model starts exactly at
        the base model."""
        if spec.rank > d_lm:
            warnings.warn(
                f"LoRA rank {spec.rank} exceeds the projection width {d_lm}; "
                "the delta is rank-deficient but well-defined",
                stacklevel=2,
            )
        rng = np.random.default_rng([seed, 501])
        tensors: dict[str, np.ndarray] = {}
        for i in range(n_layers):
            for target in spec.targets:
                a_name, b_name = cls.names(i, target)
                tensors[a_name] = rng.standard_normal((spec.rank, d_lm)) / np.sqrt(d_lm)
                tensors[b_name] = np.zeros((d_lm, spec.rank))
        return cls(spec, n_layers, tensors)


def effective_weight(
    base: np.ndarray,
    lora: LoraParams | None,
    layer: int,
    target: str,
) -> np.ndarray:
    """Base matrix with the LoRA delta applied (a view of base when no
    adapter covers this projection)."""
    if lora is None or not lora.has(layer, target):
        return base
    a_name, b_name = LoraParams.names(layer, target)
    return base + lora.spec.scaling * (lora.tensors[b_name] @ lora.tensors[a_name])


def apply_lora(
    base: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
    spec: LoraSpec,
    x: np.ndarray,
) -> np.ndarray:
    """y = W x + (alpha / rank) * B (A x); the base is never mutated."""
    if a.shape[1] != base.shape[1] or b.shape[0] != base.shape[0] or a.shape[0] != b.shape[1]:
        raise ContractError(
            f"LoRA factor shapes {a.shape}/{b.shape} do not fit base {base.shape}"
        )
    if x.shape[-1] != base.shape[1]:
        raise ContractError(f"input width {x.shape[-1]} does not match base {base.shape}")
    return x @ base.T + spec.scaling * ((x @ a.T) @ b.T)


def merge_lora(base: np.ndarray, a: np.ndarray, b: np.ndarray, spec: LoraSpec) -> np.ndarray:
    """W' = W + (alpha / rank) * B A, as a new array."""
    if a.shape[1] != base.shape[1] or b.shape[0] != base.shape[0]:
        raise ContractError(
            f"LoRA factor shapes {a.shape}/{b.shape} do not fit base {base.shape}"
        )
    return base + spec.scaling * (b @ a)


@dataclass
class ParamGroup:
    """A named set of parameter references sharing a trainability flag and
    step size."""

    name: str
    params: dict[str, np.ndarray]
    trainable: bool
    lr: float = 0.0

    def __post_init__(self):
        if self.trainable and self.lr <= 0:
            raise ContractError(f"trainable group {self.name!r} needs a positive lr")


def stage_param_groups(
    stage: int,
    translator_params: dict[str, np.ndarray],
    lm_tensors: dict[str, np.ndarray],
    lora: LoraParams | None,
    group_lrs: dict[str, float] | None = None,
) -> list[ParamGroup]:
    """Trainability map for the two training phases.

    Stage 1 trains only the translators; stage 2 trains translators and
    LoRA at their own rates.  The LM base is always frozen, and the
    encoders contribute no parameters at all.
    """
    if stage == 1:
        lrs = dict(DEFAULT_STAGE1_LRS)
        lrs.update(group_lrs or {})
        return [
            ParamGroup("translators", dict(translator_params), True, lrs["translators"]),
            ParamGroup("lm_base", dict(lm_tensors), False),
        ]
    if stage == 2:
        if lora is None:
            raise ContractError("stage 2 requires LoRA parameters")
        lrs = dict(DEFAULT_STAGE2_LRS)
        lrs.update(group_lrs or {})
        return [
            ParamGroup("translators", dict(translator_params), True, lrs["translators"]),
            ParamGroup("lora", dict(lora.tensors), True, lrs["lora"]),
            ParamGroup("lm_base", dict(lm_tensors), False),
        ]
    raise ContractError(f"unknown training stage: {stage!r}")
