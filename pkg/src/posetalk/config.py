"""Run configuration: a nested key-value file (YAML) validated with
precise dotted-path error locations, carrying paper-faithful training
defaults."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .adaptation import LoraSpec
from .core import Vocabulary
from .encoders import EncoderConfig
from .errors import ContractError
from .lm import LMConfig
from .training import StageConfig


class ConfigError(ContractError):
    """A config value failed validation; the message carries the key path."""


def _require(value, types, path: str, type_name: str):
    if isinstance(value, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
        raise ConfigError(f"{path}: expected {type_name}, got {value!r}")
    if not isinstance(value, types):
        raise ConfigError(f"{path}: expected {type_name}, got {value!r}")
    return value


def _as_int(value, path):
    return int(_require(value, int, path, "an integer"))

def _as_float(value, path):
    return float(_require(value, (int, float), path, "a number"))

def _as_str(value, path):
    return str(_require(value, str, path, "a string"))

def _as_map(value, path):
    return _require(value if value is not None else {}, dict, path, "a mapping")


def _check_keys(mapping: dict, allowed: set[str], path: str):
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}: unknown key")


@dataclass
class LMSettings:
    """LM shape without the vocab size (which comes from the corpus)."""

    d_lm: int = 64
    n_layers: int = 2
    n_heads: int = 4
    d_ff: int = 256
    max_len: int = 256
    init_std: float = 0.08

    def to_lm_config(self, vocab: Vocabulary) -> LMConfig:
        return LMConfig(
            vocab_size=len(vocab),
            d_lm=self.d_lm,
            n_layers=self.n_layers,
            n_heads=self.n_heads,
            d_ff=self.d_ff,
            max_len=self.max_len,
            init_std=self.init_std,
        )


@dataclass
class DataSettings:
    captions: int = 2000
    instructions: int = 2000
    bench: int = 300
    image_size: int = 32
    fps: float = 24.0


@dataclass
class JudgeSettings:
    endpoint: str = ""
    credential_env: str = "POSETALK_JUDGE_TOKEN"


@dataclass
class RunConfig:
    seed: int = 0
    video_frames: int = 8
    gen_max_new: int = 24
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    lm: LMSettings = field(default_factory=LMSettings)
    video_hidden: int | None = None
    lora: LoraSpec = field(default_factory=LoraSpec)
    stage1: StageConfig = field(default_factory=lambda: StageConfig(stage=1, steps=300))
    stage2: StageConfig = field(default_factory=lambda: StageConfig(stage=2, steps=300))
    data: DataSettings = field(default_factory=DataSettings)
    judge: JudgeSettings = field(default_factory=JudgeSettings)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        raw = _as_map(raw, "config")
        _check_keys(
            raw,
            {"seed", "video_frames", "gen_max_new", "encoder", "lm", "video_hidden",
             "lora", "stage1", "stage2", "data", "judge"},
            "config",
        )
        cfg = cls()
        if "seed" in raw:
            cfg.seed = _as_int(raw["seed"], "config.seed")
        if "video_frames" in raw:
            cfg.video_frames = _as_int(raw["video_frames"], "config.video_frames")
            if cfg.video_frames < 1:
                raise ConfigError("config.video_frames: must be >= 1")
        if "gen_max_new" in raw:
            cfg.gen_max_new = _as_int(raw["gen_max_new"], "config.gen_max_new")
        if "video_hidden" in raw and raw["video_hidden"] is not None:
            cfg.video_hidden = _as_int(raw["video_hidden"], "config.video_hidden")

        enc = _as_map(raw.get("encoder"), "config.encoder")
        _check_keys(enc, {"d_motion", "d_video", "motion_tokens", "patch_grid", "seed"}, "config.encoder")
        try:
            cfg.encoder = EncoderConfig(
                d_motion=_as_int(enc.get("d_motion", 64), "config.encoder.d_motion"),
                d_video=_as_int(enc.get("d_video", 64), "config.encoder.d_video"),
                motion_tokens=_as_int(enc.get("motion_tokens", 16), "config.encoder.motion_tokens"),
                patch_grid=_as_int(enc.get("patch_grid", 4), "config.encoder.patch_grid"),
                seed=_as_int(enc.get("seed", cfg.seed), "config.encoder.seed"),
            )
        except ContractError as exc:
            raise ConfigError(f"config.encoder: {exc}") from exc

        lm = _as_map(raw.get("lm"), "config.lm")
        _check_keys(lm, {"d_lm", "n_layers", "n_heads", "d_ff", "max_len", "init_std"}, "config.lm")
        cfg.lm = LMSettings(
            d_lm=_as_int(lm.get("d_lm", 64), "config.lm.d_lm"),
            n_layers=_as_int(lm.get("n_layers", 2), "config.lm.n_layers"),
            n_heads=_as_int(lm.get("n_heads", 4), "config.lm.n_heads"),
            d_ff=_as_int(lm.get("d_ff", 256), "config.lm.d_ff"),
            max_len=_as_int(lm.get("max_len", 256), "config.lm.max_len"),
            init_std=_as_float(lm.get("init_std", 0.08), "config.lm.init_std"),
        )
        if cfg.lm.d_lm % cfg.lm.n_heads != 0:
            raise ConfigError("config.lm.n_heads: d_lm must be divisible by n_heads")

        lora = _as_map(raw.get("lora"), "config.lora")
        _check_keys(lora, {"rank", "alpha", "targets"}, "config.lora")
        try:
            cfg.lora = LoraSpec(
                rank=_as_int(lora.get("rank", 4), "config.lora.rank"),
                alpha=_as_float(lora["alpha"], "config.lora.alpha") if "alpha" in lora else None,
                targets=tuple(lora.get("targets", ("wq", "wk", "wv", "wo"))),
            )
        except ContractError as exc:
            raise ConfigError(f"config.lora: {exc}") from exc

        for name, stage_no in (("stage1", 1), ("stage2", 2)):
            sec = _as_map(raw.get(name), f"config.{name}")
            _check_keys(
                sec,
                {"steps", "batch_size", "group_lrs", "mix_ratio", "seed", "grad_clip"},
                f"config.{name}",
            )
            lrs_raw = _as_map(sec.get("group_lrs"), f"config.{name}.group_lrs")
            lrs = {
                k: _as_float(v, f"config.{name}.group_lrs.{k}") for k, v in lrs_raw.items()
            }
            try:
                stage = StageConfig(
                    stage=stage_no,
                    steps=_as_int(sec.get("steps", 300), f"config.{name}.steps"),
                    batch_size=_as_int(sec.get("batch_size", 8), f"config.{name}.batch_size"),
                    group_lrs=lrs,
                    mix_ratio=_as_float(sec.get("mix_ratio", 0.5), f"config.{name}.mix_ratio"),
                    seed=_as_int(sec.get("seed", cfg.seed), f"config.{name}.seed"),
                    grad_clip=_as_float(sec.get("grad_clip", 1.0), f"config.{name}.grad_clip"),
                )
            except ContractError as exc:
                raise ConfigError(f"config.{name}: {exc}") from exc
            setattr(cfg, name, stage)

        data = _as_map(raw.get("data"), "config.data")
        _check_keys(data, {"captions", "instructions", "bench", "image_size", "fps"}, "config.data")
        cfg.data = DataSettings(
            captions=_as_int(data.get("captions", 2000), "config.data.captions"),
            instructions=_as_int(data.get("instructions", 2000), "config.data.instructions"),
            bench=_as_int(data.get("bench", 300), "config.data.bench"),
            image_size=_as_int(data.get("image_size", 32), "config.data.image_size"),
            fps=_as_float(data.get("fps", 24.0), "config.data.fps"),
        )
        if cfg.data.image_size < 8:
            raise ConfigError("config.data.image_size: must be >= 8")

        judge = _as_map(raw.get("judge"), "config.judge")
        _check_keys(judge, {"endpoint", "credential_env"}, "config.judge")
        cfg.judge = JudgeSettings(
            endpoint=_as_str(judge.get("endpoint", ""), "config.judge.endpoint"),
            credential_env=_as_str(
                judge.get("credential_env", "POSETALK_JUDGE_TOKEN"),
                "config.judge.credential_env",
            ),
        )
        return cfg

    @classmethod
    def from_yaml(cls, path: str | Path) -> "RunConfig":
        try:
            raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(raw or {})
