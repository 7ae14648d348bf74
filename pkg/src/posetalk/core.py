"""Domain types, the closed-world word tokenizer, and prompt templating.

Token sequences are plain ``list[int]`` / ``tuple[int, ...]`` of vocabulary
ids.  Payload containers copy their arrays at construction and mark them
read-only, so every type in this module can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractError, TokenError

MOTION = "motion"
VIDEO = "video"
MODALITIES = (MOTION, VIDEO)

# Sample categories: "caption" is stage-1 data, the rest are QA styles.
CATEGORIES = (
    "caption",
    "sequentiality",
    "direction",
    "body-part",
    "reasoning",
    "hallucination",
    "multiple-choice",
)

PAD_TOKEN = "<pad>"
BOS_TOKEN = "<bos>"
EOS_TOKEN = "<eos>"
UNK_TOKEN = "<unk>"
VIS_TOKEN = "<vis>"
SPECIAL_TOKENS = (PAD_TOKEN, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN, VIS_TOKEN)


@dataclass(frozen=True)
class Vocabulary:
    """Dense token-string -> id map with five reserved special ids.

    Ids are dense in ``[0, size)``; the specials always occupy ids 0..4 in
    the order pad, bos, eos, unk, vis.
    """

    token_to_id: dict[str, int]
    id_to_token: tuple[str, ...]

    @classmethod
    def from_words(cls, words: list[str] | tuple[str, ...]) -> "Vocabulary":
        """Build a vocabulary from regular words; specials are prepended.

        Duplicate words are dropped (first occurrence wins) and words
        colliding with special-token strings are rejected.
        """
        id_to_token = list(SPECIAL_TOKENS)
        seen = set(SPECIAL_TOKENS)
        for w in words:
            if not w or w != w.strip():
                raise ContractError(f"invalid vocabulary word: {w!r}")
            if w in seen:
                if w in SPECIAL_TOKENS:
                    raise ContractError(f"word collides with special token: {w!r}")
                continue
            seen.add(w)
            id_to_token.append(w)
        token_to_id = {t: i for i, t in enumerate(id_to_token)}
        return cls(token_to_id=token_to_id, id_to_token=tuple(id_to_token))

    def __len__(self) -> int:
        return len(self.id_to_token)

    @property
    def pad_id(self) -> int:
        return 0

    @property
    def bos_id(self) -> int:
        return 1

    @property
    def eos_id(self) -> int:
        return 2

    @property
    def unk_id(self) -> int:
        return 3

    @property
    def vis_id(self) -> int:
        return 4

    @property
    def special_ids(self) -> tuple[int, ...]:
        return (0, 1, 2, 3, 4)

    def save(self, path: str | Path) -> None:
        """Write line-delimited ``token<TAB>id`` text, specials first."""
        lines = [f"{tok}\t{i}" for i, tok in enumerate(self.id_to_token)]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        id_to_token: list[str] = []
        for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line:
                continue
            try:
                tok, raw_id = line.split("\t")
            except ValueError as exc:
                raise TokenError(f"vocabulary line {n} malformed: {line!r}") from exc
            if int(raw_id) != len(id_to_token):
                raise TokenError(f"vocabulary ids not dense at line {n}")
            id_to_token.append(tok)
        if tuple(id_to_token[:5]) != SPECIAL_TOKENS:
            raise TokenError("vocabulary file does not start with the special tokens")
        return cls(
            token_to_id={t: i for i, t in enumerate(id_to_token)},
            id_to_token=tuple(id_to_token),
        )


@dataclass(frozen=True)
class MotionSequence:
    """F pose frames of a J-joint 3-D skeleton, meters, origin at the
    initial root position."""

    frames: np.ndarray  # (F, J, 3) float64
    fps: float

    def __post_init__(self):
        arr = np.array(self.frames, dtype=np.float64, copy=True)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ContractError(f"motion frames must be (F, J, 3), got {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 2:
            raise ContractError("motion needs F >= 1 frames and J >= 2 joints")
        if not np.all(np.isfinite(arr)):
            raise ContractError("motion contains non-finite coordinates")
        if self.fps <= 0:
            raise ContractError("fps must be positive")
        arr.setflags(write=False)
        object.__setattr__(self, "frames", arr)

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def num_joints(self) -> int:
        return self.frames.shape[1]


@dataclass(frozen=True)
class VideoClip:
    """T raster keyframes, uint8 channel values, C = 1 or 3."""

    frames: np.ndarray  # (T, H, W, C) uint8

    def __post_init__(self):
        arr = np.array(self.frames, copy=True)
        if arr.ndim != 4:
            raise ContractError(f"video frames must be (T, H, W, C), got {arr.shape}")
        t, h, w, c = arr.shape
        if t < 1 or h < 8 or w < 8:
            raise ContractError("video needs T >= 1 and H, W >= 8")
        if c not in (1, 3):
            raise ContractError(f"video channel count must be 1 or 3, got {c}")
        if arr.dtype != np.uint8:
            if np.issubdtype(arr.dtype, np.integer) and arr.min() >= 0 and arr.max() <= 255:
                arr = arr.astype(np.uint8)
            else:
                raise ContractError("video values must be integers in [0, 255]")
        arr.setflags(write=False)
        object.__setattr__(self, "frames", arr)

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]


@dataclass(frozen=True)
class Prompt:
    """A tokenized instruction with exactly one visual placeholder plus the
    visual payload it refers to."""

    modality: str
    instruction_tokens: tuple[int, ...]
    payload: MotionSequence | VideoClip

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ContractError(f"unknown modality: {self.modality!r}")
        expected = MotionSequence if self.modality == MOTION else VideoClip
        if not isinstance(self.payload, expected):
            raise ContractError(
                f"payload type {type(self.payload).__name__} does not match "
                f"modality {self.modality!r}"
            )
        vis_count = sum(1 for t in self.instruction_tokens if t == 4)
        if vis_count != 1:
            raise ContractError(f"prompt must contain exactly one VIS token, found {vis_count}")
        object.__setattr__(self, "instruction_tokens", tuple(int(t) for t in self.instruction_tokens))


@dataclass(frozen=True)
class InstructionSample:
    """One (prompt, response) pair; the unit of training and benchmarking."""

    prompt: Prompt
    response_tokens: tuple[int, ...]
    category: str
    sample_id: str = ""

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ContractError(f"unknown category: {self.category!r}")
        toks = tuple(int(t) for t in self.response_tokens)
        if not toks or toks[-1] != 2:
            raise ContractError("response must end with EOS")
        if 4 in toks:
            raise ContractError("response must not contain VIS")
        object.__setattr__(self, "response_tokens", toks)


def normalize_text(text: str) -> list[str]:
    """Lowercase and split on whitespace; the whole normalization step."""
    return text.lower().split()


def tokenize(text: str, vocab: Vocabulary) -> list[int]:
    """Map text to ids; unknown words become UNK.  Total function."""
    return [vocab.token_to_id.get(w, vocab.unk_id) for w in normalize_text(text)]


def detokenize(seq: list[int] | tuple[int, ...], vocab: Vocabulary) -> str:
    """Join tokens with single spaces, dropping specials other than UNK."""
    words = []
    for t in seq:
        t = int(t)
        if t < 0 or t >= len(vocab):
            raise TokenError(f"token id {t} outside vocabulary of size {len(vocab)}")
        if t in vocab.special_ids and t != vocab.unk_id:
            continue
        words.append(vocab.id_to_token[t])
    return " ".join(words)


def build_prompt(
    instruction: str,
    modality: str,
    payload: MotionSequence | VideoClip,
    vocab: Vocabulary,
) -> Prompt:
    """Assemble ``[BOS, VIS, instruction tokens]``; the visual block always
    precedes the instruction text."""
    if not instruction.strip():
        raise ContractError("instruction must be non-empty")
    tokens = (vocab.bos_id, vocab.vis_id, *tokenize(instruction, vocab))
    return Prompt(modality=modality, instruction_tokens=tokens, payload=payload)
