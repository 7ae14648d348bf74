"""Dataset records and their on-disk formats.

Records live in line-delimited JSON; motion and video payloads are flat
binary tensor files with a small header (magic, version, dtype code, rank,
dims, little-endian data).  Paired records of one script share one payload
pair.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core import (
    CATEGORIES,
    MODALITIES,
    MOTION,
    InstructionSample,
    MotionSequence,
    VideoClip,
    Vocabulary,
    build_prompt,
    tokenize,
)
from ..errors import ContractError, DatasetFormatError, PayloadResolutionError
from .scripts import CompositeScript

_TENSOR_MAGIC = b"PTTN"
_TENSOR_VERSION = 1
_DTYPE_CODES = {1: "<f4", 2: "<f8", 3: "|u1", 4: "<i8"}
_CODE_FOR = {np.dtype("float32"): 1, np.dtype("float64"): 2, np.dtype("uint8"): 3, np.dtype("int64"): 4}


def save_tensor(path: str | Path, arr: np.ndarray) -> None:
    arr = np.ascontiguousarray(arr)
    code = _CODE_FOR.get(arr.dtype)
    if code is None:
        raise ContractError(f"unsupported payload dtype {arr.dtype}")
    header = _TENSOR_MAGIC + struct.pack("<BBB", _TENSOR_VERSION, code, arr.ndim)
    dims = struct.pack(f"<{arr.ndim}Q", *arr.shape)
    Path(path).write_bytes(header + dims + arr.astype(_DTYPE_CODES[code]).tobytes())


def load_tensor(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 7 or raw[:4] != _TENSOR_MAGIC:
        raise DatasetFormatError(f"{path}: not a payload tensor file")
    version, code, rank = struct.unpack("<BBB", raw[4:7])
    if version != _TENSOR_VERSION or code not in _DTYPE_CODES:
        raise DatasetFormatError(f"{path}: unsupported tensor version/dtype")
    dims = struct.unpack(f"<{rank}Q", raw[7: 7 + 8 * rank])
    data = np.frombuffer(raw[7 + 8 * rank:], dtype=_DTYPE_CODES[code])
    expected = int(np.prod(dims)) if rank else 1
    if data.size != expected:
        raise DatasetFormatError(f"{path}: payload size does not match header dims")
    return data.reshape(dims).copy()


@dataclass(frozen=True)
class DatasetRecord:
    """One training/bench row; ``script`` keeps the generating ground truth
    so gold answers stay machine-checkable."""

    record_id: str
    modality: str
    category: str
    instruction: str
    response: str
    motion_file: str
    video_file: str
    script: CompositeScript
    options: tuple[str, ...] | None = None
    fps: float = 24.0

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ContractError(f"unknown modality: {self.modality!r}")
        if self.category not in CATEGORIES:
            raise ContractError(f"unknown category: {self.category!r}")

    def to_json_obj(self) -> dict:
        obj = {
            "id": self.record_id,
            "modality": self.modality,
            "category": self.category,
            "instruction": self.instruction,
            "response": self.response,
            "motion_file": self.motion_file,
            "video_file": self.video_file,
            "script": self.script.to_list(),
            "fps": self.fps,
        }
        if self.options is not None:
            obj["options"] = list(self.options)
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict) -> "DatasetRecord":
        return cls(
            record_id=obj["id"],
            modality=obj["modality"],
            category=obj["category"],
            instruction=obj["instruction"],
            response=obj["response"],
            motion_file=obj["motion_file"],
            video_file=obj["video_file"],
            script=CompositeScript.from_list(obj["script"]),
            options=tuple(obj["options"]) if "options" in obj else None,
            fps=obj.get("fps", 24.0),
        )


def write_dataset(records: list[DatasetRecord], path: str | Path) -> None:
    lines = [
        json.dumps(r.to_json_obj(), sort_keys=True, separators=(",", ":"))
        for r in records
    ]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def read_dataset(path: str | Path) -> list[DatasetRecord]:
    records = []
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            records.append(DatasetRecord.from_json_obj(json.loads(line)))
        except (json.JSONDecodeError, KeyError, ContractError) as exc:
            raise DatasetFormatError(f"{path}: bad record on line {n}: {exc}", line_number=n) from exc
    return records


def payload_path(record: DatasetRecord, base_dir: str | Path) -> Path:
    name = record.motion_file if record.modality == MOTION else record.video_file
    if not name:
        raise PayloadResolutionError(
            f"record {record.record_id} has no {record.modality} payload reference"
        )
    return Path(base_dir) / name


def load_payload(record: DatasetRecord, base_dir: str | Path):
    """The payload matching the record's modality; a missing or mismatched
    file is a resolution error."""
    path = payload_path(record, base_dir)
    if not path.is_file():
        raise PayloadResolutionError(f"record {record.record_id}: missing payload {path}")
    arr = load_tensor(path)
    if record.modality == MOTION:
        if arr.ndim != 3:
            raise PayloadResolutionError(
                f"record {record.record_id}: expected a motion tensor, got shape {arr.shape}"
            )
        return MotionSequence(frames=arr.astype(np.float64), fps=record.fps)
    if arr.ndim != 4:
        raise PayloadResolutionError(
            f"record {record.record_id}: expected a video tensor, got shape {arr.shape}"
        )
    return VideoClip(frames=arr)


def record_to_sample(record: DatasetRecord, vocab: Vocabulary, base_dir: str | Path) -> InstructionSample:
    payload = load_payload(record, base_dir)
    prompt = build_prompt(record.instruction, record.modality, payload, vocab)
    response = (*tokenize(record.response, vocab), vocab.eos_id)
    return InstructionSample(
        prompt=prompt,
        response_tokens=response,
        category=record.category,
        sample_id=record.record_id,
    )
