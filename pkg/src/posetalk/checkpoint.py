"""Single-file sectioned checkpoint container.

Layout: magic, format version, content digest, then a JSON header (config
snapshot, step counters, vocabulary, tensor index) followed by raw
little-endian tensor payloads in index order.  The digest covers header
and payload, so any tampered byte is detected on load.  LM base weights
are not stored; they are reproducible from the config snapshot's seed and
are referenced by digest instead.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CheckpointCorruptError, ContractError

_MAGIC = b"PTCK"
_FORMAT_VERSION = 1

_DTYPES = {"float64": "<f8", "float32": "<f4", "int64": "<i8", "uint8": "|u1"}


def tensor_dict_digest(tensors: dict[str, np.ndarray]) -> str:
    """Order-independent digest of a named tensor set."""
    h = hashlib.sha256()
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name])
        h.update(name.encode("utf-8"))
        h.update(str(arr.dtype).encode())
        h.update(str(arr.shape).encode())
        h.update(arr.tobytes())
    return h.hexdigest()


@dataclass
class Checkpoint:
    """Trainable state plus enough metadata to rebuild the frozen parts."""

    config: dict
    step: int
    vocab_tokens: list[str]
    lm_base_digest: str
    tensors: dict[str, np.ndarray]
    opt_step: int = 0
    extra: dict = field(default_factory=dict)


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> None:
    names = sorted(ckpt.tensors)
    index = []
    blobs = []
    for name in names:
        arr = np.ascontiguousarray(ckpt.tensors[name])
        dtype = str(arr.dtype)
        if dtype not in _DTYPES:
            raise ContractError(f"unsupported tensor dtype {dtype} for {name}")
        data = arr.astype(_DTYPES[dtype]).tobytes()
        index.append({"name": name, "dtype": dtype, "shape": list(arr.shape), "nbytes": len(data)})
        blobs.append(data)
    header = json.dumps(
        {
            "format_version": _FORMAT_VERSION,
            "config": ckpt.config,
            "step": ckpt.step,
            "opt_step": ckpt.opt_step,
            "vocab": ckpt.vocab_tokens,
            "lm_base_digest": ckpt.lm_base_digest,
            "extra": ckpt.extra,
            "tensors": index,
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    payload = struct.pack("<Q", len(header)) + header + b"".join(blobs)
    digest = hashlib.sha256(payload).digest()
    Path(path).write_bytes(_MAGIC + struct.pack("<I", _FORMAT_VERSION) + digest + payload)


def load_checkpoint(path: str | Path) -> Checkpoint:
    raw = Path(path).read_bytes()
    if len(raw) < 48 or raw[:4] != _MAGIC:
        raise CheckpointCorruptError(f"{path}: not a checkpoint file")
    version = struct.unpack("<I", raw[4:8])[0]
    if version != _FORMAT_VERSION:
        raise CheckpointCorruptError(f"{path}: unsupported format version {version}")
    digest, payload = raw[8:40], raw[40:]
    if hashlib.sha256(payload).digest() != digest:
        raise CheckpointCorruptError(f"{path}: content digest mismatch")
    header_len = struct.unpack("<Q", payload[:8])[0]
    header = json.loads(payload[8: 8 + header_len].decode("utf-8"))
    tensors: dict[str, np.ndarray] = {}
    offset = 8 + header_len
    for entry in header["tensors"]:
        nbytes = entry["nbytes"]
        arr = np.frombuffer(payload[offset: offset + nbytes], dtype=_DTYPES[entry["dtype"]])
        tensors[entry["name"]] = arr.reshape(entry["shape"]).astype(entry["dtype"]).copy()
        offset += nbytes
    if offset != len(payload):
        raise CheckpointCorruptError(f"{path}: trailing bytes after tensor payload")
    return Checkpoint(
        config=header["config"],
        step=header["step"],
        vocab_tokens=list(header["vocab"]),
        lm_base_digest=header["lm_base_digest"],
        tensors=tensors,
        opt_step=header.get("opt_step", 0),
        extra=header.get("extra", {}),
    )
