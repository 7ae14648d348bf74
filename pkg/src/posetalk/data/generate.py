"""Synthetic corpus builders: stage-1 captions, stage-2 instruction QA, and
held-out bench items, plus the on-disk corpus layout with a manifest.

Captions are built once per script and attached to both the motion record
and the video record of that script, so the two modalities stay textually
aligned by construction.  Motion payloads are quantized to float32 before
rendering, so a reloaded motion re-renders byte-identically to its stored
video.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from ..core import MOTION, VIDEO, MotionSequence
from ..errors import ContractError
from .records import DatasetRecord, save_tensor, write_dataset
from .render import render_stick_figure
from .scripts import CompositeScript, random_qa_script, random_script
from .synth import synth_motion
from .templates import (
    CAPTION_INSTRUCTIONS,
    body_part_qa,
    caption_text,
    direction_qa,
    hallucination_qa,
    in_context_mc_instruction,
    intent_mc,
    mc_prompt_text,
    sequentiality_qa,
)

QA_CATEGORIES = (
    "sequentiality",
    "direction",
    "body-part",
    "reasoning",
    "hallucination",
    "multiple-choice",
)
BENCH_CATEGORIES = ("sequentiality", "direction", "body-part", "reasoning", "hallucination")

PayloadMap = dict[str, tuple[MotionSequence, "object"]]


def _make_payload(script: CompositeScript, seed: int, fps: float, image_size: int):
    """Synthesize motion, quantize to float32 (the storage precision), and
    render the paired video from the quantized motion."""
    raw = synth_motion(script, fps=fps, seed=seed)
    quantized = raw.frames.astype(np.float32)
    motion = MotionSequence(frames=quantized.astype(np.float64), fps=fps)
    video = render_stick_figure(motion, image_size, image_size)
    return motion, video


def _payload_files(key: str) -> tuple[str, str]:
    return f"payloads/m_{key}.ptt", f"payloads/v_{key}.ptt"


def build_caption_dataset(
    n: int, seed: int, image_size: int = 32, fps: float = 24.0
) -> tuple[list[DatasetRecord], PayloadMap]:
    """n caption records, alternating motion/video, both modalities of one
    script sharing one caption."""
    if n < 1:
        raise ContractError("caption dataset needs n >= 1")
    records: list[DatasetRecord] = []
    payloads: PayloadMap = {}
    n_scripts = (n + 1) // 2
    for g in range(n_scripts):
        rng = np.random.default_rng([seed, 61, g])
        script = random_script(rng)
        key = f"cap{g:06d}"
        payloads[key] = _make_payload(script, int(rng.integers(0, 2**31)), fps, image_size)
        motion_file, video_file = _payload_files(key)
        instruction = CAPTION_INSTRUCTIONS[int(rng.integers(0, len(CAPTION_INSTRUCTIONS)))]
        caption = caption_text(script)
        for modality in (MOTION, VIDEO):
            if len(records) >= n:
                break
            records.append(
                DatasetRecord(
                    record_id=f"cap-{len(records):06d}",
                    modality=modality,
                    category="caption",
                    instruction=instruction,
                    response=caption,
                    motion_file=motion_file,
                    video_file=video_file,
                    script=script,
                    fps=fps,
                )
            )
    return records, payloads


def _build_qa(category: str, script: CompositeScript, rng: np.random.Generator):
    """(instruction, response, options) for one QA category."""
    if category == "sequentiality":
        q, a = sequentiality_qa(script, rng)
        return q, a, None
    if category == "direction":
        q, a = direction_qa(script, rng)
        return q, a, None
    if category == "body-part":
        q, a = body_part_qa(script, rng)
        return q, a, None
    if category == "hallucination":
        q, a = hallucination_qa(script, rng)
        return q, a, None
    if category == "reasoning":
        prim = script.primitives[int(rng.integers(0, len(script.primitives)))]
        q, options, label = intent_mc(prim, rng)
        response = f"{label.lower()}) {options['ABC'.index(label)]}"
        return mc_prompt_text(q, options), response, tuple(options)
    if category == "multiple-choice":
        # in-context style: one solved intent question precedes a fresh one
        idx = rng.choice(len(script.primitives), size=2, replace=False)
        ex_q, ex_opts, ex_label = intent_mc(script.primitives[int(idx[0])], rng)
        q, options, label = intent_mc(script.primitives[int(idx[1])], rng)
        instruction = in_context_mc_instruction(
            ex_q, ex_opts, ex_label, ex_opts["ABC".index(ex_label)], q, options
        )
        response = f"{label.lower()}) {options['ABC'.index(label)]}"
        return instruction, response, tuple(options)
    raise ContractError(f"unknown QA category: {category!r}")


def build_instruction_dataset(
    n: int,
    seed: int,
    image_size: int = 32,
    fps: float = 24.0,
    qa_per_script: int = 4,
) -> tuple[list[DatasetRecord], PayloadMap]:
    """n QA records cycling through the six QA categories, alternating
    modality, with consecutive records sharing one script/payload pair."""
    if n < 6:
        raise ContractError("instruction dataset needs n >= 6")
    records: list[DatasetRecord] = []
    payloads: PayloadMap = {}
    script = None
    motion_file = video_file = ""
    for i in range(n):
        group = i // qa_per_script
        if i % qa_per_script == 0:
            script_rng = np.random.default_rng([seed, 64, group])
            script = random_qa_script(script_rng)
            key = f"ins{group:06d}"
            payloads[key] = _make_payload(
                script, int(script_rng.integers(0, 2**31)), fps, image_size
            )
            motion_file, video_file = _payload_files(key)
        rng = np.random.default_rng([seed, 63, i])
        category = QA_CATEGORIES[i % len(QA_CATEGORIES)]
        instruction, response, options = _build_qa(category, script, rng)
        records.append(
            DatasetRecord(
                record_id=f"ins-{i:06d}",
                modality=MOTION if i % 2 == 0 else VIDEO,
                category=category,
                instruction=instruction,
                response=response,
                motion_file=motion_file,
                video_file=video_file,
                script=script,
                options=options,
                fps=fps,
            )
        )
    return records, payloads


def build_bench_dataset(
    n_per_modality: int, seed: int, image_size: int = 32, fps: float = 24.0
) -> tuple[list[DatasetRecord], list[DatasetRecord], PayloadMap]:
    """Held-out bench items over the five behavior categories; each question
    appears once per modality with shared payloads.  Reasoning items are
    multiple-choice (the record stores the gold option label)."""
    if n_per_modality < 1:
        raise ContractError("bench dataset needs n >= 1")
    motion_records: list[DatasetRecord] = []
    video_records: list[DatasetRecord] = []
    payloads: PayloadMap = {}
    for j in range(n_per_modality):
        rng = np.random.default_rng([seed, 65, j])
        script = random_qa_script(rng)
        key = f"ben{j:06d}"
        payloads[key] = _make_payload(script, int(rng.integers(0, 2**31)), fps, image_size)
        motion_file, video_file = _payload_files(key)
        category = BENCH_CATEGORIES[j % len(BENCH_CATEGORIES)]
        if category == "reasoning":
            prim = script.primitives[int(rng.integers(0, len(script.primitives)))]
            question, options, label = intent_mc(prim, rng)
            response = label
            opts = tuple(options)
        else:
            question, response = _build_qa(category, script, rng)[:2]
            opts = None
        for modality, bucket, tag in ((MOTION, motion_records, "m"), (VIDEO, video_records, "v")):
            bucket.append(
                DatasetRecord(
                    record_id=f"ben-{tag}-{j:06d}",
                    modality=modality,
                    category=category,
                    instruction=question,
                    response=response,
                    motion_file=motion_file,
                    video_file=video_file,
                    script=script,
                    options=opts,
                    fps=fps,
                )
            )
    return motion_records, video_records, payloads


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_corpus(
    out_dir: str | Path,
    captions: int = 2000,
    instructions: int = 2000,
    bench: int = 300,
    seed: int = 0,
    image_size: int = 32,
    fps: float = 24.0,
) -> dict:
    """Generate and write the full corpus; returns the manifest dict.

    Layout: captions.jsonl, instructions.jsonl, bench_motion.jsonl,
    bench_video.jsonl, vocab.txt, payloads/*.ptt, manifest.json.
    """
    from .templates import default_vocabulary

    out = Path(out_dir)
    (out / "payloads").mkdir(parents=True, exist_ok=True)

    cap_records, cap_payloads = (
        build_caption_dataset(captions, seed, image_size, fps) if captions > 0 else ([], {})
    )
    ins_records, ins_payloads = (
        build_instruction_dataset(instructions, seed, image_size, fps)
        if instructions > 0
        else ([], {})
    )
    if bench > 0:
        bench_motion, bench_video, ben_payloads = build_bench_dataset(bench, seed, image_size, fps)
    else:
        bench_motion, bench_video, ben_payloads = [], [], {}

    write_dataset(cap_records, out / "captions.jsonl")
    write_dataset(ins_records, out / "instructions.jsonl")
    write_dataset(bench_motion, out / "bench_motion.jsonl")
    write_dataset(bench_video, out / "bench_video.jsonl")
    default_vocabulary().save(out / "vocab.txt")

    payload_hash = hashlib.sha256()
    for payloads in (cap_payloads, ins_payloads, ben_payloads):
        for key in sorted(payloads):
            motion, video = payloads[key]
            m_path = out / f"payloads/m_{key}.ptt"
            v_path = out / f"payloads/v_{key}.ptt"
            save_tensor(m_path, motion.frames.astype(np.float32))
            save_tensor(v_path, video.frames)
            payload_hash.update(m_path.read_bytes())
            payload_hash.update(v_path.read_bytes())

    manifest = {
        "format": 1,
        "seed": seed,
        "image_size": image_size,
        "fps": fps,
        "counts": {
            "captions": len(cap_records),
            "instructions": len(ins_records),
            "bench_motion": len(bench_motion),
            "bench_video": len(bench_video),
        },
        "digests": {
            "captions.jsonl": _sha256_file(out / "captions.jsonl"),
            "instructions.jsonl": _sha256_file(out / "instructions.jsonl"),
            "bench_motion.jsonl": _sha256_file(out / "bench_motion.jsonl"),
            "bench_video.jsonl": _sha256_file(out / "bench_video.jsonl"),
            "vocab.txt": _sha256_file(out / "vocab.txt"),
            "payloads": payload_hash.hexdigest(),
        },
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest
