"""Synthetic paired motion/video data: scripts, trajectories, rendering,
caption/QA builders, and the dataset file formats."""

from .generate import (
    BENCH_CATEGORIES,
    QA_CATEGORIES,
    build_bench_dataset,
    build_caption_dataset,
    build_instruction_dataset,
    write_corpus,
)
from .records import (
    DatasetRecord,
    load_payload,
    load_tensor,
    read_dataset,
    record_to_sample,
    save_tensor,
    write_dataset,
)
from .render import render_stick_figure
from .scripts import KINDS, CompositeScript, MotionPrimitive, random_qa_script, random_script
from .synth import synth_motion
from .templates import caption_text, default_vocabulary

__all__ = [
    "BENCH_CATEGORIES",
    "QA_CATEGORIES",
    "CompositeScript",
    "DatasetRecord",
    "KINDS",
    "MotionPrimitive",
    "build_bench_dataset",
    "build_caption_dataset",
    "build_instruction_dataset",
    "caption_text",
    "default_vocabulary",
    "load_payload",
    "load_tensor",
    "random_qa_script",
    "random_script",
    "read_dataset",
    "record_to_sample",
    "render_stick_figure",
    "save_tensor",
    "synth_motion",
    "write_corpus",
    "write_dataset",
]
