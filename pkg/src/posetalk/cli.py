"""Command-line entry point: datagen, train, generate, bench.

Exit codes: 0 success, 1 usage error, 2 unwritable output, 3 missing
prerequisite checkpoint, 4 non-finite loss, 5 judge unavailable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .bench import HttpJudgeClient, items_from_records, run_bench
from .checkpoint import load_checkpoint, save_checkpoint
from .config import ConfigError, RunConfig
from .core import MOTION, VIDEO, MotionSequence, VideoClip, build_prompt
from .data.records import load_tensor, read_dataset, record_to_sample
from .data.generate import write_corpus
from .errors import (
    CheckpointCorruptError,
    ContractError,
    DatasetFormatError,
    JudgeUnavailableError,
    NumericError,
    PayloadResolutionError,
)
from .pipeline import build_bundle, generate_reply
from .training import (
    bundle_from_checkpoint,
    train_stage1,
    train_stage2,
)
from .core import Vocabulary

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_MISSING_CKPT = 3
EXIT_NUMERIC = 4
EXIT_JUDGE = 5


def _load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    return RunConfig.from_yaml(path)


def _ensure_writable(path: Path) -> None:
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write_probe"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {path} is not writable: {exc}") from exc


def cmd_datagen(args) -> int:
    cfg = _load_config(args.config)
    out = Path(args.out)
    _ensure_writable(out)
    counts = {
        "captions": cfg.data.captions if args.captions is None else args.captions,
        "instructions": cfg.data.instructions if args.instructions is None else args.instructions,
        "bench": cfg.data.bench if args.bench is None else args.bench,
    }
    for name, n in counts.items():
        if n == 0:
            print(f"warning: generating an empty {name} dataset", file=sys.stderr)
    seed = cfg.seed if args.seed is None else args.seed
    manifest = write_corpus(
        out,
        captions=counts["captions"],
        instructions=counts["instructions"],
        bench=counts["bench"],
        seed=seed,
        image_size=cfg.data.image_size,
        fps=cfg.data.fps,
    )
    print(json.dumps(manifest["counts"], sort_keys=True))
    return EXIT_OK


def _load_split(data_dir: Path, name: str, vocab: Vocabulary):
    records = read_dataset(data_dir / name)
    return [record_to_sample(r, vocab, data_dir) for r in records]


def cmd_train(args) -> int:
    cfg = _load_config(args.config)
    data_dir = Path(args.data)
    out = Path(args.out)
    _ensure_writable(out)
    vocab = Vocabulary.load(data_dir / "vocab.txt")
    bundle = build_bundle(
        vocab,
        seed=cfg.seed,
        enc_cfg=cfg.encoder,
        lm_cfg=cfg.lm.to_lm_config(vocab),
        lora_spec=cfg.lora,
        video_hidden=cfg.video_hidden,
        video_frames=cfg.video_frames,
    )
    resume = load_checkpoint(args.resume) if args.resume else None

    if args.stage == 1:
        samples = _load_split(data_dir, "captions.jsonl", vocab)
        stage_cfg = cfg.stage1
        if args.steps is not None:
            stage_cfg.steps = args.steps
        ckpt = train_stage1(
            bundle, samples, stage_cfg, log_path=out / "stage1_loss.log", resume_from=resume
        )
        ckpt_path = out / "stage1.ckpt"
    else:
        if resume is None:
            if not args.stage1_ckpt:
                print("error: --stage 2 requires --stage1-ckpt", file=sys.stderr)
                return EXIT_MISSING_CKPT
            if not Path(args.stage1_ckpt).is_file():
                print(f"error: stage-1 checkpoint not found: {args.stage1_ckpt}", file=sys.stderr)
                return EXIT_MISSING_CKPT
            stage1 = load_checkpoint(args.stage1_ckpt)
        else:
            stage1 = None
        samples = _load_split(data_dir, "instructions.jsonl", vocab)
        motion = [s for s in samples if s.prompt.modality == MOTION]
        video = [s for s in samples if s.prompt.modality == VIDEO]
        stage_cfg = cfg.stage2
        if args.steps is not None:
            stage_cfg.steps = args.steps
        ckpt = train_stage2(
            bundle,
            motion,
            video,
            stage_cfg,
            stage1,
            log_path=out / "stage2_loss.log",
            resume_from=resume,
        )
        ckpt_path = out / "stage2.ckpt"

    save_checkpoint(ckpt, ckpt_path)
    print(f"checkpoint written to {ckpt_path} (step {ckpt.step})")
    return EXIT_OK


def cmd_generate(args) -> int:
    if (args.motion is None) == (args.video is None):
        print("error: provide exactly one of --motion or --video", file=sys.stderr)
        return EXIT_USAGE
    ckpt = load_checkpoint(args.ckpt)
    bundle = bundle_from_checkpoint(ckpt)
    if args.motion:
        arr = load_tensor(args.motion)
        payload = MotionSequence(frames=arr.astype(np.float64), fps=args.fps)
        modality = MOTION
    else:
        payload = VideoClip(frames=load_tensor(args.video))
        modality = VIDEO
        if args.verbose:
            print(
                f"trace: video frames {payload.num_frames} -> {bundle.video_frames}",
                file=sys.stderr,
            )
    prompt = build_prompt(args.instruction, modality, payload, bundle.vocab)
    text, result = generate_reply(bundle, prompt, max_new=args.max_new)
    if result.truncated:
        print("warning: generation truncated at capacity", file=sys.stderr)
    print(text)
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _load_config(args.config)
    ckpt = load_checkpoint(args.ckpt)
    bundle = bundle_from_checkpoint(ckpt)
    items_path = Path(args.items)
    records = read_dataset(items_path)
    items = items_from_records(records, items_path.parent)
    client = None
    if args.judge == "external":
        token = os.environ.get(cfg.judge.credential_env, "")
        if not token:
            print(
                f"error: external judge needs credentials in ${cfg.judge.credential_env}",
                file=sys.stderr,
            )
            return EXIT_JUDGE
        if not cfg.judge.endpoint:
            print("error: config.judge.endpoint is not set", file=sys.stderr)
            return EXIT_JUDGE
        client = HttpJudgeClient(cfg.judge.endpoint, token)
    report = run_bench(bundle, items, judge=args.judge, client=client, max_new=cfg.gen_max_new)
    out = Path(args.out)
    _ensure_writable(out)
    (out / "bench_report.txt").write_text(report.to_text() + "\n", encoding="utf-8")
    (out / "bench_report.json").write_text(
        json.dumps(report.to_json_obj(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(report.to_text())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="posetalk",
        description="Train and evaluate a desk-scale motion/video instruction-tuned LM.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("datagen", help="generate the synthetic corpus")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--captions", type=int, default=None)
    p.add_argument("--instructions", type=int, default=None)
    p.add_argument("--bench", type=int, default=None, help="bench items per modality")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_datagen)

    p = sub.add_parser("train", help="run one training stage")
    p.add_argument("--config", default=None)
    p.add_argument("--stage", type=int, choices=(1, 2), required=True)
    p.add_argument("--data", required=True, help="corpus directory from datagen")
    p.add_argument("--out", required=True)
    p.add_argument("--stage1-ckpt", default=None, help="stage-1 checkpoint (stage 2 only)")
    p.add_argument("--resume", default=None, help="resume a checkpoint of the same stage")
    p.add_argument("--steps", type=int, default=None, help="override configured step count")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="generate text for one motion or video file")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--motion", default=None)
    p.add_argument("--video", default=None)
    p.add_argument("--instruction", required=True)
    p.add_argument("--max-new", type=int, default=24)
    p.add_argument("--fps", type=float, default=24.0)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("bench", help="evaluate a checkpoint on a bench item file")
    p.add_argument("--config", default=None)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--items", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--judge", choices=("overlap", "external"), default="overlap")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except JudgeUnavailableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_JUDGE
    except (ConfigError, ContractError, DatasetFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PayloadResolutionError, CheckpointCorruptError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
