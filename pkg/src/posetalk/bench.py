"""Behavior benchmark harness: five categories, multiple-choice formatting
with the ``Best option:(`` convention, a deterministic offline overlap
judge, an optional external judge behind a small client interface, and
order-independent per-category reporting."""

from __future__ import annotations

import json
import re
import warnings
from dataclasses import dataclass
from pathlib import Path

from .core import MODALITIES, MotionSequence, VideoClip, build_prompt
from .data.records import DatasetRecord, load_payload
from .data.templates import mc_prompt_text
from .errors import CapacityError, ContractError, JudgeUnavailableError
from .pipeline import ModelBundle, generate_reply

BENCH_CATEGORIES = ("sequentiality", "direction", "body-part", "reasoning", "hallucination")
FREE = "free"
MULTIPLE_CHOICE = "multiple-choice"

CORRECT_THRESHOLD = 2.5  # free-form verdicts: correct iff score >= this

DEFAULT_RUBRIC = (
    "score how well the prediction matches the gold answer for a human "
    "behavior question, from 0 (unrelated) to 5 (equivalent)"
)

_LABELS = "ABCD"


@dataclass(frozen=True)
class BenchItem:
    """One evaluation row: the raw question plus its visual payload."""

    item_id: str
    modality: str
    category: str
    question: str
    gold: str
    payload: MotionSequence | VideoClip
    format: str = FREE
    options: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ContractError(f"unknown modality: {self.modality!r}")
        if self.category not in BENCH_CATEGORIES:
            raise ContractError(f"unknown bench category: {self.category!r}")
        if self.format not in (FREE, MULTIPLE_CHOICE):
            raise ContractError(f"unknown format: {self.format!r}")
        if (self.options is not None) != (self.format == MULTIPLE_CHOICE):
            raise ContractError("options are present iff the item is multiple-choice")
        if self.format == MULTIPLE_CHOICE:
            labels = _LABELS[: len(self.options)]
            if self.gold not in labels:
                raise ContractError(f"gold {self.gold!r} is not an option label")


@dataclass(frozen=True)
class JudgeVerdict:
    correct: bool
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 5.0:
            raise ContractError(f"score {self.score} outside [0, 5]")


@dataclass(frozen=True)
class CategoryStats:
    count: int
    correct: int
    accuracy_pct: float
    mean_score: float


@dataclass(frozen=True)
class BenchReport:
    per_category: dict[str, CategoryStats]
    total_items: int
    overall_accuracy_pct: float
    overall_mean_score: float

    def to_json_obj(self) -> dict:
        return {
            "total_items": self.total_items,
            "overall_accuracy_pct": self.overall_accuracy_pct,
            "overall_mean_score": self.overall_mean_score,
            "categories": {
                name: {
                    "count": s.count,
                    "correct": s.correct,
                    "accuracy_pct": s.accuracy_pct,
                    "mean_score": s.mean_score,
                }
                for name, s in self.per_category.items()
            },
        }

    def to_text(self) -> str:
        lines = [f"{'category':<14} {'items':>5} {'acc %':>7} {'score':>6}"]
        for name in BENCH_CATEGORIES:
            s = self.per_category[name]
            lines.append(f"{name:<14} {s.count:>5} {s.accuracy_pct:>7.2f} {s.mean_score:>6.3f}")
        lines.append(
            f"{'overall':<14} {self.total_items:>5} "
            f"{self.overall_accuracy_pct:>7.2f} {self.overall_mean_score:>6.3f}"
        )
        return "\n".join(lines)


def item_from_record(record: DatasetRecord, base_dir: str | Path) -> BenchItem:
    payload = load_payload(record, base_dir)
    mc = record.options is not None
    return BenchItem(
        item_id=record.record_id,
        modality=record.modality,
        category=record.category,
        question=record.instruction,
        gold=record.response,
        payload=payload,
        format=MULTIPLE_CHOICE if mc else FREE,
        options=record.options,
    )


def items_from_records(records: list[DatasetRecord], base_dir: str | Path) -> list[BenchItem]:
    return [item_from_record(r, base_dir) for r in records]


def format_mc_prompt(item: BenchItem) -> str:
    """Question, options labeled (A) (B) ..., terminal ``Best option:(``."""
    if item.format != MULTIPLE_CHOICE:
        raise ContractError("format_mc_prompt requires a multiple-choice item")
    return mc_prompt_text(item.question, item.options)


def parse_mc_answer(text: str) -> str | None:
    """The chosen option label in generated text.

    Generated text continues the prompt's final open parenthesis, so the
    label is the first alphabetic character after the last ``(`` in the
    output, or the first alphabetic character overall when the output adds
    no parenthesis of its own.  Returns None when no letter is found.
    """
    tail = text.rsplit("(", 1)[-1]
    m = re.search(r"[a-zA-Z]", tail)
    return m.group(0).upper() if m else None


_norm_re = re.compile(r"[^a-z0-9\s]")


def normalize_answer(text: str) -> list[str]:
    return _norm_re.sub(" ", text.lower()).split()


def judge_overlap(pred: str, gold: str) -> JudgeVerdict:
    """Deterministic token-level F1 scaled to [0, 5]."""
    if not gold.strip():
        raise ContractError("gold answer must be non-empty")
    pred_tokens = normalize_answer(pred)
    gold_tokens = normalize_answer(gold)
    if not pred_tokens:
        return JudgeVerdict(correct=False, score=0.0)
    overlap = 0
    remaining = {}
    for tok in gold_tokens:
        remaining[tok] = remaining.get(tok, 0) + 1
    for tok in pred_tokens:
        if remaining.get(tok, 0) > 0:
            overlap += 1
            remaining[tok] -= 1
    if overlap == 0:
        return JudgeVerdict(correct=False, score=0.0)
    precision = overlap / len(pred_tokens)
    recall = overlap / len(gold_tokens)
    f1 = 2.0 * precision * recall / (precision + recall)
    score = 5.0 * f1
    return JudgeVerdict(correct=score >= CORRECT_THRESHOLD, score=score)


class HttpJudgeClient:
    """Minimal JSON-over-HTTP judge client.

    POSTs {prediction, gold, rubric} and expects {"score": float}.  Any
    transport or protocol failure surfaces as JudgeUnavailableError.
    """

    def __init__(self, endpoint: str, api_key: str, timeout: float = 30.0):
        self.endpoint = endpoint
        self.api_key = api_key
        self.timeout = timeout

    def score(self, pred: str, gold: str, rubric: str) -> float:
        import urllib.error
        import urllib.request

        body = json.dumps({"prediction": pred, "gold": gold, "rubric": rubric}).encode("utf-8")
        req = urllib.request.Request(
            self.endpoint,
            data=body,
            headers={
                "Content-Type": "application/json",
                "Authorization": f"Bearer {self.api_key}",
            },
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
            return float(payload["score"])
        except (urllib.error.URLError, OSError, ValueError, KeyError) as exc:
            raise JudgeUnavailableError(f"judge request failed: {exc}") from exc


def judge_external(pred: str, gold: str, client, rubric: str = DEFAULT_RUBRIC) -> JudgeVerdict:
    """Delegate scoring to a configured judge client; failures surface as
    judge-unavailable, never as scores."""
    if client is None:
        raise JudgeUnavailableError("no judge client configured")
    try:
        raw = float(client.score(pred, gold, rubric))
    except JudgeUnavailableError:
        raise
    except Exception as exc:
        raise JudgeUnavailableError(f"judge client failed: {exc}") from exc
    score = raw
    if not 0.0 <= score <= 5.0:
        score = min(5.0, max(0.0, score))
        warnings.warn(f"judge returned out-of-range score {raw}; clamped to {score}", stacklevel=2)
    return JudgeVerdict(correct=score >= CORRECT_THRESHOLD, score=score)


def run_bench(
    bundle: ModelBundle,
    items: list[BenchItem],
    judge: str = "overlap",
    client=None,
    max_new: int = 24,
) -> BenchReport:
    """Greedy-generate an answer per item, judge it, and aggregate per
    category.  Items are aggregated in id order, so shuffling the input
    leaves the report byte-identical."""
    if not items:
        raise ContractError("bench needs at least one item")
    if judge not in ("overlap", "external"):
        raise ContractError(f"unknown judge: {judge!r}")

    verdicts: list[tuple[str, str, JudgeVerdict]] = []
    for item in items:
        instruction = format_mc_prompt(item) if item.format == MULTIPLE_CHOICE else item.question
        try:
            prompt = build_prompt(instruction, item.modality, item.payload, bundle.vocab)
            text, _ = generate_reply(bundle, prompt, max_new=max_new, strategy="greedy")
        except CapacityError:
            verdicts.append((item.item_id, item.category, JudgeVerdict(False, 0.0)))
            continue
        if item.format == MULTIPLE_CHOICE:
            label = parse_mc_answer(text)
            hit = label == item.gold
            verdict = JudgeVerdict(correct=hit, score=5.0 if hit else 0.0)
        elif judge == "overlap":
            verdict = judge_overlap(text, item.gold)
        else:
            verdict = judge_external(text, item.gold, client)
        verdicts.append((item.item_id, item.category, verdict))

    verdicts.sort(key=lambda row: row[0])
    by_cat: dict[str, list[JudgeVerdict]] = {name: [] for name in BENCH_CATEGORIES}
    for _, category, verdict in verdicts:
        by_cat[category].append(verdict)

    per_category = {}
    total = len(verdicts)
    total_correct = 0
    total_score = 0.0
    for name in BENCH_CATEGORIES:
        vs = by_cat[name]
        correct = sum(1 for v in vs if v.correct)
        score_sum = sum(v.score for v in vs)
        total_correct += correct
        total_score += score_sum
        per_category[name] = CategoryStats(
            count=len(vs),
            correct=correct,
            accuracy_pct=100.0 * correct / len(vs) if vs else 0.0,
            mean_score=score_sum / len(vs) if vs else 0.0,
        )
    return BenchReport(
        per_category=per_category,
        total_items=total,
        overall_accuracy_pct=100.0 * total_correct / total,
        overall_mean_score=total_score / total,
    )
