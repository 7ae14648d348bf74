"""Motion scripts: the ground-truth semantics behind every synthetic clip.

A script is an ordered list of one to three primitives; every caption and
QA gold answer is derived mechanically from this metadata, never from a
model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError

KINDS = ("raise-arm", "wave", "squat", "jump", "kick", "walk", "turn")
SIDED_KINDS = ("raise-arm", "wave", "kick")
DIRECTIONAL_KINDS = ("walk", "turn")
SIDES = ("left", "right")
WALK_DIRECTIONS = ("forward", "backward", "left", "right")
TURN_DIRECTIONS = ("left", "right")


@dataclass(frozen=True)
class MotionPrimitive:
    kind: str
    side: str = "none"
    direction: str = "none"
    duration_frames: int = 20

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ContractError(f"unknown primitive kind: {self.kind!r}")
        if self.duration_frames < 2:
            raise ContractError("primitive needs at least 2 frames")
        if self.kind in SIDED_KINDS:
            if self.side not in SIDES:
                raise ContractError(f"{self.kind} requires side left/right, got {self.side!r}")
            if self.direction != "none":
                raise ContractError(f"{self.kind} takes no direction")
        elif self.kind == "walk":
            if self.direction not in WALK_DIRECTIONS:
                raise ContractError(f"walk requires a direction, got {self.direction!r}")
            if self.side != "none":
                raise ContractError("walk takes no side")
        elif self.kind == "turn":
            if self.direction not in TURN_DIRECTIONS:
                raise ContractError(f"turn requires direction left/right, got {self.direction!r}")
            if self.side != "none":
                raise ContractError("turn takes no side")
        else:  # squat, jump
            if self.side != "none" or self.direction != "none":
                raise ContractError(f"{self.kind} takes neither side nor direction")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "side": self.side,
            "direction": self.direction,
            "frames": self.duration_frames,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MotionPrimitive":
        return cls(
            kind=d["kind"],
            side=d.get("side", "none"),
            direction=d.get("direction", "none"),
            duration_frames=d["frames"],
        )


@dataclass(frozen=True)
class CompositeScript:
    primitives: tuple[MotionPrimitive, ...]

    def __post_init__(self):
        if not 1 <= len(self.primitives) <= 3:
            raise ContractError("a script holds 1 to 3 primitives")
        kinds = [p.kind for p in self.primitives]
        if len(set(kinds)) != len(kinds):
            raise ContractError("script kinds must be distinct")
        object.__setattr__(self, "primitives", tuple(self.primitives))

    @property
    def total_frames(self) -> int:
        return sum(p.duration_frames for p in self.primitives)

    def kinds(self) -> tuple[str, ...]:
        return tuple(p.kind for p in self.primitives)

    def absent_kinds(self) -> tuple[str, ...]:
        present = set(self.kinds())
        return tuple(k for k in KINDS if k not in present)

    def to_list(self) -> list[dict]:
        return [p.to_dict() for p in self.primitives]

    @classmethod
    def from_list(cls, items: list[dict]) -> "CompositeScript":
        return cls(primitives=tuple(MotionPrimitive.from_dict(d) for d in items))


def _fill_primitive(kind: str, rng: np.random.Generator) -> MotionPrimitive:
    duration = int(rng.integers(16, 25))
    if kind in SIDED_KINDS:
        return MotionPrimitive(kind, side=SIDES[int(rng.integers(0, 2))], duration_frames=duration)
    if kind == "walk":
        return MotionPrimitive(
            kind, direction=WALK_DIRECTIONS[int(rng.integers(0, 4))], duration_frames=duration
        )
    if kind == "turn":
        return MotionPrimitive(
            kind, direction=TURN_DIRECTIONS[int(rng.integers(0, 2))], duration_frames=duration
        )
    return MotionPrimitive(kind, duration_frames=duration)


def random_script(rng: np.random.Generator) -> CompositeScript:
    """Unconstrained script: 1-3 distinct-kind primitives."""
    count = int(rng.integers(1, 4))
    kinds = rng.choice(len(KINDS), size=count, replace=False)
    return CompositeScript(tuple(_fill_primitive(KINDS[k], rng) for k in kinds))


def random_qa_script(rng: np.random.Generator) -> CompositeScript:
    """Script guaranteed to support every QA category: at least one sided
    and one directional primitive, two or three primitives total."""
    count = int(rng.integers(2, 4))
    sided = SIDED_KINDS[int(rng.integers(0, len(SIDED_KINDS)))]
    directional = DIRECTIONAL_KINDS[int(rng.integers(0, len(DIRECTIONAL_KINDS)))]
    kinds = [sided, directional]
    if count == 3:
        rest = [k for k in KINDS if k not in kinds]
        kinds.append(rest[int(rng.integers(0, len(rest)))])
    order = rng.permutation(len(kinds))
    return CompositeScript(tuple(_fill_primitive(kinds[i], rng) for i in order))
