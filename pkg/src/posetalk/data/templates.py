"""Caption/QA text templates over the closed synthetic world, and the word
list that defines the default vocabulary.

Every string any builder can emit tokenizes without UNK against
:func:`default_vocabulary`; a test generates a large corpus to enforce
that.
"""

from __future__ import annotations

import numpy as np

from ..core import Vocabulary
from ..errors import ContractError
from .scripts import KINDS, CompositeScript, MotionPrimitive

# all the same token length so response positions line up across samples:
# the frozen LM routes by position, so alignment is what makes stage-1
# captioning learnable by the translators alone
CAPTION_INSTRUCTIONS = (
    "describe the motion",
    "describe the movement",
    "describe the action",
)

INTENTS = {
    "raise-arm": "reaching for something overhead",
    "wave": "greeting someone",
    "squat": "exercising the legs",
    "jump": "clearing an obstacle",
    "kick": "striking a target",
    "walk": "heading somewhere else",
    "turn": "changing facing direction",
}

KIND_NOUNS = {
    "raise-arm": "arm raise",
    "wave": "wave",
    "squat": "squat",
    "jump": "jump",
    "kick": "kick",
    "walk": "walk",
    "turn": "turn",
}

INFINITIVES = {
    "raise-arm": "raise an arm",
    "wave": "wave",
    "squat": "squat",
    "jump": "jump",
    "kick": "kick",
    "walk": "walk",
    "turn": "turn",
}


def verb_phrase(prim: MotionPrimitive) -> str:
    """Always four tokens, so phrase boundaries sit at fixed positions."""
    kind = prim.kind
    if kind == "raise-arm":
        return f"raises the {prim.side} arm"
    if kind == "wave":
        return f"waves the {prim.side} hand"
    if kind == "squat":
        return "squats down and rises"
    if kind == "jump":
        return "jumps up and lands"
    if kind == "kick":
        return f"kicks the {prim.side} leg"
    if kind == "walk":
        return f"walks {prim.direction} and stops"
    if kind == "turn":
        return f"turns {prim.direction} and stops"
    raise ContractError(f"unknown primitive kind: {kind!r}")


def caption_text(script: CompositeScript) -> str:
    """Names every primitive in script order."""
    return "the person " + " then ".join(verb_phrase(p) for p in script.primitives)


def negation_answer(kind: str) -> str:
    return f"no the person does not {INFINITIVES[kind]}"


def hallucination_question(kind: str) -> str:
    return f"does the person {INFINITIVES[kind]}"


def sequentiality_qa(script: CompositeScript, rng: np.random.Generator) -> tuple[str, str]:
    styles = ["first", "last"]
    if len(script.primitives) >= 2:
        styles.append("after")
    style = styles[int(rng.integers(0, len(styles)))]
    if style == "first":
        return "what does the person do first", verb_phrase(script.primitives[0])
    if style == "last":
        return "what does the person do last", verb_phrase(script.primitives[-1])
    i = int(rng.integers(0, len(script.primitives) - 1))
    noun = KIND_NOUNS[script.primitives[i].kind]
    return (
        f"what does the person do after the {noun}",
        verb_phrase(script.primitives[i + 1]),
    )


def direction_qa(script: CompositeScript, rng: np.random.Generator) -> tuple[str, str]:
    directional = [p for p in script.primitives if p.kind in ("walk", "turn")]
    if not directional:
        raise ContractError("script has no directional primitive")
    prim = directional[int(rng.integers(0, len(directional)))]
    verb = "walk" if prim.kind == "walk" else "turn"
    return f"in which direction does the person {verb}", prim.direction


def body_part_qa(script: CompositeScript, rng: np.random.Generator) -> tuple[str, str]:
    sided = [p for p in script.primitives if p.kind in ("raise-arm", "wave", "kick")]
    if not sided:
        raise ContractError("script has no sided primitive")
    prim = sided[int(rng.integers(0, len(sided)))]
    if prim.kind == "raise-arm":
        return "which arm does the person raise", f"the {prim.side} arm"
    if prim.kind == "wave":
        return "which hand does the person wave", f"the {prim.side} hand"
    return "which leg does the person kick with", f"the {prim.side} leg"


def hallucination_qa(script: CompositeScript, rng: np.random.Generator) -> tuple[str, str]:
    absent = script.absent_kinds()
    kind = absent[int(rng.integers(0, len(absent)))]
    return hallucination_question(kind), negation_answer(kind)


def options_text(options) -> str:
    return " ".join(f"({'ABCD'[i]}) {opt}" for i, opt in enumerate(options))


def mc_prompt_text(question: str, options) -> str:
    """Question, lettered options, then the exact terminal ``Best option:(``."""
    return f"{question} {options_text(options)} Best option:("


def in_context_mc_instruction(
    example_q: str,
    example_options,
    example_label: str,
    example_answer: str,
    question: str,
    options,
) -> str:
    """A solved example prepended to a fresh multiple-choice question."""
    return (
        f"example: {example_q} {options_text(example_options)} "
        f"answer: {example_label.lower()}) {example_answer} "
        f"now {mc_prompt_text(question, options)}"
    )


def intent_mc(prim: MotionPrimitive, rng: np.random.Generator) -> tuple[str, list[str], str]:
    """Multiple-choice intent question.

    Returns (question, options, correct label); the correct option position
    is randomized so labels carry no signal.
    """
    correct = INTENTS[prim.kind]
    others = [INTENTS[k] for k in KINDS if k != prim.kind]
    picks = rng.choice(len(others), size=2, replace=False)
    options = [others[int(p)] for p in picks]
    slot = int(rng.integers(0, 3))
    options.insert(slot, correct)
    label = "ABC"[slot]
    return f"why might the person {verb_phrase(prim)}", options, label


# every word the templates above can produce, plus a small slack set so the
# closed world is not razor-thin
_TEMPLATE_WORDS = """
the person raises raise raising arm arms left right waves wave waving hand
hands squats squat jumps jump kicks kick with leg legs walks walk walking
forward backward turns turn then describe motion movement action what does
do did first last after in which direction why might no not yes an a and
rises lands stops up down
reaching for something overhead greeting someone exercising clearing
obstacle striking target heading somewhere else changing facing
best option:( (a) (b) (c) (d) a) b) c) d) example: answer: now
body moves quickly slowly stands still once twice
""".split()

_SLACK_WORDS = tuple(f"extra{i:03d}" for i in range(200 - len(dict.fromkeys(_TEMPLATE_WORDS))))

WORDS = tuple(dict.fromkeys(_TEMPLATE_WORDS)) + _SLACK_WORDS


def default_vocabulary() -> Vocabulary:
    """The standard closed-world vocabulary: specials, template words, and
    reserve words padding the total to roughly two hundred."""
    return Vocabulary.from_words(WORDS)
