"""Prompt construction for few-shot vulnerability labeling.

Three strategies consult a model: zero-shot (instructions only), random
few-shot (k examples drawn uniformly from the train split), and retrieval
few-shot (k nearest train examples by embedding similarity). A fourth
strategy, retrieval labeling, never builds a prompt at all; it lives in
the labeling module and is listed here so runners can iterate strategies
from one place.
"""

from __future__ import annotations

import enum
import hashlib
import random
import re
from dataclasses import dataclass

from .labels import CweLabel, format_labels
from .vecindex import VectorIndex, top_k

TEMPLATE_ID = "cwe-fewshot-template/v1"


class Strategy(str, enum.Enum):
    ZERO_SHOT = "zero_shot"
    RANDOM_FEW_SHOT = "random_few_shot"
    RETRIEVAL_FEW_SHOT = "retrieval_few_shot"
    RETRIEVAL_LABELING = "retrieval_labeling"


PROMPT_STRATEGIES = frozenset(
    {Strategy.ZERO_SHOT, Strategy.RANDOM_FEW_SHOT, Strategy.RETRIEVAL_FEW_SHOT}
)


class ShotOrder(str, enum.Enum):
    SIMILAR_FIRST = "similar_first"
    SIMILAR_LAST = "similar_last"


class PromptError(ValueError):
    """Raised when a prompt spec or shot selection is invalid."""


@dataclass(frozen=True)
class Shot:
    """One in-context example: a code snippet and its label set."""

    code: str
    labels: frozenset

    def __post_init__(self) -> None:
        if not self.code.strip():
            raise PromptError("shot code must be non-empty")
        if not self.labels:
            raise PromptError("shot labels must be non-empty")


@dataclass(frozen=True)
class PromptSpec:
    """Everything needed to render one prompt deterministically."""

    strategy: Strategy
    k: int
    shots: tuple
    test_code: str

    def __post_init__(self) -> None:
        if self.strategy not in PROMPT_STRATEGIES:
            raise PromptError(f"strategy {self.strategy} does not build prompts")
        if self.strategy is Strategy.ZERO_SHOT and self.k != 0:
            raise PromptError(f"zero_shot requires k=0, got {self.k}")
        if self.strategy is not Strategy.ZERO_SHOT and self.k < 1:
            raise PromptError(f"{self.strategy.value} requires k >= 1, got {self.k}")
        if len(self.shots) != self.k:
            raise PromptError(f"expected {self.k} shots, got {len(self.shots)}")
        if not self.test_code.strip():
            raise PromptError("test code must be non-empty")


_PREAMBLE = (
    "You are a code vulnerability detector. Examine the final code snippet and\n"
    "decide which of these CWE categories apply:\n"
    "- CWE-119: buffer overflow\n"
    "- CWE-120: stack-based buffer overflow\n"
    "- CWE-469: pointer arithmetic error\n"
    "- CWE-476: null pointer dereference\n"
    "Answer with the matching CWE identifiers separated by commas."
)


def select_random(pool, k: int, seed: int, test_id: str) -> tuple:
    """Draw k distinct shots from the train pool, deterministically per test id.

    The RNG is seeded from (seed, test_id) so each test sample sees its own
    reproducible draw and reruns are bit-stable.
    """
    pool = tuple(pool)
    if k < 1:
        raise PromptError(f"k must be >= 1, got {k}")
    if k > len(pool):
        raise PromptError(f"cannot draw {k} shots from a pool of {len(pool)}")
    digest = hashlib.blake2b(f"{seed}:{test_id}".encode("utf-8"), digest_size=8).digest()
    rng = random.Random(int.from_bytes(digest, "big"))
    picks = rng.sample(range(len(pool)), k)
    return tuple(Shot(code=pool[i].code, labels=pool[i].truth) for i in picks)


def shots_from_neighbors(neighbors, samples_by_id, order: ShotOrder) -> tuple:
    """Map retrieval hits to shots, ordered by similarity as requested."""
    try:
        samples = [samples_by_id[n.sample_id] for n in neighbors]
    except KeyError as exc:
        raise PromptError(f"neighbor id {exc.args[0]!r} not found in corpus") from None
    if order is ShotOrder.SIMILAR_LAST:
        samples = samples[::-1]
    return tuple(Shot(code=s.code, labels=s.truth) for s in samples)


def select_retrieval(
    index: VectorIndex,
    query_vec,
    k: int,
    samples_by_id,
    order: ShotOrder = ShotOrder.SIMILAR_FIRST,
) -> tuple:
    """Pick the k most similar train samples as shots."""
    neighbors = top_k(index, query_vec, k)
    return shots_from_neighbors(neighbors, samples_by_id, order)


def render(spec: PromptSpec) -> str:
    """Render a prompt: preamble, shot blocks, then the unlabeled test block.

    The prompt always ends with "Vulnerabilities:" so the model's completion
    is exactly the label list.
    """
    blocks = [_PREAMBLE]
    for shot in spec.shots:
        blocks.append(
            f"Code:\n{shot.code}\nVulnerabilities: {format_labels(shot.labels)}\n"
        )
    blocks.append(f"Code:\n{spec.test_code}\nVulnerabilities:")
    return "\n".join(blocks)


_SHOT_LABEL_RE = re.compile(r"^Vulnerabilities: (.+)$", re.MULTILINE)


def shot_label_lines(prompt: str) -> list:
    """Labeled "Vulnerabilities:" lines, in shot order (excludes the final stub)."""
    return _SHOT_LABEL_RE.findall(prompt)


def extract_test_code(prompt: str) -> str:
    """Recover the test snippet from a rendered prompt (the final code block)."""
    suffix = "\nVulnerabilities:"
    if not prompt.endswith(suffix):
        raise PromptError("prompt does not end with an unlabeled Vulnerabilities stub")
    body = prompt[: -len(suffix)]
    marker = "\nCode:\n"
    pos = body.rfind(marker)
    if pos < 0:
        raise PromptError("prompt has no code block")
    return body[pos + len(marker):]


def prompt_hash(text: str) -> str:
    """Content hash used to tie prediction records back to exact prompts."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
