"""CWE label vocabulary shared by every layer of the package.

Predictions and ground truth are subsets of four admissible categories;
anything else is rejected here, at the type boundary.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable


class UnknownLabelError(ValueError):
    """A label string is not one of the four admissible CWE codes."""


class CweLabel(enum.Enum):
    CWE_119 = "CWE-119"  # buffer overflow
    CWE_120 = "CWE-120"  # stack-based buffer overflow
    CWE_469 = "CWE-469"  # pointer arithmetic error
    CWE_476 = "CWE-476"  # null pointer dereference

    @property
    def number(self) -> int:
        return int(self.value.split("-", 1)[1])

    def __str__(self) -> str:
        return self.value


LabelSet = frozenset  # frozenset[CweLabel]

ALL_LABELS: tuple[CweLabel, ...] = tuple(sorted(CweLabel, key=lambda label: label.number))

EMPTY_LABELS: frozenset[CweLabel] = frozenset()


def parse_label(code: str) -> CweLabel:
    """Map a label string such as "CWE-119" to its enum member.

    Raises UnknownLabelError for anything outside the four-category vocabulary.
    """
    try:
        return CweLabel(code)
    except ValueError:
        raise UnknownLabelError(f"not an in-scope CWE label: {code!r}") from None


def is_in_scope(code: str) -> bool:
    return any(code == label.value for label in CweLabel)


def label_set(codes: Iterable[str]) -> frozenset[CweLabel]:
    """Build a deduplicated label set, rejecting out-of-scope codes."""
    return frozenset(parse_label(code) for code in codes)


def sorted_labels(labels: Iterable[CweLabel]) -> list[CweLabel]:
    """Labels in ascending numeric order (119, 120, 469, 476)."""
    return sorted(labels, key=lambda label: label.number)


def label_codes(labels: Iterable[CweLabel]) -> list[str]:
    return [label.value for label in sorted_labels(labels)]


def format_labels(labels: Iterable[CweLabel]) -> str:
    """Render labels as "CWE-119, CWE-476" (ascending numeric order)."""
    return ", ".join(label_codes(labels))
