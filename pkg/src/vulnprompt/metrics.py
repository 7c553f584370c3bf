"""Multi-label evaluation metrics over a fixed four-label space.

Six headline numbers: subset accuracy (exact set match), Hamming accuracy
(per-label agreement), partial match accuracy (per-instance Jaccard), and
micro-averaged precision, recall, and F1. One supplementary ratio, partial
match against truth size, is reported alongside because per-instance overlap
can be normalized two ways and downstream consumers may want either.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .labels import ALL_LABELS, CweLabel

N_LABELS = 4


class MetricsError(ValueError):
    """Raised on empty inputs or out-of-vocabulary label sets."""


@dataclass(frozen=True)
class LabeledPair:
    """Ground truth and prediction for one instance."""

    truth: frozenset
    pred: frozenset

    def __post_init__(self) -> None:
        for name, labels in (("truth", self.truth), ("pred", self.pred)):
            for label in labels:
                if not isinstance(label, CweLabel):
                    raise MetricsError(f"{name} contains non-label value {label!r}")


@dataclass(frozen=True)
class ConfusionCounts:
    """Micro-averaged confusion cells pooled over all instances and labels."""

    tp: int
    fp: int
    fn: int
    tn: int


@dataclass(frozen=True)
class MetricsReport:
    """All metrics for one evaluation cell, as plain floats in [0, 1]."""

    n_instances: int
    n_labels: int
    subset_accuracy: float
    hamming_accuracy: float
    partial_match_accuracy: float
    micro_precision: float
    micro_recall: float
    micro_f1: float
    tp: int
    fp: int
    fn: int
    tn: int
    partial_match_vs_truth: float

    def to_json_dict(self) -> dict:
        return {
            "n_instances": self.n_instances,
            "n_labels": self.n_labels,
            "subset_accuracy": self.subset_accuracy,
            "hamming_accuracy": self.hamming_accuracy,
            "partial_match_accuracy": self.partial_match_accuracy,
            "micro_precision": self.micro_precision,
            "micro_recall": self.micro_recall,
            "micro_f1": self.micro_f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "tn": self.tn,
            "partial_match_vs_truth": self.partial_match_vs_truth,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "MetricsReport":
        return cls(**{k: data[k] for k in cls.__dataclass_fields__})


def _require_pairs(pairs) -> list:
    pairs = list(pairs)
    if not pairs:
        raise MetricsError("metrics need at least one pair")
    return pairs


def subset_accuracy(pairs) -> float:
    """Fraction of instances whose prediction equals the truth exactly."""
    pairs = _require_pairs(pairs)
    exact = sum(1 for p in pairs if p.pred == p.truth)
    return exact / len(pairs)


def hamming_accuracy(pairs) -> float:
    """One minus the per-label disagreement rate over all N * 4 cells."""
    pairs = _require_pairs(pairs)
    disagreements = sum(len(p.pred ^ p.truth) for p in pairs)
    return 1.0 - disagreements / (len(pairs) * N_LABELS)


def _jaccard(p: LabeledPair) -> float:
    union = p.pred | p.truth
    if not union:
        return 1.0
    return len(p.pred & p.truth) / len(union)


def partial_match_accuracy(pairs) -> float:
    """Mean per-instance Jaccard overlap |pred & truth| / |pred | truth|.

    An instance with empty prediction and empty truth counts as a full
    match. fsum keeps the mean invariant under pair reordering.
    """
    pairs = _require_pairs(pairs)
    return math.fsum(_jaccard(p) for p in pairs) / len(pairs)


def _truth_overlap(p: LabeledPair) -> float:
    if not p.truth:
        return 1.0 if not p.pred else 0.0
    return len(p.pred & p.truth) / len(p.truth)


def partial_match_vs_truth(pairs) -> float:
    """Mean per-instance overlap normalized by truth size |pred & truth| / |truth|.

    An instance with empty truth scores 1.0 when the prediction is also
    empty, else 0.0.
    """
    pairs = _require_pairs(pairs)
    return math.fsum(_truth_overlap(p) for p in pairs) / len(pairs)


def micro_prf(pairs) -> tuple:
    """Micro precision, recall, F1, and the pooled confusion counts.

    Zero denominators yield 0.0 rather than an error, so degenerate cells
    (nothing predicted, or nothing true) still produce a report.
    """
    pairs = _require_pairs(pairs)
    tp = sum(len(p.pred & p.truth) for p in pairs)
    fp = sum(len(p.pred - p.truth) for p in pairs)
    fn = sum(len(p.truth - p.pred) for p in pairs)
    tn = len(pairs) * N_LABELS - tp - fp - fn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1, ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def report(pairs) -> MetricsReport:
    """Compute every metric over one list of pairs."""
    pairs = _require_pairs(pairs)
    precision, recall, f1, counts = micro_prf(pairs)
    return MetricsReport(
        n_instances=len(pairs),
        n_labels=N_LABELS,
        subset_accuracy=subset_accuracy(pairs),
        hamming_accuracy=hamming_accuracy(pairs),
        partial_match_accuracy=partial_match_accuracy(pairs),
        micro_precision=precision,
        micro_recall=recall,
        micro_f1=f1,
        tp=counts.tp,
        fp=counts.fp,
        fn=counts.fn,
        tn=counts.tn,
        partial_match_vs_truth=partial_match_vs_truth(pairs),
    )
