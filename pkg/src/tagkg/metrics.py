"""Ranking metrics for multi-label evaluation: AP, ROC-AUC, micro/macro
AUPRC, plus the per-group improvement analysis.

Average precision is the step-wise PR-curve estimator: scores are swept in
descending order and tied scores form one threshold group, every positive
in a group receiving the precision at the group's end. Degenerate classes
(no positives, or single-class truths for AUC) yield None rather than a
number and are excluded from macro averages.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class MetricsError(ValueError):
    pass


def _as_1d(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64).ravel()
    return arr


def average_precision(scores, truths) -> float | None:
    """Mean precision over positives, tie groups sharing their end precision.

    Returns None when there is no positive (AP undefined).
    """
    s = _as_1d(scores)
    y = _as_1d(truths)
    if s.shape != y.shape:
        raise MetricsError(f"shape mismatch: {s.shape} vs {y.shape}")
    n_pos = int(y.sum())
    if n_pos == 0:
        return None
    order = np.argsort(-s, kind="stable")
    total = 0.0
    hits = 0
    rank = 0
    i = 0
    n = len(s)
    while i < n:
        j = i
        group_hits = 0
        while j < n and s[order[j]] == s[order[i]]:
            group_hits += int(y[order[j]])
            j += 1
        hits += group_hits
        rank = j
        if group_hits:
            total += group_hits * (hits / rank)
        i = j
    return total / n_pos


def roc_auc(scores, truths) -> float | None:
    """Probability a positive outranks a negative, ties counting half.

    Computed from average ranks (exactly the pairwise statistic). Returns
    None unless both a positive and a negative are present.
    """
    s = _as_1d(scores)
    y = _as_1d(truths)
    if s.shape != y.shape:
        raise MetricsError(f"shape mismatch: {s.shape} vs {y.shape}")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    order = np.argsort(s, kind="stable")
    ranks = np.empty(len(s), dtype=np.float64)
    i = 0
    while i < len(s):
        j = i
        while j < len(s) and s[order[j]] == s[order[i]]:
            j += 1
        # average rank for the tie group, 1-based
        ranks[order[i:j]] = (i + 1 + j) / 2.0
        i = j
    rank_sum_pos = float(ranks[y > 0].sum())
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def auprc(scores, truths, mode: str) -> float | None:
    """Area under the PR curve over a samples x classes matrix.

    micro flattens all (sample, class) pairs into one ranking; macro
    averages per-class AP over classes that have positives.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(truths, dtype=np.float64)
    if s.shape != y.shape:
        raise MetricsError(f"shape mismatch: {s.shape} vs {y.shape}")
    if s.ndim == 1:
        s = s.reshape(-1, 1)
        y = y.reshape(-1, 1)
    if mode == "micro":
        return average_precision(s.ravel(), y.ravel())
    if mode == "macro":
        per_class = [average_precision(s[:, c], y[:, c]) for c in range(s.shape[1])]
        valid = [ap for ap in per_class if ap is not None]
        if not valid:
            return None
        return float(sum(valid) / len(valid))
    raise MetricsError(f"unknown auprc mode {mode!r}")


@dataclass
class EvalReport:
    per_class_ap: list[float | None]
    per_class_auc: list[float | None]
    map: float | None
    mauc: float | None
    micro_auprc: float | None
    macro_auprc: float | None
    skipped_classes: list[int]

    def to_json(self) -> str:
        return json.dumps(
            {
                "per_class_ap": self.per_class_ap,
                "per_class_auc": self.per_class_auc,
                "map": self.map,
                "mauc": self.mauc,
                "micro_auprc": self.micro_auprc,
                "macro_auprc": self.macro_auprc,
                "skipped_classes": self.skipped_classes,
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "EvalReport":
        obj = json.loads(text)
        return EvalReport(
            per_class_ap=obj["per_class_ap"],
            per_class_auc=obj["per_class_auc"],
            map=obj["map"],
            mauc=obj["mauc"],
            micro_auprc=obj["micro_auprc"],
            macro_auprc=obj["macro_auprc"],
            skipped_classes=obj["skipped_classes"],
        )


def evaluate(scores, truths) -> EvalReport:
    """Full report over a samples x classes score/label matrix."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(truths, dtype=np.float64)
    if s.shape != y.shape or s.ndim != 2:
        raise MetricsError(f"expected matching 2-D matrices, got {s.shape} vs {y.shape}")
    per_ap = [average_precision(s[:, c], y[:, c]) for c in range(s.shape[1])]
    per_auc = [roc_auc(s[:, c], y[:, c]) for c in range(s.shape[1])]
    valid_ap = [v for v in per_ap if v is not None]
    valid_auc = [v for v in per_auc if v is not None]
    skipped = sorted(
        {c for c, v in enumerate(per_ap) if v is None}
        | {c for c, v in enumerate(per_auc) if v is None}
    )
    return EvalReport(
        per_class_ap=per_ap,
        per_class_auc=per_auc,
        map=float(np.mean(valid_ap)) if valid_ap else None,
        mauc=float(np.mean(valid_auc)) if valid_auc else None,
        micro_auprc=auprc(s, y, "micro"),
        macro_auprc=auprc(s, y, "macro"),
        skipped_classes=skipped,
    )


@dataclass
class GroupBucket:
    lo: float
    hi: float  # exclusive at lo (except the first bucket), inclusive at hi
    n_classes: int
    mean_a: float | None
    mean_b: float | None
    delta: float | None


@dataclass
class GroupDelta:
    buckets: list[GroupBucket]

    def to_csv(self) -> str:
        lines = ["lo,hi,n_classes,mean_a,mean_b,delta"]
        for b in self.buckets:
            hi = "inf" if math.isinf(b.hi) else repr(b.hi)
            fmt = lambda v: "" if v is None else repr(v)
            lines.append(
                f"{b.lo!r},{hi},{b.n_classes},{fmt(b.mean_a)},{fmt(b.mean_b)},{fmt(b.delta)}"
            )
        return "".join(line + "\n" for line in lines)


def group_delta(
    per_class_metric_a: list[float | None],
    per_class_metric_b: list[float | None],
    train_counts: list[int],
    bucket_edges: list[float],
) -> GroupDelta:
    """Per-bucket mean(b) - mean(a) over classes bucketed by training count.

    ``bucket_edges`` are ascending inclusive upper bounds; a final bucket to
    infinity is implied. Classes skipped in either metric are excluded.
    Empty buckets report None deltas rather than zero.
    """
    if not (len(per_class_metric_a) == len(per_class_metric_b) == len(train_counts)):
        raise MetricsError("per-class vectors must align")
    if sorted(bucket_edges) != list(bucket_edges):
        raise MetricsError("bucket edges must be ascending")
    bounds = [(0.0 if i == 0 else bucket_edges[i - 1], e) for i, e in enumerate(bucket_edges)]
    bounds.append((bucket_edges[-1] if bucket_edges else 0.0, math.inf))

    groups: list[list[tuple[float, float]]] = [[] for _ in bounds]
    for a, b, count in zip(per_class_metric_a, per_class_metric_b, train_counts):
        if a is None or b is None:
            continue
        for gi, (lo, hi) in enumerate(bounds):
            if (count <= hi and count > lo) or (gi == 0 and count <= hi):
                groups[gi].append((a, b))
                break

    buckets = []
    for (lo, hi), pairs in zip(bounds, groups):
        if pairs:
            mean_a = float(np.mean([p[0] for p in pairs]))
            mean_b = float(np.mean([p[1] for p in pairs]))
            buckets.append(GroupBucket(lo, hi, len(pairs), mean_a, mean_b, mean_b - mean_a))
        else:
            buckets.append(GroupBucket(lo, hi, 0, None, None, None))
    return GroupDelta(buckets=buckets)


def save_report(report: EvalReport, path: str | Path) -> None:
    Path(path).write_text(report.to_json() + "\n", encoding="utf-8")


def load_report(path: str | Path) -> EvalReport:
    return EvalReport.from_json(Path(path).read_text(encoding="utf-8"))
