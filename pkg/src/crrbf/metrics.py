"""Confusion-matrix statistics, repeat-trial summaries and stage timing."""

from __future__ import annotations

import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np


def confusion(true_labels, predicted_labels, class_count: int) -> np.ndarray:
    """Counts with entry (i, j) = samples of class i predicted as j."""
    t = np.asarray(true_labels, dtype=np.int64).reshape(-1)
    p = np.asarray(predicted_labels, dtype=np.int64).reshape(-1)
    if t.shape != p.shape:
        raise ValueError(f"length mismatch: {t.size} true vs {p.size} predicted")
    for name, arr in (("true", t), ("predicted", p)):
        if arr.size and (arr.min() < 0 or arr.max() >= class_count):
            raise ValueError(f"{name} labels outside [0, {class_count})")
    cm = np.zeros((class_count, class_count), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


def _total(cm) -> int:
    cm = np.asarray(cm)
    total = int(cm.sum())
    if total <= 0:
        raise ValueError("confusion matrix is empty")
    return total


def overall_accuracy(cm) -> float:
    total = _total(cm)
    return float(np.trace(cm)) / total


def cohen_kappa(cm) -> float:
    cm = np.asarray(cm, dtype=np.float64)
    total = _total(cm)
    p_o = np.trace(cm) / total
    p_e = float(cm.sum(axis=1) @ cm.sum(axis=0)) / (total * total)
    if p_e == 1.0:
        # a single occupied cell: perfect agreement by convention
        return 1.0 if p_o == 1.0 else 0.0
    return (p_o - p_e) / (1.0 - p_e)


def per_class_accuracy(cm) -> np.ndarray:
    """Diagonal over row sums; classes without samples are NaN."""
    cm = np.asarray(cm, dtype=np.float64)
    rows = cm.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(rows > 0, np.diag(cm) / np.where(rows > 0, rows, 1.0), np.nan)


@dataclass(frozen=True)
class TrialStats:
    mean: float
    std: float
    count: int
    degenerate: bool = False


def trial_stats(values, ddof: int = 1) -> TrialStats:
    """Mean and std of repeat results; ``ddof=1`` is the sample std.

    With fewer than ``ddof + 1`` values the std is reported as 0 and flagged.
    """
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    if v.size == 0:
        raise ValueError("no values")
    if v.size <= ddof:
        return TrialStats(float(v.mean()), 0.0, int(v.size), True)
    return TrialStats(float(v.mean()), float(v.std(ddof=ddof)), int(v.size))


@dataclass(frozen=True)
class TimingEntry:
    stage: str
    seconds: float


@dataclass
class TimingRecord:
    entries: list = field(default_factory=list)

    def add(self, stage: str, seconds: float) -> TimingEntry:
        entry = TimingEntry(stage, round(max(0.0, seconds), 3))
        self.entries.append(entry)
        return entry

    @contextmanager
    def stage(self, name: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.add(name, time.perf_counter() - start)

    def total(self, stage: str) -> float:
        return math.fsum(e.seconds for e in self.entries if e.stage == stage)

    def to_rows(self) -> list:
        return [{"stage": e.stage, "seconds": e.seconds} for e in self.entries]


def stopwatch(stage_name: str, computation, *args, **kwargs):
    """Run ``computation(*args, **kwargs)``; return (result, TimingEntry)."""
    start = time.perf_counter()
    result = computation(*args, **kwargs)
    elapsed = time.perf_counter() - start
    return result, TimingEntry(stage_name, round(max(0.0, elapsed), 3))
