"""Labeled spectral datasets: CSV I/O, validation, stratified sampling,
standardization, and a synthetic generator with correlated adjacent bands."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DatasetError(ValueError):
    """Base class for dataset problems."""


class ParseError(DatasetError):
    """A dataset file does not follow the CSV layout."""


class ValidationError(DatasetError):
    """Parsed data violates a dataset invariant."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """N samples by d bands with dense integer labels 0..C-1.

    ``class_ids[c]`` is the original label that was mapped to dense id ``c``.
    """

    features: np.ndarray
    labels: np.ndarray
    class_count: int
    class_ids: tuple = ()

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels)
        if X.ndim != 2:
            raise ValidationError(f"features must be 2-D, got shape {X.shape}")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise ValidationError("labels must be a vector with one entry per sample")
        if X.shape[0] < 2 or X.shape[1] < 1:
            raise ValidationError(f"need N >= 2 and d >= 1, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValidationError("features contain non-finite values")
        if y.size and not np.issubdtype(y.dtype, np.integer):
            if not np.all(np.equal(np.mod(y, 1), 0)):
                raise ValidationError("labels must be integers")
        y = y.astype(np.int64)
        C = int(self.class_count)
        if C < 2:
            raise ValidationError(f"need at least 2 classes, got {C}")
        if y.min() < 0 or y.max() >= C:
            raise ValidationError(f"labels must lie in [0, {C})")
        missing = np.setdiff1d(np.arange(C), y)
        if missing.size:
            raise ValidationError(f"classes {missing.tolist()} have no samples")
        ids = tuple(self.class_ids) if self.class_ids else tuple(range(C))
        if len(ids) != C:
            raise ValidationError("class_ids must name every class")
        object.__setattr__(self, "features", _frozen(X))
        object.__setattr__(self, "labels", _frozen(y))
        object.__setattr__(self, "class_count", C)
        object.__setattr__(self, "class_ids", ids)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def band_count(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count)

    def subset(self, indices) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.intp)
        return LabeledDataset(self.features[idx], self.labels[idx], self.class_count, self.class_ids)

    def with_features(self, features: np.ndarray) -> "LabeledDataset":
        return LabeledDataset(features, self.labels, self.class_count, self.class_ids)


def _parse_label(text: str, lineno: int, path) -> int:
    try:
        return int(text)
    except ValueError:
        pass
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{path}:{lineno}: label {text!r} is not an integer") from None
    if not value.is_integer():
        raise ParseError(f"{path}:{lineno}: label {text!r} is not an integer")
    return int(value)


def load_dataset(path, class_ids=None) -> LabeledDataset:
    """Read a headerless CSV: d feature columns then one integer label column.

    Labels are densified in order of first appearance. Pass ``class_ids`` (for
    example the training set's) to force the same mapping on a test file.
    """
    path = Path(path)
    rows: list[list[float]] = []
    raw_labels: list[int] = []
    width = None
    with path.open(newline="") as fh:
        for lineno, record in enumerate(csv.reader(fh), start=1):
            if not record or all(not cell.strip() for cell in record):
                continue
            if width is None:
                width = len(record)
                if width < 2:
                    raise ParseError(f"{path}:{lineno}: need at least one feature and a label")
            elif len(record) != width:
                raise ParseError(
                    f"{path}:{lineno}: expected {width} fields, found {len(record)}"
                )
            try:
                rows.append([float(cell) for cell in record[:-1]])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: non-numeric feature ({exc})") from None
            raw_labels.append(_parse_label(record[-1].strip(), lineno, path))
    if not rows:
        raise ValidationError(f"{path}: no samples")

    if class_ids is None:
        order: dict[int, int] = {}
        for lab in raw_labels:
            order.setdefault(lab, len(order))
    else:
        order = {int(lab): i for i, lab in enumerate(class_ids)}
        unknown = sorted(set(raw_labels) - set(order))
        if unknown:
            raise ValidationError(f"{path}: labels {unknown} not present in the class map")
    X = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(X)):
        bad = int(np.argwhere(~np.isfinite(X))[0, 0])
        raise ValidationError(f"{path}: non-finite value in sample {bad + 1}")
    y = np.array([order[lab] for lab in raw_labels], dtype=np.int64)
    ids = tuple(sorted(order, key=order.get))
    return LabeledDataset(X, y, len(ids), ids)


def save_dataset(ds: LabeledDataset, path, original_labels: bool = True) -> None:
    labels = np.asarray(ds.class_ids)[ds.labels] if original_labels else ds.labels
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row, lab in zip(ds.features, labels):
            writer.writerow([repr(float(v)) for v in row] + [int(lab)])


def subsample_size(n_class: int, fraction: float) -> int:
    """Round-half-up share of a class, never below one sample."""
    return max(1, min(n_class, math.floor(fraction * n_class + 0.5)))


def stratified_subsample(ds: LabeledDataset, fraction: float, seed) -> LabeledDataset:
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    rng = np.random.default_rng(seed)
    keep = []
    for c in range(ds.class_count):
        members = np.flatnonzero(ds.labels == c)
        m = subsample_size(members.size, fraction)
        keep.append(rng.choice(members, size=m, replace=False))
    # original row order is preserved, so fraction 1.0 returns the input unchanged
    return ds.subset(np.sort(np.concatenate(keep)))


def train_test_split(ds: LabeledDataset, test_fraction: float, seed):
    """Stratified split; every class keeps at least one sample on each side."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for c in range(ds.class_count):
        members = rng.permutation(np.flatnonzero(ds.labels == c))
        if members.size < 2:
            raise ValidationError(f"class {ds.class_ids[c]} has fewer than 2 samples")
        n_test = min(members.size - 1, subsample_size(members.size, test_fraction))
        test_idx.append(members[:n_test])
        train_idx.append(members[n_test:])
    return (
        ds.subset(np.sort(np.concatenate(train_idx))),
        ds.subset(np.sort(np.concatenate(test_idx))),
    )


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters for :func:`generate_synthetic`.

    ``class_separation`` is the stationary std of each class's mean spectrum and
    ``noise_std`` the per-band std of the sample noise, both in feature units.
    """

    class_count: int = 3
    samples_per_class: int = 50
    band_count: int = 60
    spectral_smoothness: float = 0.9
    class_separation: float = 1.0
    noise_std: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.class_count < 2:
            raise ValidationError("class_count must be >= 2")
        if self.samples_per_class < 1:
            raise ValidationError("samples_per_class must be >= 1")
        if self.band_count < 2:
            raise ValidationError("band_count must be >= 2")
        if not 0.0 <= self.spectral_smoothness < 1.0:
            raise ValidationError("spectral_smoothness must be in [0, 1)")
        if not self.noise_std > 0:
            raise ValidationError("noise_std must be positive")
        if self.class_separation < 0:
            raise ValidationError("class_separation must be non-negative")


def _ar1(rng: np.random.Generator, rows: int, bands: int, rho: float, scale: float) -> np.ndarray:
    # stationary AR(1) along the band axis with marginal std `scale`
    eps = rng.standard_normal((rows, bands)) * scale
    out = np.empty_like(eps)
    out[:, 0] = eps[:, 0]
    innov = math.sqrt(1.0 - rho * rho)
    for b in range(1, bands):
        out[:, b] = rho * out[:, b - 1] + innov * eps[:, b]
    return out


def generate_synthetic(spec: SyntheticSpec) -> LabeledDataset:
    rng = np.random.default_rng(spec.seed)
    rho = spec.spectral_smoothness
    means = _ar1(rng, spec.class_count, spec.band_count, rho, spec.class_separation)
    n = spec.class_count * spec.samples_per_class
    labels = np.repeat(np.arange(spec.class_count), spec.samples_per_class)
    noise = _ar1(rng, n, spec.band_count, rho, spec.noise_std)
    return LabeledDataset(means[labels] + noise, labels, spec.class_count)


@dataclass(frozen=True, eq=False)
class Standardizer:
    """Per-band affine map fitted on training data."""

    means: np.ndarray
    scales: np.ndarray = field(repr=False)

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.means) / self.scales

    def inverse_transform(self, Z) -> np.ndarray:
        return np.asarray(Z, dtype=np.float64) * self.scales + self.means

    def apply(self, ds: LabeledDataset) -> LabeledDataset:
        return ds.with_features(self.transform(ds.features))

    def to_dict(self) -> dict:
        return {"means": self.means.tolist(), "scales": self.scales.tolist()}


def standardize(ds: LabeledDataset) -> tuple[LabeledDataset, Standardizer]:
    """Zero-mean, unit sample-std bands; near-constant bands keep scale 1."""
    means = ds.features.mean(axis=0)
    stds = ds.features.std(axis=0, ddof=1)
    scales = np.where(stds < 1e-12, 1.0, stds)
    tf = Standardizer(means, scales)
    return tf.apply(ds), tf
