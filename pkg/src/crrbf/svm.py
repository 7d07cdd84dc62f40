"""Soft-margin SVM on precomputed Gram matrices.

Binary problems are solved with SMO (``crrbf._backend.smo_solve``); multiclass
problems use one-vs-one voting over all class pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import _backend
from .dataset import LabeledDataset
from .kernels import Kernel, gram, kernel_from_dict


@dataclass(frozen=True)
class TrainConfig:
    trade_off: float = 1.0
    kkt_tolerance: float = 1e-3
    max_passes_without_progress: int = 10
    max_iterations: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if not self.trade_off > 0:
            raise ValueError(f"trade_off must be positive, got {self.trade_off}")
        if not self.kkt_tolerance > 0:
            raise ValueError("kkt_tolerance must be positive")
        if self.max_iterations < 1 or self.max_passes_without_progress < 0:
            raise ValueError("iteration limits must be positive")

    def with_trade_off(self, C: float) -> "TrainConfig":
        return TrainConfig(C, self.kkt_tolerance, self.max_passes_without_progress,
                           self.max_iterations, self.seed)


@dataclass(frozen=True, eq=False)
class BinarySvmModel:
    """Support coefficients of one binary problem.

    ``support_indices`` index the rows of the Gram matrix the model was trained
    on; ``decision_values`` expects cross-Gram columns in the same order.
    """

    support_indices: np.ndarray
    alphas: np.ndarray
    signed_labels: np.ndarray
    bias: float
    trade_off: float = 1.0
    converged: bool = True
    iterations: int = 0
    kkt_violation: float = 0.0
    dual_objective: float = float("nan")

    @property
    def dual_coef(self) -> np.ndarray:
        return self.alphas * self.signed_labels

    def remapped(self, index_map: np.ndarray) -> "BinarySvmModel":
        return BinarySvmModel(
            np.asarray(index_map)[self.support_indices], self.alphas, self.signed_labels,
            self.bias, self.trade_off, self.converged, self.iterations,
            self.kkt_violation, self.dual_objective,
        )

    def to_dict(self) -> dict:
        return {
            "support_indices": self.support_indices.tolist(),
            "alphas": self.alphas.tolist(),
            "signed_labels": self.signed_labels.astype(int).tolist(),
            "bias": self.bias,
            "trade_off": self.trade_off,
            "converged": self.converged,
            "iterations": self.iterations,
            "kkt_violation": self.kkt_violation,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BinarySvmModel":
        return cls(
            np.array(doc["support_indices"], dtype=np.intp),
            np.array(doc["alphas"], dtype=np.float64),
            np.array(doc["signed_labels"], dtype=np.float64),
            float(doc["bias"]),
            float(doc.get("trade_off", 1.0)),
            bool(doc.get("converged", True)),
            int(doc.get("iterations", 0)),
            float(doc.get("kkt_violation", 0.0)),
        )


def dual_objective(gram, signed_labels, alphas) -> float:
    """sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij, the quantity SMO maximizes."""
    ay = np.asarray(alphas) * np.asarray(signed_labels)
    return float(np.sum(alphas) - 0.5 * ay @ np.asarray(gram) @ ay)


def train_binary(gram_matrix, signed_labels, config: TrainConfig = TrainConfig()) -> BinarySvmModel:
    K = np.ascontiguousarray(gram_matrix, dtype=np.float64)
    y = np.asarray(signed_labels, dtype=np.float64).reshape(-1)
    n = y.size
    if K.shape != (n, n):
        raise ValueError(f"gram is {K.shape}, expected ({n}, {n})")
    if not np.all(np.abs(y) == 1):
        raise ValueError("signed labels must be +1 or -1")
    if np.all(y == y[0]):
        raise ValueError("both classes must be present")

    # solve in a fixed orientation so that flipping every label flips f exactly
    flip = y[0] < 0
    ys = np.ascontiguousarray(-y if flip else y)
    C = float(config.trade_off)
    alpha, grad, iterations, gap, converged = _backend.smo_solve(
        K, ys, C, float(config.kkt_tolerance), int(config.max_iterations),
        int(config.max_passes_without_progress), int(config.seed),
    )
    F = -ys * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        bias = float(F[free].mean())
    else:
        pos = ys > 0
        up = (pos & (alpha < C)) | (~pos & (alpha > 0))
        low = (pos & (alpha > 0)) | (~pos & (alpha < C))
        hi = F[up].max() if up.any() else F[low].min()
        lo = F[low].min() if low.any() else F[up].max()
        bias = float(0.5 * (hi + lo))
    if flip:
        bias = -bias

    # grad = Qa - e, so W = sum(a) - 1/2 a'(grad + e)
    objective = float(alpha.sum() - 0.5 * alpha @ (grad + 1.0))
    sv = np.flatnonzero(alpha > 0)
    return BinarySvmModel(
        support_indices=sv,
        alphas=alpha[sv],
        signed_labels=y[sv],
        bias=bias,
        trade_off=C,
        converged=bool(converged),
        iterations=int(iterations),
        kkt_violation=max(0.0, float(gap)),
        dual_objective=objective,
    )


def decision_values(model: BinarySvmModel, cross_gram) -> np.ndarray:
    """f(x) = sum_i a_i y_i K(x, x_i) + b for each row of ``cross_gram``.

    ``cross_gram`` columns must line up with ``model.support_indices``.
    """
    Kx = np.asarray(cross_gram, dtype=np.float64)
    if Kx.ndim != 2 or Kx.shape[1] != model.support_indices.size:
        raise ValueError(
            f"cross gram has shape {Kx.shape}; need {model.support_indices.size} columns"
        )
    return Kx @ model.dual_coef + model.bias


def vote(decisions, pairs, class_count: int) -> np.ndarray:
    """One-vs-one majority vote.

    ``decisions[:, p]`` > 0 votes for ``pairs[p][0]``, otherwise for
    ``pairs[p][1]``. Ties go to the class with the largest summed |decision|
    over the votes it won, then to the smallest class id.
    """
    D = np.asarray(decisions, dtype=np.float64)
    n = D.shape[0]
    votes = np.zeros((n, class_count), dtype=np.int64)
    strength = np.zeros((n, class_count))
    rows = np.arange(n)
    for p, (a, b) in enumerate(pairs):
        winner = np.where(D[:, p] > 0, a, b)
        np.add.at(votes, (rows, winner), 1)
        np.add.at(strength, (rows, winner), np.abs(D[:, p]))
    tied = votes == votes.max(axis=1, keepdims=True)
    return np.argmax(np.where(tied, strength, -np.inf), axis=1)


@dataclass(frozen=True, eq=False)
class MulticlassSvmModel:
    """One binary model per class pair (a, b), a < b, with a as the +1 side.

    Binary support indices refer to rows of the full training set. When built
    by :func:`train_ovo` the model also keeps the kernel and the support rows
    it needs to predict on raw features.
    """

    class_count: int
    pairs: list
    binaries: list
    kernel: Kernel | None = None
    support_rows: np.ndarray | None = None
    support_vectors: np.ndarray | None = None
    class_ids: tuple = ()
    _columns: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.support_rows is not None and not self._columns:
            cols = [np.searchsorted(self.support_rows, m.support_indices) for m in self.binaries]
            object.__setattr__(self, "_columns", cols)

    @property
    def converged(self) -> bool:
        return all(m.converged for m in self.binaries)

    def nonconverged_count(self) -> int:
        return sum(not m.converged for m in self.binaries)

    def to_dict(self) -> dict:
        return {
            "class_count": self.class_count,
            "class_ids": list(self.class_ids),
            "pairs": [list(p) for p in self.pairs],
            "binaries": [m.to_dict() for m in self.binaries],
            "kernel": None if self.kernel is None else self.kernel.to_dict(),
            "support_rows": None if self.support_rows is None else self.support_rows.tolist(),
            "support_vectors": None if self.support_vectors is None else self.support_vectors.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MulticlassSvmModel":
        rows = doc.get("support_rows")
        vecs = doc.get("support_vectors")
        return cls(
            class_count=int(doc["class_count"]),
            pairs=[tuple(p) for p in doc["pairs"]],
            binaries=[BinarySvmModel.from_dict(m) for m in doc["binaries"]],
            kernel=None if doc.get("kernel") is None else kernel_from_dict(doc["kernel"]),
            support_rows=None if rows is None else np.array(rows, dtype=np.intp),
            support_vectors=None if vecs is None else np.array(vecs, dtype=np.float64),
            class_ids=tuple(doc.get("class_ids", ())),
        )


def train_ovo_gram(gram_matrix, labels, class_count: int, config: TrainConfig = TrainConfig()
                   ) -> MulticlassSvmModel:
    """Train every class pair on slices of one precomputed full Gram matrix."""
    K = np.asarray(gram_matrix, dtype=np.float64)
    labels = np.asarray(labels)
    if class_count < 2:
        raise ValueError("need at least two classes")
    pairs, binaries = [], []
    for a, b in combinations(range(class_count), 2):
        idx = np.flatnonzero((labels == a) | (labels == b))
        y = np.where(labels[idx] == a, 1.0, -1.0)
        model = train_binary(K[np.ix_(idx, idx)], y, config)
        pairs.append((a, b))
        binaries.append(model.remapped(idx))
    return MulticlassSvmModel(class_count, pairs, binaries)


def train_ovo(ds: LabeledDataset, spec: Kernel, config: TrainConfig = TrainConfig()
              ) -> MulticlassSvmModel:
    K = gram(spec, ds.features)
    fitted = train_ovo_gram(K, ds.labels, ds.class_count, config)
    rows = np.unique(np.concatenate([m.support_indices for m in fitted.binaries]))
    return MulticlassSvmModel(
        ds.class_count, fitted.pairs, fitted.binaries, spec, rows,
        np.array(ds.features[rows]), ds.class_ids,
    )


def pair_decisions(model: MulticlassSvmModel, cross_gram, full: bool = False) -> np.ndarray:
    """Decision values for every pair, shape (n_test, n_pairs).

    ``full=True`` means the cross-Gram columns are all training samples;
    otherwise they are ``model.support_rows``.
    """
    Kx = np.asarray(cross_gram, dtype=np.float64)
    out = np.empty((Kx.shape[0], len(model.binaries)))
    for p, m in enumerate(model.binaries):
        cols = m.support_indices if full else model._columns[p]
        out[:, p] = Kx[:, cols] @ m.dual_coef + m.bias
    return out


def predict_gram(model: MulticlassSvmModel, cross_gram_full) -> np.ndarray:
    """Labels from a test-by-all-training-samples kernel matrix."""
    return vote(pair_decisions(model, cross_gram_full, full=True), model.pairs, model.class_count)


def predict(model: MulticlassSvmModel, X_test) -> np.ndarray:
    if model.kernel is None or model.support_vectors is None:
        raise ValueError("model has no stored kernel/support vectors; use predict_gram")
    X = np.asarray(X_test, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.support_vectors.shape[1]:
        raise ValueError(
            f"test data has {X.shape[-1]} bands, model expects {model.support_vectors.shape[1]}"
        )
    if X.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    Kx = gram(model.kernel, X, model.support_vectors)
    return vote(pair_decisions(model, Kx), model.pairs, model.class_count)
