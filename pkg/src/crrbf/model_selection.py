"""Cross-validation, exhaustive grid search and repeated random-kernel trials."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .band_clustering import cluster_bands
from .dataset import LabeledDataset, ValidationError, stratified_subsample
from .kernels import GammaSampler, Kernel, Linear, Polynomial, Rbf, gram, sample_crrbf, sample_rrbf
from .metrics import cohen_kappa, confusion, overall_accuracy, trial_stats
from .svm import TrainConfig, predict_gram, train_ovo_gram

DEFAULT_TRADE_OFFS = tuple(float(2**i) for i in range(11))
DEFAULT_CLUSTER_COUNTS = tuple(range(3, 11))
DEFAULT_FRACTIONS = (0.10, 0.20, 0.30, 0.40, 0.50, 0.75)


def default_rbf_gammas(start: float = 0.01, stop: float = 20.0, step: float = 1.0) -> list:
    """Arithmetic grid from ``start`` in ``step`` increments, capped by ``stop``.

    The defaults give 0.01, 1.01, ..., 19.01, 20 (21 values).
    """
    values = []
    g = start
    while g < stop - 1e-12:
        values.append(round(g, 10))
        g += step
    values.append(float(stop))
    return values


def default_polynomial_degrees() -> list:
    return list(range(1, 11))


def derive_seed(base: int, *keys: int) -> int:
    """Deterministic 32-bit seed from a base seed and integer keys."""
    entropy = [int(base) & 0xFFFFFFFF] + [int(k) & 0xFFFFFFFF for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint32)[0])


def _map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- folds / CV


def stratified_kfold(labels, fold_count: int, seed) -> list:
    """(train_indices, validation_indices) per fold, balanced within each class."""
    if fold_count < 2:
        raise ValueError("fold_count must be >= 2")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    buckets = [[] for _ in range(fold_count)]
    offset = 0
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        if members.size < fold_count:
            raise ValidationError(
                f"class {int(c)} has {members.size} samples, fewer than {fold_count} folds"
            )
        chunks = np.array_split(rng.permutation(members), fold_count)
        for j, chunk in enumerate(chunks):
            buckets[(j + offset) % fold_count].append(chunk)
        # rotate so the larger chunks of successive classes land in different folds
        offset += members.size % fold_count
    everything = np.arange(labels.size)
    folds = []
    for parts in buckets:
        val = np.sort(np.concatenate(parts))
        folds.append((np.setdiff1d(everything, val, assume_unique=True), val))
    return folds


@dataclass(frozen=True)
class CVResult:
    mean_accuracy: float
    fold_accuracies: tuple
    nonconverged: int = 0


def cross_validate_gram(K, labels, class_count: int, config: TrainConfig, folds) -> CVResult:
    K = np.asarray(K)
    labels = np.asarray(labels)
    accs, bad = [], 0
    for train_idx, val_idx in folds:
        model = train_ovo_gram(K[np.ix_(train_idx, train_idx)], labels[train_idx],
                               class_count, config)
        bad += model.nonconverged_count()
        pred = predict_gram(model, K[np.ix_(val_idx, train_idx)])
        accs.append(overall_accuracy(confusion(labels[val_idx], pred, class_count)))
    return CVResult(float(np.mean(accs)), tuple(accs), bad)


def cross_validate(ds: LabeledDataset, spec: Kernel, config: TrainConfig, folds) -> float:
    """Unweighted mean validation accuracy over ``folds``."""
    K = gram(spec, ds.features)
    return cross_validate_gram(K, ds.labels, ds.class_count, config, folds).mean_accuracy


# ---------------------------------------------------------------- grid search


@dataclass(frozen=True)
class GridSpec:
    trade_off_values: tuple = DEFAULT_TRADE_OFFS
    rbf_gamma_values: tuple | None = None
    polynomial_degrees: tuple | None = None
    fold_count: int = 5
    seed: int = 0

    def __post_init__(self):
        for name in ("trade_off_values", "rbf_gamma_values", "polynomial_degrees"):
            value = getattr(self, name)
            if value is not None:
                if len(value) == 0:
                    raise ValueError(f"{name} must not be empty")
                object.__setattr__(self, name, tuple(value))
        if any(c <= 0 for c in self.trade_off_values):
            raise ValueError("trade-off values must be positive")
        if self.fold_count < 2:
            raise ValueError("fold_count must be >= 2")

    def kernel_grid(self, family: str) -> list:
        if family == "linear":
            return [(None, Linear())]
        if family == "rbf":
            return [(g, Rbf(g)) for g in self.rbf_gamma_values or ()]
        if family == "polynomial":
            return [(p, Polynomial(p)) for p in self.polynomial_degrees or ()]
        raise ValueError(f"grid search supports linear, rbf, polynomial; got {family!r}")


@dataclass(frozen=True)
class GridPoint:
    trade_off: float
    kernel_param: float | None
    mean_accuracy: float
    fold_std: float
    nonconverged: int = 0


@dataclass
class GridSearchResult:
    family: str
    best: GridPoint
    table: list
    seconds: float = 0.0

    @property
    def best_kernel(self) -> Kernel:
        p = self.best.kernel_param
        return {"linear": lambda: Linear(), "rbf": lambda: Rbf(p),
                "polynomial": lambda: Polynomial(int(p))}[self.family]()


def _grid_key(point: GridPoint):
    param = point.kernel_param if point.kernel_param is not None else 0.0
    return (-point.mean_accuracy, point.trade_off, param)


def grid_search(ds: LabeledDataset, family: str, grid: GridSpec,
                config: TrainConfig = TrainConfig(), workers: int = 1) -> GridSearchResult:
    """Exhaustive CV over (kernel parameter, trade-off).

    Highest mean accuracy wins; ties go to the smaller trade-off, then to the
    smaller kernel parameter.
    """
    kernels = grid.kernel_grid(family)
    if not kernels or not grid.trade_off_values:
        raise ValueError(f"empty grid for family {family!r}")
    start = time.perf_counter()
    folds = stratified_kfold(ds.labels, grid.fold_count, grid.seed)

    def run(item):
        param, spec = item
        K = gram(spec, ds.features)
        rows = []
        for C in grid.trade_off_values:
            cv = cross_validate_gram(K, ds.labels, ds.class_count, config.with_trade_off(C), folds)
            std = float(np.std(cv.fold_accuracies, ddof=1))
            rows.append(GridPoint(float(C), param, cv.mean_accuracy, std, cv.nonconverged))
        return rows

    table = [row for rows in _map(run, kernels, workers) for row in rows]
    best = min(table, key=_grid_key)
    return GridSearchResult(family, best, table, time.perf_counter() - start)


# ---------------------------------------------------------------- random-kernel trials


@dataclass(frozen=True)
class TrialPlan:
    cluster_counts: tuple = DEFAULT_CLUSTER_COUNTS
    repeats: int = 10
    sampler: GammaSampler = GammaSampler()
    base_seed: int = 0

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if not self.cluster_counts or min(self.cluster_counts) < 1:
            raise ValueError("cluster counts must be positive")
        object.__setattr__(self, "cluster_counts", tuple(int(k) for k in self.cluster_counts))


def trial_seeds(base: int, k: int, repeat: int) -> tuple:
    """(clustering seed, gamma seed) for one trial."""
    return derive_seed(base, k, repeat, 0), derive_seed(base, k, repeat, 1)


def evaluate_kernel(train: LabeledDataset, test: LabeledDataset, spec: Kernel,
                    trade_offs, config: TrainConfig):
    """Train on all of ``train`` for each trade-off; (OA, kappa, nonconverged) per C."""
    K = gram(spec, train.features)
    Kt = gram(spec, test.features, train.features)
    out = []
    for C in trade_offs:
        model = train_ovo_gram(K, train.labels, train.class_count, config.with_trade_off(C))
        cm = confusion(test.labels, predict_gram(model, Kt), train.class_count)
        out.append((overall_accuracy(cm), cohen_kappa(cm), model.nonconverged_count()))
    return out


@dataclass
class TrialTable:
    """Test accuracies indexed by (cluster count, trade-off, repeat)."""

    cluster_counts: tuple
    trade_offs: tuple
    accuracy: np.ndarray
    kappa: np.ndarray
    kernels: dict = field(default_factory=dict)
    nonconverged: int = 0

    @property
    def repeats(self) -> int:
        return self.accuracy.shape[2]

    def mean(self) -> np.ndarray:
        return self.accuracy.mean(axis=2)

    def std(self, ddof: int = 1) -> np.ndarray:
        if self.repeats <= ddof:
            return np.zeros(self.accuracy.shape[:2])
        return self.accuracy.std(axis=2, ddof=ddof)

    def kappa_mean(self) -> np.ndarray:
        return self.kappa.mean(axis=2)

    def best_cell(self):
        """(k, C, mean OA, mean kappa) of the highest mean-accuracy cell.

        Ties go to the smaller cluster count, then the smaller trade-off.
        """
        m = self.mean()
        i, j = np.unravel_index(int(np.argmax(m)), m.shape)
        return (self.cluster_counts[i], self.trade_offs[j], float(m[i, j]),
                float(self.kappa_mean()[i, j]))

    def max_over_trade_off(self) -> np.ndarray:
        """Per cluster count: best trade-off of the repeat-averaged accuracy."""
        return self.mean().max(axis=1)

    def mean_of_per_trial_max(self) -> np.ndarray:
        """Per cluster count: repeat average of each trial's best trade-off."""
        return self.accuracy.max(axis=1).mean(axis=1)

    def robustness_std(self, ddof: int = 1) -> float:
        return trial_stats(self.max_over_trade_off(), ddof=ddof).std


def run_random_trials(train: LabeledDataset, test: LabeledDataset, make_kernel,
                      cluster_counts, repeats: int, trade_offs, base_seed: int,
                      config: TrainConfig = TrainConfig(), workers: int = 1) -> TrialTable:
    """Shared driver: ``make_kernel(k, repeat) -> Kernel`` builds each trial's kernel."""
    if train.band_count != test.band_count:
        raise ValueError("train and test band counts differ")
    trade_offs = tuple(float(c) for c in trade_offs)
    tasks = [(ki, k, r) for ki, k in enumerate(cluster_counts) for r in range(repeats)]

    def run(task):
        ki, k, r = task
        spec = make_kernel(k, r)
        return task, spec, evaluate_kernel(train, test, spec, trade_offs, config)

    acc = np.zeros((len(cluster_counts), len(trade_offs), repeats))
    kap = np.zeros_like(acc)
    kernels, bad = {}, 0
    for (ki, k, r), spec, results in _map(run, tasks, workers):
        for ci, (oa, kappa, nc) in enumerate(results):
            acc[ki, ci, r] = oa
            kap[ki, ci, r] = kappa
            bad += nc
        kernels[(k, r)] = spec.to_dict()
    return TrialTable(tuple(cluster_counts), trade_offs, acc, kap, kernels, bad)


def run_crrbf_trials(train: LabeledDataset, test: LabeledDataset, plan: TrialPlan,
                     trade_off_values=DEFAULT_TRADE_OFFS, config: TrainConfig = TrainConfig(),
                     workers: int = 1) -> TrialTable:
    """Cluster-count by trade-off sweep, ``plan.repeats`` random kernels per count."""
    bad_k = [k for k in plan.cluster_counts if k > train.band_count]
    if bad_k:
        raise ValueError(f"cluster counts {bad_k} exceed the band count {train.band_count}")

    def make(k, r):
        cseed, gseed = trial_seeds(plan.base_seed, k, r)
        return sample_crrbf(cluster_bands(train, k, cseed), plan.sampler.with_seed(gseed))

    return run_random_trials(train, test, make, plan.cluster_counts, plan.repeats,
                             trade_off_values, plan.base_seed, config, workers)


def run_rrbf_trials(train: LabeledDataset, test: LabeledDataset, repeats: int,
                    sampler: GammaSampler, trade_off_values, base_seed: int = 0,
                    config: TrainConfig = TrainConfig(), workers: int = 1) -> TrialTable:
    """Per-band random widths; reported under cluster count = band count."""
    d = train.band_count

    def make(k, r):
        return sample_rrbf(d, sampler.with_seed(derive_seed(base_seed, k, r, 1)))

    return run_random_trials(train, test, make, (d,), repeats, trade_off_values,
                             base_seed, config, workers)


@dataclass(frozen=True)
class FractionRow:
    fraction: float
    mean_accuracy: float
    std_accuracy: float
    mean_kappa: float
    accuracies: tuple
    train_size: int


def training_fraction_sweep(train: LabeledDataset, test: LabeledDataset, fractions,
                            cluster_count: int, trade_off: float, repeats: int,
                            sampler: GammaSampler = GammaSampler(), base_seed: int = 0,
                            config: TrainConfig = TrainConfig(), workers: int = 1) -> list:
    """CRRBF accuracy when training on stratified fractions of ``train``.

    Trial seeds match :func:`run_crrbf_trials`, so fraction 1.0 reproduces its
    (cluster_count, trade_off) cell exactly.
    """
    for f in fractions:
        if not 0.0 < f <= 1.0:
            raise ValueError(f"fraction {f} outside (0, 1]")
    k = int(cluster_count)
    tasks = [(fi, f, r) for fi, f in enumerate(fractions) for r in range(repeats)]

    def run(task):
        fi, f, r = task
        sub = stratified_subsample(train, f, derive_seed(base_seed, k, r, 2, fi))
        cseed, gseed = trial_seeds(base_seed, k, r)
        spec = sample_crrbf(cluster_bands(sub, k, cseed), sampler.with_seed(gseed))
        (oa, kappa, _), = evaluate_kernel(sub, test, spec, (trade_off,), config)
        return fi, oa, kappa, sub.n_samples

    acc = np.zeros((len(fractions), repeats))
    kap = np.zeros_like(acc)
    sizes = [0] * len(fractions)
    for (fi, _, r), (_, oa, kappa, n) in zip(tasks, _map(run, tasks, workers)):
        acc[fi, r], kap[fi, r] = oa, kappa
        sizes[fi] = n
    rows = []
    for fi, f in enumerate(fractions):
        stats = trial_stats(acc[fi])
        rows.append(FractionRow(float(f), stats.mean, stats.std, float(kap[fi].mean()),
                                tuple(acc[fi].tolist()), sizes[fi]))
    return rows
