"""End-to-end acceptance criteria, one PASS/FAIL line each.

Run alone with ``pytest tests/test_acceptance.py -v``; the lines are repeated
in the terminal summary. Criterion 8 needs CSV exports of the three
benchmark scenes in ``$CRRBF_REAL_DATA`` and is skipped otherwise.
"""

import json
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from crrbf.band_clustering import BandClustering, cluster_bands
from crrbf.cli import main
from crrbf.dataset import SyntheticSpec, generate_synthetic, load_dataset, standardize, train_test_split
from crrbf.kernels import (
    Crrbf,
    GammaSampler,
    Linear,
    Polynomial,
    Rbf,
    Rrbf,
    eval_crrbf,
    eval_rbf,
    eval_rrbf,
    evaluate,
    gram,
    sample_crrbf,
)
from crrbf.metrics import cohen_kappa, confusion, overall_accuracy, per_class_accuracy
from crrbf.model_selection import (
    DEFAULT_CLUSTER_COUNTS,
    DEFAULT_TRADE_OFFS,
    GridSpec,
    TrialPlan,
    default_rbf_gammas,
    derive_seed,
    evaluate_kernel,
    grid_search,
    run_crrbf_trials,
    training_fraction_sweep,
)
from crrbf.svm import TrainConfig, predict, train_binary, train_ovo
from oracles import brute_force_dual


def split(spec):
    return train_test_split(generate_synthetic(spec), 0.5, derive_seed(spec.seed, 7))


def tuned_rbf_accuracy(train, test):
    """5-fold CV over the full (gamma, C) grid, then one fit on all of train."""
    grid = GridSpec(DEFAULT_TRADE_OFFS, tuple(default_rbf_gammas()), fold_count=5, seed=0)
    gs = grid_search(train, "rbf", grid)
    (oa, _, _), = evaluate_kernel(train, test, gs.best_kernel, (gs.best.trade_off,), TrainConfig())
    return oa, gs


def random_clustering(d, rng):
    k = int(rng.integers(1, d + 1))
    assign = np.concatenate([np.arange(k), rng.integers(0, k, size=d - k)])
    return BandClustering(rng.permutation(assign))


def test_c1_kernel_properties(criterion):
    rng = np.random.default_rng(0)
    start = time.perf_counter()
    worst_id, worst_prod, failures = 0.0, 0.0, []
    for d in (1, 10, 103):
        for _ in range(200):
            x, y = rng.normal(size=d), rng.normal(size=d)
            gamma = float(rng.uniform(0.001, 1.0))
            bc = random_clustering(d, rng)
            g = rng.uniform(0.001, 1.0, bc.cluster_count)
            specs = [Linear(), Polynomial(3), Rbf(gamma), Rrbf(rng.uniform(0.001, 1, d)), Crrbf(bc, g)]
            for spec in specs:
                if evaluate(spec, x, y) != evaluate(spec, y, x):
                    failures.append(f"asymmetric {spec.family} d={d}")
                if spec.family in ("rbf", "rrbf", "crrbf") and not 0.0 < evaluate(spec, x, y) <= 1.0:
                    failures.append(f"{spec.family} out of (0,1] d={d}")
            one = BandClustering(np.zeros(d, dtype=int))
            singles = BandClustering(np.arange(d))
            gd = rng.uniform(0.001, 1.0, d)
            worst_id = max(
                worst_id,
                abs(eval_crrbf(x, y, one, [gamma]) - eval_rbf(x, y, gamma)),
                abs(eval_crrbf(x, y, singles, gd) - eval_rrbf(x, y, gd)),
                abs(eval_rrbf(x, y, np.full(d, gamma)) - eval_rbf(x, y, gamma)),
            )
            prod = math.prod(eval_rbf(x[m], y[m], g[c]) for c, m in enumerate(bc.groups()))
            value = eval_crrbf(x, y, bc, g)
            worst_prod = max(worst_prod, abs(value - prod) / max(abs(prod), 1e-300))
    seconds = time.perf_counter() - start
    ok = not failures and worst_id <= 1e-12 and worst_prod <= 1e-12 and seconds < 10
    criterion(1, ok, f"600 pairs, reduction err {worst_id:.1e}, product rel err {worst_prod:.1e}, "
                     f"{seconds:.1f}s{'; ' + failures[0] if failures else ''}")


def test_c2_psd(criterion):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    X = rng.normal(size=(200, 103))
    bc = cluster_bands(generate_synthetic(SyntheticSpec(2, 20, 103, 0.9, 1.0, 0.3, seed=1)), 6, seed=0)
    specs = [Linear(), Polynomial(2), Polynomial(5), Rbf(0.01), Rrbf(rng.uniform(0, 0.02, 103) + 1e-6),
             Crrbf(bc, rng.uniform(0, 0.02, 6) + 1e-6)]
    worst, names = math.inf, []
    for spec in specs:
        eig = np.linalg.eigvalsh(gram(spec, X))
        ratio = eig.min() / eig.max()
        worst = min(worst, ratio)
        if ratio < -1e-8:
            names.append(spec.family)
    seconds = time.perf_counter() - start
    criterion(2, not names and seconds < 30,
              f"5 families on 200x103, worst min/max eig {worst:.2e}, {seconds:.1f}s"
              + (f"; failing {names}" if names else ""))


def test_c3_smo_oracle(criterion):
    rng = np.random.default_rng(2)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 9))
        X = rng.normal(size=(n, 4))
        y = rng.choice([-1.0, 1.0], size=n)
        y[0], y[1] = 1.0, -1.0
        K = gram(Rbf(float(rng.uniform(0.05, 2.0))), X)
        for C in (1.0, 1024.0):
            best, _ = brute_force_dual(K, y, C)
            got = train_binary(K, y, TrainConfig(C)).dual_objective
            worst = max(worst, abs(got - best) / abs(best))
    m = train_binary(gram(Linear(), np.array([[-1.0], [1.0]])), np.array([-1.0, 1.0]), TrainConfig(10.0))
    two_err = max(np.max(np.abs(m.alphas - 0.5)), abs(m.bias))
    seconds = time.perf_counter() - start
    ok = worst <= 1e-4 and two_err <= 1e-6 and m.alphas.size == 2 and seconds < 60
    criterion(3, ok, f"100 dual problems, worst rel objective gap {worst:.1e}; "
                     f"2-point alpha/bias err {two_err:.1e}; {seconds:.1f}s")


def test_c4_multiclass_sanity(criterion):
    start = time.perf_counter()
    train, test = split(SyntheticSpec(3, 100, 60, 0.9, 0.05, 0.03, seed=0))
    rbf_oa, _ = tuned_rbf_accuracy(train, test)
    table = run_crrbf_trials(train, test, TrialPlan((3, 5), 10, GammaSampler(), 0))
    counts = []
    for i in range(2):
        j = int(np.argmax(table.mean()[i]))
        counts.append(int(np.sum(table.accuracy[i, j] >= 0.98)))
    seconds = time.perf_counter() - start
    ok = rbf_oa >= 0.98 and min(counts) >= 8 and seconds < 60
    criterion(4, ok, f"RBF test OA {rbf_oa:.4f}; CRRBF trials >= 0.98: k=3 {counts[0]}/10, "
                     f"k=5 {counts[1]}/10; {seconds:.1f}s")


PARITY_SEEDS = (0, 1, 2)


@pytest.fixture(scope="module")
def parity_runs():
    """RBF and CRRBF results on the three 5-class, 60-band synthetics."""
    runs = []
    for seed in PARITY_SEEDS:
        start = time.perf_counter()
        train, test = split(SyntheticSpec(5, 200, 60, 0.9, 0.05, 0.08, seed=seed))
        rbf_oa, gs = tuned_rbf_accuracy(train, test)
        table = run_crrbf_trials(train, test, TrialPlan(DEFAULT_CLUSTER_COUNTS, 10, GammaSampler(), seed))
        runs.append({"train": train, "test": test, "rbf": rbf_oa, "grid": gs, "table": table,
                     "seconds": time.perf_counter() - start})
    return runs


@pytest.mark.slow
def test_c5_parity(parity_runs, criterion):
    gaps, parts = [], []
    for seed, run in zip(PARITY_SEEDS, parity_runs):
        k, C, oa, _ = run["table"].best_cell()
        gaps.append(oa - run["rbf"])
        parts.append(f"seed {seed}: CRRBF {100 * oa:.2f} (k={k}, C={C:g}) vs RBF {100 * run['rbf']:.2f}")
    seconds = sum(r["seconds"] for r in parity_runs)
    ok = all(abs(g) <= 0.03 for g in gaps) and seconds < 300
    criterion(5, ok, "; ".join(parts) + f"; max |gap| {100 * max(map(abs, gaps)):.2f} pts; {seconds:.0f}s")


@pytest.mark.slow
def test_c6_cluster_count_robustness(parity_runs, criterion):
    stds = [100 * run["table"].robustness_std(ddof=1) for run in parity_runs]
    criterion(6, max(stds) <= 2.0,
              "sample std of max-over-C OA across k=3..10: " + ", ".join(f"{s:.2f}" for s in stds) + " pts")


@pytest.mark.slow
def test_c7_timing(criterion):
    train, test = split(SyntheticSpec(5, 200, 60, 0.9, 0.05, 0.08, seed=0))
    start = time.perf_counter()
    spec = sample_crrbf(cluster_bands(train, 5, seed=0), GammaSampler(seed=0))
    model = train_ovo(train, spec, TrainConfig(256.0))
    predict(model, test.features)
    crrbf_s = time.perf_counter() - start
    _, gs = tuned_rbf_accuracy(train, test)
    criterion(7, crrbf_s < gs.seconds,
              f"CRRBF train+predict {crrbf_s:.3f}s vs RBF 5-fold grid ({len(gs.table)} points) {gs.seconds:.2f}s")


REAL = {
    # name: (max OA over k, kappa at best cell, 10% fraction OA)
    "pavia": (82.46, 0.78, 75.34),
    "houston": (79.39, 0.78, 71.17),
    "ksc": (95.20, 0.95, 86.90),
}


@pytest.mark.slow
@pytest.mark.parametrize("name", sorted(REAL))
def test_c8_real_data(name, criterion):
    root = os.environ.get("CRRBF_REAL_DATA")
    if not root or not (Path(root) / f"{name}_train.csv").exists():
        criterion.skip(8, f"{name}: set CRRBF_REAL_DATA to a directory with {name}_train.csv and {name}_test.csv")
    train = load_dataset(Path(root) / f"{name}_train.csv")
    test = load_dataset(Path(root) / f"{name}_test.csv", class_ids=train.class_ids)
    train, tf = standardize(train)
    test = tf.apply(test)
    table = run_crrbf_trials(train, test, TrialPlan(DEFAULT_CLUSTER_COUNTS, 10, GammaSampler(), 0),
                             workers=os.cpu_count() or 1)
    k, C, oa, kappa = table.best_cell()
    (row,) = training_fraction_sweep(train, test, (0.1,), k, C, 10, workers=os.cpu_count() or 1)
    want_oa, want_kappa, want_frac = REAL[name]
    ok = (abs(100 * oa - want_oa) <= 2.0 and abs(kappa - want_kappa) <= 0.03
          and abs(100 * row.mean_accuracy - want_frac) <= 3.0)
    criterion(8, ok, f"{name}: max OA {100 * oa:.2f} (ref {want_oa}), kappa {kappa:.3f} "
                     f"(ref {want_kappa}), 10% OA {100 * row.mean_accuracy:.2f} (ref {want_frac})")


def test_c9_metrics(criterion):
    start = time.perf_counter()
    checks = {
        "diag": abs(cohen_kappa(np.diag([7, 3, 9])) - 1.0),
        "chance": abs(cohen_kappa(np.array([[1, 1], [1, 1]])) - 0.0),
        "hand": abs(cohen_kappa(np.array([[45, 5], [15, 35]])) - 0.6),
    }
    rng = np.random.default_rng(9)
    for _ in range(100):
        cm = rng.integers(1, 30, (5, 5))
        rows = cm.sum(axis=1)
        checks["oa_trace"] = max(checks.get("oa_trace", 0.0), abs(overall_accuracy(cm) - np.trace(cm) / cm.sum()))
        checks["oa_weighted"] = max(checks.get("oa_weighted", 0.0),
                                    abs(overall_accuracy(cm) - per_class_accuracy(cm) @ rows / rows.sum()))
    t = rng.integers(0, 4, 60)
    checks["oa_perfect"] = abs(overall_accuracy(confusion(t, t, 4)) - 1.0)
    seconds = time.perf_counter() - start
    worst = max(checks.values())
    criterion(9, worst <= 1e-12 and seconds < 1, f"worst deviation {worst:.1e} over {len(checks)} identities, "
                                                 f"{seconds:.3f}s")


def test_c10_determinism(tmp_path, criterion):
    start = time.perf_counter()
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps({
        "scenario": "cluster_sweep",
        "data": {"synthetic": {"class_count": 4, "samples_per_class": 60, "band_count": 30,
                               "spectral_smoothness": 0.9, "class_separation": 0.05,
                               "noise_std": 0.08, "seed": 3}},
        "repeats": 3, "seed": 11,
    }))
    codes = [main(["experiment", "--config", str(cfg), "--out", str(tmp_path / d)]) for d in ("a", "b")]
    a, b = (tmp_path / "a" / "scores.csv").read_bytes(), (tmp_path / "b" / "scores.csv").read_bytes()
    seconds = time.perf_counter() - start
    rows = a.count(b"\n") - 1
    criterion(10, codes == [0, 0] and a == b and seconds < 60,
              f"scenario (a) twice, {rows} score rows, identical={a == b}, exit codes {codes}, {seconds:.1f}s")
