"""Config-driven experiment scenarios and report files.

Three scenarios are supported:

``cluster_sweep``
    cluster count x trade-off grid of CRRBF accuracies, ``repeats`` random
    kernels per cell.
``fraction_sweep``
    CRRBF accuracy when training on stratified fractions of the training set,
    at a fixed (cluster count, trade-off), optionally read from a
    ``cluster_sweep`` report.
``kernel_comparison``
    RBF and polynomial tuned by k-fold CV against RRBF and CRRBF, per training
    fraction, with CV wall-clock times.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import (
    DatasetError,
    SyntheticSpec,
    generate_synthetic,
    load_dataset,
    standardize,
    stratified_subsample,
    train_test_split,
)
from .kernels import FAMILIES, GammaSampler
from .metrics import TimingRecord, trial_stats
from .model_selection import (
    DEFAULT_CLUSTER_COUNTS,
    DEFAULT_FRACTIONS,
    DEFAULT_TRADE_OFFS,
    GridSpec,
    TrialPlan,
    derive_seed,
    evaluate_kernel,
    grid_search,
    default_polynomial_degrees,
    default_rbf_gammas,
    run_crrbf_trials,
    run_rrbf_trials,
    training_fraction_sweep,
)
from .svm import TrainConfig

log = logging.getLogger(__name__)

REPORT_FORMAT = 1
SCENARIOS = ("cluster_sweep", "fraction_sweep", "kernel_comparison")


class ConfigError(ValueError):
    pass


class ReportError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    scenario: str
    train_path: str | None = None
    test_path: str | None = None
    synthetic: SyntheticSpec | None = None
    test_fraction: float = 0.5
    standardize: bool | None = None
    seed: int = 0
    trade_off_values: list = field(default_factory=lambda: list(DEFAULT_TRADE_OFFS))
    cluster_counts: list = field(default_factory=lambda: list(DEFAULT_CLUSTER_COUNTS))
    repeats: int = 10
    gamma_range: tuple = (0.0, 1.0)
    fractions: list = field(default_factory=lambda: list(DEFAULT_FRACTIONS))
    cluster_count: int | None = None
    trade_off: float | None = None
    from_report: str | None = None
    kernels: list = field(default_factory=lambda: ["rbf", "polynomial", "rrbf", "crrbf"])
    rbf_gamma_values: list = field(default_factory=default_rbf_gammas)
    polynomial_degrees: list = field(default_factory=default_polynomial_degrees)
    fold_count: int = 5
    kkt_tolerance: float = 1e-3
    max_iterations: int = 100_000
    max_passes_without_progress: int = 10
    workers: int = 1
    output_dir: str = "results"

    @property
    def use_standardization(self) -> bool:
        if self.standardize is not None:
            return self.standardize
        return self.synthetic is None

    def train_config(self) -> TrainConfig:
        return TrainConfig(1.0, self.kkt_tolerance, self.max_passes_without_progress,
                           self.max_iterations, self.seed)

    def sampler(self) -> GammaSampler:
        return GammaSampler(self.gamma_range[0], self.gamma_range[1], self.seed)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["synthetic"] = None if self.synthetic is None else asdict(self.synthetic)
        doc["gamma_range"] = list(self.gamma_range)
        return doc

    @classmethod
    def from_dict(cls, doc: dict, base_dir=None) -> "ExperimentConfig":
        problems = []
        known = {f for f in cls.__dataclass_fields__} | {"data", "train", "format_version"}
        unknown = sorted(set(doc) - known)
        if unknown:
            problems.append(f"unknown keys: {', '.join(unknown)}")
        scenario = doc.get("scenario")
        if scenario not in SCENARIOS:
            problems.append(f"scenario must be one of {', '.join(SCENARIOS)}, got {scenario!r}")
        kwargs = {k: doc[k] for k in doc if k in cls.__dataclass_fields__}

        data = doc.get("data", {})
        sources = [k for k in ("train", "synthetic") if data.get(k) is not None]
        if len(sources) != 1:
            problems.append("data must give exactly one of 'train' (+ 'test') or 'synthetic'")
        if data.get("synthetic") is not None:
            try:
                kwargs["synthetic"] = SyntheticSpec(**data["synthetic"])
            except (TypeError, DatasetError) as exc:
                problems.append(f"synthetic: {exc}")
            kwargs["test_fraction"] = float(data.get("test_fraction", 0.5))
        if data.get("train") is not None:
            base = Path(base_dir) if base_dir else Path(".")
            for key in ("train", "test"):
                if data.get(key) is None:
                    problems.append(f"data.{key} is required for file input")
                    continue
                p = Path(data[key])
                p = p if p.is_absolute() else base / p
                if not p.exists():
                    problems.append(f"data.{key}: {p} does not exist")
                kwargs[f"{key}_path"] = str(p)
        for key in ("from_report", "output_dir"):
            if kwargs.get(key) and base_dir and not Path(kwargs[key]).is_absolute():
                kwargs[key] = str(Path(base_dir) / kwargs[key])

        for key, value in doc.get("train", {}).items():
            if key not in ("kkt_tolerance", "max_iterations", "max_passes_without_progress"):
                problems.append(f"unknown train option {key!r}")
            else:
                kwargs[key] = value

        bad = [k for k in doc.get("kernels", []) if k not in FAMILIES]
        if bad:
            problems.append(f"unknown kernel families {bad}; valid: {', '.join(FAMILIES)}")
        if "gamma_range" in kwargs:
            kwargs["gamma_range"] = tuple(kwargs["gamma_range"])
        if problems:
            raise ConfigError("; ".join(problems))
        try:
            cfg = cls(**kwargs)
            cfg.validate()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        return cfg

    def validate(self) -> None:
        if not self.trade_off_values or min(self.trade_off_values) <= 0:
            raise ConfigError("trade_off_values must be non-empty and positive")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if not self.cluster_counts or min(self.cluster_counts) < 1:
            raise ConfigError("cluster_counts must be positive")
        if any(not 0 < f <= 1 for f in self.fractions):
            raise ConfigError("fractions must lie in (0, 1]")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        GammaSampler(*self.gamma_range)
        self.train_config()
        if self.scenario == "fraction_sweep" and not self.from_report and (
            self.cluster_count is None or self.trade_off is None
        ):
            raise ConfigError("fraction_sweep needs from_report or cluster_count + trade_off")
        if self.scenario == "kernel_comparison" and not self.kernels:
            raise ConfigError("kernels must not be empty")


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config {path} does not exist") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return ExperimentConfig.from_dict(doc, base_dir=path.parent)


def load_data(cfg: ExperimentConfig):
    """(train, test, standardization dict or None)."""
    if cfg.synthetic is not None:
        full = generate_synthetic(cfg.synthetic)
        train, test = train_test_split(full, cfg.test_fraction, derive_seed(cfg.synthetic.seed, 7))
    else:
        train = load_dataset(cfg.train_path)
        test = load_dataset(cfg.test_path, class_ids=train.class_ids)
        if test.band_count != train.band_count:
            raise DatasetError(
                f"test has {test.band_count} bands, train has {train.band_count}"
            )
    transform = None
    if cfg.use_standardization:
        train, tf = standardize(train)
        test = tf.apply(test)
        transform = tf.to_dict()
    return train, test, transform


# ---------------------------------------------------------------- scenarios


@dataclass
class Outcome:
    scores_header: list
    scores: list
    results: dict
    kernels: dict
    timing: TimingRecord
    nonconverged: int = 0
    partial: bool = False


def _cluster_sweep(cfg, train, test, out: Outcome):
    plan_kw = dict(repeats=cfg.repeats, sampler=cfg.sampler(), base_seed=cfg.seed)
    out.scores_header = ["cluster_count", "trade_off", "mean_oa", "std_oa", "mean_kappa", "repeats"]
    done_k, means, stds, kappas, per_trial_max = [], [], [], [], []
    for k in cfg.cluster_counts:
        with out.timing.stage(f"crrbf_trials_k{k}"):
            table = run_crrbf_trials(train, test, TrialPlan((k,), **plan_kw),
                                     cfg.trade_off_values, cfg.train_config(), cfg.workers)
        out.nonconverged += table.nonconverged
        m, s, kap = table.mean()[0], table.std()[0], table.kappa_mean()[0]
        for ci, C in enumerate(table.trade_offs):
            out.scores.append([k, C, m[ci], s[ci], kap[ci], cfg.repeats])
        for (kk, r), spec in table.kernels.items():
            out.kernels[f"k{kk}_r{r}"] = spec
        done_k.append(k)
        means.append(m.tolist())
        stds.append(s.tolist())
        kappas.append(kap.tolist())
        per_trial_max.append(float(table.mean_of_per_trial_max()[0]))
        out.results.update(_sweep_summary(done_k, cfg.trade_off_values, means, stds,
                                          kappas, per_trial_max))


def _sweep_summary(ks, trade_offs, means, stds, kappas, per_trial_max) -> dict:
    M = np.array(means)
    i, j = np.unravel_index(int(np.argmax(M)), M.shape)
    best_by_k = M.max(axis=1)
    summary = {
        "cluster_counts": list(ks),
        "trade_offs": list(trade_offs),
        "mean_oa": means,
        "std_oa": stds,
        "mean_kappa": kappas,
        "max_over_trade_off": best_by_k.tolist(),
        "mean_of_per_trial_max": per_trial_max,
        "best": {
            "cluster_count": int(ks[i]),
            "trade_off": float(trade_offs[j]),
            "mean_oa": float(M[i, j]),
            "mean_kappa": float(kappas[i][j]),
        },
    }
    if len(ks) >= 2:
        summary["std_across_cluster_counts"] = {
            "sample": trial_stats(best_by_k, ddof=1).std,
            "population": trial_stats(best_by_k, ddof=0).std,
        }
    return summary


def _best_from_report(path) -> tuple:
    doc = read_report(path)
    if doc.get("scenario") != "cluster_sweep":
        raise ConfigError(f"{path} is not a cluster_sweep report")
    best = doc["results"]["best"]
    return int(best["cluster_count"]), float(best["trade_off"])


def _fixed_k_c(cfg) -> tuple:
    if cfg.cluster_count is not None and cfg.trade_off is not None:
        return int(cfg.cluster_count), float(cfg.trade_off)
    if cfg.from_report:
        return _best_from_report(cfg.from_report)
    raise ConfigError("need cluster_count and trade_off (or from_report)")


def _fraction_sweep(cfg, train, test, out: Outcome):
    k, C = _fixed_k_c(cfg)
    out.results.update({"cluster_count": k, "trade_off": C, "rows": []})
    out.scores_header = ["fraction", "train_size", "mean_oa", "std_oa", "mean_kappa", "repeats"]
    for f in cfg.fractions:
        with out.timing.stage(f"fraction_{f:g}"):
            (row,) = training_fraction_sweep(train, test, [f], k, C, cfg.repeats, cfg.sampler(),
                                             cfg.seed, cfg.train_config(), cfg.workers)
        out.scores.append([f, row.train_size, row.mean_accuracy, row.std_accuracy,
                           row.mean_kappa, cfg.repeats])
        out.results["rows"].append({
            "fraction": f, "train_size": row.train_size, "mean_oa": row.mean_accuracy,
            "std_oa": row.std_accuracy, "mean_kappa": row.mean_kappa,
            "accuracies": list(row.accuracies),
        })


def _kernel_comparison(cfg, train, test, out: Outcome):
    needs_fixed = any(k in ("rrbf", "crrbf") for k in cfg.kernels)
    k, C = _fixed_k_c(cfg) if needs_fixed else (None, None)
    out.scores_header = ["fraction", "kernel", "mean_oa", "std_oa", "mean_kappa",
                         "trade_off", "kernel_param"]
    out.results.update({"cluster_count": k, "trade_off": C, "rows": []})
    grid = GridSpec(cfg.trade_off_values, cfg.rbf_gamma_values, cfg.polynomial_degrees,
                    cfg.fold_count, cfg.seed)
    tc = cfg.train_config()
    for fi, f in enumerate(cfg.fractions):
        sub = stratified_subsample(train, f, derive_seed(cfg.seed, 99, fi))
        for family in cfg.kernels:
            row = {"fraction": f, "kernel": family, "train_size": sub.n_samples}
            if family in ("rbf", "polynomial", "linear"):
                with out.timing.stage(f"cv_{family}_{f:g}"):
                    gs = grid_search(sub, family, grid, tc, cfg.workers)
                out.nonconverged += sum(p.nonconverged for p in gs.table)
                (oa, kap, nc), = evaluate_kernel(sub, test, gs.best_kernel,
                                                 (gs.best.trade_off,), tc)
                out.nonconverged += nc
                row.update(mean_oa=oa, std_oa=0.0, mean_kappa=kap,
                           trade_off=gs.best.trade_off, kernel_param=gs.best.kernel_param,
                           cv_mean_oa=gs.best.mean_accuracy)
                out.kernels[f"{family}_f{f:g}"] = gs.best_kernel.to_dict()
            else:
                with out.timing.stage(f"fit_{family}_{f:g}"):
                    if family == "crrbf":
                        table = run_crrbf_trials(
                            sub, test, TrialPlan((k,), cfg.repeats, cfg.sampler(), cfg.seed),
                            (C,), tc, cfg.workers)
                    else:
                        table = run_rrbf_trials(sub, test, cfg.repeats, cfg.sampler(), (C,),
                                                cfg.seed, tc, cfg.workers)
                out.nonconverged += table.nonconverged
                row.update(mean_oa=float(table.mean()[0, 0]), std_oa=float(table.std()[0, 0]),
                           mean_kappa=float(table.kappa_mean()[0, 0]), trade_off=C,
                           kernel_param=k if family == "crrbf" else None)
                for (kk, r), spec in table.kernels.items():
                    out.kernels[f"{family}_f{f:g}_r{r}"] = spec
            out.results["rows"].append(row)
            out.scores.append([f, family, row["mean_oa"], row["std_oa"], row["mean_kappa"],
                               row["trade_off"], row["kernel_param"]])


RUNNERS = {
    "cluster_sweep": _cluster_sweep,
    "fraction_sweep": _fraction_sweep,
    "kernel_comparison": _kernel_comparison,
}


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> tuple[dict, Path]:
    """Run the configured scenario and write all report files.

    A KeyboardInterrupt still writes whatever finished, flagged ``partial``,
    before re-raising.
    """
    out_dir = Path(out_dir or cfg.output_dir)
    train, test, transform = load_data(cfg)
    outcome = Outcome([], [], {}, {}, TimingRecord())
    started = time.perf_counter()
    try:
        RUNNERS[cfg.scenario](cfg, train, test, outcome)
    except KeyboardInterrupt:
        outcome.partial = True
        log.warning("interrupted; writing partial results")
        _write_outputs(cfg, out_dir, train, test, transform, outcome, started)
        raise
    return _write_outputs(cfg, out_dir, train, test, transform, outcome, started), out_dir


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return "" if value is None else str(value)


def _write_outputs(cfg, out_dir: Path, train, test, transform, outcome: Outcome, started) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    outcome.timing.add("total", time.perf_counter() - started)
    with (out_dir / "scores.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(outcome.scores_header)
        for row in outcome.scores:
            writer.writerow([_fmt(v) for v in row])
    with (out_dir / "timing.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["stage", "seconds"])
        for e in outcome.timing.entries:
            writer.writerow([e.stage, f"{e.seconds:.3f}"])
    kernels_doc = {"format_version": REPORT_FORMAT, "kernels": outcome.kernels}
    (out_dir / "kernels.json").write_text(json.dumps(kernels_doc, indent=1, sort_keys=True) + "\n")

    report = {
        "format_version": REPORT_FORMAT,
        "tool_version": __version__,
        "scenario": cfg.scenario,
        "config": cfg.to_dict(),
        "data": {
            "train_samples": train.n_samples,
            "test_samples": test.n_samples,
            "bands": train.band_count,
            "classes": train.class_count,
            "class_ids": list(train.class_ids),
            "standardization": transform,
        },
        "results": outcome.results,
        "nonconverged": outcome.nonconverged,
        "partial": outcome.partial,
        "kernels_file": "kernels.json",
        "timing": outcome.timing.to_rows(),
    }
    (out_dir / "report.json").write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
    (out_dir / "report.txt").write_text(render_report(report))
    return report


# ---------------------------------------------------------------- rendering


def read_report(path) -> dict:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ReportError(f"report {path} does not exist") from None
    except json.JSONDecodeError as exc:
        raise ReportError(f"{path}: invalid JSON ({exc})") from None
    version = doc.get("format_version")
    if version != REPORT_FORMAT:
        raise ReportError(
            f"{path}: report format {version!r} is not supported (expected {REPORT_FORMAT})"
        )
    return doc


def _pct(x) -> str:
    return "-" if x is None else f"{100.0 * float(x):.2f}"


def _table(header, rows) -> list:
    cells = [list(map(str, header))] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    fmt = lambda r: "  ".join(c.rjust(w) for c, w in zip(r, widths))  # noqa: E731
    lines = [fmt(cells[0]), "  ".join("-" * w for w in widths)]
    return lines + [fmt(r) for r in cells[1:]]


def render_report(doc: dict) -> str:
    """Plain-text tables from a stored report; no recomputation."""
    res = doc.get("results", {})
    scenario = doc.get("scenario")
    lines = [f"crrbf {doc.get('tool_version', '?')} | scenario: {scenario}"]
    data = doc.get("data")
    if data:
        lines.append(
            f"train {data['train_samples']} / test {data['test_samples']} samples, "
            f"{data['bands']} bands, {data['classes']} classes"
        )
    if doc.get("partial"):
        lines.append("NOTE: partial results (run was interrupted)")
    if doc.get("nonconverged"):
        lines.append(f"WARNING: {doc['nonconverged']} binary problems hit the iteration cap")
    lines.append("")

    if scenario == "cluster_sweep" and res.get("cluster_counts"):
        ks = res["cluster_counts"]
        lines.append("Best accuracy over trade-off per cluster count (OA %, repeat mean)")
        lines += _table(["clusters"] + [str(k) for k in ks],
                        [["max over C"] + [_pct(v) for v in res["max_over_trade_off"]],
                         ["per-trial max"] + [_pct(v) for v in res["mean_of_per_trial_max"]]])
        spread = res.get("std_across_cluster_counts")
        if spread:
            lines.append(f"std across cluster counts: {100 * spread['sample']:.2f} (n-1), "
                         f"{100 * spread['population']:.2f} (n)")
        lines.append("")
        b = res["best"]
        lines.append("Parameters with the highest accuracy")
        lines += _table(["OA", "kappa", "clusters", "trade-off"],
                        [[_pct(b["mean_oa"]), f"{b['mean_kappa']:.2f}", b["cluster_count"],
                          f"{b['trade_off']:g}"]])
        lines.append("")
        lines.append("Mean OA % by cluster count (rows) and trade-off (columns)")
        lines += _table(["k"] + [f"{c:g}" for c in res["trade_offs"]],
                        [[k] + [_pct(v) for v in row] for k, row in zip(ks, res["mean_oa"])])
    elif scenario == "fraction_sweep" and res.get("rows") is not None:
        lines.append(f"CRRBF with {res['cluster_count']} clusters, trade-off {res['trade_off']:g}")
        lines += _table(["fraction", "train", "OA", "std", "kappa"],
                        [[f"{r['fraction']:g}", r["train_size"], _pct(r["mean_oa"]),
                          _pct(r["std_oa"]), f"{r['mean_kappa']:.2f}"] for r in res["rows"]])
    elif scenario == "kernel_comparison" and res.get("rows") is not None:
        rows = res["rows"]
        fractions = sorted({r["fraction"] for r in rows})
        kernels = list(dict.fromkeys(r["kernel"] for r in rows))
        by = {(r["kernel"], r["fraction"]): r for r in rows}
        lines.append("Test OA % by kernel (rows) and training fraction (columns)")
        lines += _table(["kernel"] + [f"{f:g}" for f in fractions],
                        [[k] + [_pct(by[(k, f)]["mean_oa"]) if (k, f) in by else "-"
                                for f in fractions] for k in kernels])
    else:
        lines.append("(no results)")
    lines.append("")

    timing = doc.get("timing")
    if not timing:
        lines.append("(timing section absent; timing table omitted)")
    else:
        lines.append("Wall-clock seconds by stage")
        lines += _table(["stage", "seconds"], [[t["stage"], f"{t['seconds']:.3f}"] for t in timing])
    return "\n".join(lines) + "\n"
