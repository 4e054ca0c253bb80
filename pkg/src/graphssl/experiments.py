"""Experiment runner: single runs, parameter sweeps and their on-disk reports.

A trial is fully determined by the master seed and the trial number; the
sweep value does not enter the seed, so every sweep point sees the same
noise draws and label samples (common random numbers).
"""

from __future__ import annotations

import ast
import csv
import dataclasses
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .data import LabelBudget, MoonsSpec, find_idx_pair, generate_moons, load_idx, sample_labeled_set
from .errors import ConfigError, GraphSSLError
from .evaluation import MetricReport, evaluate, kmeans
from .graph import Dataset, GraphConfig, build_affinity, resolve_sigma
from .laplacians import LAPLACIANS, LabeledSet, SSLConfig, laplacian_for
from .solvers import SpectralEmbedding, smallest_eigenpairs, solve_multiclass_dirichlet, solve_pm1_dirichlet

log = logging.getLogger(__name__)

METHODS = ("spectral", "dirichlet")
DATASETS = ("moons", "mnist", "fmnist", "idx")
CSV_HEADER = ("trial", "seed", "sweep_value", "nmi", "acc")
# unsupervised, the three single-component variants, and the full SSL Laplacian
EMBEDDING_LAPLACIANS = ("L", "L1_SSL", "L2_SSL", "L3_SSL", "L_SSL")

# 2-moons, 1000 nodes, noise 0.1: moon 0 is nodes 0-499 and moon 1 nodes
# 500-999, each ordered along its arc (node 0 and node 500 are the tips that
# reach into the other moon). Data seed 5 is an instance on which
# unsupervised spectral clustering cuts across the moons.
TWO_MOONS_FIXTURE = dict(dataset="moons", n_points=1000, n_moons=2, noise_std=0.1, data_seed=5)
TWO_MOONS_LABEL_SETS = {
    "S0": (50, 250, 450, 550, 750, 950),  # spread along each arc
    "S1": (200, 250, 300, 700, 750, 800),  # bunched at the arc centres
    "S2": (0, 20, 40, 500, 520, 540),  # inner tips, next to the other moon
    "S3": (460, 480, 499, 960, 980, 999),  # outer tips
}
# 3-moons, 900 nodes, 10 random labels per moon
THREE_MOONS_FIXTURE = dict(dataset="moons", n_points=900, n_moons=3, noise_std=0.1, data_seed=0, per_class=10, seed=0)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce a run.

    ``per_class`` / ``total`` / ``label_indices`` select the label budget
    (``label_indices`` wins if given). ``data_seed`` pins the generated data
    across trials; by default every trial draws fresh moons.
    """

    dataset: str = "moons"
    n_points: int = 500
    n_moons: int = 2
    noise_std: float = 0.1
    data_seed: int | None = None
    images_path: str | None = None
    labels_path: str | None = None
    sigma: float | None = 0.5
    neighbors: Any = 20
    method: str = "spectral"
    laplacian: str = "L_SSL"
    per_class: int | None = 10
    total: int | None = None
    label_indices: tuple[int, ...] | None = None
    mu: float | None = None
    alpha: float | None = None
    embed_dim: int | None = None
    dirichlet_encoding: str = "onehot"
    kmeans_restarts: int = 10
    trials: int = 1
    seed: int = 0
    workers: int = 1
    out_dir: str = "results"

    def __post_init__(self):
        if self.dataset not in DATASETS:
            raise ConfigError(f"dataset must be one of {DATASETS}, got {self.dataset!r}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.laplacian not in LAPLACIANS:
            raise ConfigError(f"laplacian must be one of {LAPLACIANS}, got {self.laplacian!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.dirichlet_encoding not in ("onehot", "pm1"):
            raise ConfigError("dirichlet_encoding must be 'onehot' or 'pm1'")
        if self.label_indices is not None:
            object.__setattr__(self, "label_indices", tuple(int(i) for i in self.label_indices))
        elif self.per_class is not None and self.total is not None:
            raise ConfigError("set only one of per_class and total")
        if self.method == "dirichlet" and self.n_labels_requested() == 0:
            raise ConfigError("Dirichlet clustering needs labeled nodes")
        if self.laplacian != "L" and self.method == "spectral" and self.n_labels_requested() == 0:
            log.info("no labels: %s reduces to a scaled unsupervised Laplacian", self.laplacian)
        if self.dataset == "idx" and not (self.images_path and self.labels_path):
            raise ConfigError("dataset 'idx' needs images_path and labels_path")
        GraphConfig(sigma=self.sigma, neighbors=self.neighbors)

    def n_labels_requested(self) -> int:
        if self.label_indices is not None:
            return len(self.label_indices)
        if self.per_class is not None:
            return self.per_class
        return self.total or 0

    def graph_config(self) -> GraphConfig:
        return GraphConfig(sigma=self.sigma, neighbors=self.neighbors)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        if d["label_indices"] is not None:
            d["label_indices"] = list(d["label_indices"])
        return d

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    seed: int
    sweep_value: Any
    nmi: float
    acc: float
    sigma: float | None = None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    sweep_param: str | None
    sweep_values: list
    records: list[TrialRecord] = field(default_factory=list)

    @property
    def failed(self) -> list[TrialRecord]:
        return [r for r in self.records if r.failed]

    def aggregates(self) -> list[dict]:
        """Mean and population std (ddof=0) of NMI/ACC per sweep value, over completed trials."""
        out = []
        for v in self.sweep_values:
            ok = [r for r in self.records if r.sweep_value == v and not r.failed]
            nm = np.array([r.nmi for r in ok])
            ac = np.array([r.acc for r in ok])
            out.append(
                {
                    "sweep_value": v,
                    "n": len(ok),
                    "nmi_mean": float(nm.mean()) if ok else None,
                    "nmi_std": float(nm.std()) if ok else None,
                    "acc_mean": float(ac.mean()) if ok else None,
                    "acc_std": float(ac.std()) if ok else None,
                }
            )
        return out

    def metric(self, name: str, value=None) -> np.ndarray:
        """Per-trial values of ``name`` ('nmi' or 'acc') at one sweep value (default: first)."""
        value = self.sweep_values[0] if value is None else value
        return np.array([getattr(r, name) for r in self.records if r.sweep_value == value and not r.failed])


def trial_seed(master: int, trial: int) -> int:
    return int(np.random.SeedSequence([master, trial]).generate_state(1)[0])


def _sub_seeds(seed: int) -> tuple[int, int, int]:
    data, labels, km = np.random.SeedSequence(seed).generate_state(3)
    return int(data), int(labels), int(km)


@lru_cache(maxsize=4)
def _load_images(images_path: str, labels_path: str) -> Dataset:
    return load_idx(images_path, labels_path)


def make_dataset(config: ExperimentConfig, seed: int) -> Dataset:
    if config.dataset == "moons":
        data_seed = config.data_seed if config.data_seed is not None else seed
        return generate_moons(MoonsSpec(config.n_points, config.n_moons, config.noise_std, data_seed))
    if config.dataset == "idx":
        return _load_images(str(config.images_path), str(config.labels_path))
    images, labels = find_idx_pair(config.dataset)
    return _load_images(str(images), str(labels))


def make_labeled_set(config: ExperimentConfig, data: Dataset, seed: int) -> LabeledSet:
    if config.label_indices is not None:
        budget = LabelBudget(placement="fixed-indices", indices=config.label_indices)
    elif config.per_class is not None:
        budget = LabelBudget(per_class=int(config.per_class), seed=seed)
    elif config.total is not None:
        budget = LabelBudget(total=int(config.total), seed=seed)
    else:
        return LabeledSet.empty(data.n, data.n_classes)
    return sample_labeled_set(data, budget)


def prepare(config: ExperimentConfig, seed: int):
    """Data, labeled set, affinity and resolved sigma for one trial seed."""
    data_seed, label_seed, _ = _sub_seeds(seed)
    data = make_dataset(config, data_seed)
    S = make_labeled_set(config, data, label_seed)
    gc = config.graph_config()
    sigma = resolve_sigma(data, gc)
    W = build_affinity(data, dataclasses.replace(gc, sigma=sigma))
    return data, S, W, sigma


def _ssl_config(config: ExperimentConfig, S: LabeledSet) -> SSLConfig:
    return SSLConfig.default(S, mu=config.mu, alpha=config.alpha)


def predict(config: ExperimentConfig, data: Dataset, S: LabeledSet, W, seed: int) -> np.ndarray:
    K = data.n_classes
    L = laplacian_for(config.laplacian, W, S, _ssl_config(config, S))
    if config.method == "spectral":
        dim = config.embed_dim or max(K - 1, 1)
        emb = smallest_eigenpairs(L, dim, skip_trivial=True)
        return kmeans(emb.coordinates, K, seed=_sub_seeds(seed)[2], restarts=config.kmeans_restarts).labels
    if config.dirichlet_encoding == "pm1":
        return solve_pm1_dirichlet(L, S)[1]
    return solve_multiclass_dirichlet(L, S)[1]


def _run_trial(config: ExperimentConfig, trial: int, sweep_value) -> TrialRecord:
    seed = trial_seed(config.seed, trial)
    try:
        data, S, W, sigma = prepare(config, seed)
        rep = evaluate(data.true_labels, predict(config, data, S, W, seed))
        return TrialRecord(trial, seed, sweep_value, rep.nmi, rep.acc, sigma)
    except GraphSSLError as exc:
        log.warning("trial %d (sweep value %r) failed: %s", trial, sweep_value, exc)
        return TrialRecord(trial, seed, sweep_value, float("nan"), float("nan"), None, f"{type(exc).__name__}: {exc}")


def run_single(config: ExperimentConfig, trial: int = 0) -> MetricReport:
    """One trial of the pipeline; errors propagate with the run context attached."""
    seed = trial_seed(config.seed, trial)
    data, S, W, _ = prepare(config, seed)
    try:
        pred = predict(config, data, S, W, seed)
    except GraphSSLError as exc:
        raise type(exc)(f"{config.method}/{config.laplacian}, trial {trial}, seed {seed}: {exc}") from exc
    return evaluate(data.true_labels, pred)


def _coerce(config: ExperimentConfig, param: str, value):
    fields = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    if param not in fields:
        raise ConfigError(f"unknown sweep parameter {param!r}")
    try:
        return config.replace(**{param: value})
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def run_sweep(
    config: ExperimentConfig, sweep_param: str | None = None, sweep_values: Sequence | None = None
) -> ExperimentReport:
    """``config.trials`` trials at each sweep value; failed trials are recorded, not raised."""
    if sweep_param is None:
        values = [None]
    else:
        values = list(sweep_values or [])
        if not values:
            raise ConfigError("sweep needs at least one value")
    configs = [config if sweep_param is None else _coerce(config, sweep_param, v) for v in values]
    jobs = [(c, t, v) for c, v in zip(configs, values) for t in range(config.trials)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(_run_trial, *zip(*jobs)))
    else:
        records = [_run_trial(*job) for job in jobs]
    order = {repr(v): i for i, v in enumerate(values)}
    records.sort(key=lambda r: (order[repr(r.sweep_value)], r.trial))
    return ExperimentReport(config, sweep_param, values, records)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_report(report: ExperimentReport, out_dir) -> dict[str, Path]:
    """Write results.csv, summary.json and config.json into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out / "results.csv", "summary": out / "summary.json", "config": out / "config.json"}
    with open(paths["csv"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in report.records:
            w.writerow([r.trial, r.seed, _fmt(r.sweep_value), _fmt(r.nmi), _fmt(r.acc)])
    summary = {
        "method": report.config.method,
        "laplacian": report.config.laplacian,
        "sweep_param": report.sweep_param,
        "trials": report.config.trials,
        "std": "population (ddof=0)",
        "aggregates": report.aggregates(),
        "sigma": [
            {"trial": r.trial, "sweep_value": r.sweep_value, "sigma": r.sigma} for r in report.records
        ],
        "failed": [
            {"trial": r.trial, "sweep_value": r.sweep_value, "error": r.error} for r in report.failed
        ],
    }
    paths["summary"].write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    paths["config"].write_text(json.dumps(report.config.to_dict(), indent=2, sort_keys=True) + "\n")
    return paths


def read_results_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def embed_variants(
    config: ExperimentConfig, laplacians: Sequence[str] = EMBEDDING_LAPLACIANS, trial: int = 0
) -> tuple[Dataset, LabeledSet, dict[str, SpectralEmbedding]]:
    """Spectral embeddings of the same trial under several Laplacians."""
    seed = trial_seed(config.seed, trial)
    data, S, W, _ = prepare(config, seed)
    dim = config.embed_dim or max(data.n_classes - 1, 1)
    ssl = _ssl_config(config, S)
    out = {}
    for name in laplacians:
        out[name] = smallest_eigenpairs(laplacian_for(name, W, S, ssl), dim, skip_trivial=True)
    return data, S, out


def parse_value(text: str):
    """Literal for numbers, tuples, None and booleans; anything else stays a string."""
    text = text.strip()
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def load_config_file(path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        out[key.strip()] = parse_value(value)
    return out


def build_config(values: dict) -> ExperimentConfig:
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(values) - names
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
