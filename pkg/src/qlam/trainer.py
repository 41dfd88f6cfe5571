"""Training loop, evaluation, and fold orchestration.

Everything downstream of the config is deterministic: seeded streams are
namespaced as [seed, 0] for parameter init, [seed, 1, epoch] for batch
shuffling, and [seed, 2, fold] for data splitting and subsampling, and
batch gradients are reduced in sample-index order regardless of worker
count.  Metrics therefore reproduce bitwise for a fixed config; wall
times go to a separate timing file so the metrics CSV stays comparable.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .cell import CellConfig, QlamParams, final_logits, init_qlam_params
from .checkpoint import save_checkpoint
from .data import (
    DATASET_NAMES,
    DatasetBundle,
    SequenceSample,
    holdout_split,
    load_dataset,
    make_folds,
)
from .errors import ConfigError, NumericError
from .gradients import GradBundle, loss_and_grad
from .nn import (
    AdamState,
    adam_step,
    clip_global_norm,
    cosine_lr,
    elman_forward,
    elman_loss_and_grad,
    grad_like,
    init_elman,
    param_count,
    softmax_cross_entropy,
)
from .observables import ShotConfig

METRICS_COLUMNS = ("epoch", "split", "loss", "accuracy", "lr", "seed", "fold")
TIMING_COLUMNS = ("epoch", "wall_seconds")


@dataclass(frozen=True)
class TrainConfig:
    """One training run, fully determined by its field values."""

    dataset: str = "sdigits8"
    n_qubits: int = 4
    n_layers: int = 2
    n_heads: int = 8
    d_query: int = 8
    decoder_hidden: int = 32
    t_keep: int = 64
    entangler: str = "ring"
    epochs: int | None = None
    batch_size: int = 128
    base_lr: float = 1e-3
    clip_norm: float = 1.0
    seed: int = 0
    fold: int = 0
    n_folds: int = 10
    split_mode: str = "holdout"
    test_fraction: float = 0.2
    shot_mode: str = "exact"
    shots_per_term: int = 1024
    train_subsample: int | None = None
    test_subsample: int | None = None
    out_dir: str = "runs"
    data_dir: str | None = None
    workers: int = 1

    def validate(self) -> None:
        if self.dataset not in DATASET_NAMES:
            raise ConfigError(
                f"unknown dataset {self.dataset!r}; choose from {DATASET_NAMES}"
            )
        if self.epochs is not None and self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.split_mode not in ("holdout", "kfold"):
            raise ConfigError(f"split_mode must be holdout or kfold, got {self.split_mode!r}")
        if self.shot_mode not in ("exact", "sampled"):
            raise ConfigError(f"shot_mode must be exact or sampled, got {self.shot_mode!r}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if not 0 <= self.fold < self.n_folds:
            raise ConfigError(f"fold {self.fold} outside [0, {self.n_folds})")
        for name in ("train_subsample", "test_subsample"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ConfigError(f"{name} must be >= 1, got {value}")
        if self.base_lr <= 0:
            raise ConfigError(f"base_lr must be positive, got {self.base_lr}")
        self.cell_config()

    @property
    def resolved_epochs(self) -> int:
        if self.epochs is not None:
            return self.epochs
        return 50 if self.dataset == "scifar10" else 30

    def cell_config(self) -> CellConfig:
        return CellConfig(
            n_qubits=self.n_qubits,
            n_layers=self.n_layers,
            entangler=self.entangler,
            d_query=self.d_query,
            n_heads=self.n_heads,
            decoder_hidden=self.decoder_hidden,
            t_keep=self.t_keep,
            n_classes=10,
        )

    def shot_config(self) -> ShotConfig:
        if self.shot_mode == "exact":
            return ShotConfig(mode="exact")
        return ShotConfig(
            mode="sampled", shots_per_term=self.shots_per_term, rng_seed=self.seed
        )

    def run_tag(self) -> str:
        return f"s{self.seed}_f{self.fold}"


@dataclass
class MetricsRow:
    """One logged split at one epoch; wall_seconds is reported separately
    because it can never reproduce bitwise."""

    epoch: int
    split: str
    loss: float
    accuracy: float
    lr: float
    seed: int
    fold: int
    wall_seconds: float = math.nan


@dataclass
class TrainResult:
    config: TrainConfig
    final_train: MetricsRow
    final_test: MetricsRow
    metrics_path: Path
    timing_path: Path
    checkpoint_path: Path
    params: QlamParams
    n_parameters: int


# ---------------------------------------------------------------------------
# Metrics file round-trip.
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def append_metrics(path: Path, rows: list[MetricsRow]) -> None:
    new_file = not path.exists()
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if new_file:
            writer.writerow(METRICS_COLUMNS)
        for row in rows:
            writer.writerow([
                row.epoch, row.split, _fmt(row.loss), _fmt(row.accuracy),
                _fmt(row.lr), row.seed, row.fold,
            ])


def read_metrics(path) -> list[MetricsRow]:
    """Parse a metrics CSV back into rows; inverse of append_metrics."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != METRICS_COLUMNS:
            raise ConfigError(f"{path} has header {header}, expected {METRICS_COLUMNS}")
        for rec in reader:
            rows.append(MetricsRow(
                epoch=int(rec[0]), split=rec[1], loss=float(rec[2]),
                accuracy=float(rec[3]), lr=float(rec[4]),
                seed=int(rec[5]), fold=int(rec[6]),
            ))
    return rows


def _append_timing(path: Path, epoch: int, wall_seconds: float) -> None:
    new_file = not path.exists()
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if new_file:
            writer.writerow(TIMING_COLUMNS)
        writer.writerow([epoch, repr(wall_seconds)])


# ---------------------------------------------------------------------------
# Data split resolution.
# ---------------------------------------------------------------------------

def _subsample(samples: list[SequenceSample], size: int | None, rng) -> list[SequenceSample]:
    if size is None or size >= len(samples):
        return samples
    picks = rng.choice(len(samples), size=size, replace=False)
    return [samples[i] for i in picks]


def resolve_splits(
    config: TrainConfig, bundle: DatasetBundle
) -> tuple[list[SequenceSample], list[SequenceSample]]:
    """Train/test sample lists for this config's fold.

    holdout on a dataset with a canonical test split keeps that split and
    varies only the seeded subsample per fold (repeated independent
    runs); holdout without one cuts a seeded test fraction.  kfold pools
    every sample and takes fold k of a seeded 10-fold plan.
    """
    rng = np.random.default_rng([config.seed, 2, config.fold])
    if config.split_mode == "kfold":
        pool = bundle.train + (bundle.test or [])
        plan = make_folds(len(pool), config.seed, config.n_folds)
        train = [pool[i] for i in plan.train_indices(config.fold)]
        test = [pool[i] for i in plan.test_indices(config.fold)]
    elif bundle.test is not None:
        train, test = bundle.train, bundle.test
    else:
        train_idx, test_idx = holdout_split(
            len(bundle.train), config.seed * config.n_folds + config.fold,
            config.test_fraction,
        )
        train = [bundle.train[i] for i in train_idx]
        test = [bundle.train[i] for i in test_idx]
    return (
        _subsample(train, config.train_subsample, rng),
        _subsample(test, config.test_subsample, rng),
    )


# ---------------------------------------------------------------------------
# Batched gradients and evaluation.
# ---------------------------------------------------------------------------

def batch_gradients(
    samples: list[SequenceSample],
    params: QlamParams,
    cfg: CellConfig,
    workers: int = 1,
) -> tuple[dict[str, np.ndarray], float, int]:
    """Mean gradient over a batch, reduced in sample-index order.

    Workers only parallelize the per-sample passes; the reduction walks
    results in order, so the outcome is identical for any worker count.
    Returns (mean grads, mean loss, number correct).
    """
    if workers > 1 and len(samples) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            bundles = list(pool.map(
                lambda s: loss_and_grad(s, params, cfg), samples
            ))
    else:
        bundles = [loss_and_grad(s, params, cfg) for s in samples]
    total = grad_like(params.as_dict())
    loss_sum = 0.0
    correct = 0
    for sample, bundle in zip(samples, bundles):
        for key in total:
            total[key] += bundle.grads[key]
        loss_sum += bundle.loss
        if int(np.argmax(bundle.logits)) == sample.label:
            correct += 1
    scale = 1.0 / len(samples)
    for key in total:
        total[key] *= scale
    return total, loss_sum * scale, correct


def evaluate_samples(
    samples: list[SequenceSample],
    params: QlamParams,
    cfg: CellConfig,
    shot: ShotConfig = ShotConfig(),
    workers: int = 1,
) -> tuple[float, float]:
    """(mean loss, accuracy) over a sample list, exact or sampled mode."""
    if not samples:
        raise ConfigError("cannot evaluate on an empty sample list")

    def one(item):
        index, sample = item
        return final_logits(sample.tokens, params, cfg, shot, sample_index=index)

    indexed = list(enumerate(samples))
    if workers > 1 and len(samples) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            logit_rows = list(pool.map(one, indexed))
    else:
        logit_rows = [one(item) for item in indexed]
    loss_sum = 0.0
    correct = 0
    for sample, logits in zip(samples, logit_rows):
        loss, _ = softmax_cross_entropy(logits, sample.label)
        loss_sum += loss
        if int(np.argmax(logits)) == sample.label:
            correct += 1
    return loss_sum / len(samples), correct / len(samples)


# ---------------------------------------------------------------------------
# Training.
# ---------------------------------------------------------------------------

def train(config: TrainConfig, bundle: DatasetBundle | None = None) -> TrainResult:
    """Full seeded run: init, epoch loop, metrics emission, checkpoint.

    Train-split metrics are accumulated from the optimization passes
    themselves (loss and prediction before each update); test metrics
    come from a dedicated exact-mode evaluation per epoch.
    """
    config.validate()
    if bundle is None:
        bundle = load_dataset(config.dataset, config.data_dir)
    train_set, test_set = resolve_splits(config, bundle)
    if not train_set or not test_set:
        raise ConfigError(
            f"empty split: {len(train_set)} train / {len(test_set)} test samples"
        )

    cell_cfg = config.cell_config()
    epochs = config.resolved_epochs
    params = init_qlam_params(np.random.default_rng([config.seed, 0]), cell_cfg)
    param_dict = params.as_dict()
    adam = AdamState.for_params(param_dict)

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tag = config.run_tag()
    metrics_path = out_dir / f"metrics_{tag}.csv"
    timing_path = out_dir / f"timing_{tag}.csv"
    checkpoint_path = out_dir / f"checkpoint_{tag}.npz"
    for stale in (metrics_path, timing_path):
        if stale.exists():
            stale.unlink()

    last_train = last_test = None
    for epoch in range(1, epochs + 1):
        started = time.perf_counter()
        lr = cosine_lr(epoch - 1, epochs, config.base_lr)
        order = np.random.default_rng([config.seed, 1, epoch]).permutation(len(train_set))
        loss_sum = 0.0
        correct = 0
        for start in range(0, len(order), config.batch_size):
            batch = [train_set[i] for i in order[start:start + config.batch_size]]
            grads, batch_loss, batch_correct = batch_gradients(
                batch, params, cell_cfg, config.workers
            )
            if not math.isfinite(batch_loss):
                raise NumericError(
                    f"non-finite loss at epoch {epoch}, batch starting {start}"
                )
            clip_global_norm(grads, config.clip_norm)
            adam_step(param_dict, grads, adam, lr)
            loss_sum += batch_loss * len(batch)
            correct += batch_correct
        test_loss, test_acc = evaluate_samples(
            test_set, params, cell_cfg, workers=config.workers
        )
        last_train = MetricsRow(
            epoch, "train", loss_sum / len(train_set), correct / len(train_set),
            lr, config.seed, config.fold,
        )
        last_test = MetricsRow(
            epoch, "test", test_loss, test_acc, lr, config.seed, config.fold,
        )
        append_metrics(metrics_path, [last_train, last_test])
        wall = time.perf_counter() - started
        last_train.wall_seconds = last_test.wall_seconds = wall
        _append_timing(timing_path, epoch, wall)

    save_checkpoint(checkpoint_path, params, cell_cfg, {
        "dataset": config.dataset,
        "seed": config.seed,
        "fold": config.fold,
        "epochs": epochs,
        "final_test_accuracy": last_test.accuracy,
    })
    return TrainResult(
        config, last_train, last_test, metrics_path, timing_path,
        checkpoint_path, params, param_count(param_dict),
    )


def evaluate(checkpoint_path, config: TrainConfig, bundle: DatasetBundle | None = None) -> float:
    """Accuracy of a saved model on this config's test split."""
    from .checkpoint import load_checkpoint

    config.validate()
    params, cell_cfg, _ = load_checkpoint(checkpoint_path)
    if bundle is None:
        bundle = load_dataset(config.dataset, config.data_dir)
    _, test_set = resolve_splits(config, bundle)
    _, accuracy = evaluate_samples(
        test_set, params, cell_cfg, config.shot_config(), workers=config.workers
    )
    return accuracy


@dataclass
class FoldsResult:
    accuracies: list[float]
    mean: float
    std: float
    summary_path: Path


def run_folds(config: TrainConfig, bundle: DatasetBundle | None = None) -> FoldsResult:
    """Train and evaluate every fold; emit per-fold and aggregate rows.

    The aggregate std is the population standard deviation (ddof=0) of
    the per-fold test accuracies.
    """
    config.validate()
    if bundle is None:
        bundle = load_dataset(config.dataset, config.data_dir)
    accuracies = []
    for fold in range(config.n_folds):
        result = train(replace(config, fold=fold), bundle)
        accuracies.append(result.final_test.accuracy)
    mean = float(np.mean(accuracies))
    std = float(np.std(accuracies))
    summary_path = Path(config.out_dir) / f"folds_summary_s{config.seed}.csv"
    with open(summary_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("fold", "test_accuracy"))
        for fold, acc in enumerate(accuracies):
            writer.writerow([fold, repr(acc)])
        writer.writerow(("mean", repr(mean)))
        writer.writerow(("std", repr(std)))
    return FoldsResult(accuracies, mean, std, summary_path)


# ---------------------------------------------------------------------------
# Elman baseline under the same budget.
# ---------------------------------------------------------------------------

def train_elman(
    config: TrainConfig,
    bundle: DatasetBundle | None = None,
    d_hidden: int = 97,
) -> tuple[float, float, int]:
    """Train the recurrent baseline with the same data, schedule, and
    optimizer; returns (final train accuracy, test accuracy, param count).

    The default width of 97 puts its parameter count (10583) near the
    default hybrid model's (10658).
    """
    config.validate()
    if bundle is None:
        bundle = load_dataset(config.dataset, config.data_dir)
    train_set, test_set = resolve_splits(config, bundle)
    epochs = config.resolved_epochs
    params = init_elman(np.random.default_rng([config.seed, 0]), d_hidden, 10)
    adam = AdamState.for_params(params)
    train_acc = 0.0
    for epoch in range(1, epochs + 1):
        lr = cosine_lr(epoch - 1, epochs, config.base_lr)
        order = np.random.default_rng([config.seed, 1, epoch]).permutation(len(train_set))
        correct = 0
        for start in range(0, len(order), config.batch_size):
            batch = [train_set[i] for i in order[start:start + config.batch_size]]
            total = grad_like(params)
            for sample in batch:
                loss, grads = elman_loss_and_grad(sample.tokens, sample.label, params)
                logits = elman_forward(sample.tokens, params)
                if int(np.argmax(logits)) == sample.label:
                    correct += 1
                for key in total:
                    total[key] += grads[key]
            for key in total:
                total[key] /= len(batch)
            clip_global_norm(total, config.clip_norm)
            adam_step(params, total, adam, lr)
        train_acc = correct / len(train_set)
    correct = sum(
        int(np.argmax(elman_forward(s.tokens, params)) == s.label) for s in test_set
    )
    return train_acc, correct / len(test_set), param_count(params)
