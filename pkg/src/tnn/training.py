"""Training and evaluation loops, metrics persistence.

Metrics CSV schema (one header row, then one row per epoch and split)::

    epoch,split,loss,accuracy,seconds,max_weight_step,safeguard_residual

``epoch``              1-based epoch index (monotone per split)
``split``              ``train`` or ``test``
``loss``               cross-entropy under the configured reduction
``accuracy``           fraction in [0, 1]
``seconds``            wall-clock seconds for the epoch (excluded from
                       determinism comparisons)
``max_weight_step``    max Frobenius norm of adjacent leapfrog weight
                       differences, 0 when no leapfrog chain exists
``safeguard_residual`` max pre-safeguard column-sum deviation seen by
                       the probability safeguard during evaluation

Rows are buffered and written whole; a crash mid-epoch never leaves a
partial row.  Identical config and seed reproduce the CSV exactly except
for the ``seconds`` column.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import datasets, loss
from .checkpoint import save_checkpoint
from .config import RunConfig, dump_config
from .layers import (ACTIVATIONS, LeapfrogBlock, Network, ResidualLayer,
                     TLinearLayer, init_dense_weight)
from .transforms import Transform

METRICS_HEADER = ("epoch", "split", "loss", "accuracy", "seconds",
                  "max_weight_step", "safeguard_residual")


@dataclass
class MetricsRow:
    epoch: int
    split: str
    loss: float
    accuracy: float
    seconds: float
    max_weight_step: float
    safeguard_residual: float

    def to_csv(self) -> list[str]:
        return [str(self.epoch), self.split, repr(self.loss),
                repr(self.accuracy), f"{self.seconds:.3f}",
                repr(self.max_weight_step), repr(self.safeguard_residual)]

    @classmethod
    def from_csv(cls, row: list[str]) -> "MetricsRow":
        return cls(epoch=int(row[0]), split=row[1], loss=float(row[2]),
                   accuracy=float(row[3]), seconds=float(row[4]),
                   max_weight_step=float(row[5]),
                   safeguard_residual=float(row[6]))


def write_metrics(path, rows: list[MetricsRow]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(METRICS_HEADER)
        for row in rows:
            writer.writerow(row.to_csv())


def read_metrics(path) -> list[MetricsRow]:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if tuple(header) != METRICS_HEADER:
            raise ValueError(f"unexpected metrics header {header}")
        return [MetricsRow.from_csv(row) for row in reader]


def make_transform(kind: str, n: int) -> Transform:
    if kind == "dct":
        return Transform.dct(n)
    if kind == "circulant":
        return Transform.circulant(n)
    if kind == "identity":
        return Transform.identity(n)
    raise ValueError(f"unknown transform kind {kind!r}")


def load_datasets(cfg: RunConfig) -> tuple[datasets.Dataset, datasets.Dataset]:
    """Load the train/test splits named by the configuration."""
    root = cfg.resolved_data_dir()
    if cfg.dataset_kind == "mnist":
        train = datasets.load_mnist(
            root / "train-images-idx3-ubyte", root / "train-labels-idx1-ubyte",
            mean=cfg.mnist_mean, std=cfg.mnist_std,
            orientation=cfg.orientation, split="train")
        test = datasets.load_mnist(
            root / "t10k-images-idx3-ubyte", root / "t10k-labels-idx1-ubyte",
            mean=cfg.mnist_mean, std=cfg.mnist_std,
            orientation=cfg.orientation, split="test")
    elif cfg.dataset_kind == "cifar10":
        train_paths = sorted(root.glob("data_batch_*.bin")) or sorted(
            root.glob("data_batch_*"))
        test_paths = sorted(root.glob("test_batch.bin")) or sorted(
            root.glob("test_batch"))
        if not train_paths or not test_paths:
            raise FileNotFoundError(f"no CIFAR-10 batches under {root}")
        train = datasets.load_cifar10(train_paths, orientation=cfg.orientation,
                                      split="train")
        test = datasets.load_cifar10(test_paths, orientation=cfg.orientation,
                                     split="test")
    else:
        raise ValueError(f"dataset kind {cfg.dataset_kind!r} has no train loader")
    if cfg.train_count:
        train = train.subset(cfg.train_count)
    if cfg.test_count:
        test = test.subset(cfg.test_count)
    return train, test


def build_network(cfg: RunConfig, ell: int, n: int, num_classes: int,
                  rng: np.random.Generator) -> Network:
    """Assemble the configured architecture for ``ell x m x n`` inputs."""
    transform = make_transform(cfg.transform, n)
    act = ACTIVATIONS[cfg.activation]
    blocks = []
    if cfg.block == "leapfrog":
        count = 1 if cfg.weight_sharing else cfg.layers
        weights = [init_dense_weight(rng, ell, ell, n, transform)
                   for _ in range(count)]
        biases = [np.zeros((ell, 1, n)) for _ in range(count)]
        blocks.append(LeapfrogBlock(weights, biases, h=cfg.h, activation=act,
                                    weight_sharing=cfg.weight_sharing,
                                    steps=cfg.layers))
    elif cfg.block == "residual":
        for _ in range(cfg.layers):
            w = init_dense_weight(rng, ell, ell, n, transform)
            blocks.append(ResidualLayer(w, np.zeros((ell, 1, n)), h=cfg.h,
                                        activation=act))
    else:
        for _ in range(cfg.layers):
            w = init_dense_weight(rng, ell, ell, n, transform)
            blocks.append(TLinearLayer(w, np.zeros((ell, 1, n)), activation=act))
    classifier = init_dense_weight(rng, num_classes, ell, n, transform)
    return Network(blocks, classifier, transform)


def max_weight_step(net: Network) -> float:
    """Largest adjacent-weight Frobenius distance across leapfrog chains."""
    worst = 0.0
    for chain in net.leapfrog_weight_chains():
        for a, b in zip(chain, chain[1:]):
            worst = max(worst, float(np.linalg.norm(a - b)))
    return worst


def evaluate(net: Network, dataset: datasets.Dataset, batch_size: int,
             reduction: str = "mean"):
    """Deterministic full-split evaluation.

    Returns ``(loss, accuracy, max_safeguard_residual)``.  Samples are
    visited in stored order; predictions take the lowest class index on
    ties.
    """
    total_loss = 0.0
    correct = 0
    residual = 0.0
    m = dataset.num_samples
    for start in range(0, m, batch_size):
        stop = min(start + batch_size, m)
        a = np.ascontiguousarray(dataset.samples[:, start:stop, :])
        labels = dataset.labels[start:stop]
        out = net.forward(a)
        probs = net.classify(out)
        total_loss += loss.cross_entropy(probs, labels, reduction="sum")
        correct += int((probs.predictions() == labels).sum())
        residual = max(residual, float(probs.residual.max()))
    mean_loss = total_loss / m if reduction == "mean" else total_loss
    return mean_loss, correct / m, residual


@dataclass
class TrainResult:
    rows: list[MetricsRow]
    metrics_path: Path
    checkpoint_path: Path
    figure_path: Path | None


def train(cfg: RunConfig, render_figures: bool = True) -> TrainResult:
    """Run the configured training job and persist its artifacts.

    Writes ``metrics.csv``, ``checkpoint.tnn`` (+ ``.config`` sidecar)
    and ``curves.png`` under the configured output directory.
    """
    if not cfg.output_dir:
        raise ValueError("output dir is required for training")
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    train_ds, test_ds = load_datasets(cfg)
    ell, _, n = train_ds.samples.shape
    init_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, 0])))
    shuffle_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, 1])))
    net = build_network(cfg, ell, n, train_ds.num_classes, init_rng)
    sgd = loss.SgdState(lr=cfg.lr, momentum=cfg.momentum)

    rows: list[MetricsRow] = []
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        running_loss = 0.0
        running_correct = 0
        for batch in datasets.batches(train_ds, cfg.batch_size, shuffle_rng):
            a_n = net.forward(batch.samples)
            x = net.logits(a_n)
            probs = loss.scalar_tubal_softmax(x, net.transform)
            batch_loss = loss.cross_entropy(probs, batch.labels,
                                            reduction=cfg.reduction)
            d_x = loss.loss_input_gradient(x, batch.labels, net.transform,
                                           reduction=cfg.reduction)
            net.backward(d_x)
            if cfg.smoothness > 0:
                _apply_smoothness(net, cfg.smoothness)
            sgd.step(net.named_params(), net.named_grads())
            if cfg.reduction == "mean":
                running_loss += batch_loss * batch.labels.size
            else:
                running_loss += batch_loss
            running_correct += int((probs.predictions() == batch.labels).sum())
        seconds = time.perf_counter() - t0
        step_norm = max_weight_step(net)
        m = train_ds.num_samples
        train_loss = running_loss / m if cfg.reduction == "mean" else running_loss
        rows.append(MetricsRow(epoch, "train", train_loss, running_correct / m,
                               seconds, step_norm, 0.0))
        t0 = time.perf_counter()
        te_loss, te_acc, te_res = evaluate(net, test_ds, cfg.eval_batch_size,
                                           reduction=cfg.reduction)
        rows.append(MetricsRow(epoch, "test", te_loss, te_acc,
                               time.perf_counter() - t0, step_norm, te_res))

    metrics_path = out_dir / "metrics.csv"
    write_metrics(metrics_path, rows)
    checkpoint_path = out_dir / "checkpoint.tnn"
    save_checkpoint(checkpoint_path, dict(net.named_params()))
    dump_config(cfg, str(checkpoint_path) + ".config")
    figure_path = None
    if render_figures:
        from . import figures
        figure_path = out_dir / "curves.png"
        figures.save_training_curves(rows, figure_path)
    return TrainResult(rows, metrics_path, checkpoint_path, figure_path)


def _apply_smoothness(net: Network, weight: float) -> None:
    """Add the weight-chain smoothness gradient to each leapfrog block."""
    for block in net.blocks:
        if isinstance(block, LeapfrogBlock) and len(block.weights) >= 2:
            _, grads = loss.smoothness_regularizer(block.weights, block.h)
            for gw, extra in zip(block.grad_weights, grads):
                gw += weight * extra


def restore_network(cfg: RunConfig, tensors: dict[str, np.ndarray]) -> Network:
    """Rebuild the configured architecture and load checkpoint tensors.

    Raises ``ValueError`` when the checkpoint does not match the
    architecture (missing/extra names or shape mismatches).
    """
    shapes = {}
    for name, arr in tensors.items():
        shapes[name] = arr.shape
    classifier = tensors.get("classifier.W")
    if classifier is None:
        raise ValueError("checkpoint has no classifier.W tensor")
    first_w = tensors.get("block0.layer0.W", tensors.get("block0.W"))
    if first_w is None:
        raise ValueError("checkpoint has no first-block weight tensor")
    ell, n = first_w.shape[0], first_w.shape[2]
    rng = np.random.Generator(np.random.PCG64(0))
    net = build_network(cfg, ell, n, classifier.shape[0], rng)
    expected = dict(net.named_params())
    if set(expected) != set(tensors):
        missing = sorted(set(expected) - set(tensors))
        extra = sorted(set(tensors) - set(expected))
        raise ValueError(
            f"checkpoint/architecture mismatch: missing {missing}, extra {extra}"
        )
    for name, param in expected.items():
        if param.shape != tensors[name].shape:
            raise ValueError(
                f"shape mismatch for {name}: checkpoint {tensors[name].shape}, "
                f"architecture {param.shape}"
            )
        param[...] = tensors[name]
    return net
