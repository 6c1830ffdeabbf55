"""Synthetic shells experiment comparing stable and unstable propagation.

Three-class radial data in R^3 (tubes of length 3, circulant algebra) is
pushed through deep tube-weight networks and classified by a
``3 x 1 x 3`` classification tensor.  Variants:

* leapfrog, ``h = 1`` -- the conservative two-field integrator,
* forward Euler, ``h = 0.5`` and ``h = 0.25`` -- plain residual steps.

Training is full-batch-free SGD (no momentum) with a least-squares
objective on the first-frontal-slice readout of the classifier output:
``0.5 * ||X[:, :, 0] - C||^2`` summed over the batch, plus the
weight-chain smoothness penalty.  Prediction takes the argmax of the
first-slice scores.  The readout is deliberately bias-free, matching the
bare classification-tensor contract; the network biases supply all
offsets, which is exactly what makes the conservative variant's
geometry-preserving warp pay off and leaves the unstable variants
short.

Reported per variant:

* final train accuracy,
* the feature-norm ratio ``max_i ||a_N,i|| / max_i ||a_0,i||``, a
  cloud-level measure of norm inflation under forward propagation,
* per-layer point-cloud snapshots for plotting.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import loss
from .config import RunConfig
from .datasets import Dataset, batches, gen_spheres
from .layers import TANH, LeapfrogBlock, Network, ResidualLayer, init_unit_tube
from .transforms import Transform

VARIANTS = (("leapfrog", 1.0), ("euler", 0.5), ("euler", 0.25))


@dataclass
class SphereRunResult:
    variant: str
    h: float
    accuracy: float
    norm_ratio: float
    seconds: float
    snapshots: dict[int, np.ndarray] = field(default_factory=dict)


def build_tube_network(kind: str, h: float, n_layers: int,
                       rng: np.random.Generator) -> Network:
    """A depth-``n_layers`` tube network with unit-norm random weights."""
    transform = Transform.circulant(3)
    weights = [init_unit_tube(rng, 3) for _ in range(n_layers)]
    biases = [np.zeros((1, 1, 3)) for _ in range(n_layers)]
    if kind == "leapfrog":
        blocks = [LeapfrogBlock(weights, biases, h=h, activation=TANH)]
    elif kind == "euler":
        blocks = [ResidualLayer(w, b, h=h, activation=TANH)
                  for w, b in zip(weights, biases)]
    else:
        raise ValueError(f"unknown variant {kind!r}")
    classifier = rng.standard_normal((3, 1, 3)) * 0.1
    return Network(blocks, classifier, transform)


def propagate_snapshots(net: Network, a0: np.ndarray,
                        layer_ids: tuple[int, ...]) -> dict[int, np.ndarray]:
    """Feature clouds (m x 3) after selected layer counts."""
    wanted = set(layer_ids)
    snaps = {}
    if 0 in wanted:
        snaps[0] = a0[0].copy()
    block = net.blocks[0]
    if isinstance(block, LeapfrogBlock):
        full_steps = block.steps
        for layer in sorted(wanted - {0}):
            block.steps = min(layer, full_steps)
            snaps[layer] = block.forward(a0, net.transform)[0].copy()
        block.steps = full_steps
    else:
        a = a0
        for depth, layer in enumerate(net.blocks, start=1):
            a = layer.forward(a, net.transform)
            if depth in wanted:
                snaps[depth] = a[0].copy()
    return snaps


def train_variant(kind: str, h: float, data: Dataset, cfg: RunConfig) -> SphereRunResult:
    """Train one variant and measure its accuracy and norm inflation."""
    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence([cfg.spheres_seed, 0])))
    shuffle_rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence([cfg.spheres_seed, 1])))
    net = build_tube_network(kind, h, cfg.spheres_layers, rng)
    sgd = loss.SgdState(lr=cfg.spheres_lr, momentum=0.0)
    t0 = time.perf_counter()
    for _ in range(cfg.spheres_epochs):
        for batch in batches(data, cfg.spheres_batch_size, shuffle_rng):
            a_n = net.forward(batch.samples)
            x = net.logits(a_n)
            _, d_x = loss.least_squares_first_slice(x, batch.labels)
            net.backward(d_x)
            if cfg.spheres_smoothness > 0:
                _smooth(net, cfg.spheres_smoothness)
            sgd.step(net.named_params(), net.named_grads())
    seconds = time.perf_counter() - t0
    a_n = net.forward(data.samples)
    scores = net.logits(a_n)[:, :, 0]
    accuracy = float((np.argmax(scores, axis=0) + 1 == data.labels).mean())
    in_norm = np.linalg.norm(data.samples[0], axis=1).max()
    out_norm = np.linalg.norm(a_n[0], axis=1).max()
    ratio = float(out_norm / in_norm)
    snaps = propagate_snapshots(net, data.samples, cfg.snapshot_layers)
    return SphereRunResult(kind, h, accuracy, ratio, seconds, snaps)


def _smooth(net: Network, weight: float) -> None:
    for block in net.blocks:
        if isinstance(block, LeapfrogBlock) and len(block.weights) >= 2:
            _, grads = loss.smoothness_regularizer(block.weights, block.h)
            for gw, extra in zip(block.grad_weights, grads):
                gw += weight * extra
    chain = [b.w for b in net.blocks if isinstance(b, ResidualLayer)]
    if len(chain) >= 2:
        h = next(b.h for b in net.blocks if isinstance(b, ResidualLayer))
        _, grads = loss.smoothness_regularizer(chain, h)
        for block, extra in zip(
            (b for b in net.blocks if isinstance(b, ResidualLayer)), grads
        ):
            block.grad_w += weight * extra


def run_spheres(cfg: RunConfig, render_figures: bool = True) -> list[SphereRunResult]:
    """Run all variants; write snapshots, metrics and figures."""
    out_dir = Path(cfg.output_dir or "runs/spheres")
    out_dir.mkdir(parents=True, exist_ok=True)
    data = gen_spheres(cfg.spheres_seed)
    results = [train_variant(kind, h, data, cfg) for kind, h in VARIANTS]

    with open(out_dir / "spheres_metrics.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(("variant", "h", "accuracy", "norm_ratio", "seconds"))
        for r in results:
            writer.writerow((r.variant, repr(r.h), repr(r.accuracy),
                             repr(r.norm_ratio), f"{r.seconds:.3f}"))

    for r in results:
        tag = f"{r.variant}_h{r.h:g}".replace(".", "p")
        with open(out_dir / f"snapshots_{tag}.csv", "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(("layer", "x", "y", "z", "label"))
            for layer, cloud in sorted(r.snapshots.items()):
                for point, label in zip(cloud, data.labels):
                    writer.writerow((layer, repr(point[0]), repr(point[1]),
                                     repr(point[2]), label))

    if render_figures:
        from . import figures
        figures.save_spheres_snapshots(results, data.labels,
                                       out_dir / "spheres.png")
    return results
