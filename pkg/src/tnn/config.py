"""Run configuration: a flat INI file with sections.

Sections and keys (defaults in parentheses):

``[dataset]``
    ``kind`` -- ``mnist`` | ``cifar10`` | ``spheres``
    ``dir`` -- dataset directory; relative paths resolve against the
    ``TNN_DATA_ROOT`` environment variable (default ``data``)
    ``train_count``, ``test_count`` -- subset sizes, 0 = all (0)
    ``orientation`` -- ``lateral`` | ``vector`` (lateral)
    ``mnist_mean`` (0.1307), ``mnist_std`` (0.3081) -- normalization
    override knobs for the single-channel loader

``[model]``
    ``block`` -- ``leapfrog`` | ``tlinear`` | ``residual`` (leapfrog)
    ``layers`` (4), ``h`` (0.1), ``activation`` (tanh),
    ``transform`` -- ``dct`` | ``circulant`` | ``identity`` (dct),
    ``weight_sharing`` (false)

``[optimizer]``
    ``lr`` (0.1), ``momentum`` (0.9), ``smoothness`` (0.0)

``[training]``
    ``epochs`` (5), ``batch_size`` (100), ``eval_batch_size`` (1000),
    ``seed`` (0), ``reduction`` -- ``mean`` | ``sum`` (mean)

``[spheres]`` (used by the spheres experiment only)
    ``epochs`` (50), ``batch_size`` (10), ``lr`` (0.01),
    ``smoothness`` (0.01), ``layers`` (32), ``seed`` (0),
    ``snapshot_layers`` (0,12,24,32)

``[output]``
    ``dir`` -- run output directory (required for train/spheres)

Seed fan-out rule: the master seed ``s`` feeds three independent
streams -- weight initialization ``PCG64(SeedSequence([s, 0]))``,
shuffling ``PCG64(SeedSequence([s, 1]))``, and synthetic data generation
(which receives ``s`` itself).
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass
from pathlib import Path

DATA_ROOT_ENV = "TNN_DATA_ROOT"


class ConfigError(ValueError):
    """A configuration value is missing, malformed, or out of range."""


@dataclass
class RunConfig:
    # dataset
    dataset_kind: str = "mnist"
    dataset_dir: str = "."
    train_count: int = 0
    test_count: int = 0
    orientation: str = "lateral"
    mnist_mean: float = 0.1307
    mnist_std: float = 0.3081
    # model
    block: str = "leapfrog"
    layers: int = 4
    h: float = 0.1
    activation: str = "tanh"
    transform: str = "dct"
    weight_sharing: bool = False
    # optimizer
    lr: float = 0.1
    momentum: float = 0.9
    smoothness: float = 0.0
    # training
    epochs: int = 5
    batch_size: int = 100
    eval_batch_size: int = 1000
    seed: int = 0
    reduction: str = "mean"
    # spheres experiment
    spheres_epochs: int = 50
    spheres_batch_size: int = 10
    spheres_lr: float = 0.01
    spheres_smoothness: float = 0.01
    spheres_layers: int = 32
    spheres_seed: int = 0
    snapshot_layers: tuple[int, ...] = (0, 12, 24, 32)
    # output
    output_dir: str = ""

    def validate(self) -> "RunConfig":
        checks = [
            (self.dataset_kind in ("mnist", "cifar10", "spheres"),
             f"dataset kind {self.dataset_kind!r}"),
            (self.orientation in ("lateral", "vector"),
             f"orientation {self.orientation!r}"),
            (self.block in ("leapfrog", "tlinear", "residual"),
             f"block {self.block!r}"),
            (self.activation in ("tanh", "relu", "identity"),
             f"activation {self.activation!r}"),
            (self.transform in ("dct", "circulant", "identity"),
             f"transform {self.transform!r}"),
            (self.reduction in ("mean", "sum"), f"reduction {self.reduction!r}"),
            (self.layers >= 1, "layers must be >= 1"),
            (self.h >= 0, "h must be >= 0"),
            (self.lr > 0, "lr must be positive"),
            (0 <= self.momentum < 1, "momentum must lie in [0, 1)"),
            (self.smoothness >= 0, "smoothness must be >= 0"),
            (self.epochs >= 0, "epochs must be >= 0"),
            (self.batch_size >= 1, "batch size must be >= 1"),
            (self.eval_batch_size >= 1, "eval batch size must be >= 1"),
            (self.train_count >= 0, "train_count must be >= 0"),
            (self.test_count >= 0, "test_count must be >= 0"),
            (self.mnist_std > 0, "mnist_std must be positive"),
            (self.spheres_epochs >= 0, "spheres epochs must be >= 0"),
            (self.spheres_batch_size >= 1, "spheres batch size must be >= 1"),
            (self.spheres_lr > 0, "spheres lr must be positive"),
            (self.spheres_layers >= 1, "spheres layers must be >= 1"),
        ]
        for ok, what in checks:
            if not ok:
                raise ConfigError(f"invalid configuration: {what}")
        return self

    def resolved_data_dir(self) -> Path:
        root = Path(os.environ.get(DATA_ROOT_ENV, "data"))
        path = Path(self.dataset_dir)
        return path if path.is_absolute() else root / path


_SCHEMA = {
    "dataset": {
        "kind": ("dataset_kind", str),
        "dir": ("dataset_dir", str),
        "train_count": ("train_count", int),
        "test_count": ("test_count", int),
        "orientation": ("orientation", str),
        "mnist_mean": ("mnist_mean", float),
        "mnist_std": ("mnist_std", float),
    },
    "model": {
        "block": ("block", str),
        "layers": ("layers", int),
        "h": ("h", float),
        "activation": ("activation", str),
        "transform": ("transform", str),
        "weight_sharing": ("weight_sharing", "bool"),
    },
    "optimizer": {
        "lr": ("lr", float),
        "momentum": ("momentum", float),
        "smoothness": ("smoothness", float),
    },
    "training": {
        "epochs": ("epochs", int),
        "batch_size": ("batch_size", int),
        "eval_batch_size": ("eval_batch_size", int),
        "seed": ("seed", int),
        "reduction": ("reduction", str),
    },
    "spheres": {
        "epochs": ("spheres_epochs", int),
        "batch_size": ("spheres_batch_size", int),
        "lr": ("spheres_lr", float),
        "smoothness": ("spheres_smoothness", float),
        "layers": ("spheres_layers", int),
        "seed": ("spheres_seed", int),
        "snapshot_layers": ("snapshot_layers", "int_tuple"),
    },
    "output": {
        "dir": ("output_dir", str),
    },
}


def load_config(path) -> RunConfig:
    """Parse and validate an INI run configuration."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    cfg = RunConfig()
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser[section].items():
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            attr, kind = _SCHEMA[section][key]
            try:
                if kind == "bool":
                    value = raw.strip().lower() in ("1", "true", "yes", "on")
                elif kind == "int_tuple":
                    value = tuple(int(v) for v in raw.replace(",", " ").split())
                else:
                    value = kind(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {section}.{key}: {raw!r}") from exc
            setattr(cfg, attr, value)
    return cfg.validate()


def dump_config(cfg: RunConfig, path) -> None:
    """Write the resolved configuration back out as INI (sidecar format)."""
    parser = configparser.ConfigParser()
    for section, keys in _SCHEMA.items():
        parser[section] = {}
        for key, (attr, kind) in keys.items():
            value = getattr(cfg, attr)
            if kind == "int_tuple":
                parser[section][key] = ",".join(str(v) for v in value)
            else:
                parser[section][key] = str(value)
    with open(path, "w") as f:
        parser.write(f)
