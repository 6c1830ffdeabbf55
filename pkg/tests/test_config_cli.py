"""Configuration parsing and CLI end-to-end tests on synthetic data."""

import numpy as np
import pytest

from conftest import (make_synthetic_image_dataset, metrics_match_except_seconds)
from tnn import cli
from tnn.config import ConfigError, RunConfig, dump_config, load_config
from tnn.training import MetricsRow, read_metrics, write_metrics


class TestConfig:
    def test_defaults_and_parse(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("[model]\nlayers = 6\nh = 0.2\n\n[training]\nseed = 9\n")
        cfg = load_config(p)
        assert cfg.layers == 6
        assert cfg.h == 0.2
        assert cfg.seed == 9
        assert cfg.block == "leapfrog"          # default
        assert cfg.lr == 0.1                    # default

    def test_unknown_section_rejected(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("[mystery]\nx = 1\n")
        with pytest.raises(ConfigError, match="unknown section"):
            load_config(p)

    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("[model]\nwidth = 4\n")
        with pytest.raises(ConfigError, match="unknown key"):
            load_config(p)

    def test_bad_value_rejected(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("[model]\nlayers = four\n")
        with pytest.raises(ConfigError, match="bad value"):
            load_config(p)

    def test_range_validation(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("[optimizer]\nlr = -1\n")
        with pytest.raises(ConfigError, match="lr"):
            load_config(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.cfg")

    def test_dump_round_trip(self, tmp_path):
        cfg = RunConfig(layers=7, transform="circulant", seed=3,
                        snapshot_layers=(0, 4), output_dir="x")
        p = tmp_path / "dumped.cfg"
        dump_config(cfg, p)
        again = load_config(p)
        assert again == cfg

    def test_data_root_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("TNN_DATA_ROOT", str(tmp_path))
        cfg = RunConfig(dataset_dir="inner")
        assert cfg.resolved_data_dir() == tmp_path / "inner"

    def test_shipped_presets_parse(self):
        from pathlib import Path

        for preset in Path("configs").glob("*.cfg"):
            cfg = load_config(preset)
            assert cfg.output_dir


class TestMetricsCsv:
    def test_row_round_trip(self, tmp_path):
        rows = [
            MetricsRow(1, "train", 2.302585092994046, 0.1, 1.5, 0.0, 0.0),
            MetricsRow(1, "test", 2.2, 0.15, 0.5, 0.125, 1e-13),
        ]
        p = tmp_path / "metrics.csv"
        write_metrics(p, rows)
        again = read_metrics(p)
        assert again == rows


@pytest.fixture
def synthetic_run(tmp_path, monkeypatch):
    """A tiny image dataset plus a fast training config."""
    data_root = tmp_path / "data"
    make_synthetic_image_dataset(data_root)
    monkeypatch.setenv("TNN_DATA_ROOT", str(data_root))
    out = tmp_path / "run"
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text(f"""
[dataset]
kind = mnist
dir = mnist-syn

[model]
block = leapfrog
layers = 2
h = 0.1
transform = dct

[optimizer]
lr = 0.05
momentum = 0.9

[training]
epochs = 2
batch_size = 20
eval_batch_size = 50
seed = 77

[output]
dir = {out}
""")
    return cfg_path, out


class TestCliTrain:
    def test_end_to_end(self, synthetic_run, capsys):
        cfg_path, out = synthetic_run
        assert cli.main(["train", "--config", str(cfg_path)]) == 0
        rows = read_metrics(out / "metrics.csv")
        assert len(rows) == 4  # two epochs, train + test rows
        assert all(0.0 <= r.accuracy <= 1.0 for r in rows)
        assert [r.epoch for r in rows if r.split == "test"] == [1, 2]
        assert (out / "checkpoint.tnn").exists()
        assert (out / "checkpoint.tnn.config").exists()
        assert (out / "curves.png").exists()

    def test_zero_epochs_writes_header_and_initial_checkpoint(
            self, synthetic_run, tmp_path):
        cfg_path, out = synthetic_run
        text = cfg_path.read_text().replace("epochs = 2", "epochs = 0")
        cfg2 = tmp_path / "zero.cfg"
        cfg2.write_text(text)
        assert cli.main(["train", "--config", str(cfg2), "--no-figures"]) == 0
        rows = read_metrics(out / "metrics.csv")
        assert rows == []
        from tnn.checkpoint import load_checkpoint

        tensors = load_checkpoint(out / "checkpoint.tnn")
        assert "classifier.W" in tensors

    def test_determinism_across_runs(self, synthetic_run, tmp_path):
        cfg_path, out = synthetic_run
        assert cli.main(["train", "--config", str(cfg_path), "--no-figures"]) == 0
        second_out = tmp_path / "run2"
        cfg2 = tmp_path / "again.cfg"
        cfg2.write_text(cfg_path.read_text().replace(str(out), str(second_out)))
        assert cli.main(["train", "--config", str(cfg2), "--no-figures"]) == 0
        assert metrics_match_except_seconds(out / "metrics.csv",
                                            second_out / "metrics.csv")

    def test_matrix_baseline_path(self, synthetic_run, tmp_path):
        cfg_path, out = synthetic_run
        text = (cfg_path.read_text()
                .replace("orientation = lateral", "")
                .replace("transform = dct", "transform = identity")
                .replace("kind = mnist", "kind = mnist\norientation = vector"))
        cfg2 = tmp_path / "matrix.cfg"
        cfg2.write_text(text)
        assert cli.main(["train", "--config", str(cfg2), "--no-figures"]) == 0
        rows = read_metrics(out / "metrics.csv")
        assert len(rows) == 4

    def test_weight_sharing_and_subsets(self, synthetic_run, tmp_path):
        from tnn.checkpoint import load_checkpoint
        from tnn.config import load_config
        from tnn.training import load_datasets

        cfg_path, out = synthetic_run
        text = (cfg_path.read_text()
                .replace("[model]", "[model]\nweight_sharing = true")
                .replace("[dataset]", "[dataset]\ntrain_count = 60\ntest_count = 40"))
        cfg2 = tmp_path / "shared.cfg"
        cfg2.write_text(text)
        assert cli.main(["train", "--config", str(cfg2), "--no-figures"]) == 0
        tensors = load_checkpoint(out / "checkpoint.tnn")
        layer_weights = [k for k in tensors if k.endswith(".W")
                         and k != "classifier.W"]
        assert layer_weights == ["block0.layer0.W"]  # one shared layer
        cfg = load_config(cfg2)
        train_ds, test_ds = load_datasets(cfg)
        assert train_ds.num_samples == 60
        assert test_ds.num_samples == 40

    @pytest.mark.parametrize("block,transform", [("tlinear", "circulant"),
                                                 ("residual", "dct")])
    def test_other_block_kinds_train_and_restore(self, synthetic_run, tmp_path,
                                                 block, transform, capsys):
        cfg_path, out = synthetic_run
        text = (cfg_path.read_text()
                .replace("block = leapfrog", f"block = {block}")
                .replace("transform = dct", f"transform = {transform}")
                .replace("epochs = 2", "epochs = 1"))
        cfg2 = tmp_path / f"{block}.cfg"
        cfg2.write_text(text)
        assert cli.main(["train", "--config", str(cfg2), "--no-figures"]) == 0
        capsys.readouterr()
        code = cli.main(["eval", "--checkpoint", str(out / "checkpoint.tnn"),
                         "--dataset", str(tmp_path / "data" / "mnist-syn")])
        assert code == 0
        last_test = [r for r in read_metrics(out / "metrics.csv")
                     if r.split == "test"][-1]
        assert repr(last_test.accuracy) in capsys.readouterr().out


class TestCliEval:
    def test_eval_reproduces_last_test_row(self, synthetic_run, capsys, tmp_path):
        cfg_path, out = synthetic_run
        assert cli.main(["train", "--config", str(cfg_path), "--no-figures"]) == 0
        rows = read_metrics(out / "metrics.csv")
        last_test = [r for r in rows if r.split == "test"][-1]
        capsys.readouterr()
        data_dir = tmp_path / "data" / "mnist-syn"
        code = cli.main(["eval", "--checkpoint", str(out / "checkpoint.tnn"),
                         "--dataset", str(data_dir)])
        assert code == 0
        printed = capsys.readouterr().out
        assert repr(last_test.loss) in printed
        assert repr(last_test.accuracy) in printed

    def test_untrained_balanced_accuracy_near_chance(self, synthetic_run,
                                                     capsys, tmp_path):
        from conftest import write_idx_images, write_idx_labels

        cfg_path, out = synthetic_run
        text = cfg_path.read_text().replace("epochs = 2", "epochs = 0")
        cfg2 = tmp_path / "zero.cfg"
        cfg2.write_text(text)
        assert cli.main(["train", "--config", str(cfg2), "--no-figures"]) == 0
        # signal-free balanced data: pixels carry no class information
        noise_dir = tmp_path / "data" / "noise"
        noise_dir.mkdir(parents=True)
        g = np.random.default_rng(5)
        count = 400
        for prefix in ("train", "t10k"):
            write_idx_images(noise_dir / f"{prefix}-images-idx3-ubyte",
                             g.integers(0, 256, size=(count, 6, 6)))
            write_idx_labels(noise_dir / f"{prefix}-labels-idx1-ubyte",
                             np.arange(count) % 10)
        capsys.readouterr()
        code = cli.main(["eval", "--checkpoint", str(out / "checkpoint.tnn"),
                         "--dataset", str(noise_dir)])
        assert code == 0
        printed = capsys.readouterr().out
        accuracy = float(printed.split("accuracy")[1].split()[0])
        assert abs(accuracy - 0.1) <= 0.05

    def test_corrupt_checkpoint_magic_fails_cleanly(self, synthetic_run,
                                                    tmp_path, capsys):
        cfg_path, out = synthetic_run
        assert cli.main(["train", "--config", str(cfg_path), "--no-figures"]) == 0
        bad = tmp_path / "bad.tnn"
        raw = (out / "checkpoint.tnn").read_bytes()
        bad.write_bytes(b"XXXX" + raw[4:])
        (tmp_path / "bad.tnn.config").write_text(
            (out / "checkpoint.tnn.config").read_text())
        code = cli.main(["eval", "--checkpoint", str(bad),
                         "--dataset", str(tmp_path / "data" / "mnist-syn")])
        assert code == 2
        assert "magic" in capsys.readouterr().err

    def test_architecture_mismatch_detected(self, synthetic_run, tmp_path, capsys):
        cfg_path, out = synthetic_run
        assert cli.main(["train", "--config", str(cfg_path), "--no-figures"]) == 0
        sidecar = out / "checkpoint.tnn.config"
        sidecar.write_text(sidecar.read_text().replace("layers = 2", "layers = 3"))
        code = cli.main(["eval", "--checkpoint", str(out / "checkpoint.tnn"),
                         "--dataset", str(tmp_path / "data" / "mnist-syn")])
        assert code == 2
        assert "mismatch" in capsys.readouterr().err


class TestCliMisc:
    def test_usage_error_exits_1(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["train"])  # missing --config
        assert exc.value.code == 1

    def test_unreadable_config_exits_2(self, tmp_path, capsys):
        code = cli.main(["train", "--config", str(tmp_path / "none.cfg")])
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_diagnose(self, synthetic_run, tmp_path, capsys):
        cfg_path, out = synthetic_run
        assert cli.main(["train", "--config", str(cfg_path), "--no-figures"]) == 0
        report_dir = tmp_path / "report"
        code = cli.main(["diagnose", "--checkpoint", str(out / "checkpoint.tnn"),
                         "--out", str(report_dir), "--no-figures"])
        assert code == 0
        printed = capsys.readouterr().out
        assert "max Re(lambda)" in printed
        import csv

        with open(report_dir / "spectrum.csv", newline="") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 2  # two leapfrog layers
        for row in rows:
            assert float(row["assembled_max_abs_real"]) <= 1e-10

    def test_diagnose_cap_skips_layer(self, synthetic_run, tmp_path, capsys):
        cfg_path, out = synthetic_run
        assert cli.main(["train", "--config", str(cfg_path), "--no-figures"]) == 0
        code = cli.main(["diagnose", "--checkpoint", str(out / "checkpoint.tnn"),
                         "--cap", "4", "--no-figures"])
        assert code == 0
        assert "skipped" in capsys.readouterr().out

    def test_spheres_smoke(self, tmp_path, capsys):
        out = tmp_path / "spheres"
        cfg = tmp_path / "spheres.cfg"
        cfg.write_text(f"""
[dataset]
kind = spheres

[spheres]
seed = 0
epochs = 1
batch_size = 10
lr = 0.01
smoothness = 0.01
layers = 4
snapshot_layers = 0,2,4

[output]
dir = {out}
""")
        code = cli.main(["spheres", "--config", str(cfg), "--no-figures"])
        assert code == 0
        printed = capsys.readouterr().out
        assert "leapfrog" in printed
        assert (out / "spheres_metrics.csv").exists()
        snaps = sorted(out.glob("snapshots_*.csv"))
        assert len(snaps) == 3
        import csv

        with open(snaps[0], newline="") as f:
            rows = list(csv.DictReader(f))
        assert {r["layer"] for r in rows} == {"0", "2", "4"}
        labels = {r["label"] for r in rows}
        assert labels == {"1", "2", "3"}

    def test_spheres_h_zero_keeps_data(self, tmp_path):
        from tnn.datasets import gen_spheres
        from tnn.spheres import build_tube_network, propagate_snapshots

        data = gen_spheres(1, counts=(20, 30, 25))
        net = build_tube_network("euler", 0.0, 4, np.random.default_rng(0))
        snaps = propagate_snapshots(net, data.samples, (0, 2, 4))
        for layer, cloud in snaps.items():
            np.testing.assert_array_equal(cloud, data.samples[0])
