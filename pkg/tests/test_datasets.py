"""Loader, generator and batching tests (synthetic files plus real data
when present)."""

import struct

import numpy as np
import pytest

from conftest import cifar_dir, mnist_dir
from tnn import datasets


def write_idx_images(path, images: np.ndarray, magic=datasets.IMAGE_MAGIC):
    count, rows, cols = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">iiii", magic, count, rows, cols))
        f.write(images.astype(np.uint8).tobytes())


def write_idx_labels(path, labels: np.ndarray, magic=datasets.LABEL_MAGIC):
    with open(path, "wb") as f:
        f.write(struct.pack(">ii", magic, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


def write_cifar(path, labels, pixels):
    """labels: (k,), pixels: (k, 3072) uint8."""
    with open(path, "wb") as f:
        for lab, px in zip(labels, pixels):
            f.write(bytes([lab]))
            f.write(px.astype(np.uint8).tobytes())


@pytest.fixture
def idx_pair(tmp_path):
    g = np.random.default_rng(0)
    images = g.integers(0, 256, size=(12, 6, 6), dtype=np.uint8)
    labels = g.integers(0, 10, size=12, dtype=np.uint8)
    ip, lp = tmp_path / "imgs", tmp_path / "labs"
    write_idx_images(ip, images)
    write_idx_labels(lp, labels)
    return ip, lp, images, labels


class TestMnistLoader:
    def test_magic_numbers_accepted(self, idx_pair):
        ip, lp, images, labels = idx_pair
        ds = datasets.load_mnist(ip, lp)
        assert ds.num_samples == 12
        assert ds.num_classes == 10
        np.testing.assert_array_equal(ds.labels, labels.astype(int) + 1)

    def test_bad_image_magic(self, tmp_path, idx_pair):
        _, lp, images, _ = idx_pair
        bad = tmp_path / "bad"
        write_idx_images(bad, images, magic=0x00000777)
        with pytest.raises(datasets.BadMagicError):
            datasets.load_mnist(bad, lp)

    def test_bad_label_magic(self, tmp_path, idx_pair):
        ip, _, _, labels = idx_pair
        bad = tmp_path / "badl"
        write_idx_labels(bad, labels, magic=0x00000105)
        with pytest.raises(datasets.BadMagicError):
            datasets.load_mnist(ip, bad)

    def test_truncated_file(self, tmp_path, idx_pair):
        ip, lp, images, _ = idx_pair
        raw = ip.read_bytes()
        cut = tmp_path / "cut"
        cut.write_bytes(raw[:-10])
        with pytest.raises(datasets.TruncatedFileError):
            datasets.load_mnist(cut, lp)

    def test_count_mismatch(self, tmp_path, idx_pair):
        ip, _, _, labels = idx_pair
        short = tmp_path / "short"
        write_idx_labels(short, labels[:5])
        with pytest.raises(datasets.CountMismatchError):
            datasets.load_mnist(ip, short)

    def test_constant_zero_image_normalizes_to_constant_slice(self, tmp_path):
        images = np.zeros((1, 4, 4), dtype=np.uint8)
        ip, lp = tmp_path / "z", tmp_path / "zl"
        write_idx_images(ip, images)
        write_idx_labels(lp, np.array([7], dtype=np.uint8))
        ds = datasets.load_mnist(ip, lp, mean=0.1307, std=0.3081)
        want = (0.0 - 0.1307) / 0.3081
        np.testing.assert_allclose(ds.samples[:, 0, :], want, atol=1e-15)

    def test_lateral_orientation_preserves_images(self, idx_pair):
        ip, lp, images, _ = idx_pair
        ds = datasets.load_mnist(ip, lp)
        raw = datasets.denormalize(ds)
        for j in range(min(10, ds.num_samples)):
            np.testing.assert_allclose(raw[:, j, :] * 255.0,
                                       images[j].astype(float), atol=1e-9)

    def test_vector_orientation_shape(self, idx_pair):
        ip, lp, images, _ = idx_pair
        ds = datasets.load_mnist(ip, lp, orientation="vector")
        assert ds.samples.shape == (36, 12, 1)
        raw = datasets.denormalize(ds)
        np.testing.assert_allclose(raw[:, 0, 0] * 255.0,
                                   images[0].astype(float).ravel(), atol=1e-9)

    def test_denormalize_round_trip(self, idx_pair):
        ip, lp, images, _ = idx_pair
        ds = datasets.load_mnist(ip, lp)
        raw = datasets.denormalize(ds)
        assert np.abs(raw.transpose(1, 0, 2) - images / 255.0).max() <= 1e-12


class TestCifarLoader:
    def test_zero_record_label_and_normalization(self, tmp_path):
        path = tmp_path / "batch.bin"
        write_cifar(path, [3], np.zeros((1, 3072)))
        ds = datasets.load_cifar10(path)
        assert ds.labels[0] == 4  # 1-based
        assert ds.samples.shape == (96, 1, 32)
        for c, (mean, std) in enumerate(zip(datasets.CIFAR_MEANS,
                                            datasets.CIFAR_STDS)):
            block = ds.samples[c * 32:(c + 1) * 32, 0, :]
            np.testing.assert_allclose(block, -mean / std, atol=1e-12)

    def test_record_count(self, tmp_path):
        g = np.random.default_rng(1)
        path = tmp_path / "batch.bin"
        k = 7
        write_cifar(path, g.integers(0, 10, size=k),
                    g.integers(0, 256, size=(k, 3072)))
        ds = datasets.load_cifar10(path)
        assert ds.num_samples == k

    def test_truncated_record(self, tmp_path):
        path = tmp_path / "cut.bin"
        path.write_bytes(b"\x00" * (datasets.CIFAR_RECORD_BYTES + 17))
        with pytest.raises(datasets.TruncatedFileError):
            datasets.load_cifar10(path)

    def test_label_out_of_range(self, tmp_path):
        path = tmp_path / "bad.bin"
        write_cifar(path, [11], np.zeros((1, 3072)))
        with pytest.raises(datasets.LabelOutOfRangeError):
            datasets.load_cifar10(path)

    def test_channel_layout(self, tmp_path):
        # one bright pixel in the green channel at row 2, col 5
        px = np.zeros((1, 3072), dtype=np.uint8)
        px[0, 1024 + 2 * 32 + 5] = 255
        path = tmp_path / "g.bin"
        write_cifar(path, [0], px)
        ds = datasets.load_cifar10(path)
        raw = datasets.denormalize(ds)
        assert raw[32 + 2, 0, 5] == pytest.approx(1.0, abs=1e-12)
        assert raw.sum() == pytest.approx(1.0, abs=1e-9)

    def test_vector_orientation(self, tmp_path):
        g = np.random.default_rng(2)
        path = tmp_path / "v.bin"
        write_cifar(path, [1, 2], g.integers(0, 256, size=(2, 3072)))
        ds = datasets.load_cifar10(path, orientation="vector")
        assert ds.samples.shape == (3072, 2, 1)


class TestSpheres:
    def test_radius_rule(self):
        assert datasets.sphere_label([0.0, 0.0, 0.0]) == 1
        assert datasets.sphere_label([5.0, 0.0, 0.0]) == 2
        assert datasets.sphere_label([6.0, 0.0, 0.0]) == 3

    def test_counts_and_shape(self):
        ds = datasets.gen_spheres(seed=11)
        assert ds.samples.shape == (1, 1200, 3)
        assert ds.num_classes == 3
        counts = [(ds.labels == c).sum() for c in (1, 2, 3)]
        assert counts == [317, 466, 417]
        for j in range(0, 1200, 97):
            assert datasets.sphere_label(ds.samples[0, j]) == ds.labels[j]

    def test_bit_reproducible(self):
        a = datasets.gen_spheres(seed=5)
        b = datasets.gen_spheres(seed=5)
        assert np.array_equal(a.samples, b.samples)
        assert np.array_equal(a.labels, b.labels)

    def test_target_counts_match_chi3_shells(self):
        # the pinned class counts must be statistically consistent with
        # the radial distribution: r/3 ~ chi(3)
        from scipy.stats import chi

        p_blue = chi(3).cdf(3.5 / 3.0)
        p_red = chi(3).cdf(5.5 / 3.0) - p_blue
        p_black = 1.0 - chi(3).cdf(5.5 / 3.0)
        m = 1200
        for count, p in ((317, p_blue), (466, p_red), (417, p_black)):
            sigma = np.sqrt(m * p * (1 - p))
            assert abs(count - m * p) <= 3 * sigma


class TestBatches:
    def make(self, m):
        g = np.random.default_rng(3)
        return datasets.Dataset(samples=g.standard_normal((2, m, 3)),
                                labels=g.integers(1, 4, size=m),
                                num_classes=3)

    def test_sizes_keep_short_tail(self):
        ds = self.make(10)
        rng = np.random.default_rng(0)
        sizes = [b.labels.size for b in datasets.batches(ds, 3, rng)]
        assert sizes == [3, 3, 3, 1]

    def test_same_seed_same_order(self):
        ds = self.make(20)
        one = [b.labels.copy() for b in datasets.batches(
            ds, 4, np.random.default_rng(9))]
        two = [b.labels.copy() for b in datasets.batches(
            ds, 4, np.random.default_rng(9))]
        for x, y in zip(one, two):
            np.testing.assert_array_equal(x, y)

    def test_partition_is_exact(self):
        ds = self.make(17)
        rng = np.random.default_rng(1)
        seen = np.concatenate([b.samples[0, :, 0]
                               for b in datasets.batches(ds, 5, rng)])
        assert seen.size == 17
        np.testing.assert_allclose(np.sort(seen), np.sort(ds.samples[0, :, 0]))

    def test_rejects_bad_batch_size(self):
        with pytest.raises(ValueError):
            list(datasets.batches(self.make(4), 0, np.random.default_rng(0)))


@pytest.mark.skipif(mnist_dir() is None, reason="canonical MNIST files not present")
def test_canonical_mnist_first_label():
    d = mnist_dir()
    ds = datasets.load_mnist(d / "train-images-idx3-ubyte",
                             d / "train-labels-idx1-ubyte")
    assert ds.labels[0] == 5 + 1  # digit 5, stored 1-based


@pytest.mark.skipif(cifar_dir() is None, reason="canonical CIFAR-10 files not present")
def test_canonical_cifar_first_label():
    d = cifar_dir()
    ds = datasets.load_cifar10(d / "data_batch_1.bin")
    assert ds.labels[0] == 6 + 1  # frog, stored 1-based
