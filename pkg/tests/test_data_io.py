"""Tests for IDX parsing, synthetic blobs, and split/batch streams."""

import struct

import numpy as np
import pytest

from snrkit.data_io import (
    BatchStream,
    Dataset,
    IdxFormatError,
    SeparationError,
    load_idx,
    split_and_batch,
    split_dataset,
    synth_blobs,
    write_idx,
)


@pytest.fixture
def idx_pair(tmp_path):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, size=(2, 4, 3), dtype=np.uint8)
    labels = np.array([7, 2], dtype=np.uint8)
    ip, lp = tmp_path / "img.idx", tmp_path / "lab.idx"
    write_idx(images, labels, ip, lp)
    return images, labels, ip, lp


class TestIdx:
    def test_round_trip_exact(self, idx_pair):
        images, labels, ip, lp = idx_pair
        ds = load_idx(ip, lp)
        assert len(ds) == 2
        assert ds.feature_count == 12
        np.testing.assert_array_equal(ds.labels, labels)
        np.testing.assert_allclose(
            ds.inputs, images.reshape(2, 12).astype(float) / 255.0, atol=0
        )

    def test_round_trip_bytes(self, idx_pair, tmp_path):
        images, labels, ip, lp = idx_pair
        ds = load_idx(ip, lp)
        back = np.round(ds.inputs * 255.0).astype(np.uint8).reshape(-1, 4, 3)
        ip2, lp2 = tmp_path / "img2.idx", tmp_path / "lab2.idx"
        write_idx(back, ds.labels.astype(np.uint8), ip2, lp2)
        assert ip2.read_bytes() == ip.read_bytes()
        assert lp2.read_bytes() == lp.read_bytes()

    def test_wrong_magic_rejected(self, idx_pair, tmp_path):
        _, _, ip, lp = idx_pair
        bad = tmp_path / "bad.idx"
        data = bytearray(lp.read_bytes())
        data[3] = 0x05
        bad.write_bytes(bytes(data))
        with pytest.raises(IdxFormatError, match="magic"):
            load_idx(ip, bad)

    def test_truncated_payload_rejected(self, idx_pair, tmp_path):
        _, _, ip, lp = idx_pair
        cut = tmp_path / "cut.idx"
        cut.write_bytes(ip.read_bytes()[:-5])
        with pytest.raises(IdxFormatError, match="payload"):
            load_idx(cut, lp)

    def test_count_mismatch_rejected(self, idx_pair, tmp_path):
        images, labels, ip, lp = idx_pair
        lp3 = tmp_path / "lab3.idx"
        with open(lp3, "wb") as fh:
            fh.write(struct.pack(">2i", 0x00000801, 3))
            fh.write(bytes([1, 2, 3]))
        with pytest.raises(IdxFormatError, match="count"):
            load_idx(ip, lp3)

    def test_header_fields_cross_checked_against_size(self, tmp_path):
        # a well-formed pair with MNIST-like geometry parses to the
        # advertised shape
        images = np.zeros((5, 28, 28), dtype=np.uint8)
        labels = np.arange(5, dtype=np.uint8)
        ip, lp = tmp_path / "i.idx", tmp_path / "l.idx"
        write_idx(images, labels, ip, lp)
        assert ip.stat().st_size == 16 + 5 * 28 * 28
        ds = load_idx(ip, lp)
        assert ds.feature_count == 784
        assert ds.class_count == 5


class TestSynthBlobs:
    def test_separable_by_centroid_classifier(self):
        ds = synth_blobs(5, 16, 200, separation=10.0, seed=3)
        # closed-form oracle: classify by nearest class centroid
        centroids = np.stack(
            [ds.inputs[ds.labels == c].mean(axis=0) for c in range(5)]
        )
        d2 = ((ds.inputs[:, None, :] - centroids[None]) ** 2).sum(-1)
        acc = (d2.argmin(axis=1) == ds.labels).mean()
        assert acc >= 0.999

    def test_zero_separation_rejected(self):
        with pytest.raises(SeparationError):
            synth_blobs(3, 4, 10, separation=0.0, seed=0)

    def test_infeasible_separation_errors(self):
        with pytest.raises(SeparationError):
            synth_blobs(50, 1, 2, separation=1e9, seed=0, max_attempts=5)

    def test_deterministic(self):
        a = synth_blobs(4, 8, 50, 6.0, seed=9)
        b = synth_blobs(4, 8, 50, 6.0, seed=9)
        np.testing.assert_array_equal(a.inputs, b.inputs)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_pairwise_separation_honored(self):
        ds = synth_blobs(6, 10, 5, separation=4.0, seed=2)
        centers = np.stack([ds.inputs[ds.labels == c].mean(0) for c in range(6)])
        # crude: sample means approximate centers; true centers separated by 4
        deltas = centers[:, None] - centers[None]
        dist = np.sqrt((deltas**2).sum(-1))
        np.fill_diagonal(dist, np.inf)
        assert dist.min() > 2.0


class TestSplitAndBatch:
    def test_split_sizes(self):
        ds = synth_blobs(2, 4, 30000, 8.0, seed=0)
        tr, va = split_dataset(ds, 0.1, seed=0)
        assert len(tr) == 54000 and len(va) == 6000

    def test_split_disjoint_and_exhaustive(self):
        ds = synth_blobs(3, 2, 100, 8.0, seed=1)
        marked = Dataset(
            np.arange(300, dtype=float)[:, None] @ np.ones((1, 2)),
            ds.labels,
            3,
        )
        tr, va = split_dataset(marked, 0.25, seed=5)
        ids = np.concatenate([tr.inputs[:, 0], va.inputs[:, 0]])
        assert np.array_equal(np.sort(ids), np.arange(300, dtype=float))

    def test_bad_fraction_rejected(self):
        ds = synth_blobs(2, 2, 10, 5.0, seed=0)
        for frac in (0.0, 1.0, -0.2):
            with pytest.raises(ValueError):
                split_dataset(ds, frac, seed=0)

    def test_batch_order_reproducible(self):
        ds = synth_blobs(2, 3, 50, 5.0, seed=0)
        s1 = BatchStream(ds, 16, seed=4)
        s2 = BatchStream(ds, 16, seed=4)
        for ep in range(3):
            np.testing.assert_array_equal(s1.epoch_order(ep), s2.epoch_order(ep))
        # different epochs reshuffle
        assert not np.array_equal(s1.epoch_order(0), s1.epoch_order(1))

    def test_oversized_batch_is_single_batch(self):
        ds = synth_blobs(2, 3, 10, 5.0, seed=0)
        stream = BatchStream(ds, 10_000, seed=0)
        batches = list(stream.epoch_batches(0))
        assert len(batches) == 1
        assert batches[0][0].shape[0] == 20

    def test_split_and_batch_composition(self):
        ds = synth_blobs(2, 3, 100, 5.0, seed=0)
        stream, val = split_and_batch(ds, 0.2, 32, seed=7)
        assert len(val) == 40
        assert stream.batches_per_epoch() == 5
