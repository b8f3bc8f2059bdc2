"""Dataset acquisition: IDX (MNIST container) parsing, synthetic Gaussian
blobs, and deterministic split/batch streams.

No network access: IDX files are consumed from local paths (the CLI
prints fetch instructions).  Pixel bytes are scaled to [0, 1]; no mean
centering.  Splits and batch orders are fully determined by their seeds.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Dataset",
    "IdxFormatError",
    "SeparationError",
    "IMAGES_MAGIC",
    "LABELS_MAGIC",
    "load_idx",
    "write_idx",
    "synth_blobs",
    "split_dataset",
    "BatchStream",
    "split_and_batch",
]

IMAGES_MAGIC = 0x00000803  # unsigned byte, rank 3
LABELS_MAGIC = 0x00000801  # unsigned byte, rank 1


class IdxFormatError(ValueError):
    """Malformed IDX container (bad magic, truncated payload, mismatch)."""


class SeparationError(ValueError):
    """Requested cluster separation is infeasible."""


@dataclass(frozen=True)
class Dataset:
    """Feature matrix [samples x features] with integer class labels."""

    inputs: np.ndarray
    labels: np.ndarray
    class_count: int

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if inputs.ndim != 2 or labels.ndim != 1 or inputs.shape[0] != labels.shape[0]:
            raise ValueError("inputs must be [n x d] with one label per row")
        if not np.all(np.isfinite(inputs)):
            raise ValueError("inputs must be finite")
        if labels.size and (labels.min() < 0 or labels.max() >= self.class_count):
            raise ValueError("labels out of range for class_count")
        inputs.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.labels.size

    @property
    def feature_count(self) -> int:
        return self.inputs.shape[1]

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.inputs[idx], self.labels[idx], self.class_count)


def _read_header(fh, path, magic_expected, rank):
    head = fh.read(4 * (1 + rank))
    if len(head) != 4 * (1 + rank):
        raise IdxFormatError(f"{path}: truncated header")
    fields = struct.unpack(f">{1 + rank}i", head)
    if fields[0] != magic_expected:
        raise IdxFormatError(
            f"{path}: bad magic 0x{fields[0]:08x}, expected 0x{magic_expected:08x}"
        )
    return fields[1:]


def load_idx(images_path, labels_path) -> Dataset:
    """Parse a big-endian IDX image/label pair into a Dataset.

    Images: magic 0x00000803, dims [count, rows, cols], unsigned bytes
    scaled by 1/255.  Labels: magic 0x00000801, dims [count].  The two
    counts must agree and payloads must be complete.
    """
    with open(images_path, "rb") as fh:
        count, rows, cols = _read_header(fh, images_path, IMAGES_MAGIC, 3)
        payload = fh.read()
    expected = count * rows * cols
    if len(payload) < expected:
        raise IdxFormatError(
            f"{images_path}: payload holds {len(payload)} bytes, "
            f"header promises {expected}"
        )
    pixels = np.frombuffer(payload[:expected], dtype=np.uint8)
    inputs = pixels.reshape(count, rows * cols).astype(np.float64) / 255.0

    with open(labels_path, "rb") as fh:
        (label_count,) = _read_header(fh, labels_path, LABELS_MAGIC, 1)
        label_payload = fh.read()
    if len(label_payload) < label_count:
        raise IdxFormatError(f"{labels_path}: truncated label payload")
    labels = np.frombuffer(label_payload[:label_count], dtype=np.uint8).astype(
        np.int64
    )
    if label_count != count:
        raise IdxFormatError(
            f"image count {count} does not match label count {label_count}"
        )
    return Dataset(inputs, labels, class_count=int(labels.max()) + 1 if count else 0)


def write_idx(images: np.ndarray, labels: np.ndarray, images_path, labels_path):
    """Write uint8 images [n x rows x cols] and labels [n] as an IDX pair."""
    images = np.ascontiguousarray(images, dtype=np.uint8)
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    if images.ndim != 3 or labels.ndim != 1 or images.shape[0] != labels.shape[0]:
        raise ValueError("images must be [n x rows x cols] with one label per image")
    n, rows, cols = images.shape
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">4i", IMAGES_MAGIC, n, rows, cols))
        fh.write(images.tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">2i", LABELS_MAGIC, n))
        fh.write(labels.tobytes())


def synth_blobs(
    class_count: int,
    dim: int,
    samples_per_class: int,
    separation: float,
    seed,
    max_attempts: int = 500,
) -> Dataset:
    """Unit-variance Gaussian clusters at seeded random centers.

    Centers are drawn until every pairwise distance reaches ``separation``
    (bounded retries, then SeparationError).  Deterministic given seed.
    """
    if class_count < 1 or dim < 1 or samples_per_class < 1:
        raise ValueError("class_count, dim and samples_per_class must be positive")
    if separation <= 0:
        raise SeparationError("separation must be positive")
    rng = np.random.default_rng([int(seed), 0xB10B5])
    scale = separation * max(1.0, math.sqrt(class_count)) / math.sqrt(dim)
    centers = None
    for _ in range(max_attempts):
        cand = rng.normal(0.0, scale, size=(class_count, dim))
        if class_count == 1:
            centers = cand
            break
        deltas = cand[:, None, :] - cand[None, :, :]
        dists = np.sqrt((deltas**2).sum(-1))
        np.fill_diagonal(dists, np.inf)
        if dists.min() >= separation:
            centers = cand
            break
    if centers is None:
        raise SeparationError(
            f"could not place {class_count} centers at separation {separation} "
            f"in {dim}-d after {max_attempts} attempts"
        )
    labels = np.repeat(np.arange(class_count, dtype=np.int64), samples_per_class)
    noise = rng.normal(0.0, 1.0, size=(labels.size, dim))
    inputs = centers[labels] + noise
    return Dataset(inputs, labels, class_count)


def split_dataset(ds: Dataset, val_fraction: float, seed) -> tuple[Dataset, Dataset]:
    """Seeded shuffle then disjoint train/val split."""
    if not 0.0 < val_fraction < 1.0:
        raise ValueError("val_fraction must be in (0, 1)")
    n = len(ds)
    n_val = int(round(n * val_fraction))
    if n_val == 0 or n_val == n:
        raise ValueError(f"split of {n} samples at {val_fraction} leaves a side empty")
    perm = np.random.default_rng([int(seed), 0x5911]).permutation(n)
    return ds.subset(perm[n_val:]), ds.subset(perm[:n_val])


class BatchStream:
    """Deterministic per-epoch reshuffled batches over a dataset.

    The batch order for epoch k depends only on (seed, k), so re-running
    an epoch reproduces the identical sequence.
    """

    def __init__(self, dataset: Dataset, batch_size: int, seed):
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if len(dataset) == 0:
            raise ValueError("empty dataset")
        self.dataset = dataset
        self.batch_size = min(batch_size, len(dataset))
        self.seed = int(seed)

    def epoch_order(self, epoch: int) -> np.ndarray:
        return np.random.default_rng([self.seed, 0xBA7C, int(epoch)]).permutation(
            len(self.dataset)
        )

    def epoch_batches(self, epoch: int):
        order = self.epoch_order(epoch)
        ds = self.dataset
        for start in range(0, order.size, self.batch_size):
            idx = order[start : start + self.batch_size]
            yield ds.inputs[idx], ds.labels[idx]

    def batches_per_epoch(self) -> int:
        return math.ceil(len(self.dataset) / self.batch_size)


def split_and_batch(
    ds: Dataset, val_fraction: float, batch_size: int, seed
) -> tuple[BatchStream, Dataset]:
    """Split a dataset and wrap the train side in a BatchStream."""
    train, val = split_dataset(ds, val_fraction, seed)
    return BatchStream(train, batch_size, seed), val
