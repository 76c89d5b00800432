"""Deterministic synthetic datasets and an IDX loader.

Every generator is a pure function of its arguments including the seed;
randomness comes from the portable splitmix64 stream so datasets are
reproducible across platforms.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FormatError
from .rng import SplitMix64, derive


@dataclass
class LabeledDataset:
    inputs: np.ndarray
    labels: np.ndarray
    class_count: int
    seed: int

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.inputs.ndim != 2 or self.inputs.shape[0] < 1:
            raise DomainError("inputs must be a non-empty (N, d) array")
        if self.labels.shape != (self.inputs.shape[0],):
            raise DomainError("labels must align with inputs")
        if not np.all(np.isfinite(self.inputs)):
            raise DomainError("inputs must be finite")
        if np.any(self.labels < 0) or np.any(self.labels >= self.class_count):
            raise DomainError("labels must lie in [0, class_count)")

    def __len__(self):
        return self.inputs.shape[0]

    @property
    def dim(self):
        return self.inputs.shape[1]


def one_hot(gt_index, class_count):
    """One-hot label vector with a single 1 at gt_index."""
    if not (0 <= gt_index < class_count):
        raise DomainError("gt_index out of range")
    y = np.zeros(class_count)
    y[gt_index] = 1.0
    return y


def gaussian_blobs(class_count, n_per_class, spread, separation, dim=2, seed=0):
    """K isotropic Gaussian clusters with exactly n_per_class points each.

    Centers are scaled simplex vertices (separation * e_k) when dim >=
    class_count, and otherwise sit on a circle of radius `separation` in
    the first two coordinates.  Points are generated class-major, so
    class balance is exact.
    """
    if class_count < 2:
        raise DomainError("class_count must be >= 2")
    if n_per_class < 1:
        raise DomainError("n_per_class must be >= 1")
    if spread <= 0:
        raise DomainError("spread must be > 0")
    if dim < 2:
        raise DomainError("dim must be >= 2")
    rng = SplitMix64(derive(seed, 0xB10B5))
    centers = np.zeros((class_count, dim))
    if dim >= class_count:
        for k in range(class_count):
            centers[k, k] = separation
    else:
        for k in range(class_count):
            theta = 2.0 * np.pi * k / class_count
            centers[k, 0] = separation * np.cos(theta)
            centers[k, 1] = separation * np.sin(theta)
    n = class_count * n_per_class
    inputs = np.empty((n, dim))
    labels = np.empty(n, dtype=np.int64)
    row = 0
    for k in range(class_count):
        for _ in range(n_per_class):
            for j in range(dim):
                inputs[row, j] = centers[k, j] + spread * rng.normal()
            labels[row] = k
            row += 1
    return LabeledDataset(inputs=inputs, labels=labels, class_count=class_count, seed=seed)


def four_point_toy(seed=0):
    """Four orthogonal points with four distinct labels.

    The inputs are the standard basis of R^4 and the labels are
    (1, 2, 0, 3): with zero evidence the argmax tie-break predicts class
    0, which is wrong for every basis point except the third, so a model
    that freezes on two of these points cannot exceed 50% accuracy.
    """
    inputs = np.eye(4)
    labels = np.array([1, 2, 0, 3], dtype=np.int64)
    return LabeledDataset(inputs=inputs, labels=labels, class_count=4, seed=seed)


def ood_shift(base, shift_magnitude, seed=0):
    """Displace all inputs by a fixed random direction of the given magnitude.

    Adds fresh isotropic noise with standard deviation
    0.1 * shift_magnitude on top of the displacement; labels are kept
    (callers treat the result as out-of-distribution).
    """
    if shift_magnitude <= 0:
        raise DomainError("shift_magnitude must be > 0")
    rng = SplitMix64(derive(seed, 0x00D5))
    d = base.dim
    direction = np.array([rng.normal() for _ in range(d)])
    norm = np.sqrt((direction ** 2).sum())
    while norm == 0.0:
        direction = np.array([rng.normal() for _ in range(d)])
        norm = np.sqrt((direction ** 2).sum())
    direction /= norm
    noise_std = 0.1 * shift_magnitude
    inputs = base.inputs + shift_magnitude * direction
    noisy = np.empty_like(inputs)
    for i in range(inputs.shape[0]):
        for j in range(d):
            noisy[i, j] = inputs[i, j] + noise_std * rng.normal()
    return LabeledDataset(
        inputs=noisy, labels=base.labels.copy(), class_count=base.class_count, seed=seed
    )


def with_label_noise(base, rate, seed=0):
    """Replace each label with a uniformly random *other* class with prob rate."""
    if not (0.0 <= rate <= 1.0):
        raise DomainError("rate must lie in [0, 1]")
    rng = SplitMix64(derive(seed, 0x4015E))
    labels = base.labels.copy()
    k = base.class_count
    for i in range(len(labels)):
        if rng.uniform() < rate:
            offset = 1 + rng.integer(k - 1)
            labels[i] = (labels[i] + offset) % k
    return LabeledDataset(
        inputs=base.inputs.copy(), labels=labels, class_count=k, seed=seed
    )


_IDX_IMAGES_MAGIC = 0x00000803
_IDX_LABELS_MAGIC = 0x00000801


def idx_load(images_path, labels_path, limit=None):
    """Load an MNIST-style IDX image/label pair, pixels scaled to [0, 1]."""
    with open(images_path, "rb") as fh:
        img_data = fh.read()
    with open(labels_path, "rb") as fh:
        lbl_data = fh.read()

    if len(img_data) < 16:
        raise FormatError("image file truncated before offset 16 (header)")
    magic, count, rows, cols = struct.unpack_from(">IIII", img_data, 0)
    if magic != _IDX_IMAGES_MAGIC:
        raise FormatError(
            f"bad image magic 0x{magic:08x} at offset 0 (expected 0x{_IDX_IMAGES_MAGIC:08x})"
        )
    if len(lbl_data) < 8:
        raise FormatError("label file truncated before offset 8 (header)")
    lbl_magic, lbl_count = struct.unpack_from(">II", lbl_data, 0)
    if lbl_magic != _IDX_LABELS_MAGIC:
        raise FormatError(
            f"bad label magic 0x{lbl_magic:08x} at offset 0 (expected 0x{_IDX_LABELS_MAGIC:08x})"
        )
    if count != lbl_count:
        raise FormatError(
            f"image count {count} (offset 4) != label count {lbl_count} (offset 4)"
        )

    n = count if limit is None else min(limit, count)
    pixel_bytes = rows * cols
    need = 16 + n * pixel_bytes
    if len(img_data) < need:
        raise FormatError(f"image file truncated at offset {len(img_data)} (need {need})")
    if len(lbl_data) < 8 + n:
        raise FormatError(f"label file truncated at offset {len(lbl_data)} (need {8 + n})")

    pixels = np.frombuffer(img_data, dtype=np.uint8, count=n * pixel_bytes, offset=16)
    inputs = pixels.reshape(n, pixel_bytes).astype(np.float64) / 255.0
    labels = np.frombuffer(lbl_data, dtype=np.uint8, count=n, offset=8).astype(np.int64)
    class_count = int(labels.max()) + 1 if n else 0
    return LabeledDataset(
        inputs=inputs, labels=labels, class_count=max(class_count, 2), seed=0
    )


def to_csv(dataset, path):
    """Write the dataset as CSV with header x0..x{d-1},label."""
    d = dataset.dim
    header = ",".join([f"x{j}" for j in range(d)] + ["label"])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for i in range(len(dataset)):
            cells = [repr(float(v)) for v in dataset.inputs[i]]
            cells.append(str(int(dataset.labels[i])))
            fh.write(",".join(cells) + "\n")
