"""Uncertainty-guided top-t belief-weighted codebook selection.

For a confident position (vacuity <= threshold) the single highest-
belief code is returned; otherwise the t highest-belief codes are
combined with their normalized beliefs as convex weights.  With t = 1
or threshold = 1 the rule reduces to plain argmax selection.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, DomainError, FormatError
from .head import as_evidence


@dataclass(frozen=True)
class Codebook:
    """K code items of dimension D, stored as a (K, D) matrix."""

    items: np.ndarray

    def __post_init__(self):
        items = np.asarray(self.items, dtype=np.float64)
        if items.ndim != 2 or items.shape[0] < 1 or items.shape[1] < 1:
            raise DomainError("codebook must be a (K, D) matrix with K, D >= 1")
        if not np.all(np.isfinite(items)):
            raise DomainError("codebook entries must be finite")
        object.__setattr__(self, "items", items)

    @property
    def size(self):
        return self.items.shape[0]

    @property
    def dim(self):
        return self.items.shape[1]


@dataclass(frozen=True)
class SelectionConfig:
    top_t: int
    vacuity_threshold: float

    def __post_init__(self):
        if self.top_t < 1:
            raise DomainError("top_t must be >= 1")
        if not (0.0 <= self.vacuity_threshold <= 1.0):
            raise DomainError("vacuity_threshold must lie in [0, 1]")


def select_code(evidence, codebook, config):
    """Code item (or belief-weighted combination) for one evidence vector."""
    e = as_evidence(evidence)
    k = codebook.size
    if e.shape[0] != k:
        raise DimensionMismatchError(
            f"evidence length {e.shape[0]} != codebook size {k}"
        )
    if config.top_t > k:
        raise DomainError(f"top_t {config.top_t} exceeds codebook size {k}")
    strength = e.sum() + k
    vac = k / strength
    b = e / strength
    best = int(np.argmax(b))
    if vac <= config.vacuity_threshold:
        return codebook.items[best].copy()
    # stable order: belief descending, ties by ascending index
    order = np.argsort(-b, kind="mergesort")[: config.top_t]
    weights = b[order]
    total = weights.sum()
    if total == 0.0:
        return codebook.items[best].copy()
    return (weights / total) @ codebook.items[order]


def select_codes_batch(evidences, codebook, config):
    """Independent per-position selection, shape (M, K) -> (M, D)."""
    evidences = np.asarray(evidences, dtype=np.float64)
    if evidences.ndim != 2:
        raise DomainError("evidences must be a (M, K) array")
    out = np.empty((evidences.shape[0], codebook.dim))
    for m in range(evidences.shape[0]):
        out[m] = select_code(evidences[m], codebook, config)
    return out


def save_codebook_csv(codebook, path):
    """K rows of D comma-separated float64 values (no header)."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in codebook.items:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def load_codebook_csv(path):
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(cell) for cell in line.split(",")])
            except ValueError as err:
                raise FormatError(f"bad codebook cell on line {line_no}: {err}") from err
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise FormatError("codebook CSV must be K non-empty rows of equal length")
    return Codebook(items=np.array(rows, dtype=np.float64))


_MAGIC = b"EVCB"
_VERSION = 1


def save_codebook(codebook, path):
    """Binary layout mirrors network checkpoints: magic, dims, row-major f64."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<III", _VERSION, codebook.size, codebook.dim))
        fh.write(np.ascontiguousarray(codebook.items, dtype="<f8").tobytes())


def load_codebook(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _MAGIC:
        raise FormatError(f"bad codebook magic at offset 0: {data[:4]!r}")
    version, k, d = struct.unpack_from("<III", data, 4)
    if version != _VERSION:
        raise FormatError(f"unsupported codebook version {version}")
    need = 16 + k * d * 8
    if len(data) < need:
        raise FormatError(f"truncated codebook at offset {len(data)} (need {need})")
    items = np.frombuffer(data, dtype="<f8", count=k * d, offset=16).reshape(k, d)
    return Codebook(items=items.copy())
