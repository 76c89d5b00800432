"""Evidential activations and the logits -> evidence -> Dirichlet chain.

An evidential classifier replaces the softmax with a non-negative
activation; the activated outputs are per-class evidence e, and the
predictive Dirichlet has parameters alpha = e + 1 with strength
S = sum(alpha).
"""

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, DomainError, EvidenceOverflowError

EXP_LOGIT_LIMIT = 700.0


class ActivationKind(enum.Enum):
    RELU = "relu"
    SOFTPLUS = "softplus"
    EXP = "exp"
    SELU = "selu"


@dataclass(frozen=True)
class DirichletParams:
    """Dirichlet parameters alpha (each >= 1) and their sum S."""

    alpha: np.ndarray
    strength: float

    @property
    def class_count(self):
        return self.alpha.shape[0]


def as_logits(values):
    """Validate and return a finite float64 logit vector (K >= 2)."""
    o = np.asarray(values, dtype=np.float64)
    if o.ndim != 1 or o.shape[0] < 2:
        raise DomainError("logits must be a 1-D vector with K >= 2 entries")
    if not np.all(np.isfinite(o)):
        raise DomainError("logits must be finite")
    return o


def as_evidence(values):
    """Validate and return a finite non-negative float64 evidence vector."""
    e = np.asarray(values, dtype=np.float64)
    if e.ndim != 1:
        raise DomainError("evidence must be a 1-D vector")
    if not np.all(np.isfinite(e)) or np.any(e < 0.0):
        raise DomainError("evidence entries must be finite and >= 0")
    return e


def _softplus(o):
    # o + log1p(exp(-o)) for positive o avoids overflow past ~709.
    out = np.empty_like(o)
    pos = o > 0
    out[pos] = o[pos] + np.log1p(np.exp(-o[pos]))
    out[~pos] = np.log1p(np.exp(o[~pos]))
    return out


def activate(kind, logits):
    """Transform logits into non-negative evidence."""
    o = as_logits(logits)
    if kind is ActivationKind.RELU:
        return np.maximum(o, 0.0)
    if kind is ActivationKind.SOFTPLUS:
        return _softplus(o)
    if kind is ActivationKind.EXP:
        too_big = np.flatnonzero(o > EXP_LOGIT_LIMIT)
        if too_big.size:
            i = int(too_big[0])
            raise EvidenceOverflowError(
                f"exp evidence overflow at index {i}: logit {o[i]} > {EXP_LOGIT_LIMIT}",
                index=i,
            )
        return np.exp(o)
    if kind is ActivationKind.SELU:
        return np.where(o > 0.0, o + 1.0, np.exp(o))
    raise DomainError(f"unknown activation kind: {kind!r}")


def activation_derivative(kind, logit):
    """Elementwise derivative de/do of the evidential activation.

    ReLU uses the subgradient convention de/do = 0 at exactly 0; SELU's
    derivative is continuous there (both branches give 1).
    """
    o = float(logit)
    if not np.isfinite(o):
        raise DomainError("logit must be finite")
    if kind is ActivationKind.RELU:
        return 1.0 if o > 0.0 else 0.0
    if kind is ActivationKind.SOFTPLUS:
        return _sigmoid(o)
    if kind is ActivationKind.EXP:
        if o > EXP_LOGIT_LIMIT:
            raise EvidenceOverflowError(
                f"exp derivative overflow: logit {o} > {EXP_LOGIT_LIMIT}"
            )
        return float(np.exp(o))
    if kind is ActivationKind.SELU:
        return 1.0 if o > 0.0 else float(np.exp(o))
    raise DomainError(f"unknown activation kind: {kind!r}")


def _sigmoid(o):
    if o >= 0.0:
        return 1.0 / (1.0 + np.exp(-o))
    z = np.exp(o)
    return float(z / (1.0 + z))


def activate_arr(kind, o):
    """Batched activation over a float64 array of any shape.

    Skips the 1-D validation of ``activate`` but keeps the exp overflow
    check (reporting a flat index).
    """
    if kind is ActivationKind.RELU:
        return np.maximum(o, 0.0)
    if kind is ActivationKind.SOFTPLUS:
        return _softplus(o)
    if kind is ActivationKind.EXP:
        if np.any(o > EXP_LOGIT_LIMIT):
            flat = int(np.flatnonzero(o > EXP_LOGIT_LIMIT)[0])
            raise EvidenceOverflowError(
                f"exp evidence overflow at flat index {flat}", index=flat
            )
        return np.exp(o)
    if kind is ActivationKind.SELU:
        return np.where(o > 0.0, o + 1.0, np.exp(o))
    raise DomainError(f"unknown activation kind: {kind!r}")


def activation_derivative_arr(kind, o):
    """Vectorized de/do over a float64 array (no overflow check)."""
    if kind is ActivationKind.RELU:
        return (o > 0.0).astype(np.float64)
    if kind is ActivationKind.SOFTPLUS:
        out = np.empty_like(o)
        pos = o >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-o[pos]))
        z = np.exp(o[~pos])
        out[~pos] = z / (1.0 + z)
        return out
    if kind is ActivationKind.EXP:
        return np.exp(o)
    if kind is ActivationKind.SELU:
        return np.where(o > 0.0, 1.0, np.exp(o))
    raise DomainError(f"unknown activation kind: {kind!r}")


def dirichlet_params(evidence):
    """alpha = e + 1 and strength S = sum(alpha)."""
    e = as_evidence(evidence)
    alpha = e + 1.0
    return DirichletParams(alpha=alpha, strength=float(alpha.sum()))


def evidence_from_params(params):
    """Recover the evidence vector e = alpha - 1."""
    return params.alpha - 1.0


def check_same_classes(params, gt_index):
    k = params.class_count
    if not (0 <= gt_index < k):
        raise DimensionMismatchError(
            f"ground-truth index {gt_index} out of range for K={k}"
        )
    return k
