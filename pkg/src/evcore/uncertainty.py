"""Subjective-logic uncertainty quantities and evaluation metrics.

Vacuity nu = K/S, belief masses b = e/S (so sum(b) + nu = 1), expected
class probabilities alpha/S, the standard dissonance measure, and the
evaluation metrics used by the experiment runners: ECE, rank-based
AUROC, accuracy-vacuity curves, and top-K% confident accuracy.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .head import dirichlet_params


@dataclass(frozen=True)
class UncertaintyReport:
    vacuity: float
    beliefs: np.ndarray
    expected_probs: np.ndarray
    dissonance: float
    predicted_class: int


@dataclass(frozen=True)
class PredictionRecord:
    """One scored prediction: confidence, correctness, and uncertainties."""

    confidence: float
    correct: bool
    vacuity: float
    uncertainty_score: float


def vacuity(params):
    """K/S: 1 at zero evidence, toward 0 as evidence accumulates."""
    return params.class_count / params.strength


def beliefs(evidence, params):
    """Per-class committed belief b_k = e_k / S."""
    return np.asarray(evidence, dtype=np.float64) / params.strength


def expected_probs(params):
    """Dirichlet mean alpha_k / S (sums to 1)."""
    return params.alpha / params.strength


def dissonance(belief_vec):
    """Conflict among non-zero beliefs, in [0, 1].

    diss = sum_i b_i * (sum_{j != i} b_j Bal(b_i, b_j)) / (sum_{j != i} b_j)
    with the relative mass balance Bal(x, y) = 1 - |x - y| / (x + y)
    (0 when x + y = 0); terms with no opposing mass contribute 0.
    """
    b = np.asarray(belief_vec, dtype=np.float64)
    if np.any(b < 0.0) or b.sum() > 1.0 + 1e-12:
        raise DomainError("beliefs must be non-negative and sum to at most 1")
    total = 0.0
    k = b.shape[0]
    for i in range(k):
        others = np.delete(b, i)
        denom = others.sum()
        if b[i] == 0.0 or denom == 0.0:
            continue
        # b[i] > 0 here, so every pair sum is positive
        bal = 1.0 - np.abs(b[i] - others) / (b[i] + others)
        total += b[i] * float((others * bal).sum()) / denom
    return total


def report(evidence):
    """Assemble the full uncertainty report for one evidence vector."""
    params = dirichlet_params(evidence)
    b = beliefs(evidence, params)
    return UncertaintyReport(
        vacuity=vacuity(params),
        beliefs=b,
        expected_probs=expected_probs(params),
        dissonance=dissonance(b),
        predicted_class=int(np.argmax(b)),
    )


def ece(records, n_bins):
    """Expected calibration error over equal-width confidence bins.

    Bin i covers [i/n, (i+1)/n); the last bin is closed.  Empty bins
    contribute nothing.
    """
    if not records:
        raise DomainError("ece requires at least one record")
    if n_bins < 1:
        raise DomainError("n_bins must be >= 1")
    conf = np.array([r.confidence for r in records], dtype=np.float64)
    correct = np.array([r.correct for r in records], dtype=np.float64)
    if np.any(conf < 0.0) or np.any(conf > 1.0):
        raise DomainError("confidences must lie in [0, 1]")
    idx = np.minimum((conf * n_bins).astype(np.int64), n_bins - 1)
    n = len(records)
    total = 0.0
    for b in range(n_bins):
        mask = idx == b
        count = int(mask.sum())
        if count == 0:
            continue
        gap = abs(correct[mask].mean() - conf[mask].mean())
        total += (count / n) * gap
    return float(total)


def auroc(id_scores, ood_scores):
    """P(random OOD score > random ID score), ties counted 1/2.

    Rank-based (Mann-Whitney U); the test suite pins it against an
    exhaustive pairwise oracle.
    """
    a = np.asarray(id_scores, dtype=np.float64)
    b = np.asarray(ood_scores, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise DomainError("auroc requires non-empty score lists")
    combined = np.concatenate([a, b])
    order = np.argsort(combined, kind="mergesort")
    ranks = np.empty_like(combined)
    sorted_scores = combined[order]
    # midranks for ties
    i = 0
    n = combined.size
    while i < n:
        j = i
        while j + 1 < n and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    rank_sum_ood = ranks[a.size :].sum()
    u = rank_sum_ood - b.size * (b.size + 1) / 2.0
    return float(u / (a.size * b.size))


def accuracy_vacuity_curve(records, thresholds):
    """(threshold, accuracy, coverage) for records with vacuity <= threshold.

    Accuracy is NaN when nothing is retained.
    """
    ths = list(thresholds)
    if any(t2 < t1 for t1, t2 in zip(ths, ths[1:])):
        raise DomainError("thresholds must be sorted ascending")
    vac = np.array([r.vacuity for r in records], dtype=np.float64)
    correct = np.array([r.correct for r in records], dtype=np.float64)
    n = len(records)
    out = []
    for t in ths:
        mask = vac <= t
        kept = int(mask.sum())
        acc = float(correct[mask].mean()) if kept else float("nan")
        out.append((float(t), acc, kept / n if n else 0.0))
    return out


def topk_confident_accuracy(records, fractions):
    """Accuracy over the ceil(f*N) lowest-vacuity records for each fraction.

    Vacuity ties keep input order (stable sort).
    """
    if not records:
        raise DomainError("topk_confident_accuracy requires records")
    vac = np.array([r.vacuity for r in records], dtype=np.float64)
    correct = np.array([r.correct for r in records], dtype=np.float64)
    order = np.argsort(vac, kind="mergesort")
    n = len(records)
    out = []
    for f in fractions:
        if not (0.0 < f <= 1.0):
            raise DomainError("fractions must lie in (0, 1]")
        take = int(np.ceil(f * n))
        out.append((float(f), float(correct[order[:take]].mean())))
    return out
