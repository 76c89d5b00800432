"""Evidential losses, regularizers, and closed-form logit gradients.

Three Bayes-risk / marginal-likelihood losses over the predictive
Dirichlet, the forward-KL incorrect-evidence regularizer (ground-truth
component masked to 1, reference Dir(1,...,1)), the vacuity-weighted
correct-evidence regularizer, and the combined annealed objective.

All gradients are analytic and are pinned against central finite
differences by the test suite.  The correct-evidence term is
differentiated through its vacuity weight nu = K/S so that the gradient
is exactly the derivative of the value returned by ``combined_loss``;
at zero evidence this reduces to the -1 ground-truth gradient the
regularizer is designed to provide.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UnsupportedActivationError
from .head import (
    ActivationKind,
    activate_arr,
    activation_derivative_arr,
    as_logits,
    check_same_classes,
    dirichlet_params,
)
from .head import activate as _activate
from .special import digamma_arr, ln_gamma, ln_gamma_arr, trigamma_arr

LN2 = math.log(2.0)


class LossKind(enum.Enum):
    MSE = "mse"
    CE = "ce"
    LOG = "log"


@dataclass(frozen=True)
class RegularizationConfig:
    """Strength of the incorrect-evidence KL term and the correct-evidence toggle."""

    lambda1: float = 0.0
    use_correct_reg: bool = False
    anneal_epochs: int = 10

    def __post_init__(self):
        if not math.isfinite(self.lambda1) or self.lambda1 < 0.0:
            raise DomainError("lambda1 must be finite and >= 0")
        if self.anneal_epochs < 1:
            raise DomainError("anneal_epochs must be >= 1")

    def anneal_weight(self, epoch):
        """eta1 = lambda1 * min(1, epoch / anneal_epochs), epoch 0-based."""
        e = max(int(epoch), 0)
        return self.lambda1 * min(1.0, e / self.anneal_epochs)


def _rows(n):
    return np.arange(n)


def evid_loss_batch(loss_kind, alpha, gt):
    """Per-sample evidential loss over a batch of Dirichlet parameters.

    alpha: (N, K) with entries >= 1; gt: (N,) int class indices.
    Returns (loss (N,), dloss/dalpha (N, K)).
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.int64)
    n, k = alpha.shape
    rows = _rows(n)
    s = alpha.sum(axis=1)

    if loss_kind is LossKind.MSE:
        m = alpha / s[:, None]
        m_gt = m[rows, gt]
        p = np.einsum("ij,ij->i", m, m)
        loss = p - 2.0 * m_gt + 1.0 + (1.0 - p) / (s + 1.0)
        grad = m + (m_gt - p)[:, None]
        grad[rows, gt] -= 1.0
        grad *= (2.0 / s)[:, None]
        grad -= ((1.0 - p) / (s + 1.0) ** 2)[:, None]
        grad -= 2.0 * (m - p[:, None]) / (s * (s + 1.0))[:, None]
        return loss, grad

    if loss_kind is LossKind.CE:
        loss = digamma_arr(s) - digamma_arr(alpha[rows, gt])
        grad = np.repeat(trigamma_arr(s)[:, None], k, axis=1)
        grad[rows, gt] -= trigamma_arr(alpha[rows, gt])
        return loss, grad

    if loss_kind is LossKind.LOG:
        loss = np.log(s) - np.log(alpha[rows, gt])
        grad = np.repeat((1.0 / s)[:, None], k, axis=1)
        grad[rows, gt] -= 1.0 / alpha[rows, gt]
        return loss, grad

    raise DomainError(f"unknown loss kind: {loss_kind!r}")


def kl_reg_batch(alpha, gt):
    """Forward KL(Dir(alpha~) || Dir(1)) with the gt component masked to 1.

    Returns (value (N,), dvalue/dalpha (N, K)); the gradient at the gt
    column is identically zero because alpha~ does not depend on it.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.int64)
    n, k = alpha.shape
    rows = _rows(n)
    at = alpha.copy()
    at[rows, gt] = 1.0
    st = at.sum(axis=1)

    val = ln_gamma_arr(st) - ln_gamma_arr(at).sum(axis=1) - ln_gamma(float(k))
    val += ((at - 1.0) * (digamma_arr(at) - digamma_arr(st)[:, None])).sum(axis=1)
    # KL >= 0 mathematically; round a few-ulp negative residual up to 0
    val = np.maximum(val, 0.0)

    grad = (at - 1.0) * trigamma_arr(at)
    grad -= ((st - k) * trigamma_arr(st))[:, None]
    grad[rows, gt] = 0.0
    return val, grad


def batch_loss_and_logit_grad(loss_kind, act_kind, logits, gt, eta1, use_correct_reg):
    """Combined per-sample loss and its gradient with respect to logits.

    logits: (N, K); gt: (N,).  eta1 is the already-annealed KL weight.
    This is the head computation shared by the single-sample public
    operations and the pure-Python training kernel.
    """
    o = np.asarray(logits, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.int64)
    n, k = o.shape
    rows = _rows(n)

    e = activate_arr(act_kind, o)
    alpha = e + 1.0
    s = alpha.sum(axis=1)
    de_do = activation_derivative_arr(act_kind, o)

    loss, dalpha = evid_loss_batch(loss_kind, alpha, gt)
    grad = dalpha * de_do

    if eta1 != 0.0:
        kl, dkl = kl_reg_batch(alpha, gt)
        loss = loss + eta1 * kl
        grad += eta1 * dkl * de_do

    if use_correct_reg:
        o_gt = o[rows, gt]
        active = o_gt < 0.0
        nu = k / s
        loss = loss + np.where(active, -nu * o_gt, 0.0)
        # d/do_j [-I nu o_gt] = I o_gt (K/S^2) de_j/do_j - I nu delta(j=gt)
        coeff = np.where(active, o_gt * k / (s * s), 0.0)
        grad += coeff[:, None] * de_do
        grad[rows, gt] -= np.where(active, nu, 0.0)

    return loss, grad


def evid_mse_loss(params, gt_index):
    """Bayes risk under squared error; bounded in [0, 2]."""
    check_same_classes(params, gt_index)
    loss, _ = evid_loss_batch(LossKind.MSE, params.alpha[None, :], [gt_index])
    return float(loss[0])


def evid_ce_loss(params, gt_index):
    """Bayes risk under cross-entropy: psi(S) - psi(alpha_gt)."""
    check_same_classes(params, gt_index)
    loss, _ = evid_loss_batch(LossKind.CE, params.alpha[None, :], [gt_index])
    return float(loss[0])


def evid_log_loss(params, gt_index):
    """Type-II maximum-likelihood loss: log S - log alpha_gt."""
    check_same_classes(params, gt_index)
    loss, _ = evid_loss_batch(LossKind.LOG, params.alpha[None, :], [gt_index])
    return float(loss[0])


def kl_incorrect_reg(params, gt_index):
    """KL from the gt-masked Dirichlet to the uniform Dirichlet (>= 0)."""
    check_same_classes(params, gt_index)
    val, _ = kl_reg_batch(params.alpha[None, :], [gt_index])
    return float(val[0])


def correct_evidence_reg(logit_gt, vacuity):
    """-1(o_gt < 0) * vacuity * o_gt; non-negative by construction."""
    if not (0.0 <= vacuity <= 1.0):
        raise DomainError("vacuity must lie in [0, 1]")
    o = float(logit_gt)
    return -vacuity * o if o < 0.0 else 0.0


def correct_evidence_reg_evidence_form(kind, e_gt, vacuity):
    """Correct-evidence regularizer expressed through the gt evidence.

    Inverts the activation back to the logit and applies the logit form,
    which keeps both forms consistent to machine precision.  ReLU is not
    invertible; zero evidence under exp/SELU corresponds to an infinite
    regularizer and raises.
    """
    if kind is ActivationKind.RELU:
        raise UnsupportedActivationError(
            "ReLU is not invertible; use the logit form of the regularizer"
        )
    e = float(e_gt)
    if e < 0.0 or not math.isfinite(e):
        raise DomainError("e_gt must be finite and >= 0")
    if kind is ActivationKind.EXP or kind is ActivationKind.SELU:
        if e == 0.0:
            raise DomainError(
                "zero gt evidence maps to logit -inf (infinite regularizer); "
                "use the logit form"
            )
        if kind is ActivationKind.EXP:
            o = math.log(e)
        else:
            o = e - 1.0 if e >= 1.0 else math.log(e)
    elif kind is ActivationKind.SOFTPLUS:
        if e <= 0.0:
            raise DomainError("softplus evidence is strictly positive")
        if e >= LN2:
            return 0.0
        o = math.log(math.expm1(e))
    else:
        raise DomainError(f"unknown activation kind: {kind!r}")
    return correct_evidence_reg(o, vacuity)


def combined_loss(loss_kind, reg, act_kind, logits, gt_index, epoch):
    """L_evid + eta1 * L_inc + L_cor at the given 0-based epoch."""
    o = as_logits(logits)
    params = dirichlet_params(_activate(act_kind, o))
    check_same_classes(params, gt_index)
    eta1 = reg.anneal_weight(epoch)
    loss, _ = batch_loss_and_logit_grad(
        loss_kind, act_kind, o[None, :], [gt_index], eta1, reg.use_correct_reg
    )
    return float(loss[0])


def loss_grad_wrt_logits(loss_kind, reg, act_kind, logits, gt_index, epoch):
    """Analytic gradient of combined_loss with respect to each logit."""
    o = as_logits(logits)
    params = dirichlet_params(_activate(act_kind, o))
    check_same_classes(params, gt_index)
    eta1 = reg.anneal_weight(epoch)
    _, grad = batch_loss_and_logit_grad(
        loss_kind, act_kind, o[None, :], [gt_index], eta1, reg.use_correct_reg
    )
    return grad[0]
