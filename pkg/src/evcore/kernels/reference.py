"""Pure-numpy backend for the batch-gradient kernel.

Vectorizes the per-sample forward/backward over the whole batch; the
mean gradient is the fixed-order batch mean of per-sample gradients and
the per-sample sup norms are computed without materializing per-sample
gradient blocks (the sup norm of an outer product d a^T is
max|d| * max|a|).
"""

import numpy as np

from ..losses import batch_loss_and_logit_grad


def _nl_apply(value, z):
    if value == "tanh":
        return np.tanh(z)
    if value == "relu":
        return np.maximum(z, 0.0)
    return z


def _nl_deriv(value, z, a):
    if value == "tanh":
        return 1.0 - a * a
    if value == "relu":
        return (z > 0.0).astype(np.float64)
    return np.ones_like(z)


def batch_grad(weights, biases, hidden_nls, X, gt, loss_kind, act_kind,
               eta1, use_correct_reg, want_input_grads=False):
    """Per-sample losses, batch-mean parameter gradient, per-sample sup norms.

    Returns (losses (N,), grad_weights, grad_biases, supnorms (N,),
    input_grads (N, d) or None).
    """
    n = X.shape[0]
    n_layers = len(weights)

    acts = [X]
    zs = []
    a = X
    for l in range(n_layers - 1):
        z = a @ weights[l].T + biases[l]
        a = _nl_apply(hidden_nls[l], z)
        zs.append(z)
        acts.append(a)
    logits = a @ weights[-1].T + biases[-1]

    losses, delta = batch_loss_and_logit_grad(
        loss_kind, act_kind, logits, gt, eta1, use_correct_reg
    )

    grad_w = [None] * n_layers
    grad_b = [None] * n_layers
    supnorms = np.zeros(n)
    for l in range(n_layers - 1, -1, -1):
        a_prev = acts[l]
        grad_w[l] = delta.T @ a_prev / n
        grad_b[l] = delta.mean(axis=0)
        d_max = np.abs(delta).max(axis=1)
        a_max = np.abs(a_prev).max(axis=1) if a_prev.shape[1] else np.zeros(n)
        supnorms = np.maximum(supnorms, np.maximum(d_max * a_max, d_max))
        if l > 0:
            delta = (delta @ weights[l]) * _nl_deriv(hidden_nls[l - 1], zs[l - 1], acts[l])

    input_grads = delta @ weights[0] if want_input_grads else None
    return losses, grad_w, grad_b, supnorms, input_grads
