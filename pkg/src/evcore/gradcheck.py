"""Randomized verification of analytic gradients against finite differences.

Draws random (net, input, label, loss, activation, regularization)
tuples, skips configurations that land within 1e-3 of a ReLU/SELU head
kink or the correct-regularizer indicator boundary (central differences
are invalid there), and reports the worst scaled error

    err = |analytic - numeric| / max(|numeric|, 1e-3)

so err <= 1e-5 is exactly "relative error 1e-5 or absolute 1e-8".
"""

import numpy as np

from .head import ActivationKind
from .losses import LossKind, RegularizationConfig
from .network import InitSpec, Nonlinearity, backward, finite_diff_grad, forward, init
from .rng import SplitMix64

_KINK_MARGIN = 1e-3
_ABS_FLOOR_DENOM = 1e-3  # 1e-8 absolute floor / 1e-5 relative tolerance


def _random_case(rng):
    losses = list(LossKind)
    acts = list(ActivationKind)
    loss = losses[rng.integer(len(losses))]
    act = acts[rng.integer(len(acts))]
    lam = [0.0, 0.5, 2.0][rng.integer(3)]
    use_cor = rng.integer(2) == 1
    d = 2 + rng.integer(3)
    hidden = 3 + rng.integer(5)
    k = 2 + rng.integer(4)
    dims = [d, hidden, k] if rng.integer(2) else [d, k]
    net = init(dims, Nonlinearity.TANH, InitSpec.uniform(rng.next_u64()))
    for b in net.biases:
        for i in range(b.size):
            b[i] = rng.uniform_in(-0.5, 0.5)
    x = np.array([rng.uniform_in(-2.0, 2.0) for _ in range(d)])
    gt = rng.integer(k)
    reg = RegularizationConfig(lambda1=lam, use_correct_reg=use_cor)
    return net, x, gt, loss, act, reg


def _near_kink(net, x, gt, act, reg):
    o = forward(net, x)
    if act in (ActivationKind.RELU, ActivationKind.SELU):
        if np.any(np.abs(o) < _KINK_MARGIN):
            return True
    if reg.use_correct_reg and abs(o[gt]) < _KINK_MARGIN:
        return True
    return False


def run_grad_check(trials, seed, h=1e-6):
    """Worst scaled analytic-vs-numeric gradient error over random cases."""
    rng = SplitMix64(seed)
    worst = 0.0
    done = 0
    while done < trials:
        net, x, gt, loss, act, reg = _random_case(rng)
        if _near_kink(net, x, gt, act, reg):
            continue
        _, grad = backward(net, x, gt, loss, act, reg, epoch=5)
        fd = finite_diff_grad(net, x, gt, loss, act, reg, epoch=5, h=h)
        a = grad.flatten()
        f = fd.flatten()
        err = float((np.abs(a - f) / np.maximum(np.abs(f), _ABS_FLOOR_DENOM)).max())
        worst = max(worst, err)
        done += 1
    return worst
