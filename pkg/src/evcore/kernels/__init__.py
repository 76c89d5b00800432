"""Backend selection for the hot training kernel.

The compiled Cython backend is used when its extension module is
importable; otherwise the vectorized numpy reference backend takes over.
``EVCORE_BACKEND`` forces the choice ("compiled", "python", or "auto").
Both produce per-sample losses, the fixed-order batch-mean gradient,
per-sample gradient sup norms, and (optionally) input gradients; the
test suite cross-checks them against each other and against central
finite differences.
"""

import os

import numpy as np

from ..errors import DomainError
from ..head import ActivationKind
from ..losses import LossKind
from . import reference

try:
    from . import _fast
except ImportError:
    _fast = None

_ACT_CODES = {
    ActivationKind.RELU: 0,
    ActivationKind.SOFTPLUS: 1,
    ActivationKind.EXP: 2,
    ActivationKind.SELU: 3,
}
_LOSS_CODES = {LossKind.MSE: 0, LossKind.CE: 1, LossKind.LOG: 2}
_NL_CODES = {"tanh": 0, "relu": 1, "identity": 2}


def _resolve(name):
    if name == "python":
        return "python"
    if name == "compiled":
        if _fast is None:
            raise DomainError(
                "EVCORE_BACKEND=compiled but the extension module is not built"
            )
        return "compiled"
    if name == "auto":
        return "compiled" if _fast is not None else "python"
    raise DomainError(f"unknown backend {name!r} (use auto, compiled, or python)")


_backend = _resolve(os.environ.get("EVCORE_BACKEND", "auto").lower())


def backend_name():
    return _backend


def use_backend(name):
    """Force a backend (mainly for tests and the benchmark)."""
    global _backend
    _backend = _resolve(name)


def thread_cap():
    """Parallelism cap from EVCORE_THREADS (0 = auto).

    Both backends currently reduce sequentially in fixed order, which
    satisfies any cap; the value is validated here so misconfiguration
    fails loudly.
    """
    raw = os.environ.get("EVCORE_THREADS", "0")
    try:
        cap = int(raw)
    except ValueError:
        raise DomainError(f"EVCORE_THREADS must be an integer, got {raw!r}") from None
    if cap < 0:
        raise DomainError("EVCORE_THREADS must be >= 0")
    return cap


def batch_grad(net, X, gt, loss_kind, act_kind, eta1, use_correct_reg,
               want_input_grads=False):
    """Dispatch the batch kernel for a DenseNet-like object.

    Returns (losses (N,), grad_weights, grad_biases, supnorms (N,),
    input_grads or None).  The gradient blocks are the batch mean of
    per-sample combined-loss gradients.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    gt = np.ascontiguousarray(gt, dtype=np.int64)
    hidden = [nl.value for nl in net.nonlinearities[:-1]]
    if _backend == "compiled":
        codes = np.array([_NL_CODES[v] for v in hidden], dtype=np.int64)
        return _fast.batch_grad(
            net.weights, net.biases, codes, X, gt,
            _LOSS_CODES[loss_kind], _ACT_CODES[act_kind],
            float(eta1), bool(use_correct_reg), bool(want_input_grads),
        )
    return reference.batch_grad(
        net.weights, net.biases, hidden, X, gt, loss_kind, act_kind,
        float(eta1), bool(use_correct_reg), want_input_grads,
    )
