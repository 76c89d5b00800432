"""Minimal dense network with hand-derived backpropagation.

Forward is a deterministic affine + nonlinearity chain whose final layer
emits raw logits.  ``backward`` returns the exact analytic gradient of
the combined evidential objective through the evidential head;
``finite_diff_grad`` is the independent central-difference oracle used
to pin it.  Checkpoints round-trip bit-exactly through a small binary
format (documented in the README).
"""

import enum
import struct
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DimensionMismatchError, DomainError, FormatError
from .losses import combined_loss
from .rng import SplitMix64


class Nonlinearity(enum.Enum):
    TANH = "tanh"
    RELU = "relu"
    IDENTITY = "identity"


@dataclass
class DenseNet:
    """Per-layer weights (out x in), biases (out,), and nonlinearities.

    The last layer's nonlinearity is IDENTITY: its output is the logit
    vector fed to the evidential head.
    """

    weights: list
    biases: list
    nonlinearities: list

    @property
    def layer_dims(self):
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def class_count(self):
        return self.weights[-1].shape[0]

    def copy(self):
        return DenseNet(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            nonlinearities=list(self.nonlinearities),
        )

    def parameter_count(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


@dataclass
class ParamGradient:
    """Gradient blocks congruent with a DenseNet's parameters."""

    weights: list
    biases: list

    def sup_norm(self):
        blocks = self.weights + self.biases
        return max(float(np.abs(g).max()) for g in blocks)

    def flatten(self):
        return np.concatenate(
            [g.ravel() for g in self.weights] + [g.ravel() for g in self.biases]
        )


@dataclass(frozen=True)
class InitSpec:
    scheme: str
    seed: int = 0
    value: float = 0.0
    tensors: tuple = None

    @staticmethod
    def uniform(seed):
        """U(-s, s) weights with s = sqrt(6/(fan_in+fan_out)), zero biases."""
        return InitSpec(scheme="uniform_scaled", seed=seed)

    @staticmethod
    def constant(value):
        return InitSpec(scheme="constant", value=value)

    @staticmethod
    def explicit(tensors):
        """tensors: sequence of (weights, biases) pairs, one per layer."""
        return InitSpec(scheme="explicit", tensors=tuple(tensors))


def init(layer_dims, hidden_nonlinearity, spec):
    """Build a DenseNet; deterministic for a fixed InitSpec."""
    dims = list(layer_dims)
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise DomainError("layer_dims needs >= 2 positive entries")
    n_layers = len(dims) - 1
    nls = [hidden_nonlinearity] * (n_layers - 1) + [Nonlinearity.IDENTITY]

    weights, biases = [], []
    if spec.scheme == "uniform_scaled":
        rng = SplitMix64(spec.seed)
        for fan_in, fan_out in zip(dims, dims[1:]):
            s = np.sqrt(6.0 / (fan_in + fan_out))
            w = np.empty((fan_out, fan_in))
            for i in range(fan_out):
                for j in range(fan_in):
                    w[i, j] = rng.uniform_in(-s, s)
            weights.append(w)
            biases.append(np.zeros(fan_out))
    elif spec.scheme == "constant":
        for fan_in, fan_out in zip(dims, dims[1:]):
            weights.append(np.full((fan_out, fan_in), float(spec.value)))
            biases.append(np.full(fan_out, float(spec.value)))
    elif spec.scheme == "explicit":
        if spec.tensors is None or len(spec.tensors) != n_layers:
            raise DomainError("explicit init needs one (W, b) pair per layer")
        for (w, b), fan_in, fan_out in zip(spec.tensors, dims, dims[1:]):
            w = np.asarray(w, dtype=np.float64)
            b = np.asarray(b, dtype=np.float64)
            if w.shape != (fan_out, fan_in) or b.shape != (fan_out,):
                raise DomainError(
                    f"explicit tensor shapes {w.shape}/{b.shape} do not match "
                    f"layer ({fan_out}, {fan_in})"
                )
            weights.append(w.copy())
            biases.append(b.copy())
    else:
        raise DomainError(f"unknown init scheme: {spec.scheme!r}")
    return DenseNet(weights=weights, biases=biases, nonlinearities=nls)


def _apply_nl(kind, z):
    if kind is Nonlinearity.TANH:
        return np.tanh(z)
    if kind is Nonlinearity.RELU:
        return np.maximum(z, 0.0)
    return z


def forward(net, x):
    """Logits for a single input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != net.weights[0].shape[1]:
        raise DimensionMismatchError(
            f"input of length {x.shape} does not match first layer "
            f"({net.weights[0].shape[1]} inputs)"
        )
    a = x
    for w, b, nl in zip(net.weights, net.biases, net.nonlinearities):
        a = _apply_nl(nl, w @ a + b)
    return a


def forward_batch(net, inputs):
    """Logits for a batch of inputs, shape (N, d) -> (N, K)."""
    a = np.asarray(inputs, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != net.weights[0].shape[1]:
        raise DimensionMismatchError("batch shape does not match first layer")
    for w, b, nl in zip(net.weights, net.biases, net.nonlinearities):
        a = _apply_nl(nl, a @ w.T + b)
    return a


def backward(net, x, gt_index, loss_kind, act_kind, reg, epoch):
    """Loss and analytic parameter gradient for one sample."""
    x = np.asarray(x, dtype=np.float64)
    losses, gws, gbs, _, _ = kernels.batch_grad(
        net, x[None, :], np.array([gt_index]), loss_kind, act_kind,
        reg.anneal_weight(epoch), reg.use_correct_reg,
    )
    return float(losses[0]), ParamGradient(weights=gws, biases=gbs)


def per_sample_grad_norm(net, x, gt_index, loss_kind, act_kind, reg, epoch):
    """Sup norm of the full parameter gradient for one sample."""
    x = np.asarray(x, dtype=np.float64)
    _, _, _, norms, _ = kernels.batch_grad(
        net, x[None, :], np.array([gt_index]), loss_kind, act_kind,
        reg.anneal_weight(epoch), reg.use_correct_reg,
    )
    return float(norms[0])


def input_gradient(net, x, gt_index, loss_kind, act_kind, reg, epoch):
    """Gradient of the combined loss with respect to the input vector."""
    x = np.asarray(x, dtype=np.float64)
    _, _, _, _, ig = kernels.batch_grad(
        net, x[None, :], np.array([gt_index]), loss_kind, act_kind,
        reg.anneal_weight(epoch), reg.use_correct_reg, want_input_grads=True,
    )
    return ig[0]


def finite_diff_grad(net, x, gt_index, loss_kind, act_kind, reg, epoch, h=1e-6):
    """Central-difference gradient oracle, (L(p+h) - L(p-h)) / (2h) per parameter."""
    if h <= 0:
        raise DomainError("h must be positive")
    work = net.copy()

    def loss_now():
        return combined_loss(loss_kind, reg, act_kind, forward(work, x), gt_index, epoch)

    gws, gbs = [], []
    for block_list, grads in ((work.weights, gws), (work.biases, gbs)):
        for block in block_list:
            g = np.zeros_like(block)
            flat = block.ravel()
            gflat = g.ravel()
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                up = loss_now()
                flat[i] = orig - h
                down = loss_now()
                flat[i] = orig
                gflat[i] = (up - down) / (2.0 * h)
            grads.append(g)
    return ParamGradient(weights=gws, biases=gbs)


_MAGIC = b"EVCK"
_VERSION = 1
_NL_TO_CODE = {Nonlinearity.TANH: 0, Nonlinearity.RELU: 1, Nonlinearity.IDENTITY: 2}
_CODE_TO_NL = {v: k for k, v in _NL_TO_CODE.items()}


def save_checkpoint(net, path):
    """Write the binary checkpoint (little-endian; see README for layout)."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _VERSION, len(net.weights)))
        for w, nl in zip(net.weights, net.nonlinearities):
            fh.write(struct.pack("<IIB", w.shape[0], w.shape[1], _NL_TO_CODE[nl]))
        for w, b in zip(net.weights, net.biases):
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Read a checkpoint written by save_checkpoint (bit-exact round trip)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _MAGIC:
        raise FormatError(f"bad checkpoint magic at offset 0: {data[:4]!r}")
    version, n_layers = struct.unpack_from("<II", data, 4)
    if version != _VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    off = 12
    shapes, nls = [], []
    for _ in range(n_layers):
        out_dim, in_dim, code = struct.unpack_from("<IIB", data, off)
        off += 9
        if code not in _CODE_TO_NL:
            raise FormatError(f"bad nonlinearity code {code} at offset {off - 1}")
        shapes.append((out_dim, in_dim))
        nls.append(_CODE_TO_NL[code])
    weights, biases = [], []
    for out_dim, in_dim in shapes:
        need = out_dim * in_dim * 8
        if off + need > len(data):
            raise FormatError(f"truncated weight block at offset {off}")
        weights.append(
            np.frombuffer(data, dtype="<f8", count=out_dim * in_dim, offset=off)
            .reshape(out_dim, in_dim)
            .copy()
        )
        off += need
        need = out_dim * 8
        if off + need > len(data):
            raise FormatError(f"truncated bias block at offset {off}")
        biases.append(np.frombuffer(data, dtype="<f8", count=out_dim, offset=off).copy())
        off += need
    return DenseNet(weights=weights, biases=biases, nonlinearities=nls)
