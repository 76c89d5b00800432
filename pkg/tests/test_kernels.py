"""Backend cross-checks: compiled vs pure-Python kernels."""

import numpy as np
import pytest

from evcore import kernels
from evcore.head import ActivationKind
from evcore.losses import LossKind
from evcore.network import InitSpec, Nonlinearity, backward, init
from evcore.losses import RegularizationConfig
from evcore.rng import SplitMix64

HAS_COMPILED = kernels._fast is not None


@pytest.fixture
def restore_backend():
    yield
    kernels.use_backend("auto")


def make_case(seed, n=13, dims=(3, 6, 4)):
    rng = SplitMix64(seed)
    net = init(list(dims), Nonlinearity.TANH, InitSpec.uniform(seed))
    x = np.array([[rng.uniform_in(-2, 2) for _ in range(dims[0])] for _ in range(n)])
    gt = np.array([rng.integer(dims[-1]) for _ in range(n)], dtype=np.int64)
    return net, x, gt


@pytest.mark.skipif(not HAS_COMPILED, reason="compiled backend not built")
class TestBackendAgreement:
    @pytest.mark.parametrize("loss_kind", list(LossKind))
    @pytest.mark.parametrize("act_kind", list(ActivationKind))
    def test_all_outputs_agree(self, loss_kind, act_kind, restore_backend):
        net, x, gt = make_case(11)
        results = {}
        for name in ("compiled", "python"):
            kernels.use_backend(name)
            results[name] = kernels.batch_grad(
                net, x, gt, loss_kind, act_kind, 0.7, True, want_input_grads=True
            )
        rc, rp = results["compiled"], results["python"]
        np.testing.assert_allclose(rc[0], rp[0], rtol=1e-12, atol=1e-13)
        for a, b in zip(rc[1] + rc[2], rp[1] + rp[2]):
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-13)
        np.testing.assert_allclose(rc[3], rp[3], rtol=1e-12, atol=1e-13)
        np.testing.assert_allclose(rc[4], rp[4], rtol=1e-12, atol=1e-13)

    def test_single_layer_net(self, restore_backend):
        net, x, gt = make_case(17, n=5, dims=(4, 3))
        outs = {}
        for name in ("compiled", "python"):
            kernels.use_backend(name)
            outs[name] = kernels.batch_grad(net, x, gt, LossKind.MSE,
                                            ActivationKind.SELU, 0.0, False)
        np.testing.assert_allclose(outs["compiled"][0], outs["python"][0], rtol=1e-13)
        np.testing.assert_allclose(outs["compiled"][1][0], outs["python"][1][0],
                                   rtol=1e-12, atol=1e-14)

    def test_relu_hidden_layers(self, restore_backend):
        rng = SplitMix64(23)
        net = init([3, 6, 4], Nonlinearity.RELU, InitSpec.uniform(23))
        x = np.array([[rng.uniform_in(-2, 2) for _ in range(3)] for _ in range(9)])
        gt = np.array([rng.integer(4) for _ in range(9)], dtype=np.int64)
        outs = {}
        for name in ("compiled", "python"):
            kernels.use_backend(name)
            outs[name] = kernels.batch_grad(net, x, gt, LossKind.LOG,
                                            ActivationKind.EXP, 1.0, True)
        for a, b in zip(outs["compiled"][1], outs["python"][1]):
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


class TestBatchSemantics:
    def test_mean_gradient_of_per_sample_gradients(self):
        net, x, gt = make_case(31, n=6)
        reg = RegularizationConfig(lambda1=0.5, use_correct_reg=True)
        losses, gw, gb, _, _ = kernels.batch_grad(
            net, x, gt, LossKind.LOG, ActivationKind.SELU, 0.5, True
        )
        acc_w = [np.zeros_like(w) for w in net.weights]
        acc_b = [np.zeros_like(b) for b in net.biases]
        per_sample_losses = []
        for i in range(6):
            loss_i, grad_i = backward(net, x[i], int(gt[i]), LossKind.LOG,
                                      ActivationKind.SELU, reg, epoch=10)
            per_sample_losses.append(loss_i)
            for l in range(len(acc_w)):
                acc_w[l] += grad_i.weights[l] / 6
                acc_b[l] += grad_i.biases[l] / 6
        # batch-size invariance of the loss value
        assert abs(losses.mean() - np.mean(per_sample_losses)) <= 1e-12
        for l in range(len(acc_w)):
            np.testing.assert_allclose(gw[l], acc_w[l], rtol=1e-10, atol=1e-14)
            np.testing.assert_allclose(gb[l], acc_b[l], rtol=1e-10, atol=1e-14)

    def test_supnorms_match_single_sample_backward(self):
        net, x, gt = make_case(37, n=8)
        reg = RegularizationConfig()
        _, _, _, norms, _ = kernels.batch_grad(
            net, x, gt, LossKind.CE, ActivationKind.SOFTPLUS, 0.0, False
        )
        for i in range(8):
            _, grad_i = backward(net, x[i], int(gt[i]), LossKind.CE,
                                 ActivationKind.SOFTPLUS, reg, 0)
            assert norms[i] == pytest.approx(grad_i.sup_norm(), rel=1e-12)


class TestThreadCap:
    def test_default_auto(self, monkeypatch):
        monkeypatch.delenv("EVCORE_THREADS", raising=False)
        assert kernels.thread_cap() == 0

    def test_explicit_value(self, monkeypatch):
        monkeypatch.setenv("EVCORE_THREADS", "4")
        assert kernels.thread_cap() == 4

    def test_rejects_garbage(self, monkeypatch):
        from evcore.errors import DomainError

        monkeypatch.setenv("EVCORE_THREADS", "many")
        with pytest.raises(DomainError):
            kernels.thread_cap()
        monkeypatch.setenv("EVCORE_THREADS", "-1")
        with pytest.raises(DomainError):
            kernels.thread_cap()


class TestBackendSelection:
    def test_unknown_backend_rejected(self):
        from evcore.errors import DomainError

        with pytest.raises(DomainError):
            kernels.use_backend("gpu")

    def test_python_backend_always_available(self, restore_backend):
        kernels.use_backend("python")
        assert kernels.backend_name() == "python"
