"""Training loop, FGSM, and the experiment procedures."""

import numpy as np
import pytest

from evcore.data import LabeledDataset, gaussian_blobs, four_point_toy
from evcore.errors import EvidenceOverflowError
from evcore.head import ActivationKind
from evcore.losses import LossKind, RegularizationConfig, combined_loss
from evcore.network import InitSpec, Nonlinearity, backward, forward, init
from evcore.rng import SplitMix64
from evcore.trainer import (
    OptimizerConfig,
    TrainConfig,
    evaluate,
    fgsm_attack,
    ood_experiment,
    regularization_sweep,
    stagnation_experiment,
    stagnation_toy_net,
    train,
)

REG_OFF = RegularizationConfig()


def small_blobs(seed=21):
    return gaussian_blobs(3, 30, 0.3, 6.0, dim=2, seed=seed)


def small_net(seed=21):
    return init([2, 8, 3], Nonlinearity.TANH, InitSpec.uniform(seed))


class TestTrain:
    def test_zero_lr_leaves_parameters_unchanged(self):
        data = small_blobs()
        net = small_net()
        cfg = TrainConfig(optimizer=OptimizerConfig(kind="sgd", lr=0.0),
                          epochs=3, batch_size=16, seed=1)
        trained, hist = train(net, data, None, cfg)
        for a, b in zip(net.weights + net.biases, trained.weights + trained.biases):
            assert np.array_equal(a, b)
        assert len(hist.train_loss) == 3
        assert len(hist.frozen_sample_count) == 3

    def test_single_sgd_step_matches_backward(self):
        data = LabeledDataset(inputs=np.array([[0.5, -1.0]]), labels=np.array([1]),
                              class_count=3, seed=0)
        net = init([2, 3], Nonlinearity.TANH, InitSpec.uniform(4))
        cfg = TrainConfig(loss_kind=LossKind.LOG, act_kind=ActivationKind.EXP,
                          optimizer=OptimizerConfig(kind="sgd", lr=0.25),
                          epochs=1, batch_size=1, seed=0)
        _, grad = backward(net, data.inputs[0], 1, cfg.loss_kind, cfg.act_kind,
                           cfg.reg, 0)
        trained, _ = train(net, data, None, cfg)
        np.testing.assert_allclose(
            trained.weights[0], net.weights[0] - 0.25 * grad.weights[0], atol=1e-15
        )
        np.testing.assert_allclose(
            trained.biases[0], net.biases[0] - 0.25 * grad.biases[0], atol=1e-15
        )

    def test_separable_blobs_reach_full_accuracy(self):
        # exp + log loss, no regularizers: hits 100% at epoch 2 with this seed
        data = small_blobs()
        cfg = TrainConfig(loss_kind=LossKind.LOG, act_kind=ActivationKind.EXP,
                          optimizer=OptimizerConfig(kind="sgd", lr=0.05),
                          epochs=200, batch_size=16, seed=21)
        _, hist = train(small_net(), data, None, cfg)
        first = next((i for i, a in enumerate(hist.train_accuracy) if a == 1.0), None)
        assert first is not None and first <= 200
        assert first == 2
        assert hist.train_accuracy[-1] == 1.0

    def test_determinism(self):
        data = small_blobs()
        test = small_blobs(seed=99)
        cfg = TrainConfig(epochs=5, batch_size=16, seed=3,
                          optimizer=OptimizerConfig(kind="adam", lr=0.01))
        _, h1 = train(small_net(), data, test, cfg)
        _, h2 = train(small_net(), data, test, cfg)
        assert h1.train_loss == h2.train_loss
        assert h1.test_accuracy == h2.test_accuracy
        assert h1.mean_vacuity == h2.mean_vacuity

    def test_adam_changes_parameters(self):
        data = small_blobs()
        cfg = TrainConfig(epochs=2, batch_size=16, seed=3,
                          optimizer=OptimizerConfig(kind="adam", lr=0.01))
        net = small_net()
        trained, _ = train(net, data, None, cfg)
        assert not np.array_equal(trained.weights[0], net.weights[0])

    def test_adversarial_training_flag(self):
        data = small_blobs()
        cfg = TrainConfig(epochs=3, batch_size=16, seed=3, adversarial_eps=0.05,
                          optimizer=OptimizerConfig(kind="adam", lr=0.01))
        _, hist = train(small_net(), data, None, cfg)
        assert len(hist.train_loss) == 3

    def test_overflow_abort_names_epoch(self):
        data = small_blobs()
        cfg = TrainConfig(loss_kind=LossKind.LOG, act_kind=ActivationKind.EXP,
                          optimizer=OptimizerConfig(kind="sgd", lr=1e8),
                          epochs=3, batch_size=90, seed=21)
        with pytest.raises(EvidenceOverflowError) as err:
            train(small_net(), data, None, cfg)
        assert "epoch" in str(err.value)


class TestAnnealing:
    def test_epoch_five_is_half_of_epoch_twenty(self):
        reg = RegularizationConfig(lambda1=3.0)
        assert reg.anneal_weight(5) == 0.5 * reg.anneal_weight(20)

    def test_saturation(self):
        reg = RegularizationConfig(lambda1=2.0)
        assert reg.anneal_weight(10) == reg.anneal_weight(200) == 2.0


class TestEvaluate:
    def test_zero_evidence_predicts_lowest_index(self):
        net = init([2, 3], None, InitSpec.constant(0.0))
        net.biases[0][:] = -1.0
        ds = LabeledDataset(inputs=np.array([[1.0, 2.0]]), labels=np.array([0]),
                            class_count=3, seed=0)
        ev = evaluate(net, ActivationKind.RELU, ds)
        assert ev.predictions[0] == 0
        assert ev.vacuities[0] == 1.0


class TestFgsm:
    def test_zero_epsilon_identity(self):
        net = small_net()
        x = np.array([0.5, -0.25])
        out = fgsm_attack(net, x, 1, 0.0, LossKind.LOG, ActivationKind.EXP)
        assert np.array_equal(out, x)

    def test_displacement_set(self):
        net = small_net()
        rng = SplitMix64(8)
        eps = 0.05
        for _ in range(50):
            x = np.array([rng.uniform_in(-2, 2), rng.uniform_in(-2, 2)])
            out = fgsm_attack(net, x, rng.integer(3), eps, LossKind.LOG,
                              ActivationKind.EXP)
            for j in range(2):
                assert out[j] in (x[j], x[j] + eps, x[j] - eps)

    def test_first_order_loss_ascent(self):
        rng = SplitMix64(2024)
        violations = 0
        for _ in range(100):
            net = init([3, 5, 4], Nonlinearity.TANH, InitSpec.uniform(rng.next_u64()))
            x = np.array([rng.uniform_in(-2, 2) for _ in range(3)])
            gt = rng.integer(4)
            act = (ActivationKind.SOFTPLUS, ActivationKind.EXP)[rng.integer(2)]
            loss = (LossKind.MSE, LossKind.LOG, LossKind.CE)[rng.integer(3)]
            adv = fgsm_attack(net, x, gt, 1e-3, loss, act)
            before = combined_loss(loss, REG_OFF, act, forward(net, x), gt, 0)
            after = combined_loss(loss, REG_OFF, act, forward(net, adv), gt, 0)
            if after < before:
                violations += 1
        assert violations <= 5


class TestStagnation:
    def test_baseline_freezes_and_gred_recovers(self):
        report = stagnation_experiment(epochs=300, lr=0.1, seed=7)
        assert report.baseline.final_accuracy <= 0.5
        assert report.gred.final_accuracy == 1.0

    def test_frozen_samples_have_exactly_zero_gradient_every_epoch(self):
        report = stagnation_experiment(epochs=100, lr=0.1, seed=7)
        for (epoch, sample_id, total_ev, grad_norm) in report.baseline.records:
            if sample_id in (0, 1):
                assert grad_norm == 0.0
                assert total_ev == 0.0
        assert all(c == 2 for c in report.baseline.frozen_history)

    def test_toy_net_initial_logit_signs(self):
        net = stagnation_toy_net()
        toy = four_point_toy(0)
        logits = np.array([forward(net, toy.inputs[i]) for i in range(4)])
        assert np.all(logits[0] < 0) and np.all(logits[1] < 0)
        assert logits[2].max() > 0 and logits[3].max() > 0


class TestSweepAndOod:
    def test_lambda_zero_matches_plain_train(self):
        data = small_blobs()
        test = small_blobs(seed=99)
        net = small_net()
        cfg = TrainConfig(loss_kind=LossKind.LOG, act_kind=ActivationKind.EXP,
                          optimizer=OptimizerConfig(kind="adam", lr=0.01),
                          epochs=5, batch_size=16, seed=3)
        rows = regularization_sweep(net, [0.0], cfg, data, test)
        baseline_row = next(r for r in rows if r[1] == "baseline")
        trained, _ = train(net, data, test, cfg)
        assert baseline_row[2] == evaluate(trained, cfg.act_kind, test).accuracy
        assert baseline_row[0] == 0.0

    def test_sweep_emits_both_variants_per_lambda(self):
        data = small_blobs()
        test = small_blobs(seed=99)
        cfg = TrainConfig(epochs=2, batch_size=16, seed=3)
        rows = regularization_sweep(small_net(), [0.0, 1.0], cfg, data, test)
        assert [(r[0], r[1]) for r in rows] == [
            (0.0, "baseline"), (0.0, "gred"), (1.0, "baseline"), (1.0, "gred")
        ]

    def test_ood_identical_sets_give_half_auroc(self):
        data = small_blobs()
        cfg = TrainConfig(epochs=3, batch_size=16, seed=3)
        trained, _ = train(small_net(), data, None, cfg)
        auroc_value, rows = ood_experiment(trained, cfg.act_kind, data, data)
        assert auroc_value == 0.5
        assert len(rows) == 2 * len(data)
