"""Command-line front end: experiments and utilities, CSV in and out.

Exit codes: 0 success, 1 domain/config/usage error, 2 numerical abort
(exp evidence overflow).  All structured output is CSV with a header
row; identical invocations produce byte-identical files.  Flags override
--config file entries, which override built-in defaults; config files
are flat ``key=value`` lines (keys are the long flag names with dashes
replaced by underscores, ``#`` starts a comment).
"""

import argparse
import sys

import numpy as np

from . import kernels
from .codebook import Codebook, SelectionConfig, select_code
from .data import LabeledDataset, gaussian_blobs, four_point_toy, ood_shift, to_csv
from .errors import DomainError, EvcoreError, EvidenceOverflowError
from .gradcheck import run_grad_check
from .head import ActivationKind
from .losses import LossKind, RegularizationConfig
from .network import InitSpec, Nonlinearity, init
from .trainer import (
    OptimizerConfig,
    TrainConfig,
    evaluate,
    fgsm_batch,
    ood_experiment,
    prediction_records,
    regularization_sweep,
    stagnation_experiment,
    train,
)
from .uncertainty import accuracy_vacuity_curve, ece

_LOSSES = {"mse": LossKind.MSE, "ce": LossKind.CE, "log": LossKind.LOG}
_ACTS = {
    "relu": ActivationKind.RELU,
    "softplus": ActivationKind.SOFTPLUS,
    "exp": ActivationKind.EXP,
    "selu": ActivationKind.SELU,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(1)


# (flag, type, default, help) for options shared by the training commands
_TRAIN_OPTS = [
    ("loss", str, "log", "evidential loss: mse, ce, or log"),
    ("act", str, "exp", "evidential activation: relu, softplus, exp, or selu"),
    ("lambda1", float, 0.0, "incorrect-evidence KL strength"),
    ("cor-reg", str, "off", "correct-evidence regularizer: on or off"),
    ("anneal-epochs", int, 10, "epochs until the KL weight saturates"),
    ("epochs", int, 100, "training epochs"),
    ("lr", float, 0.01, "learning rate"),
    ("batch", int, 32, "batch size"),
    ("optimizer", str, "adam", "optimizer: sgd or adam"),
    ("momentum", float, 0.0, "SGD momentum"),
    ("hidden", str, "16", "comma-separated hidden layer widths (empty for none)"),
    ("k", int, 10, "number of classes / blob clusters"),
    ("n-per-class", int, 100, "training points per class"),
    ("spread", float, 1.0, "blob standard deviation"),
    ("sep", float, 4.0, "blob center separation"),
    ("dim", int, 2, "input dimension"),
    ("adv-eps", float, 0.0, "FGSM strength for adversarial training (0 = off)"),
]


def _add_opts(p, opts, with_seed=True, with_out=True):
    for name, typ, default, helptext in opts:
        p.add_argument(f"--{name}", type=typ, default=None,
                       help=f"{helptext} (default: {default})")
    p.add_argument("--config", type=str, default=None,
                   help="key=value config file; flags override it (default: none)")
    if with_seed:
        p.add_argument("--seed", type=int, default=None,
                       help="RNG seed, required (default: none)")
    if with_out:
        p.add_argument("--out", type=str, default=None,
                       help="CSV output path (default: stdout)")


def _read_config(path):
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise DomainError(f"{path}:{line_no}: expected key=value")
                key, val = line.split("=", 1)
                values[key.strip().replace("-", "_")] = val.strip()
        return values
    except OSError as err:
        raise DomainError(f"cannot read config {path}: {err}") from err


def _merge(args, opts, need_seed):
    """Resolve each option: explicit flag > config file > default."""
    cfg = _read_config(args.config) if args.config else {}
    merged = {}
    for name, typ, default, _ in opts:
        key = name.replace("-", "_")
        val = getattr(args, key, None)
        if val is None and key in cfg:
            val = typ(cfg[key])
        if val is None:
            val = default
        merged[key] = val
    seed = getattr(args, "seed", None)
    if seed is None and "seed" in cfg:
        seed = int(cfg["seed"])
    if need_seed and seed is None:
        raise DomainError("--seed is required for this command")
    merged["seed"] = seed
    return merged


def _train_config(m):
    if m["loss"] not in _LOSSES:
        raise DomainError(f"unknown loss {m['loss']!r}")
    if m["act"] not in _ACTS:
        raise DomainError(f"unknown activation {m['act']!r}")
    if m["cor_reg"] not in ("on", "off"):
        raise DomainError("--cor-reg must be on or off")
    return TrainConfig(
        loss_kind=_LOSSES[m["loss"]],
        act_kind=_ACTS[m["act"]],
        reg=RegularizationConfig(
            lambda1=m["lambda1"],
            use_correct_reg=m["cor_reg"] == "on",
            anneal_epochs=m["anneal_epochs"],
        ),
        optimizer=OptimizerConfig(kind=m["optimizer"], lr=m["lr"], momentum=m["momentum"]),
        epochs=m["epochs"],
        batch_size=m["batch"],
        seed=m["seed"],
        adversarial_eps=m["adv_eps"],
    )


def _blob_pair(m):
    data = gaussian_blobs(m["k"], m["n_per_class"], m["spread"], m["sep"],
                          dim=m["dim"], seed=m["seed"])
    test = gaussian_blobs(m["k"], m["n_per_class"], m["spread"], m["sep"],
                          dim=m["dim"], seed=m["seed"] + 1000)
    return data, test


def _fresh_net(m):
    hidden = [int(h) for h in m["hidden"].split(",") if h.strip()] if m["hidden"] else []
    dims = [m["dim"]] + hidden + [m["k"]]
    return init(dims, Nonlinearity.TANH, InitSpec.uniform(m["seed"]))


def _emit(rows, header, out_path):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _cmd_gen_data(args):
    m = _merge(args, _TRAIN_OPTS, need_seed=True)
    kind = args.kind
    if kind == "toy":
        ds = four_point_toy(m["seed"])
    else:
        ds = gaussian_blobs(m["k"], m["n_per_class"], m["spread"], m["sep"],
                            dim=m["dim"], seed=m["seed"])
    if args.out:
        to_csv(ds, args.out)
    else:
        header = [f"x{j}" for j in range(ds.dim)] + ["label"]
        rows = [list(map(float, ds.inputs[i])) + [int(ds.labels[i])] for i in range(len(ds))]
        _emit(rows, header, None)
    return 0


def _cmd_train(args):
    m = _merge(args, _TRAIN_OPTS, need_seed=True)
    cfg = _train_config(m)
    data, test = _blob_pair(m)
    net = _fresh_net(m)
    _, hist = train(net, data, test, cfg)
    rows = [
        (ep, hist.train_loss[ep], hist.train_accuracy[ep], hist.test_accuracy[ep],
         hist.mean_vacuity[ep], hist.frozen_sample_count[ep])
        for ep in range(cfg.epochs)
    ]
    _emit(rows, ["epoch", "train_loss", "train_accuracy", "test_accuracy",
                 "mean_vacuity", "frozen_sample_count"], args.out)
    return 0


def _cmd_grad_check(args):
    m = _merge(args, [("trials", int, 50, "random configurations to test")],
               need_seed=True)
    worst = run_grad_check(m["trials"], m["seed"])
    print(f"max relative error: {worst:.3e} over {m['trials']} trials")
    return 0 if worst <= 1e-5 else 1


def _cmd_stagnation(args):
    m = _merge(args, [("epochs", int, 500, "training epochs per variant"),
                      ("lr", float, 0.1, "SGD learning rate")], need_seed=True)
    report = stagnation_experiment(epochs=m["epochs"], lr=m["lr"], seed=m["seed"])
    rows = []
    for run in (report.baseline, report.gred):
        for (epoch, sample_id, total_ev, grad_norm) in run.records:
            rows.append((epoch, sample_id, total_ev, grad_norm, run.variant))
    _emit(rows, ["epoch", "sample_id", "total_evidence", "grad_norm", "variant"],
          args.out)
    return 0


def _cmd_reg_sweep(args):
    opts = _TRAIN_OPTS + [("lambdas", str, "0,0.1,1,10", "comma-separated lambda1 values")]
    m = _merge(args, opts, need_seed=True)
    cfg = _train_config(m)
    lambdas = [float(s) for s in m["lambdas"].split(",") if s.strip()]
    data, test = _blob_pair(m)
    net = _fresh_net(m)
    rows = regularization_sweep(net, lambdas, cfg, data, test)
    _emit(rows, ["lambda1", "variant", "test_accuracy", "mean_vacuity"], args.out)
    return 0


def _cmd_acc_vacuity(args):
    opts = _TRAIN_OPTS + [("thresholds", str, "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0",
                           "comma-separated vacuity thresholds (ascending)")]
    m = _merge(args, opts, need_seed=True)
    cfg = _train_config(m)
    data, test = _blob_pair(m)
    trained, _ = train(_fresh_net(m), data, test, cfg)
    records = prediction_records(trained, cfg.act_kind, test)
    ths = [float(s) for s in m["thresholds"].split(",") if s.strip()]
    rows = accuracy_vacuity_curve(records, ths)
    _emit(rows, ["threshold", "accuracy", "coverage"], args.out)
    return 0


def _cmd_calibration(args):
    opts = _TRAIN_OPTS + [("bins", int, 10, "number of equal-width confidence bins")]
    m = _merge(args, opts, need_seed=True)
    cfg = _train_config(m)
    data, test = _blob_pair(m)
    trained, _ = train(_fresh_net(m), data, test, cfg)
    records = prediction_records(trained, cfg.act_kind, test)
    n_bins = m["bins"]
    value = ece(records, n_bins)
    conf = np.array([r.confidence for r in records])
    correct = np.array([float(r.correct) for r in records])
    idx = np.minimum((conf * n_bins).astype(int), n_bins - 1)
    rows = []
    for b in range(n_bins):
        mask = idx == b
        count = int(mask.sum())
        acc = float(correct[mask].mean()) if count else float("nan")
        mean_conf = float(conf[mask].mean()) if count else float("nan")
        rows.append((b / n_bins, (b + 1) / n_bins, count, acc, mean_conf))
    _emit(rows, ["bin_lo", "bin_hi", "count", "accuracy", "confidence"], args.out)
    print(f"ece: {value!r}")
    return 0


def _cmd_ood(args):
    opts = _TRAIN_OPTS + [("shift", float, 10.0, "OOD displacement magnitude")]
    m = _merge(args, opts, need_seed=True)
    cfg = _train_config(m)
    data, test = _blob_pair(m)
    trained, _ = train(_fresh_net(m), data, test, cfg)
    ood = ood_shift(test, m["shift"], seed=m["seed"] + 2000)
    auroc_value, rows = ood_experiment(trained, cfg.act_kind, test, ood)
    _emit(rows, ["score", "is_ood"], args.out)
    print(f"auroc: {auroc_value!r}")
    return 0


def _cmd_attack(args):
    opts = _TRAIN_OPTS + [("eps", float, 0.05, "FGSM attack strength")]
    m = _merge(args, opts, need_seed=True)
    cfg = _train_config(m)
    data, test = _blob_pair(m)
    trained, _ = train(_fresh_net(m), data, test, cfg)
    clean = evaluate(trained, cfg.act_kind, test)
    x_adv = fgsm_batch(trained, test.inputs, test.labels, m["eps"],
                       cfg.loss_kind, cfg.act_kind,
                       cfg.reg.anneal_weight(cfg.epochs), cfg.reg.use_correct_reg)
    adv_ds = LabeledDataset(inputs=x_adv, labels=test.labels,
                            class_count=test.class_count, seed=test.seed)
    adv = evaluate(trained, cfg.act_kind, adv_ds)
    rows = [(m["eps"], clean.accuracy, adv.accuracy,
             float(clean.vacuities.mean()), float(adv.vacuities.mean()))]
    _emit(rows, ["epsilon", "clean_accuracy", "adversarial_accuracy",
                 "clean_mean_vacuity", "adversarial_mean_vacuity"], args.out)
    return 0


def demo_codebook(k, d):
    """Documented fixture: item i is the unit vector along axis i mod d."""
    items = np.zeros((k, d))
    for i in range(k):
        items[i, i % d] = 1.0
    return Codebook(items=items)


def demo_evidence(k):
    """Documented fixture evidence (4, 1, 0, ..., 0)."""
    e = np.zeros(k)
    e[0] = 4.0
    if k > 1:
        e[1] = 1.0
    return e


def _cmd_codebook_demo(args):
    opts = [
        ("k", int, 3, "codebook size"),
        ("d", int, 2, "code dimension"),
        ("t", int, 2, "top-t codes to combine"),
        ("vthr", float, 0.0, "vacuity threshold"),
    ]
    m = _merge(args, opts, need_seed=False)
    book = demo_codebook(m["k"], m["d"])
    evidence = demo_evidence(m["k"])
    cfg = SelectionConfig(top_t=m["t"], vacuity_threshold=m["vthr"])
    code = select_code(evidence, book, cfg)
    print("evidence: " + ",".join(repr(float(v)) for v in evidence))
    print("selected: " + ",".join(repr(float(v)) for v in code))
    return 0


def build_parser():
    parser = _Parser(prog="evcore",
                     description="Evidential classification experiments and utilities")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("train", help="train on blobs, emit history CSV")
    _add_opts(p, _TRAIN_OPTS)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("grad-check", help="analytic vs finite-difference gradients")
    _add_opts(p, [("trials", int, 50, "random configurations to test")], with_out=False)
    p.set_defaults(func=_cmd_grad_check)

    p = sub.add_parser("stagnation", help="zero-evidence freeze toy experiment")
    _add_opts(p, [("epochs", int, 500, "training epochs per variant"),
                  ("lr", float, 0.1, "SGD learning rate")])
    p.set_defaults(func=_cmd_stagnation)

    p = sub.add_parser("reg-sweep", help="baseline vs GRED across lambda1 values")
    _add_opts(p, _TRAIN_OPTS + [("lambdas", str, "0,0.1,1,10",
                                 "comma-separated lambda1 values")])
    p.set_defaults(func=_cmd_reg_sweep)

    p = sub.add_parser("acc-vacuity", help="accuracy-vacuity curve of a trained model")
    _add_opts(p, _TRAIN_OPTS + [("thresholds", str,
                                 "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0",
                                 "comma-separated vacuity thresholds (ascending)")])
    p.set_defaults(func=_cmd_acc_vacuity)

    p = sub.add_parser("calibration", help="ECE and reliability bins of a trained model")
    _add_opts(p, _TRAIN_OPTS + [("bins", int, 10, "number of confidence bins")])
    p.set_defaults(func=_cmd_calibration)

    p = sub.add_parser("ood", help="AUROC of 1 - max p(y) on shifted blobs")
    _add_opts(p, _TRAIN_OPTS + [("shift", float, 10.0, "OOD displacement magnitude")])
    p.set_defaults(func=_cmd_ood)

    p = sub.add_parser("attack", help="FGSM attack on a trained model")
    _add_opts(p, _TRAIN_OPTS + [("eps", float, 0.05, "FGSM attack strength")])
    p.set_defaults(func=_cmd_attack)

    p = sub.add_parser("codebook-demo", help="top-t selection on the documented fixture")
    _add_opts(p, [("k", int, 3, "codebook size"), ("d", int, 2, "code dimension"),
                  ("t", int, 2, "top-t codes to combine"),
                  ("vthr", float, 0.0, "vacuity threshold")],
              with_seed=False, with_out=False)
    p.set_defaults(func=_cmd_codebook_demo)

    p = sub.add_parser("gen-data", help="emit a dataset as CSV")
    _add_opts(p, _TRAIN_OPTS)
    p.add_argument("--kind", type=str, default="blobs",
                   help="dataset kind: blobs or toy (default: blobs)")
    p.set_defaults(func=_cmd_gen_data)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        kernels.thread_cap()  # validate EVCORE_THREADS early
        return args.func(args)
    except EvidenceOverflowError as err:
        print(f"numerical abort: {err}", file=sys.stderr)
        return 2
    except EvcoreError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
