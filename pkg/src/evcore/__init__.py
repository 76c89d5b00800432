"""Generalized regularized evidential classification toolkit.

Evidential activations with analytic derivatives, Dirichlet-based
losses and regularizers, subjective-logic uncertainty metrics, a
minimal dense network with hand-derived backprop (compiled kernel with
a pure-Python fallback), deterministic experiment runners, and
belief-weighted codebook selection.
"""

from .errors import (
    DimensionMismatchError,
    DomainError,
    EvcoreError,
    EvidenceOverflowError,
    FormatError,
    UnsupportedActivationError,
)
from .head import ActivationKind, DirichletParams, activate, activation_derivative, dirichlet_params
from .losses import (
    LossKind,
    RegularizationConfig,
    combined_loss,
    correct_evidence_reg,
    correct_evidence_reg_evidence_form,
    evid_ce_loss,
    evid_log_loss,
    evid_mse_loss,
    kl_incorrect_reg,
    loss_grad_wrt_logits,
)
from .uncertainty import (
    PredictionRecord,
    UncertaintyReport,
    accuracy_vacuity_curve,
    auroc,
    beliefs,
    dissonance,
    ece,
    expected_probs,
    topk_confident_accuracy,
    vacuity,
)

__version__ = "0.1.0"
