"""Log-gamma, digamma, and trigamma.

Self-contained float64 implementations: arguments below the asymptotic
threshold are shifted up with the standard recurrences

    ln Gamma(x) = ln Gamma(x+1) - ln x
    psi(x)      = psi(x+1)      - 1/x
    psi1(x)     = psi1(x+1)     + 1/x**2

and the shifted value is evaluated with a Bernoulli-number asymptotic
series.  Accuracy on [1e-3, 1e6] is limited only by float64 rounding
(absolute error well below 1e-10 for ln_gamma and 1e-9 for digamma
wherever those targets are representable).

Scalar functions validate their domain; the ``*_arr`` variants operate
elementwise on float64 arrays and assume positive finite input (they are
the internal path used by the loss kernels).
"""

import math

import numpy as np

from .errors import DomainError

_HALF_LN_TWO_PI = 0.5 * math.log(2.0 * math.pi)

# Stirling series for ln Gamma: sum B_2n / (2n(2n-1) x^(2n-1)), n = 1..5.
_LGAMMA_COEFFS = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
)
_LGAMMA_SHIFT = 8.0

# Asymptotic series for psi: ln x - 1/(2x) - sum c_n / x^(2n), n = 1..6.
_DIGAMMA_COEFFS = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
)
_DIGAMMA_SHIFT = 6.0

# Asymptotic series for psi': 1/x + 1/(2x^2) + sum c_n / x^(2n+1), n = 1..5.
_TRIGAMMA_COEFFS = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
)
_TRIGAMMA_SHIFT = 6.0


def _check_positive(x, name):
    if not (isinstance(x, (int, float)) and math.isfinite(x)) or x <= 0.0:
        raise DomainError(f"{name} requires a positive finite argument, got {x!r}")


def ln_gamma(x):
    """Natural log of the gamma function for x > 0."""
    _check_positive(x, "ln_gamma")
    x = float(x)
    if x == 1.0 or x == 2.0:
        return 0.0
    shift = 0.0
    while x < _LGAMMA_SHIFT:
        shift -= math.log(x)
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    power = 1.0 / x
    for c in _LGAMMA_COEFFS:
        series += c * power
        power *= inv2
    return (x - 0.5) * math.log(x) - x + _HALF_LN_TWO_PI + series + shift


def digamma(x):
    """Digamma psi(x) = d/dx ln Gamma(x) for x > 0."""
    _check_positive(x, "digamma")
    x = float(x)
    shift = 0.0
    while x < _DIGAMMA_SHIFT:
        shift -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    power = inv2
    for c in _DIGAMMA_COEFFS:
        series += c * power
        power *= inv2
    return math.log(x) - 0.5 / x - series + shift


def trigamma(x):
    """Trigamma psi'(x), the derivative of digamma, for x > 0.

    Needed for the analytic gradients of the digamma loss and of the
    Dirichlet KL regularizer.
    """
    _check_positive(x, "trigamma")
    x = float(x)
    shift = 0.0
    while x < _TRIGAMMA_SHIFT:
        shift += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = 0.0
    power = inv * inv2
    for c in _TRIGAMMA_COEFFS:
        series += c * power
        power *= inv2
    return inv + 0.5 * inv2 + series + shift


def ln_gamma_arr(x):
    """Elementwise ln Gamma over a float64 array of positive entries."""
    x = np.array(x, dtype=np.float64, copy=True)
    exact_zero = (x == 1.0) | (x == 2.0)
    shift = np.zeros_like(x)
    mask = x < _LGAMMA_SHIFT
    while mask.any():
        shift[mask] -= np.log(x[mask])
        x[mask] += 1.0
        mask = x < _LGAMMA_SHIFT
    inv2 = 1.0 / (x * x)
    series = np.zeros_like(x)
    power = 1.0 / x
    for c in _LGAMMA_COEFFS:
        series += c * power
        power = power * inv2
    out = (x - 0.5) * np.log(x) - x + _HALF_LN_TWO_PI + series + shift
    out[exact_zero] = 0.0
    return out


def digamma_arr(x):
    """Elementwise digamma over a float64 array of positive entries."""
    x = np.array(x, dtype=np.float64, copy=True)
    shift = np.zeros_like(x)
    mask = x < _DIGAMMA_SHIFT
    while mask.any():
        shift[mask] -= 1.0 / x[mask]
        x[mask] += 1.0
        mask = x < _DIGAMMA_SHIFT
    inv2 = 1.0 / (x * x)
    series = np.zeros_like(x)
    power = inv2.copy()
    for c in _DIGAMMA_COEFFS:
        series += c * power
        power = power * inv2
    return np.log(x) - 0.5 / x - series + shift


def trigamma_arr(x):
    """Elementwise trigamma over a float64 array of positive entries."""
    x = np.array(x, dtype=np.float64, copy=True)
    shift = np.zeros_like(x)
    mask = x < _TRIGAMMA_SHIFT
    while mask.any():
        shift[mask] += 1.0 / (x[mask] * x[mask])
        x[mask] += 1.0
        mask = x < _TRIGAMMA_SHIFT
    inv = 1.0 / x
    inv2 = inv * inv
    series = np.zeros_like(x)
    power = inv * inv2
    for c in _TRIGAMMA_COEFFS:
        series += c * power
        power = power * inv2
    return inv + 0.5 * inv2 + series + shift
