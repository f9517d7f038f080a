"""Special functions: real-argument binomial coefficients and E_alpha(-x).

The Mittag-Leffler evaluator is specialised to negative real arguments with
0 < alpha <= 1, which is all the relaxation modes of the subdiffusion
equation ever need.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy import special

_PRODUCT_LIMIT = 64


def gen_binomial(x: float, m: int) -> float:
    """Generalised binomial coefficient x (x-1) ... (x-m+1) / m! for real x.

    Small m use the finite product directly. Larger m use log-gamma with the
    sign tracked separately; when m > x the reflection
    binom(x, m) = (-1)^m binom(m-x-1, m) keeps every gamma argument off the
    poles.
    """
    m = int(m)
    if m < 0:
        raise ValueError("m must be non-negative")
    if m == 0:
        return 1.0
    x = float(x)
    if m <= _PRODUCT_LIMIT:
        out = 1.0
        for j in range(m):
            out *= (x - j) / (j + 1)
        return out
    if m > x:
        if x >= 0 and x == math.floor(x):
            return 0.0
        # (-1)^m Gamma(m-x) / (Gamma(m+1) Gamma(-x)), with m - x > 0
        log_abs = special.gammaln(m - x) - special.gammaln(m + 1.0) - special.gammaln(-x)
        sign = (-1.0 if m % 2 else 1.0) * special.gammasgn(-x)
        return float(sign * math.exp(log_abs))
    return math.exp(special.gammaln(x + 1.0) - special.gammaln(m + 1.0) - special.gammaln(x - m + 1.0))


@dataclass(frozen=True)
class MittagLefflerParams:
    """Evaluation controls for :func:`mittag_leffler_neg`.

    Attributes
    ----------
    taylor_term_cap : int
        Maximum number of power-series terms.
    asymptotic_term_cap : int
        Maximum number of terms of the large-argument expansion.
    crossover_magnitude : float
        Branch switch, measured on the scale ``x**(1/alpha)``. The asymptotic
        expansion drops a remainder of size ``exp(-x**(1/alpha))`` and the
        power series needs about ``x**(1/alpha) / ln 10`` guard digits, so
        the same number controls both.
    """

    taylor_term_cap: int = 20000
    asymptotic_term_cap: int = 50
    crossover_magnitude: float = 36.0

    def __post_init__(self):
        if self.taylor_term_cap < 1 or self.asymptotic_term_cap < 1:
            raise ValueError("term caps must be positive")
        if not self.crossover_magnitude > 0:
            raise ValueError("crossover_magnitude must be positive")


DEFAULT_ML_PARAMS = MittagLefflerParams()


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")


def ml_crossover(alpha: float, params: MittagLefflerParams = DEFAULT_ML_PARAMS) -> float:
    """Argument x at which :func:`mittag_leffler_neg` switches branch."""
    _check_alpha(alpha)
    if alpha == 1.0:
        return math.inf
    # the remainder near alpha = 1 carries a 1/(1 - alpha) prefactor
    scale = params.crossover_magnitude + math.log(1.0 / (1.0 - alpha))
    return scale ** alpha


def ml_taylor(alpha: float, x: float, term_cap: int = DEFAULT_ML_PARAMS.taylor_term_cap) -> float:
    """Power series for E_alpha(-x), summed at a working precision that
    absorbs the cancellation between its largest terms."""
    if x == 0.0:
        return 1.0
    digits = int(x ** (1.0 / alpha) / math.log(10.0)) + 25
    with mpmath.workdps(digits):
        a = mpmath.mpf(alpha)
        z = -mpmath.mpf(x)
        tol = mpmath.mpf(10) ** -25
        total = mpmath.mpf(0)
        power = mpmath.mpf(1)
        peak = 0
        for k in range(term_cap):
            term = power * mpmath.rgamma(1 + a * k)
            total += term
            if abs(term) > peak:
                peak = abs(term)
            elif abs(term) < tol * abs(total):
                break
            power *= z
        else:
            raise RuntimeError(f"power series for E_{alpha}(-{x}) did not converge in {term_cap} terms")
        return float(total)


@lru_cache(maxsize=64)
def _asymptotic_coefficients(alpha: float, n_terms: int) -> tuple[np.ndarray, np.ndarray]:
    k = np.arange(1, n_terms + 1)
    # (-1)^(k-1) / Gamma(1 - alpha k); rgamma is exactly zero at the poles
    coef = np.where(k % 2 == 1, 1.0, -1.0) * special.rgamma(1.0 - alpha * k)
    # smooth bound |1/Gamma(1-s)| <= Gamma(s)/pi, used to pick the truncation point
    log_envelope = special.gammaln(alpha * k) - math.log(math.pi)
    return coef, log_envelope


def ml_asymptotic(alpha: float, x, term_cap: int = DEFAULT_ML_PARAMS.asymptotic_term_cap):
    """Large-argument expansion sum_k (-1)^(k-1) x^(-k) / Gamma(1 - alpha k),
    cut where its term envelope is smallest. Accepts scalars or arrays, x > 0."""
    x = np.asarray(x, dtype=float)
    coef, log_env = _asymptotic_coefficients(float(alpha), int(term_cap))
    k = np.arange(1, coef.size + 1)
    log_x = np.log(x)[..., None]
    env = log_env - k * log_x
    # terms are kept up to (and including) the envelope minimum
    keep = np.arange(coef.size) <= np.argmin(env, axis=-1)[..., None]
    terms = coef * np.exp(-k * log_x)
    total = np.sum(np.where(keep, terms, 0.0), axis=-1)
    return total if total.ndim else float(total)


def mittag_leffler_neg(alpha: float, x: float, params: MittagLefflerParams = DEFAULT_ML_PARAMS) -> float:
    """E_alpha(-x) for 0 < alpha <= 1 and x >= 0.

    Examples
    --------
    >>> round(mittag_leffler_neg(0.5, 1.0), 10)
    0.4275835762
    """
    _check_alpha(alpha)
    x = float(x)
    if x < 0:
        raise ValueError("x is the magnitude of the argument and must be >= 0")
    if alpha == 1.0:
        return math.exp(-x)
    if x < ml_crossover(alpha, params):
        return ml_taylor(alpha, x, params.taylor_term_cap)
    return ml_asymptotic(alpha, x, params.asymptotic_term_cap)


def mittag_leffler_neg_array(alpha: float, x, params: MittagLefflerParams = DEFAULT_ML_PARAMS) -> np.ndarray:
    """Vectorised :func:`mittag_leffler_neg` over an array of magnitudes."""
    _check_alpha(alpha)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be >= 0")
    if alpha == 1.0:
        return np.exp(-x)
    out = np.empty_like(x)
    small = x < ml_crossover(alpha, params)
    out[small] = [ml_taylor(alpha, v, params.taylor_term_cap) for v in x[small]]
    if np.any(~small):
        out[~small] = ml_asymptotic(alpha, x[~small], params.asymptotic_term_cap)
    return out
