"""Series solution of the time-fractional diffusion equation on [-1, 1] with
zero-flux walls and a unit delta released at the origin:

    u(x, t) = 1/2 + sum_{n>=1} (-1)^n E_alpha(-(n pi)^2 D_alpha t^alpha) cos(n pi (x - 1)).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .specfn import DEFAULT_ML_PARAMS, MittagLefflerParams, mittag_leffler_neg_array


@dataclass(frozen=True)
class SeriesSolutionParams:
    alpha: float
    D_alpha: float
    n_terms: int = 900

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if not self.D_alpha > 0:
            raise ValueError("D_alpha must be positive")
        if self.n_terms < 1:
            raise ValueError("n_terms must be >= 1")


@lru_cache(maxsize=128)
def _mode_amplitudes(alpha: float, D_alpha: float, n_terms: int, t: float,
                     ml_params: MittagLefflerParams) -> np.ndarray:
    n = np.arange(1, n_terms + 1)
    relax = mittag_leffler_neg_array(alpha, (n * np.pi) ** 2 * D_alpha * t**alpha, ml_params)
    return np.where(n % 2 == 1, -1.0, 1.0) * relax


def analytic_u(params: SeriesSolutionParams, x, t: float,
               ml_params: MittagLefflerParams = DEFAULT_ML_PARAMS):
    """Truncated series at positions ``x`` (scalar or array) and time ``t > 0``."""
    if not t > 0:
        raise ValueError("t must be positive; the delta at t = 0 has no pointwise value")
    amp = _mode_amplitudes(float(params.alpha), float(params.D_alpha), int(params.n_terms),
                           float(t), ml_params)
    x = np.asarray(x, dtype=float)
    n = np.arange(1, params.n_terms + 1)
    modes = np.cos(np.pi * np.multiply.outer(x - 1.0, n))
    out = 0.5 + modes @ amp
    return out if out.ndim else float(out)
