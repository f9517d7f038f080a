"""Jump-count statistics of the Sibuya renewal process and the discrete
subordination formula for the simple walk.

With T_k the time of the k-th jump,

    b(n, k) = P[T_k = n],
    c(n, k) = P[T_{k-1} < n < T_k],
    p(n, k) = P[T_k <= n < T_{k+1}] = b(n, k) + c(n, k+1).

Production values come from convolution recursions whose summands are all
non-negative. The alternating closed form is kept as a small-n oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import fft as sp_fft
from scipy import stats

from .waiting import SibuyaModel

# direct convolution is used up to this length; FFT beyond it
_DIRECT_LIMIT = 2048
_FLOAT_HORIZON = 60
_MASS_TOL = 1e-10
_TAIL_TOL = 1e-12


@dataclass(frozen=True)
class JumpCountTable:
    """Tables of b, c and p for one alpha.

    ``b[r, k]`` holds b(rows[r], k) for 0 <= k <= k_max and ``c[r, k]`` holds
    c(rows[r], k) for 0 <= k <= k_max + 1 (column 0 is unused and zero).
    When ``rows`` is the full range 0..n_max, row r is simply time step r.
    """

    alpha: float
    n_max: int
    k_max: int
    rows: np.ndarray
    b: np.ndarray
    c: np.ndarray
    p: np.ndarray

    def row(self, n: int) -> int:
        if not 0 <= n <= self.n_max:
            raise ValueError(f"n={n} outside table horizon 0..{self.n_max}")
        if self.rows.size == self.n_max + 1:
            return int(n)
        idx = int(np.searchsorted(self.rows, n))
        if idx == self.rows.size or self.rows[idx] != n:
            raise ValueError(f"time step {n} was not retained in this table")
        return idx

    def jump_probabilities(self, n: int) -> np.ndarray:
        """P_k(n) for k = 0..k_max."""
        return self.p[self.row(n)]

    def captured_mass(self, n: int) -> float:
        return float(self.p[self.row(n)].sum())


class _CausalConvolver:
    """Truncated convolution against one fixed kernel of length n.

    Direct summation up to ``_DIRECT_LIMIT``; beyond it the kernel spectrum
    is computed once and reused for every call.
    """

    def __init__(self, kernel: np.ndarray):
        self.kernel = kernel
        self.n = kernel.size
        if self.n > _DIRECT_LIMIT:
            self.size = sp_fft.next_fast_len(2 * self.n - 1, real=True)
            self.spectrum = sp_fft.rfft(kernel, self.size)

    def __call__(self, a: np.ndarray) -> np.ndarray:
        if self.n <= _DIRECT_LIMIT:
            return np.convolve(a, self.kernel)[: self.n]
        out = sp_fft.irfft(sp_fft.rfft(a, self.size) * self.spectrum, self.size)[: self.n]
        # FFT round-off can leave values like -1e-20 where the exact sum is >= 0
        np.maximum(out, 0.0, out=out)
        return out


def build_jump_counts(alpha: float, n_max: int, k_max: int | None = None,
                      rows=None) -> JumpCountTable:
    """Build b, c, p up to time ``n_max`` and jump count ``k_max``.

    Parameters
    ----------
    alpha : float
        Sibuya exponent in (0, 1].
    n_max : int
        Time horizon.
    k_max : int, optional
        Largest jump count tabulated. By default columns are added until
        P[T_k <= n_max] drops below 1e-12, so every retained row captures
        the jump-count law to that accuracy (at most ``n_max`` columns).
    rows : sequence of int, optional
        Time steps to keep. The recursion always runs over every step up to
        ``n_max``; keeping only a few rows bounds memory for long horizons.
    """
    n_max = int(n_max)
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    model = SibuyaModel(alpha)
    adaptive = k_max is None
    cap = n_max if adaptive else int(k_max)
    if cap > n_max:
        raise ValueError(f"k_max={cap} exceeds n_max={n_max}")
    if cap < 0:
        raise ValueError("k_max must be non-negative")
    keep = np.arange(n_max + 1) if rows is None else np.unique(np.asarray(rows, dtype=int))
    if keep.size and (keep[0] < 0 or keep[-1] > n_max):
        raise ValueError("rows must lie in 0..n_max")

    phi = model.pmf_array(n_max)
    surv = model.survival_array(n_max)
    step = _CausalConvolver(phi)
    if keep.size == n_max + 1:
        holding = _CausalConvolver(surv)

        def c_next(b_prev):
            # sum_{m < n} b(m, k) Phi(n-m); the m = n term is b(n, k) Phi(0)
            return holding(b_prev) - b_prev
    else:
        # only a few rows are kept: a dense (rows x time) matrix of Phi(n-m), m < n
        lag = keep[:, None] - np.arange(n_max + 1)[None, :]
        hold = np.where(lag > 0, surv[np.clip(lag, 0, n_max)], 0.0)

        def c_next(b_prev):
            return hold @ b_prev

    prev = np.zeros(n_max + 1)
    prev[0] = 1.0  # b(., 0) = delta at n = 0
    b_cols = [prev[keep]]
    c_cols = [np.zeros(keep.size)]
    k = 0
    while True:
        c = c_next(prev)
        c_cols.append(c if keep.size != n_max + 1 else c[keep])
        if k == cap or (adaptive and k > 0 and prev.sum() < _TAIL_TOL):
            break
        prev = step(prev)
        k += 1
        b_cols.append(prev[keep])
    b = np.column_stack(b_cols)
    c = np.column_stack(c_cols)
    # b(n, k) and c(n, k+1) vanish for n < k; enforce it against FFT noise
    n_idx = keep[:, None]
    b[np.arange(b.shape[1])[None, :] > n_idx] = 0.0
    c[np.arange(c.shape[1])[None, :] > n_idx + 1] = 0.0
    np.maximum(c, 0.0, out=c)
    p = b + c[:, 1:]
    return JumpCountTable(float(alpha), n_max, k, keep, b, c, p)


def _exact_binomials(x: Fraction, n_max: int) -> list[Fraction]:
    out = [Fraction(1)]
    for n in range(1, n_max + 1):
        out.append(out[-1] * (x - (n - 1)) / n)
    return out


def jump_count_closed_form(alpha: float, n: int, k: int, exact: bool = True) -> float:
    """P[T_k <= n < T_{k+1}] from the alternating binomial sum

        (-1)^n sum_{l=0}^{k} (-1)^l C(k, l) binom((l+1) alpha - 1, n).

    ``exact=True`` sums in rational arithmetic on the binary value of alpha,
    so there is no cancellation horizon. ``exact=False`` sums in floating
    point and refuses ``n`` beyond 60, where cancellation destroys the result.
    """
    return jump_count_closed_form_table(alpha, n, k, exact=exact)[n][k]


def jump_count_closed_form_table(alpha: float, n_max: int, k_max: int,
                                 exact: bool = True) -> list[list[float]]:
    """All closed-form P_k(n) for n <= n_max, k <= k_max, as nested lists."""
    if n_max < 0 or k_max < 0:
        raise ValueError("n and k must be non-negative")
    if not exact:
        if n_max > _FLOAT_HORIZON:
            raise ValueError(f"floating-point closed form is unstable beyond n={_FLOAT_HORIZON}")
        from .specfn import gen_binomial

        out = []
        for n in range(n_max + 1):
            row = []
            for k in range(k_max + 1):
                s = sum((-1) ** l * math.comb(k, l) * gen_binomial((l + 1) * alpha - 1.0, n)
                        for l in range(k + 1))
                row.append((-1) ** n * s)
            out.append(row)
        return out
    a = Fraction(float(alpha))
    binoms = [_exact_binomials((l + 1) * a - 1, n_max) for l in range(k_max + 1)]
    out = []
    for n in range(n_max + 1):
        sign_n = -1 if n % 2 else 1
        row = []
        for k in range(k_max + 1):
            s = sum((-1) ** l * math.comb(k, l) * binoms[l][n] for l in range(k + 1))
            row.append(float(sign_n * s))
        out.append(row)
    return out


def expected_jumps(table: JumpCountTable, n: int) -> float:
    """Mean number of jump events by time step ``n``: sum_k k P_k(n)."""
    probs = table.jump_probabilities(n)
    mass = probs.sum()
    if mass < 1.0 - _MASS_TOL:
        raise ValueError(f"k_max={table.k_max} captures only {mass:.12f} of the jump-count law at n={n}")
    return float(np.dot(np.arange(probs.size), probs))


def expected_jumps_closed(alpha: float, n) -> np.ndarray | float:
    """Renewal function binom(n + alpha, n) - 1.

    The renewal density has generating function (1-z)^(-alpha) - 1, so its
    partial sums telescope to this binomial.
    """
    from scipy.special import gammaln

    n = np.asarray(n, dtype=float)
    out = np.expm1(gammaln(n + 1.0 + alpha) - gammaln(1.0 + alpha) - gammaln(n + 1.0))
    return out if out.ndim else float(out)


def walk_distribution(k: int, p_right: float, sites: np.ndarray) -> np.ndarray:
    """P[X_k = i] for the simple nearest-neighbour walk started at 0."""
    sites = np.asarray(sites)
    right = (k + sites) / 2.0
    ok = (np.abs(sites) <= k) & (right == np.floor(right))
    out = np.zeros(sites.shape)
    out[ok] = stats.binom.pmf(right[ok].astype(int), k, p_right)
    return out


def subordinated_field(alpha: float, p_right: float, n: int,
                       table: JumpCountTable | None = None) -> tuple[np.ndarray, np.ndarray]:
    """U(i, n) on sites -n..n for the unbounded simple walk from the origin.

    Returns ``(sites, mass)``.
    """
    n = int(n)
    if n < 0:
        raise ValueError("n must be non-negative")
    if not 0.0 <= p_right <= 1.0:
        raise ValueError("p_right must be a probability")
    if table is None or table.n_max < n or table.k_max < n:
        table = build_jump_counts(alpha, n, n)
    probs = table.jump_probabilities(n)
    sites = np.arange(-n, n + 1)
    mass = np.zeros(sites.size)
    for k in range(min(n, table.k_max) + 1):
        if probs[k] == 0.0:
            continue
        mass += probs[k] * walk_distribution(k, p_right, sites)
    return sites, mass


def subordinated_density(alpha: float, p_right: float, i: int, n: int,
                         table: JumpCountTable | None = None) -> float:
    """Closed-form U(i, n) = sum_k P[X_k = i] P_k(n) for the r = 1 walk."""
    if abs(i) > n:
        return 0.0
    sites, mass = subordinated_field(alpha, p_right, n, table)
    return float(mass[i + n])
