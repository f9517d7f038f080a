"""Discrete waiting-time laws for the DTRW: Sibuya(alpha) and Geometric(sigma).

Each model exposes the pmf phi(m), the survival Phi(m) = P[W > m], the memory
kernel K of the generalised master equation and an inverse-survival sampler
that maps a uniform u in [0, 1) to the unique m >= 1 with
Phi(m) <= u < Phi(m - 1).
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy import special

_MAX_TABLE = 1 << 22
# smallest positive double; u = 0 is treated as this value
_U_FLOOR = 5e-324


@dataclass(frozen=True)
class MemoryKernel:
    """Coefficients K(0..n_max) of the history convolution."""

    coefficients: np.ndarray

    @property
    def n_max(self) -> int:
        return self.coefficients.size - 1

    def __getitem__(self, m):
        return self.coefficients[m]

    def __len__(self):
        return self.coefficients.size


class SibuyaModel:
    """Sibuya waiting times, phi(m) = (alpha/m) prod_{l<m} (1 - alpha/l).

    The survival table grows lazily by doubling. Every entry is produced by
    the multiplicative recurrence Phi(m) = Phi(m-1) (1 - alpha/m), so values
    are identical however the table happened to be grown.
    """

    def __init__(self, alpha: float):
        alpha = float(alpha)
        if not 0.0 < alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
        self.alpha = alpha
        self._lock = threading.Lock()
        self._table = np.ones(1)
        self._neg_table = -self._table
        self._extend(1 << 10)

    def __repr__(self):
        return f"SibuyaModel(alpha={self.alpha!r})"

    def __eq__(self, other):
        return isinstance(other, SibuyaModel) and other.alpha == self.alpha

    def __hash__(self):
        return hash(("sibuya", self.alpha))

    @property
    def survival_table(self) -> np.ndarray:
        return self._table

    def _extend(self, size: int) -> None:
        with self._lock:
            table = self._table
            if table.size >= size:
                return
            # grow one power-of-two block at a time so every entry is the same
            # product whatever sequence of requests built the table
            blocks = [table]
            last = table[-1]
            end = table.size
            while end < size:
                m = np.arange(end, 2 * end, dtype=float)
                block = last * np.cumprod(1.0 - self.alpha / m)
                blocks.append(block)
                last = block[-1]
                end *= 2
            table = np.concatenate(blocks)
            # negated copy is ascending, as searchsorted requires
            self._neg_table = -table
            self._table = table

    def survival_array(self, n_max: int) -> np.ndarray:
        """Phi(0..n_max)."""
        self._extend(n_max + 1)
        return self._table[: n_max + 1].copy()

    def pmf_array(self, n_max: int) -> np.ndarray:
        """phi(0..n_max), with phi(0) = 0."""
        surv = self.survival_array(n_max)
        out = np.zeros(n_max + 1)
        m = np.arange(1, n_max + 1)
        out[1:] = surv[:-1] * (self.alpha / m)
        return out

    def survival(self, m: int) -> float:
        m = int(m)
        if m < 0:
            raise ValueError("m must be non-negative")
        if m < _MAX_TABLE:
            self._extend(m + 1)
            return float(self._table[m])
        return self._survival_far(m)

    def pmf(self, m: int) -> float:
        m = int(m)
        if m <= 0:
            return 0.0
        return self.survival(m - 1) * self.alpha / m

    def kernel(self, n_max: int) -> MemoryKernel:
        """K(m) = (-1)^m binom(1-alpha, m) - delta_{0,m} + delta_{1,m}.

        The Grunwald-Letnikov weights g_m = (-1)^m binom(1-alpha, m) obey
        g_m = g_{m-1} (1 - (2-alpha)/m), which is how they are produced here.
        """
        n_max = int(n_max)
        if n_max < 1:
            raise ValueError("n_max must be >= 1")
        m = np.arange(1, n_max + 1, dtype=float)
        g = np.concatenate([[1.0], np.cumprod(1.0 - (2.0 - self.alpha) / m)])
        g[0] -= 1.0
        g[1] += 1.0
        return MemoryKernel(g)

    def _survival_far(self, m: int) -> float:
        # Gamma(m+1-alpha) / (Gamma(m+1) Gamma(1-alpha)); m may be a huge int
        a = self.alpha
        if m < 2**53:
            return float(special.poch(m + 1.0, -a) * special.rgamma(1.0 - a))
        # relative correction a(1-a)/(2m) is below double resolution here
        return math.exp(-a * math.log(m) - math.lgamma(1.0 - a))

    def sample(self, u: float) -> int:
        u = float(u)
        if not 0.0 <= u < 1.0:
            raise ValueError("u must lie in [0, 1)")
        if self.alpha == 1.0:
            return 1
        u = max(u, _U_FLOOR)
        while self._table[-1] > u and self._table.size < _MAX_TABLE:
            self._extend(2 * self._table.size)
        table, neg = self._table, self._neg_table
        if table[-1] <= u:
            # number of entries with Phi(j) > u is the waiting time
            return int(np.searchsorted(neg, -u, side="left"))
        # beyond the table: bracket then bisect on the same survival values
        lo = table.size - 1
        hi = 2 * lo
        while self._survival_far(hi) > u:
            lo, hi = hi, 2 * hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self._survival_far(mid) > u:
                lo = mid
            else:
                hi = mid
        return hi


@dataclass(frozen=True)
class GeometricModel:
    """Memoryless waiting times: jump with probability sigma in each step."""

    sigma: float

    def __post_init__(self):
        if not 0.0 < self.sigma <= 1.0:
            raise ValueError(f"sigma must lie in (0, 1], got {self.sigma}")

    def survival(self, m: int) -> float:
        if m < 0:
            raise ValueError("m must be non-negative")
        return (1.0 - self.sigma) ** m

    def pmf(self, m: int) -> float:
        if m <= 0:
            return 0.0
        return self.sigma * (1.0 - self.sigma) ** (m - 1)

    def survival_array(self, n_max: int) -> np.ndarray:
        return (1.0 - self.sigma) ** np.arange(n_max + 1, dtype=float)

    def pmf_array(self, n_max: int) -> np.ndarray:
        out = np.zeros(n_max + 1)
        out[1:] = self.sigma * (1.0 - self.sigma) ** np.arange(n_max, dtype=float)
        return out

    def kernel(self, n_max: int) -> MemoryKernel:
        if n_max < 1:
            raise ValueError("n_max must be >= 1")
        k = np.zeros(int(n_max) + 1)
        k[1] = self.sigma
        return MemoryKernel(k)

    def sample(self, u: float) -> int:
        u = float(u)
        if not 0.0 <= u < 1.0:
            raise ValueError("u must lie in [0, 1)")
        if self.sigma == 1.0:
            return 1
        u = max(u, _U_FLOOR)
        q = 1.0 - self.sigma
        m = max(1, math.ceil(math.log(u) / math.log(q)))
        # guard the closed form against rounding at the bracket edges
        while q**m > u:
            m += 1
        while m > 1 and q ** (m - 1) <= u:
            m -= 1
        return m


WaitingTimeModel = SibuyaModel | GeometricModel


def sibuya_pmf(model: SibuyaModel, m: int) -> float:
    return model.pmf(m)


def sibuya_survival(model: SibuyaModel, m: int) -> float:
    return model.survival(m)


def geometric_pmf(model: GeometricModel, m: int) -> float:
    return model.pmf(m)


def memory_kernel(model: WaitingTimeModel, n_max: int) -> MemoryKernel:
    return model.kernel(n_max)


def sample_waiting_time(model: WaitingTimeModel, u: float) -> int:
    return model.sample(u)
