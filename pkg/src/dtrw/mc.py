"""MC-DTRW: ensemble Monte Carlo over independent DTRW paths.

Paths are simulated in fixed-size blocks by a compiled kernel that releases
the GIL, so a thread pool runs blocks in parallel. Path ``j`` always draws
from the stream keyed by ``(seed, j)`` (see :class:`dtrw.walk.PathStream`),
hence the histograms do not depend on the number of workers.
"""
from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .walk import GOLDEN_GAMMA, MASK64, JumpModel, LatticeDomain
from .waiting import WaitingTimeModel

BLOCK_SIZE = 1 << 15

_G = np.uint64(GOLDEN_GAMMA)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TWO_M53 = 2.0**-53


@numba.njit(inline="always")
def _mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@numba.njit(inline="always")
def _uniform(state):
    state = state + _G
    return state, float(_mix64(state) >> _S11) * _TWO_M53


@numba.njit(nogil=True, cache=True)
def _run_block(seed, first_path, surv, n_steps, report, r_left, r_move,
               bounded, i_min, i_max, start, sites, jumps, draws):
    n_report = report.size
    for p in range(sites.shape[0]):
        state = _mix64(seed ^ _mix64(np.uint64(first_path + p) + _G))
        site = start
        t = 0
        idx = 0
        nj = 0
        nd = 0
        while t < n_steps:
            state, u = _uniform(state)
            nd += 1
            h = n_steps - t
            if u < surv[h]:
                break
            # smallest m with surv[m] <= u; it exists in 1..h
            if surv[1] <= u:
                m = 1
            else:
                lo = 1
                hi = h
                while hi - lo > 1:
                    mid = (lo + hi) >> 1
                    if surv[mid] > u:
                        lo = mid
                    else:
                        hi = mid
                m = hi
            t_next = t + m
            while idx < n_report and report[idx] < t_next:
                sites[p, idx] = site
                idx += 1
            t = t_next
            state, v = _uniform(state)
            if v < r_left:
                proposed = site - 1
            elif v < r_move:
                proposed = site + 1
            else:
                proposed = site
            if not bounded or (proposed >= i_min and proposed <= i_max):
                site = proposed
            nj += 1
        while idx < n_report:
            sites[p, idx] = site
            idx += 1
        jumps[p] = nj
        draws[p] = nd


@dataclass(frozen=True)
class EnsembleConfig:
    n_paths: int
    seed: int
    n_steps: int
    report_times: tuple[int, ...] = ()

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be a positive integer")
        if self.n_steps < 0:
            raise ValueError("n_steps must be non-negative")
        times = tuple(int(t) for t in (self.report_times or (self.n_steps,)))
        if list(times) != sorted(set(times)):
            raise ValueError("report_times must be strictly increasing")
        if times[0] < 0 or times[-1] > self.n_steps:
            raise ValueError("report_times must lie in [0, n_steps]")
        object.__setattr__(self, "report_times", times)


@dataclass
class DensityField:
    """Probability mass per site at one time step.

    ``mass[j]`` belongs to site ``first_site + j``.
    """

    domain: LatticeDomain
    time_step: int
    mass: np.ndarray
    first_site: int
    stderr: np.ndarray | None = None

    @classmethod
    def delta(cls, domain: LatticeDomain, site: int) -> "DensityField":
        if domain.bounded:
            mass = np.zeros(domain.n_sites)
            mass[site - domain.i_min] = 1.0
            return cls(domain, 0, mass, domain.i_min)
        return cls(domain, 0, np.ones(1), site)

    @property
    def sites(self) -> np.ndarray:
        return self.first_site + np.arange(self.mass.size)

    @property
    def x(self) -> np.ndarray:
        return self.domain.x(self.sites)

    @property
    def density(self) -> np.ndarray:
        """Mass per unit length, comparable with a continuum density."""
        return self.mass / self.domain.delta_x

    def at(self, site: int) -> float:
        j = site - self.first_site
        return float(self.mass[j]) if 0 <= j < self.mass.size else 0.0

    def total(self) -> float:
        return float(self.mass.sum())


@dataclass
class RunCounters:
    total_jump_events: int = 0
    total_waiting_draws: int = 0
    wall_time: float = 0.0
    per_path_jumps: np.ndarray | None = field(default=None, repr=False)


def simulate_sites(waiting: WaitingTimeModel, jumps: JumpModel, domain: LatticeDomain,
                   start_site: int, config: EnsembleConfig, workers: int | None = None):
    """Per-path sites at each report time, plus per-path jump and draw counts.

    Returns ``(sites, jumps, draws)`` with ``sites`` of shape
    ``(n_paths, len(report_times))``.
    """
    if not domain.contains(start_site):
        raise ValueError(f"start site {start_site} outside domain")
    n_steps = config.n_steps
    surv = waiting.survival_array(max(n_steps, 1))
    report = np.asarray(config.report_times, dtype=np.int64)
    n = config.n_paths
    sites = np.empty((n, report.size), dtype=np.int64)
    n_jumps = np.empty(n, dtype=np.int64)
    n_draws = np.empty(n, dtype=np.int64)
    seed = np.uint64(int(config.seed) & MASK64)
    args = (surv, n_steps, report, jumps.r * jumps.p_left, jumps.r, domain.bounded,
            domain.i_min, domain.i_max, int(start_site))

    def run(first: int) -> None:
        last = min(first + BLOCK_SIZE, n)
        _run_block(seed, first, *args, sites[first:last], n_jumps[first:last], n_draws[first:last])

    blocks = range(0, n, BLOCK_SIZE)
    workers = workers or os.cpu_count() or 1
    if workers == 1 or len(blocks) == 1:
        for first in blocks:
            run(first)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, blocks))
    return sites, n_jumps, n_draws


def run_ensemble(waiting: WaitingTimeModel, jumps: JumpModel, domain: LatticeDomain,
                 start_site: int, config: EnsembleConfig,
                 workers: int | None = None) -> tuple[list[DensityField], RunCounters]:
    """Histogram N independent paths at every report time.

    Each field carries the naive binomial standard error sqrt(p(1-p)/N) per
    site. On the unbounded lattice a field spans exactly the observed sites.
    """
    t0 = time.perf_counter()
    sites, n_jumps, n_draws = simulate_sites(waiting, jumps, domain, start_site, config, workers)
    n = config.n_paths
    fields = []
    for col, step in enumerate(config.report_times):
        s = sites[:, col]
        if domain.bounded:
            lo, size = domain.i_min, domain.n_sites
        else:
            lo = int(s.min())
            size = int(s.max()) - lo + 1
        mass = np.bincount(s - lo, minlength=size) / n
        stderr = np.sqrt(mass * (1.0 - mass) / n)
        fields.append(DensityField(domain, step, mass, lo, stderr))
    counters = RunCounters(int(n_jumps.sum()), int(n_draws.sum()),
                           time.perf_counter() - t0, n_jumps)
    return fields, counters


def estimate_moment(field: DensityField, order: int) -> float:
    """sum_i x(i)^order U(i, n), in length units to the given power."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    return float(np.sum(field.x**order * field.mass))
