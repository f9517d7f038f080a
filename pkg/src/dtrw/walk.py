"""Single DTRW paths on a 1-D lattice.

A path alternates waiting-time draws and nearest-neighbour jumps until the
next jump would land after the horizon. Each uniform draw is decoded with a
fixed convention so that any stream replayed through :func:`simulate_path`
reproduces the ensemble engine path by path:

* waiting time: the unique m with Phi(m) <= u < Phi(m-1);
* jump: u < r p_left -> left, u < r -> right, otherwise stay.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .waiting import WaitingTimeModel

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """SplitMix64 finaliser on a 64-bit integer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def path_key(seed: int, path_index: int) -> int:
    """Starting state of the stream owned by one path of an ensemble."""
    return mix64((seed & MASK64) ^ mix64(path_index + GOLDEN_GAMMA))


class PathStream:
    """Uniform stream of one ensemble path (SplitMix64 from a mixed key).

    Depends only on ``(seed, path_index)``, which is what makes ensembles
    independent of how paths are partitioned over workers.
    """

    def __init__(self, seed: int, path_index: int):
        self._state = path_key(seed, path_index)

    def random(self) -> float:
        self._state = (self._state + GOLDEN_GAMMA) & MASK64
        return (mix64(self._state) >> 11) * 2.0**-53


@dataclass(frozen=True)
class JumpModel:
    """Nearest-neighbour jumps: left r p_left, right r p_right, stay 1 - r."""

    p_left: float = 0.5
    p_right: float = 0.5
    r: float = 1.0

    def __post_init__(self):
        if min(self.p_left, self.p_right) < 0 or not math.isclose(self.p_left + self.p_right, 1.0, abs_tol=1e-12):
            raise ValueError("p_left and p_right must be probabilities summing to 1")
        if not 0.0 < self.r <= 1.0:
            raise ValueError(f"r must lie in (0, 1], got {self.r}")

    def decode(self, u: float) -> int:
        """Displacement for one uniform draw."""
        if u < self.r * self.p_left:
            return -1
        if u < self.r:
            return 1
        return 0


@dataclass(frozen=True)
class LatticeDomain:
    """Either the unbounded lattice or sites i_min..i_max with reflecting walls.

    Site i sits at ``x_left + (i - i_min) * delta_x``; for the unbounded
    lattice ``i_min`` is taken as 0, so site i sits at ``x_left + i * delta_x``.
    """

    bounded: bool
    delta_x: float = 1.0
    i_min: int = 0
    i_max: int = 0
    x_left: float = 0.0

    def __post_init__(self):
        if not self.delta_x > 0:
            raise ValueError("delta_x must be positive")
        if self.bounded and not self.i_min < self.i_max:
            raise ValueError("bounded domain needs i_min < i_max")

    @classmethod
    def unbounded(cls, delta_x: float = 1.0) -> "LatticeDomain":
        return cls(bounded=False, delta_x=delta_x)

    @classmethod
    def interval(cls, lo: float, hi: float, delta_x: float) -> "LatticeDomain":
        """Reflecting interval [lo, hi] with sites on multiples of ``delta_x``."""
        i_min = round(lo / delta_x)
        i_max = round(hi / delta_x)
        if not math.isclose(i_min * delta_x, lo, abs_tol=1e-9 * delta_x) or \
                not math.isclose(i_max * delta_x, hi, abs_tol=1e-9 * delta_x):
            raise ValueError(f"[{lo}, {hi}] is not commensurate with delta_x={delta_x}")
        return cls(bounded=True, delta_x=delta_x, i_min=i_min, i_max=i_max, x_left=lo)

    @property
    def n_sites(self) -> int:
        if not self.bounded:
            raise ValueError("unbounded domain has no fixed size")
        return self.i_max - self.i_min + 1

    def contains(self, site: int) -> bool:
        return not self.bounded or self.i_min <= site <= self.i_max

    def x(self, site):
        return self.x_left + (np.asarray(site) - self.i_min) * self.delta_x


@dataclass(frozen=True)
class PathOutcome:
    final_site: int
    jumps_taken: int
    steps_simulated: int
    waiting_draws: int = 0


def apply_boundary(domain: LatticeDomain, proposed_site: int, current_site: int) -> int:
    """Reflect-as-stay: an outward jump from a wall site leaves it in place."""
    if domain.bounded and not domain.i_min <= proposed_site <= domain.i_max:
        return current_site
    return proposed_site


def simulate_path(waiting: WaitingTimeModel, jumps: JumpModel, domain: LatticeDomain,
                  start_site: int, n: int, rng) -> PathOutcome:
    """Site occupied at time step ``n`` by one walker started at ``start_site``.

    ``rng`` is anything with a ``random()`` method returning floats in
    [0, 1): a :class:`PathStream`, a ``numpy.random.Generator``, or a
    scripted stub.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if not domain.contains(start_site):
        raise ValueError(f"start site {start_site} outside domain")
    site = int(start_site)
    t = 0
    n_jumps = 0
    draws = 0
    while t < n:
        u = rng.random()
        draws += 1
        # W > n - t  <=>  u < Phi(n - t): the horizon check never needs W itself
        if u < waiting.survival(n - t):
            break
        t += waiting.sample(u)
        site = apply_boundary(domain, site + jumps.decode(rng.random()), site)
        n_jumps += 1
    return PathOutcome(site, n_jumps, int(n), draws)
