"""FD-DTRW: explicit time stepping of the generalised master equation

    U(i, n) = U(i, n-1) + sum_{m=0}^{n-1} K(n-m) (L U)(i, m),

where L is the nearest-neighbour jump operator. Because K has full memory,
every past field is kept and each step costs O(n * sites).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mc import DensityField
from .walk import JumpModel, LatticeDomain
from .waiting import MemoryKernel, WaitingTimeModel

NEGATIVE_MASS_TOL = 1e-12


class StabilityError(ArithmeticError):
    """The explicit scheme produced negative mass."""


def jump_operator(u: np.ndarray, jumps: JumpModel, reflecting: bool) -> np.ndarray:
    """(L u)(i) = r [p_right u(i-1) + p_left u(i+1) - u(i)].

    With reflecting walls, an outward jump from an end site is a stay, so the
    end rows only lose the inward fraction. Columns of L sum to zero.
    """
    r, pl, pr = jumps.r, jumps.p_left, jumps.p_right
    out = -u.copy()
    out[1:] += pr * u[:-1]
    out[:-1] += pl * u[1:]
    if reflecting:
        out[0] += pl * u[0]
        out[-1] += pr * u[-1]
    return r * out


@dataclass
class FdState:
    """Solver state: full field history plus the image of each field under L."""

    domain: LatticeDomain
    jumps: JumpModel
    kernel: MemoryKernel
    first_site: int
    history: np.ndarray
    flux_history: np.ndarray
    step_counter: int = 0
    flux_op_count: int = 0
    reflecting: bool = field(default=True)

    @classmethod
    def create(cls, waiting: WaitingTimeModel, jumps: JumpModel, domain: LatticeDomain,
               initial: DensityField, n_steps: int) -> "FdState":
        """Allocate for ``n_steps`` steps.

        An unbounded domain is realised as the initial support padded by
        ``n_steps + 1`` sites on both sides, which mass cannot reach.
        """
        n_steps = int(n_steps)
        if n_steps < 0:
            raise ValueError("n_steps must be non-negative")
        if not math.isclose(initial.total(), 1.0, abs_tol=1e-12):
            raise ValueError("initial field must be normalised")
        if domain.bounded:
            first = domain.i_min
            u0 = np.zeros(domain.n_sites)
            u0[initial.first_site - first: initial.first_site - first + initial.mass.size] = initial.mass
        else:
            pad = n_steps + 1
            first = initial.first_site - pad
            u0 = np.concatenate([np.zeros(pad), initial.mass, np.zeros(pad)])
        history = np.empty((n_steps + 1, u0.size))
        history[0] = u0
        flux = np.empty_like(history)
        flux[0] = jump_operator(u0, jumps, domain.bounded)
        kernel = waiting.kernel(max(n_steps, 1))
        return cls(domain, jumps, kernel, first, history, flux, reflecting=domain.bounded)

    @property
    def n_sites(self) -> int:
        return self.history.shape[1]

    def field(self, n: int) -> DensityField:
        return DensityField(self.domain, n, self.history[n].copy(), self.first_site)


def fd_step(state: FdState) -> FdState:
    """Advance one time step in place and return the state."""
    n = state.step_counter + 1
    if n >= state.history.shape[0]:
        raise ValueError("state was allocated for fewer steps")
    if n > state.kernel.n_max:
        raise ValueError("memory kernel too short for this step")
    # weights K(n), K(n-1), ..., K(1) against flux(0..n-1)
    weights = state.kernel.coefficients[n:0:-1]
    new = state.history[n - 1] + weights @ state.flux_history[:n]
    if new.min() < -NEGATIVE_MASS_TOL:
        raise StabilityError(f"negative mass {new.min():.3e} at step {n}")
    state.history[n] = new
    state.flux_history[n] = jump_operator(new, state.jumps, state.reflecting)
    state.step_counter = n
    state.flux_op_count += n * state.n_sites
    return state


def fd_solve(waiting: WaitingTimeModel, jumps: JumpModel, domain: LatticeDomain,
             initial: DensityField, n_steps: int, report_times=None,
             return_state: bool = False):
    """Run ``n_steps`` steps and return the fields at ``report_times``
    (default: every step 0..n_steps)."""
    state = FdState.create(waiting, jumps, domain, initial, n_steps)
    for _ in range(n_steps):
        fd_step(state)
    times = range(n_steps + 1) if report_times is None else report_times
    fields = [state.field(int(n)) for n in times]
    return (fields, state) if return_state else fields


def calibrate_grid(alpha: float, D_alpha: float, delta_x: float, r: float = 1.0) -> float:
    """Time step that pins the generalised diffusion coefficient:
    dt = (r dx^2 / (2 D_alpha))^(1/alpha)."""
    if not (alpha > 0 and D_alpha > 0 and delta_x > 0):
        raise ValueError("alpha, D_alpha and delta_x must be positive")
    if not 0.0 < r <= 1.0:
        raise ValueError("r must lie in (0, 1]")
    return (r * delta_x**2 / (2.0 * D_alpha)) ** (1.0 / alpha)


def steps_for_time(t: float, delta_t: float) -> int:
    """floor(t / dt), tolerant of round-off when t is a multiple of dt."""
    return int(math.floor(t / delta_t * (1.0 + 1e-12)))
