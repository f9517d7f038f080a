"""Subdiffusive discrete time random walks with Sibuya waiting times."""
from .analytic import SeriesSolutionParams, analytic_u
from .fd import FdState, StabilityError, calibrate_grid, fd_solve, fd_step, steps_for_time
from .mc import DensityField, EnsembleConfig, RunCounters, estimate_moment, run_ensemble
from .renewal import (
    JumpCountTable,
    build_jump_counts,
    expected_jumps,
    jump_count_closed_form,
    subordinated_density,
    subordinated_field,
)
from .specfn import MittagLefflerParams, gen_binomial, mittag_leffler_neg
from .walk import JumpModel, LatticeDomain, PathOutcome, PathStream, apply_boundary, simulate_path
from .waiting import GeometricModel, MemoryKernel, SibuyaModel, memory_kernel, sample_waiting_time

__version__ = "0.1.0"
