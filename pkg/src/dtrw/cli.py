"""Command-line runner for DTRW experiments.

Every density run writes ``<out>`` as CSV (``x,u[,stderr]``, with ``u`` a
density, i.e. mass per site divided by dx) and a JSON sidecar next to it
holding everything needed to replay the run.

Example::

    dtrw fd --alpha 0.7 --domain=-1,1 --out fd.csv
    dtrw mc --alpha 0.7 --paths 1000000 --seed 7 --out mc.csv
    dtrw replay mc.json --out mc_again.csv
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .analytic import SeriesSolutionParams, analytic_u
from .fd import StabilityError, calibrate_grid, fd_solve, steps_for_time
from .mc import DensityField, EnsembleConfig, run_ensemble
from .renewal import build_jump_counts, expected_jumps, subordinated_field
from .walk import JumpModel, LatticeDomain
from .waiting import SibuyaModel

log = logging.getLogger("dtrw")

METHODS = ("mc", "fd", "subordination", "analytic")
EXIT_INVALID = 2
EXIT_UNSTABLE = 3


class ParameterError(ValueError):
    """Invalid combination of experiment parameters."""


@dataclass
class ExperimentSpec:
    method: str
    alpha: float = 0.7
    D_alpha: float = 0.1
    delta_x: float = 0.2
    r: float = 1.0
    t_final: float = 0.5
    n_paths: int = 1_000_000
    seed: int = 12345
    domain: tuple[float, float] | None = (-1.0, 1.0)
    output: str | None = None
    report_times: tuple[float, ...] = ()
    n_terms: int = 900

    def __post_init__(self):
        if self.domain is not None:
            self.domain = (float(self.domain[0]), float(self.domain[1]))
        self.report_times = tuple(float(t) for t in self.report_times)

    @property
    def delta_t(self) -> float:
        return calibrate_grid(self.alpha, self.D_alpha, self.delta_x, self.r)

    @property
    def n_steps(self) -> int:
        return steps_for_time(self.t_final, self.delta_t)

    def lattice(self) -> LatticeDomain:
        if self.domain is None:
            return LatticeDomain.unbounded(self.delta_x)
        return LatticeDomain.interval(*self.domain, self.delta_x)

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ParameterError(f"unknown method {self.method!r}")
        if not 0.0 < self.alpha <= 1.0:
            raise ParameterError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.D_alpha <= 0 or self.delta_x <= 0:
            raise ParameterError("D_alpha and dx must be positive")
        if not 0.0 < self.r <= 1.0:
            raise ParameterError(f"r must lie in (0, 1], got {self.r}")
        if self.t_final <= 0:
            raise ParameterError("t must be positive")
        if self.method == "mc" and self.n_paths < 1:
            raise ParameterError("mc needs --paths >= 1")
        if self.method in ("mc", "fd") and self.n_steps < 1:
            raise ParameterError(f"t={self.t_final} is shorter than one time step dt={self.delta_t:.6g}")
        for t in self.report_times:
            if not 0 <= t <= self.t_final:
                raise ParameterError(f"report time {t} outside [0, t]")
            if self.method == "analytic" and t == 0:
                raise ParameterError("the series solution has no pointwise value at t = 0")
        if self.domain is not None:
            lo, hi = self.domain
            if not lo < 0 < hi:
                raise ParameterError("domain must contain the release point x = 0")
            try:
                self.lattice()
            except ValueError as exc:
                raise ParameterError(str(exc)) from exc
        if self.method == "analytic" and self.domain != (-1.0, 1.0):
            raise ParameterError("the series solution is for the domain [-1, 1]")
        if self.method == "subordination":
            if self.domain is not None:
                raise ParameterError("subordination needs --domain unbounded")
            if self.r != 1.0:
                raise ParameterError("subordination needs r = 1 (no self-jumps)")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        data = dict(data)
        if data.get("domain") is not None:
            data["domain"] = tuple(data["domain"])
        data["report_times"] = tuple(data.get("report_times", ()))
        return cls(**data)


def write_density_csv(path, x, u, stderr=None) -> None:
    header = ["x", "u"] + (["stderr"] if stderr is not None else [])
    columns = [x, u] + ([stderr] if stderr is not None else [])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([format(float(v), ".17g") for v in row])


def read_density_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {name: np.array([float(r[j]) for r in body]) for j, name in enumerate(header)}


def _field_columns(fld: DensityField):
    dx = fld.domain.delta_x
    stderr = None if fld.stderr is None else fld.stderr / dx
    return fld.x, fld.density, stderr


def _report_steps(spec: ExperimentSpec) -> list[int]:
    times = set(steps_for_time(t, spec.delta_t) for t in spec.report_times)
    times.add(spec.n_steps)
    return sorted(times)


def _compute(spec: ExperimentSpec):
    """Fields at each report step plus run counters (method-specific)."""
    jumps = JumpModel(r=spec.r)
    waiting = SibuyaModel(spec.alpha)
    domain = spec.lattice()
    steps = _report_steps(spec)
    counters = {}
    if spec.method == "mc":
        cfg = EnsembleConfig(spec.n_paths, spec.seed, spec.n_steps, tuple(steps))
        fields, cnt = run_ensemble(waiting, jumps, domain, 0, cfg)
        counters = {"total_jump_events": cnt.total_jump_events,
                    "total_waiting_draws": cnt.total_waiting_draws,
                    "mean_jumps_per_path": cnt.total_jump_events / spec.n_paths}
        return [_field_columns(f) for f in fields], steps, counters
    if spec.method == "fd":
        fields, state = fd_solve(waiting, jumps, domain, DensityField.delta(domain, 0),
                                 spec.n_steps, report_times=steps, return_state=True)
        counters = {"flux_op_count": state.flux_op_count}
        return [_field_columns(f) for f in fields], steps, counters
    if spec.method == "subordination":
        table = build_jump_counts(spec.alpha, spec.n_steps, spec.n_steps)
        out = []
        for n in steps:
            sites, mass = subordinated_field(spec.alpha, 0.5, n, table)
            out.append((domain.x(sites), mass / spec.delta_x, None))
        return out, steps, counters
    # analytic: evaluated at the requested physical times on the lattice sites
    params = SeriesSolutionParams(spec.alpha, spec.D_alpha, spec.n_terms)
    x = domain.x(np.arange(domain.i_min, domain.i_max + 1))
    times = sorted(set(spec.report_times) | {spec.t_final})
    out = []
    for t in times:
        out.append((x, analytic_u(params, x, t), None))
    return out, [steps_for_time(t, spec.delta_t) for t in times], counters


def run_experiment(spec: ExperimentSpec) -> dict:
    """Run one experiment, write CSV output plus JSON sidecar, return metadata."""
    spec.validate()
    if not spec.output:
        raise ParameterError("an output path is required")
    t0 = time.perf_counter()
    columns, steps, counters = _compute(spec)
    wall = time.perf_counter() - t0
    out = Path(spec.output)
    files = []
    for (x, u, err), n in zip(columns, steps):
        is_final = n == steps[-1]
        path = out if is_final else out.with_name(f"{out.stem}.n{n}{out.suffix}")
        write_density_csv(path, x, u, err)
        files.append({"path": path.name, "time_step": int(n)})
    meta = {
        "spec": asdict(spec),
        "delta_t": spec.delta_t,
        "n_steps": spec.n_steps,
        "simulated_time": spec.n_steps * spec.delta_t,
        "counters": counters,
        "wall_time_s": wall,
        "files": files,
        "version": __version__,
    }
    out.with_suffix(".json").write_text(json.dumps(meta, indent=2))
    return meta


def replay(sidecar, output=None) -> dict:
    """Re-run the experiment recorded in a JSON sidecar."""
    meta = json.loads(Path(sidecar).read_text())
    spec = ExperimentSpec.from_dict(meta["spec"])
    if output is not None:
        spec.output = str(output)
    return run_experiment(spec)


def _final_density(spec: ExperimentSpec) -> tuple[np.ndarray, np.ndarray]:
    columns, _, _ = _compute(replace(spec, report_times=()))
    x, u, _ = columns[-1]
    return np.asarray(x), np.asarray(u)


def run_error_table(alphas, base: ExperimentSpec, output=None) -> dict[float, dict]:
    """fd, mc and analytic densities on a shared grid and their differences.

    Writes a per-site CSV (when ``output`` is given) and returns, per alpha,
    the maximum absolute differences.
    """
    rows = []
    summary = {}
    for alpha in alphas:
        specs = {m: replace(base, method=m, alpha=float(alpha), report_times=()) for m in ("fd", "mc", "analytic")}
        for s in specs.values():
            s.validate()
        x, fd = _final_density(specs["fd"])
        _, mc = _final_density(specs["mc"])
        _, an = _final_density(specs["analytic"])
        diffs = {"fd_analytic": np.abs(fd - an), "mc_analytic": np.abs(mc - an), "mc_fd": np.abs(mc - fd)}
        summary[float(alpha)] = {f"max_{k}": float(v.max()) for k, v in diffs.items()}
        for j in range(x.size):
            rows.append([alpha, x[j], fd[j], mc[j], an[j]] + [d[j] for d in diffs.values()])
    if output is not None:
        out = Path(output)
        with open(out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["alpha", "x", "fd", "mc", "analytic", "fd_analytic", "mc_analytic", "mc_fd"])
            for row in rows:
                writer.writerow([format(float(v), ".17g") for v in row])
        meta = {"spec": asdict(base), "alphas": [float(a) for a in alphas],
                "max_abs_differences": {str(k): v for k, v in summary.items()}}
        out.with_suffix(".json").write_text(json.dumps(meta, indent=2))
    return summary


@dataclass
class BenchRecord:
    method: str
    alpha: float
    t: float
    wall_time_s: float
    op_count: int
    n_paths: int | None = None


def run_bench(mode: str, values, base: ExperimentSpec, methods=("fd", "mc")) -> list[BenchRecord]:
    """Cost of fd and mc runs across alpha (``vary-alpha``) or t (``vary-t``).

    ``op_count`` is the kernel-history multiply-add count for fd and the total
    number of jump events for mc.
    """
    if mode not in ("vary-alpha", "vary-t"):
        raise ParameterError(f"unknown bench mode {mode!r}")
    records = []
    for v in values:
        point = replace(base, alpha=float(v)) if mode == "vary-alpha" else replace(base, t_final=float(v))
        for method in methods:
            spec = replace(point, method=method, report_times=())
            spec.validate()
            t0 = time.perf_counter()
            _, _, counters = _compute(spec)
            wall = time.perf_counter() - t0
            if method == "fd":
                records.append(BenchRecord("fd", spec.alpha, spec.t_final, wall, counters["flux_op_count"]))
            elif method == "mc":
                records.append(BenchRecord("mc", spec.alpha, spec.t_final, wall,
                                           counters["total_jump_events"], spec.n_paths))
            else:
                raise ParameterError(f"bench supports fd and mc, not {method!r}")
    return records


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _domain(text: str):
    if text.strip().lower() == "unbounded":
        return None
    lo, hi = _floats(text)
    return (lo, hi)


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float, default=0.7)
    parser.add_argument("--d-alpha", type=float, default=0.1, dest="D_alpha")
    parser.add_argument("--dx", type=float, default=0.2, dest="delta_x")
    parser.add_argument("--r", type=float, default=1.0)
    parser.add_argument("--t", type=float, default=0.5, dest="t_final")
    parser.add_argument("--paths", type=int, default=1_000_000, dest="n_paths")
    parser.add_argument("--seed", type=int, default=12345)
    parser.add_argument("--domain", type=_domain, default=(-1.0, 1.0),
                        help="'lo,hi' (write as --domain=-1,1) or 'unbounded'")
    parser.add_argument("--terms", type=int, default=900, dest="n_terms",
                        help="series terms for the analytic solution")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dtrw", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("mc", "fd", "analytic", "subordinate"):
        p = sub.add_parser(name, help=f"{name} density at time t")
        _common(p)
        p.add_argument("--out", required=True)
        p.add_argument("--report-times", type=_floats, default=(),
                       help="extra physical times to snapshot, comma separated")

    p = sub.add_parser("jumps", help="jump-count law P_k(n) and expected jumps")
    p.add_argument("--alpha", type=float, default=0.7)
    p.add_argument("--n", type=int, required=True, help="time-step horizon")
    p.add_argument("--table", action="store_true", help="emit rows n,k,p instead of n,expected_jumps")
    p.add_argument("--out", required=True)

    p = sub.add_parser("bench", help="operation counts and wall time of fd vs mc")
    _common(p)
    p.add_argument("--mode", choices=("vary-alpha", "vary-t"), required=True)
    p.add_argument("--values", type=_floats, required=True)
    p.add_argument("--methods", default="fd,mc")
    p.add_argument("--out", required=True)

    p = sub.add_parser("errors", help="fd / mc / analytic comparison table")
    _common(p)
    p.add_argument("--alphas", type=_floats, default=[0.5, 0.7, 0.9])
    p.add_argument("--out", required=True)

    p = sub.add_parser("replay", help="re-run an experiment from its JSON sidecar")
    p.add_argument("sidecar")
    p.add_argument("--out")
    return parser


def _spec_from_args(args, method: str) -> ExperimentSpec:
    return ExperimentSpec(method=method, alpha=args.alpha, D_alpha=args.D_alpha, delta_x=args.delta_x,
                          r=args.r, t_final=args.t_final, n_paths=args.n_paths, seed=args.seed,
                          domain=args.domain, output=getattr(args, "out", None),
                          report_times=tuple(getattr(args, "report_times", ()) or ()),
                          n_terms=args.n_terms)


def _run_jumps(args) -> None:
    if args.n < 0:
        raise ParameterError("--n must be non-negative")
    if not 0.0 < args.alpha <= 1.0:
        raise ParameterError("alpha must lie in (0, 1]")
    table = build_jump_counts(args.alpha, args.n)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        if args.table:
            writer.writerow(["n", "k", "p"])
            for n in range(args.n + 1):
                for k, pk in enumerate(table.jump_probabilities(n)):
                    if pk > 0.0:
                        writer.writerow([n, k, format(pk, ".17g")])
        else:
            writer.writerow(["n", "expected_jumps"])
            for n in range(args.n + 1):
                writer.writerow([n, format(expected_jumps(table, n), ".17g")])


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command in ("mc", "fd", "analytic", "subordinate"):
            method = "subordination" if args.command == "subordinate" else args.command
            meta = run_experiment(_spec_from_args(args, method))
            log.info("wrote %s (n_steps=%d, dt=%.6g)", args.out, meta["n_steps"], meta["delta_t"])
        elif args.command == "jumps":
            _run_jumps(args)
        elif args.command == "bench":
            base = _spec_from_args(args, "fd")
            records = run_bench(args.mode, args.values, base, tuple(args.methods.split(",")))
            Path(args.out).write_text(json.dumps([asdict(r) for r in records], indent=2))
        elif args.command == "errors":
            summary = run_error_table(args.alphas, _spec_from_args(args, "fd"), args.out)
            for alpha, row in summary.items():
                print(f"alpha={alpha:g} " + " ".join(f"{k}={v:.3e}" for k, v in row.items()))
        elif args.command == "replay":
            replay(args.sidecar, args.out)
    except (ParameterError, ValueError) as exc:
        print(f"dtrw: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except StabilityError as exc:
        print(f"dtrw: unstable: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    return 0


if __name__ == "__main__":
    sys.exit(main())
