import numpy as np
import pytest

from dtrw.fd import calibrate_grid, fd_solve, steps_for_time
from dtrw.mc import DensityField, EnsembleConfig, estimate_moment, run_ensemble, simulate_sites
from dtrw.renewal import build_jump_counts, expected_jumps, subordinated_field
from dtrw.walk import JumpModel, LatticeDomain, PathStream, simulate_path
from dtrw.waiting import GeometricModel, SibuyaModel

FREE = LatticeDomain.unbounded()


def test_config_validation():
    assert EnsembleConfig(10, 1, 5).report_times == (5,)
    with pytest.raises(ValueError):
        EnsembleConfig(0, 1, 5)
    with pytest.raises(ValueError):
        EnsembleConfig(10, 1, 5, (3, 2))
    with pytest.raises(ValueError):
        EnsembleConfig(10, 1, 5, (6,))


@pytest.mark.parametrize("domain, jumps, start", [
    (FREE, JumpModel(), 0),
    (LatticeDomain(bounded=True, i_min=-3, i_max=4), JumpModel(0.3, 0.7, 0.6), 2),
])
def test_engine_replays_reference_path(domain, jumps, start):
    model = SibuyaModel(0.45)
    cfg = EnsembleConfig(1500, 31337, 120, (0, 7, 60, 120))
    sites, n_jumps, n_draws = simulate_sites(model, jumps, domain, start, cfg, workers=1)
    for j in range(cfg.n_paths):
        for col, n in enumerate(cfg.report_times):
            out = simulate_path(model, jumps, domain, start, n, PathStream(cfg.seed, j))
            assert out.final_site == sites[j, col]
        assert out.jumps_taken == n_jumps[j]
        assert out.waiting_draws == n_draws[j]


def test_delta_at_time_zero():
    fields, counters = run_ensemble(SibuyaModel(0.5), JumpModel(), FREE, 3, EnsembleConfig(1000, 1, 10, (0, 10)))
    assert fields[0].first_site == 3 and np.array_equal(fields[0].mass, [1.0])
    assert fields[1].total() == 1.0
    assert counters.total_jump_events >= 0 and counters.total_waiting_draws >= counters.total_jump_events


def test_one_step_masses():
    fields, _ = run_ensemble(SibuyaModel(0.5), JumpModel(), FREE, 0, EnsembleConfig(10**6, 77, 1))
    f = fields[0]
    for site, expected in {-1: 0.25, 0: 0.5, 1: 0.25}.items():
        assert abs(f.at(site) - expected) <= 0.002
    assert f.total() == 1.0


def test_unit_waits_give_one_jump_per_step():
    _, counters = run_ensemble(SibuyaModel(1.0), JumpModel(), FREE, 0, EnsembleConfig(1000, 5, 100))
    assert counters.total_jump_events == 100 * 1000
    assert np.all(counters.per_path_jumps == 100)
    _, counters = run_ensemble(GeometricModel(1.0), JumpModel(r=0.5), FREE, 0, EnsembleConfig(100, 5, 100))
    assert counters.total_jump_events == 100 * 100


def test_worker_count_independence():
    model, jumps = SibuyaModel(0.6), JumpModel()
    box = LatticeDomain.interval(-1.0, 1.0, 0.2)
    cfg = EnsembleConfig(150_000, 4242, 80, (10, 80))
    runs = [run_ensemble(model, jumps, box, 0, cfg, workers=w) for w in (1, 2, 4)]
    for fields, counters in runs[1:]:
        for a, b in zip(runs[0][0], fields):
            assert np.array_equal(a.mass, b.mass)
        assert counters.total_jump_events == runs[0][1].total_jump_events


def test_bounded_histogram_is_normalized():
    box = LatticeDomain.interval(-1.0, 1.0, 0.2)
    fields, _ = run_ensemble(SibuyaModel(0.7), JumpModel(), box, 0, EnsembleConfig(20_000, 3, 40))
    f = fields[0]
    assert f.mass.size == 11 and f.total() == pytest.approx(1.0, abs=1e-12)
    assert np.all(f.stderr <= 0.5 / np.sqrt(20_000) + 1e-15)


def test_moments():
    dom = LatticeDomain.unbounded(0.1)
    delta = DensityField.delta(dom, 0)
    assert estimate_moment(delta, 1) == 0.0
    assert estimate_moment(delta, 2) == 0.0
    fields, _ = run_ensemble(SibuyaModel(0.5), JumpModel(), dom, 0, EnsembleConfig(200_000, 8, 200))
    f = fields[0]
    sd = np.sqrt(estimate_moment(f, 2) / 200_000)
    assert abs(estimate_moment(f, 1)) <= 4 * sd
    with pytest.raises(ValueError):
        estimate_moment(f, 3)


@pytest.mark.parametrize("alpha, target", [(0.5, 2**0.5), (1.0, 2.0)])
def test_second_moment_ratio(alpha, target):
    cfg = EnsembleConfig(200_000, 11, 400, (200, 400))
    fields, _ = run_ensemble(SibuyaModel(alpha), JumpModel(), LatticeDomain.unbounded(0.1), 0, cfg)
    ratio = estimate_moment(fields[1], 2) / estimate_moment(fields[0], 2)
    assert abs(np.log2(ratio) - np.log2(target)) <= 0.1


def test_matches_subordination_on_lattice():
    alpha, n = 0.7, 40
    fields, _ = run_ensemble(SibuyaModel(alpha), JumpModel(), FREE, 0, EnsembleConfig(400_000, 21, n))
    sites, mass = subordinated_field(alpha, 0.5, n)
    f = fields[0]
    est = np.array([f.at(int(i)) for i in sites])
    assert np.max(np.abs(est - mass)) <= 5 * np.sqrt(0.25 / 400_000)


@pytest.mark.parametrize("alpha", [0.5, 0.9])
def test_counter_law(alpha):
    n, paths = 300, 100_000
    _, counters = run_ensemble(SibuyaModel(alpha), JumpModel(), FREE, 0, EnsembleConfig(paths, 99, n))
    mean = counters.total_jump_events / paths
    se = counters.per_path_jumps.std(ddof=1) / np.sqrt(paths)
    assert abs(mean - expected_jumps(build_jump_counts(alpha, n), n)) <= 3 * se


@pytest.mark.slow
def test_unit_wait_walk_variance():
    n, paths = 10_000, 100_000
    cfg = EnsembleConfig(paths, 123, n)
    sites, _, _ = simulate_sites(SibuyaModel(1.0), JumpModel(), FREE, 0, cfg)
    assert abs(sites[:, 0].var() / n - 1.0) <= 0.05


@pytest.mark.slow
@pytest.mark.parametrize("alpha", [0.5, 0.7, 0.9])
def test_converges_to_fd_on_bounded_domain(alpha):
    box = LatticeDomain.interval(-1.0, 1.0, 0.2)
    n = steps_for_time(0.5, calibrate_grid(alpha, 0.1, 0.2))
    model = SibuyaModel(alpha)
    fields, _ = run_ensemble(model, JumpModel(), box, 0, EnsembleConfig(10**6, 2718, n))
    fd = fd_solve(model, JumpModel(), box, DensityField.delta(box, 0), n, report_times=[n])[0]
    assert np.max(np.abs(fields[0].mass - fd.mass)) <= 5e-3
