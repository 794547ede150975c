import logging

import numpy as np
import pytest

from kgmtorus.energy import phi_seed
from kgmtorus.grid import SystemParams, TorusGrid, translate
from kgmtorus.minimizer import SolveOptions, Status, lattice_points, minimize, multi_start


@pytest.fixture(scope="module")
def setup(profile_kgm):
    g = TorusGrid(24)
    par = SystemParams("KGM", g.length / 12, 1.0, 0.5, 4.0, a=2.0)
    return g, par, profile_kgm


def test_options_validation():
    SolveOptions()
    with pytest.raises(ValueError):
        SolveOptions(max_iters=0)
    with pytest.raises(ValueError):
        SolveOptions(grad_tol=0.0)
    with pytest.raises(ValueError):
        SolveOptions(backtrack=1.0)


def test_energy_nonincreasing_and_converges(setup):
    g, par, pr = setup
    seed = phi_seed(g.node((3, 4, 5)), par, pr, g)
    res = minimize(seed, par, SolveOptions(max_iters=300, grad_tol=1e-8), g)
    assert res.status is Status.CONVERGED
    assert res.grad_norm <= 1e-8
    e = np.array(res.energy_history)
    assert np.all(np.diff(e) <= 1e-12 * (1 + np.abs(e[:-1])))
    assert res.point.residual_ok() and res.point.h_second < 0
    assert res.point.energy <= seed.energy


def test_iterates_stay_on_manifold(setup):
    g, par, pr = setup
    seed = phi_seed(g.node((0, 0, 0)), par, pr, g)
    for k in range(1, 4):
        res = minimize(seed, par, SolveOptions(max_iters=k), g)
        assert res.status is Status.MAX_ITERS
        assert res.iterations == k
        assert res.point.residual_ok() and res.point.h_second < 0


def test_critical_seed_stops_immediately(setup):
    g, _, pr = setup
    par = SystemParams("KGM", g.length / 12, 1.0, 0.0, 4.0, a=1.75)
    seed = phi_seed(g.node((2, 2, 2)), par, pr, g)
    first = minimize(seed, par, SolveOptions(max_iters=300, grad_tol=1e-9), g)
    assert first.status is Status.CONVERGED
    again = minimize(first.point, par, SolveOptions(grad_tol=1e-8), g)
    assert again.status is Status.CONVERGED and again.iterations == 0


def test_collapse_detected(setup):
    g, par, pr = setup
    seed = phi_seed(g.node((0, 0, 0)), par, pr, g)
    res = minimize(seed, par, SolveOptions(max_iters=5), g, rho0=10 * seed.norm_sq)
    assert res.status is Status.COLLAPSED


def test_iteration_log(setup, caplog):
    g, par, pr = setup
    seed = phi_seed(g.node((0, 0, 0)), par, pr, g)
    with caplog.at_level(logging.INFO, logger="kgmtorus.minimizer"):
        minimize(seed, par, SolveOptions(max_iters=2), g)
    lines = [r.getMessage() for r in caplog.records]
    assert len(lines) == 2
    assert all(len(line.split()) == 5 for line in lines)


def test_duplicate_seeds_bitwise_identical(setup):
    g, par, pr = setup
    xi = g.node((5, 1, 7))
    a, b = multi_start([xi, xi], par, SolveOptions(max_iters=20), g, pr)
    assert np.array_equal(a.point.u, b.point.u)
    assert a.grad_norm_history == b.grad_norm_history
    assert (a.seed_id, b.seed_id) == (0, 1)


def test_translation_equivariance(setup):
    g, par, pr = setup
    shift = (4, 9, 17)
    xi = (1, 2, 3)
    moved = tuple((a + s) % g.n for a, s in zip(xi, shift))
    r0, r1 = multi_start([g.node(xi), g.node(moved)], par, SolveOptions(max_iters=300), g, pr)
    assert r0.status is r1.status is Status.CONVERGED
    assert r1.point.energy == pytest.approx(r0.point.energy, rel=1e-6)
    assert np.max(np.abs(translate(g, r0.point.u, shift) - r1.point.u)) <= 1e-6


def test_failed_seed_does_not_abort(setup):
    g, par, pr = setup
    out = multi_start([(np.nan, 0.0, 0.0), g.node((1, 1, 1))], par, SolveOptions(max_iters=3), g, pr)
    assert out[0].status is Status.FAILED and out[0].error
    assert out[1].status is Status.MAX_ITERS


def test_parallel_matches_serial(setup):
    g, par, pr = setup
    xis = [g.node((0, 0, 0)), g.node((6, 6, 6)), g.node((12, 0, 3))]
    opts = SolveOptions(max_iters=4)
    serial = multi_start(xis, par, opts, g, pr)
    parallel = multi_start(xis, par, opts, g, pr, workers=2)
    for a, b in zip(serial, parallel):
        assert a.seed_id == b.seed_id
        assert np.array_equal(a.point.u, b.point.u)


def test_multi_start_empty(setup):
    g, par, pr = setup
    assert multi_start([], par, SolveOptions(), g, pr) == []


def test_lattice_points():
    pts = lattice_points(2, 1.0)
    assert len(pts) == 8
    assert (0.5, 0.0, 0.5) in pts
    with pytest.raises(ValueError):
        lattice_points(0, 1.0)
