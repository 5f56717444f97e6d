import math
import threading

import numpy as np
import pytest

from tvtree.app.synthcommand import stereoVolume
from tvtree.dnc import solve_hochbaum
from tvtree.event import Event
from tvtree.nonconvex import NonconvexSolver
from tvtree.prox2d import (Grid2D, UnaryGrid, ConvergenceLog, RowSolverPool, prox_tv_quadratic_rows, prox_tv_conjugate_cols, tvl2Dual,
    tvl1Energy, tvl2Energy, solve_tvl2, solve_tvl1, solve_tv_points, solve_ttv_nonconvex)
from tvtree.pwl import UnaryPwl
from tvtree.quadchain import solve_quad_chain
from tvtree.tools import BreakpointBudgetError, TvInputError

def noisyStep(rng, shape = (6, 8), sigma = 0.1):
    clean = np.full(shape, 0.25)
    clean[:, shape[1] // 2:] = 0.75
    return clean + rng.normal(scale = sigma, size = shape)

def labelUnaries(rng, shape, labels = 4):
    """ Random costs at the integer labels, linearly interpolated, with unit slope walls outside. """
    positions = np.arange(labels, dtype = float)
    rows = list()
    for _ in range(shape[0]):
        row = list()
        for _ in range(shape[1]):
            costs = rng.uniform(0.0, 2.0, size = labels)
            slopes = np.concatenate([[-1.0], np.diff(costs), [1.0]])
            row.append(UnaryPwl(slopes, positions, (0.0, costs[0])))
        rows.append(row)
    return rows

def test_grid_validation():
    with pytest.raises(TvInputError):
        Grid2D(np.zeros(5))
    with pytest.raises(TvInputError):
        Grid2D(np.zeros((2, 3)), -1.0, 0.0)
    with pytest.raises(TvInputError):
        Grid2D(np.zeros((2, 3)), np.ones((2, 3)), 0.0)

def test_grid_transposed():
    grid = Grid2D(np.arange(6.0).reshape(2, 3), np.full((2, 2), 0.5), np.full((1, 3), 2.0))

    transposed = grid.transposed()

    assert transposed.Shape == (3, 2)
    np.testing.assert_array_equal(transposed.Horizontal, np.full((3, 1), 2.0))
    np.testing.assert_array_equal(transposed.Vertical, np.full((2, 2), 0.5))
    assert transposed.tvHorizontal(transposed.Values) == pytest.approx(grid.tvVertical(grid.Values))

def test_row_prox_is_a_chain_solve(rng):
    f = rng.normal(size = (1, 12))
    xi = rng.normal(size = (1, 12))
    grid = Grid2D(f, 0.3, 0.0)

    x = prox_tv_quadratic_rows(xi, grid, 0.5)

    expected = solve_quad_chain(np.full(12, 3.0), f[0] + xi[0] / 0.5, np.full(11, -0.3), np.full(11, 0.3))
    np.testing.assert_allclose(x[0], expected, atol = 1e-12)

def test_row_prox_rejects_bad_input(rng):
    grid = Grid2D(rng.normal(size = (2, 3)), 0.3, 0.3)

    with pytest.raises(TvInputError):
        prox_tv_quadratic_rows(np.zeros((2, 3)), grid, 0.0)
    with pytest.raises(TvInputError):
        prox_tv_quadratic_rows(np.zeros((3, 2)), grid, 1.0)
    with pytest.raises(TvInputError):
        prox_tv_conjugate_cols(np.zeros((2, 3)), grid, -1.0)

def test_column_prox_lands_in_the_dual_ball(rng):
    weights = rng.uniform(0.1, 0.5, size = (5, 4))
    grid = Grid2D(np.zeros((6, 4)), 0.0, weights)

    y = prox_tv_conjugate_cols(rng.normal(scale = 3.0, size = (6, 4)), grid, 0.7)

    np.testing.assert_allclose(y.sum(axis = 0), 0.0, atol = 1e-9)
    assert np.all(np.abs(np.cumsum(y, axis = 0)[:-1]) <= weights + 1e-9)

def test_constant_image_is_a_fixed_point():
    grid = Grid2D(np.full((4, 5), 0.3), 0.2, 0.2)

    result = solve_tvl2(grid, 10)

    np.testing.assert_allclose(result.x, 0.3, atol = 1e-12)
    assert result.log.Last.gap == pytest.approx(0.0, abs = 1e-9)

def test_single_row_converges_to_the_chain_solution(rng):
    f = rng.normal(size = (1, 16))
    grid = Grid2D(f, 0.4, 0.0)

    result = solve_tvl2(grid, 60, accel = False)

    expected = solve_quad_chain(np.ones(16), f[0], np.full(15, -0.4), np.full(15, 0.4))
    np.testing.assert_allclose(result.x[0], expected, atol = 1e-9)

@pytest.mark.parametrize("accel", [False, True])
def test_tvl2_gap(rng, accel):
    grid = Grid2D(noisyStep(rng), 0.15, 0.15)

    log = solve_tvl2(grid, 60, accel = accel).log

    gaps = log.Gaps
    assert len(log) == 60
    assert np.all(gaps >= -1e-9)
    assert gaps[-20:].max() <= gaps[:20].max()
    assert gaps[-1] < gaps[0]
    assert log.Energies[-1] == pytest.approx(tvl2Energy(grid, solve_tvl2(grid, 60, accel = accel).x))

def test_tvl2_accelerated_gap_decays_quadratically(rng):
    grid = Grid2D(noisyStep(rng, (32, 32)), 0.1, 0.1)

    log = solve_tvl2(grid, 400, accel = True).log

    k = np.array([record.k for record in log], dtype = float)
    scaled = log.Gaps * k * k
    assert k[99] == 100
    assert np.all(scaled[99:] <= 10.0 * scaled[99])

def test_dual_value_is_a_lower_bound(rng):
    grid = Grid2D(noisyStep(rng), 0.2, 0.2)
    y = prox_tv_conjugate_cols(rng.normal(size = grid.Shape), grid, 1.0)

    assert tvl2Dual(grid, y) <= tvl2Energy(grid, grid.Values) + 1e-12

def test_gap_threshold_stops_early(rng):
    grid = Grid2D(noisyStep(rng), 0.15, 0.15)

    log = solve_tvl2(grid, 50, gapThreshold = 1e9).log

    assert len(log) == 1

def test_iteration_event_and_threads(rng):
    grid = Grid2D(noisyStep(rng), 0.15, 0.15)
    seen = list()
    onIteration = Event()
    onIteration += lambda state, record: seen.append(record.k)

    with RowSolverPool(3) as pool:
        threaded = solve_tvl2(grid, 8, pool = pool, onIteration = onIteration)
    serial = solve_tvl2(grid, 8)

    assert seen == list(range(1, 9))
    np.testing.assert_allclose(threaded.x, serial.x, atol = 1e-12)

def test_tvl1_without_weights_returns_the_data(rng):
    f = rng.normal(size = (3, 4))

    result = solve_tvl1(Grid2D(f, 0.0, 0.0), 3)

    np.testing.assert_allclose(result.x, f, atol = 1e-9)
    assert np.all(np.isnan(result.log.Gaps))

def test_tvl1_single_row_reaches_the_optimum(rng):
    f = rng.normal(size = (1, 8))
    grid = Grid2D(f, 0.3, 0.0)

    result = solve_tvl1(grid, 200)

    optimum = solve_hochbaum([UnaryPwl.absolute(float(value)) for value in f[0]], np.full(7, -0.3), np.full(7, 0.3))
    assert tvl1Energy(grid, result.x) == pytest.approx(tvl1Energy(grid, optimum[None, :]), abs = 1e-6)

def test_tvl1_energy_drops(rng):
    f = noisyStep(rng)
    f[2, 3] = 3.0
    grid = Grid2D(f, 0.55, 0.55)

    result = solve_tvl1(grid, 30, accelerationGamma = 0.5)

    assert result.log.BestEnergies[-1] < tvl1Energy(grid, f)
    assert np.all(np.diff(result.log.BestEnergies) <= 0)

def test_points_baseline_approaches_the_row_solver(rng):
    grid = Grid2D(noisyStep(rng, (5, 5)), 0.2, 0.2)

    log = solve_tvl2(grid, 100).log
    lower = log.Energies[-1] - log.Gaps[-1]
    points = solve_tv_points(grid, 1000).log.Energies[-1]

    assert lower <= points + 1e-9
    assert points - lower < 0.02 * lower

def test_points_baseline_rejects_bad_input(rng):
    grid = Grid2D(np.zeros((2, 2)))

    with pytest.raises(TvInputError):
        solve_tv_points(grid, 10, dataTerm = "huber")
    with pytest.raises(TvInputError):
        solve_tv_points(grid, 0)

def test_unary_grid(rng):
    unaries = [[UnaryPwl.absolute(0.0), UnaryPwl.absolute(2.0)]]
    grid = UnaryGrid(unaries, 1.5, 0.0, truncation = 1.0)

    assert grid.Shape == (1, 2)
    assert grid.breakRange() == (0.0, 2.0)
    assert grid.energy(np.array([[0.0, 2.0]])) == pytest.approx(1.0)
    assert grid.energy(np.array([[0.0, 0.5]])) == pytest.approx(1.5 + 0.75)
    assert grid.transposed().Shape == (2, 1)

def test_unary_grid_validation():
    with pytest.raises(TvInputError):
        UnaryGrid([[UnaryPwl.absolute(0.0)], []])
    with pytest.raises(TvInputError):
        UnaryGrid([[UnaryPwl.absolute(0.0)]], truncation = 0.0)

def test_nonconvex_driver_without_weights_is_exact(rng):
    unaries = labelUnaries(rng, (3, 4))
    grid = UnaryGrid(unaries, 0.0, 0.0, truncation = 1.0)

    result = solve_ttv_nonconvex(grid, 3, tau0 = 10.0)

    expected = sum(unary.minimum()[1] for row in unaries for unary in row)
    assert result.log.Energies[0] == pytest.approx(expected)
    assert grid.energy(result.x) == pytest.approx(expected)

@pytest.mark.parametrize("boundEvery", [0, 1])
def test_nonconvex_driver_log(rng, boundEvery):
    grid = UnaryGrid(labelUnaries(rng, (3, 4)), 0.5, 0.5, truncation = 1.0)

    result = solve_ttv_nonconvex(grid, 5, tau0 = 10.0, boundEvery = boundEvery)

    log = result.log
    assert log.Aborted is None
    assert [record.k for record in log] == list(range(6))
    assert np.all(np.diff(log.BestEnergies) <= 0)
    assert grid.energy(result.x) == pytest.approx(log.BestEnergies[-1])
    assert result.xh.shape == result.xv.shape == result.y.shape == (3, 4)
    assert math.isnan(log.Gaps[0])
    if boundEvery:
        assert not np.any(np.isnan(log.Gaps[1:]))
    else:
        assert np.all(np.isnan(log.Gaps))

def test_nonconvex_driver_improves_the_stereo_initialization():
    volume, _ = stereoVolume((32, 48), 8, np.random.default_rng(7))
    grid = UnaryGrid(volume.toUnaryRows(), 1.0, 1.0, truncation = 10.0)

    result = solve_ttv_nonconvex(grid, 100, tau0 = 300.0, boundEvery = 0)

    log = result.log
    assert log.Aborted is None
    assert len(log) == 101
    assert np.all(np.diff(log.BestEnergies) <= 0)
    assert grid.energy(result.x) <= log.Energies[0] + 1e-9

def test_nonconvex_driver_budget(rng):
    grid = UnaryGrid(labelUnaries(rng, (2, 3)), 0.5, 0.5, truncation = 1.0)

    with pytest.raises(BreakpointBudgetError):
        solve_ttv_nonconvex(grid, 2, breakpointBudget = 3)

def test_nonconvex_driver_rejects_bad_parameters(rng):
    grid = UnaryGrid(labelUnaries(rng, (2, 2)), 0.5, 0.5)

    with pytest.raises(TvInputError):
        solve_ttv_nonconvex(grid, 0)
    with pytest.raises(TvInputError):
        solve_ttv_nonconvex(grid, 1, tau0 = 0.0)
    with pytest.raises(TvInputError):
        solve_ttv_nonconvex(grid, 1, window = (2.0, 2.0))

def test_convergence_log():
    log = ConvergenceLog()
    assert log.Last is None

    log.append(1, 5.0, 1.0, 0.1)
    log.append(2, 6.0, 0.5, 0.2)
    log.append(3, 4.0, math.nan, 0.3)
    log.Aborted = "budget"

    np.testing.assert_array_equal(log.BestEnergies, [5.0, 5.0, 4.0])
    assert log.rows()[1] == (2, 6.0, 0.5, 0.2)

    restored = ConvergenceLog()
    restored.__setstate__(log.__getstate__())
    assert restored.rows()[:2] == log.rows()[:2]
    assert math.isnan(restored.Last.gap)
    assert restored.Aborted == "budget"

def test_row_pool_runs_every_row_with_own_scratch():
    done = np.zeros(50, dtype = int)
    workspaces = dict()

    with RowSolverPool(4) as pool:
        def work(i):
            done[i] += 1
            workspaces[threading.get_ident()] = pool.scratch()
            assert pool.scratch() is workspaces[threading.get_ident()]
        pool.run(work, 50)

    assert np.all(done == 1)
    assert len(set(map(id, workspaces.values()))) == len(workspaces)

def test_row_pool_raises_failures():
    def failing(i):
        if i == 3:
            raise ValueError("row 3")

    with RowSolverPool(2) as pool:
        with pytest.raises(ValueError):
            pool.run(failing, 8)

def test_nonconvex_solver_budget_default():
    assert NonconvexSolver().BreakpointBudget == NonconvexSolver.DEFAULT_BREAKPOINT_BUDGET

@pytest.mark.parametrize("sigma", [0.1, 1.0, 7.0])
def test_moreau_identity(rng, sigma):
    for _ in range(5):
        weights = rng.uniform(0.0, 1.0, size = (15, 16))
        grid = Grid2D(np.zeros((16, 16)), 0.0, weights)
        eta = rng.normal(scale = 2.0, size = (16, 16))

        y = prox_tv_conjugate_cols(eta, grid, sigma)

        # prox of TV/σ at η/σ, column by column
        x = np.column_stack([solve_quad_chain(np.ones(16), eta[:, c] / sigma, -weights[:, c] / sigma, weights[:, c] / sigma) for c in range(16)])
        assert np.max(np.abs(eta - y - sigma * x)) <= 1e-9
