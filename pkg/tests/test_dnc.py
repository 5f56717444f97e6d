import bisect
import math

import numpy as np
import pytest

from tvtree.convextree import solve_convex_tree
from tvtree.dnc import (TauTriple, ContractedMap, DncStatistics, binary_cut, contract, solve_fast, solve_hochbaum, weightedMedian)
from tvtree.oracle import exhaustive_binary, randomChainInstance
from tvtree.pwl import UnaryPwl
from tvtree.tree import convexEnergy
from tvtree.tools import TvInputError, UnboundedEnergyError

def _energy(instance, x):
    return convexEnergy(instance.Tree, instance.unaries, instance.convexWeights(), x)

def test_tau_composition():
    inner = TauTriple(0.5, -1.0, 1.0)
    outer = TauTriple(-2.0, 0.0, 0.75)
    composed = inner.then(outer)

    for value in (-math.inf, -3.0, -0.5, 0.0, 0.2, 0.9, 4.0, math.inf):
        assert composed.apply(value) == pytest.approx(outer.apply(inner.apply(value)))

def test_contracted_map_matches_edge_by_edge(rng):
    instance = randomChainInstance(rng, 9)
    contracted = contract(instance.unaries, instance.lower, instance.upper, 1, 8)

    assert contracted.BreakCount == sum(unary.BreakCount for unary in instance.unaries[2:9])
    assert contracted.Lambdas == sorted(contracted.Lambdas)

    for lam in rng.uniform(-3.0, 3.0, size = 25):
        for value in (-math.inf, float(rng.normal()), math.inf):
            expected = value
            for k in range(2, 9):
                expected = ContractedMap.edge(instance.unaries[k], instance.lower[k - 1], instance.upper[k - 1]).apply(lam, expected)
            assert contracted.apply(lam, value) == pytest.approx(expected)

def test_contract_rejects_invalid_runs(rng):
    instance = randomChainInstance(rng, 4)

    with pytest.raises(TvInputError):
        contract(instance.unaries, instance.lower, instance.upper, 2, 2)
    with pytest.raises(TvInputError):
        contract(instance.unaries, instance.lower, instance.upper, 0, 4)

def test_binary_cut_matches_enumeration(rng):
    for _ in range(30):
        instance = randomChainInstance(rng, 8)
        breakpoints = instance.breakpoints()
        lam = float(rng.choice(breakpoints)) if rng.random() < 0.5 else float(rng.uniform(-3.0, 3.0))

        coefficients = [unary.Slopes[bisect.bisect_left(unary.Breaks, lam)] for unary in instance.unaries]
        expected = exhaustive_binary(coefficients, instance.lower, instance.upper, tolerance = 1e-12)

        np.testing.assert_array_equal(binary_cut(instance.unaries, instance.lower, instance.upper, lam), expected)

def test_binary_cut_of_empty_chain():
    assert binary_cut([], [], [], 0.0).size == 0

@pytest.mark.parametrize("values, weights, expected", [
    ([1.0, 2.0, 3.0], [1.0, 1.0, 1.0], 2.0),
    ([3.0, 1.0, 2.0], [1.0, 3.0, 1.0], 1.0),
    ([5.0, 4.0, 4.0, 1.0], [1.0, 1.0, 1.0, 1.0], 4.0),
    ([1.0, 2.0], [1.0, 1.0], 1.0),
    ([7.0, 2.0], [0.0, 1.0], 2.0),
])
def test_weighted_median(values, weights, expected):
    assert weightedMedian(values, weights) == expected

def test_weighted_median_needs_weight():
    with pytest.raises(TvInputError):
        weightedMedian([1.0, 2.0], [0.0, 0.0])

def test_solvers_agree_with_tree_solver(rng):
    for n in (1, 2, 5, 17, 60):
        instance = randomChainInstance(rng, n)
        reference = solve_convex_tree(instance.Tree, instance.unaries, instance.convexWeights())

        median = solve_hochbaum(instance.unaries, instance.lower, instance.upper)
        fast = solve_fast(instance.unaries, instance.lower, instance.upper)

        assert _energy(instance, median) == pytest.approx(reference.energy, abs = 1e-9)
        assert _energy(instance, fast) == pytest.approx(reference.energy, abs = 1e-9)

@pytest.mark.parametrize("stride", [1, 2, 3, 7, 100])
def test_fast_solver_strides(rng, stride):
    instance = randomChainInstance(rng, 40)
    reference = solve_convex_tree(instance.Tree, instance.unaries, instance.convexWeights()).energy

    assert _energy(instance, solve_fast(instance.unaries, instance.lower, instance.upper, stride = stride)) == pytest.approx(reference, abs = 1e-9)

def test_strong_coupling_gives_the_median(rng):
    centers = rng.uniform(-5.0, 5.0, size = 7)
    unaries = [UnaryPwl.absolute(float(center)) for center in centers]
    weights = np.full(6, 100.0)

    expected = np.full(7, np.median(centers))
    np.testing.assert_allclose(solve_hochbaum(unaries, -weights, weights), expected)
    np.testing.assert_allclose(solve_fast(unaries, -weights, weights, stride = 3), expected)

def test_solutions_lie_on_breakpoints(rng):
    instance = randomChainInstance(rng, 30)
    breakpoints = set(instance.breakpoints().tolist())

    assert set(solve_hochbaum(instance.unaries, instance.lower, instance.upper).tolist()) <= breakpoints
    assert set(solve_fast(instance.unaries, instance.lower, instance.upper).tolist()) <= breakpoints

def test_window_clips_the_solution():
    unaries = [UnaryPwl.absolute(0.0), UnaryPwl.absolute(5.0)]

    x = solve_hochbaum(unaries, [-0.1], [0.1], window = (1.0, 2.0))

    np.testing.assert_allclose(x, [1.0, 2.0])

def test_window_matches_clipped_solution(rng):
    for _ in range(10):
        instance = randomChainInstance(rng, 25)
        free = solve_hochbaum(instance.unaries, instance.lower, instance.upper)

        boxed = solve_hochbaum(instance.unaries, instance.lower, instance.upper, window = (-0.5, 0.7))

        np.testing.assert_allclose(boxed, np.clip(free, -0.5, 0.7))

def test_window_bounds_an_unbounded_unary():
    increasing = UnaryPwl((1.0,), (), (0.0, 0.0))

    np.testing.assert_allclose(solve_hochbaum([increasing], [], [], window = (0.0, 1.0)), [0.0])
    with pytest.raises(TvInputError):
        solve_hochbaum([increasing], [], [], window = (1.0, 1.0))

def test_unbounded_chain_raises():
    increasing = UnaryPwl((1.0,), (), (0.0, 0.0))

    with pytest.raises(UnboundedEnergyError):
        solve_hochbaum([increasing], [], [])
    with pytest.raises(UnboundedEnergyError):
        solve_fast([increasing], [], [])

def test_invalid_weights():
    unaries = [UnaryPwl.absolute(0.0), UnaryPwl.absolute(1.0)]

    with pytest.raises(TvInputError):
        solve_hochbaum(unaries, [1.0], [0.0])
    with pytest.raises(TvInputError):
        solve_fast(unaries, [], [])

def test_nonconvex_unary_is_rejected():
    unaries = [UnaryPwl((1.0, -1.0), (0.0,), (0.0, 0.0)), UnaryPwl.absolute(1.0)]

    with pytest.raises(TvInputError):
        solve_hochbaum(unaries, [-1.0], [1.0])

def test_recursion_statistics(rng):
    instance = randomChainInstance(rng, 50)
    statistics = DncStatistics()

    solve_hochbaum(instance.unaries, instance.lower, instance.upper, statistics = statistics)

    assert statistics.Frames
    assert statistics.MaxDepth >= 1
    for frame in statistics.Frames:
        assert 2 * frame.atMostPivot >= frame.size
        assert 2 * frame.atLeastPivot >= frame.size
        assert frame.parentWindow[0] <= frame.window[0] <= frame.window[1] <= frame.parentWindow[1]

    fastStatistics = DncStatistics()
    solve_fast(instance.unaries, instance.lower, instance.upper, stride = 4, statistics = fastStatistics)
    assert fastStatistics.Frames
    for frame in fastStatistics.Frames:
        assert frame.parentWindow[0] <= frame.window[0] <= frame.window[1] <= frame.parentWindow[1]

@pytest.mark.parametrize("n", [10, 100, 400])
def test_pivots_split_off_at_most_three_quarters(rng, n):
    for _ in range(10):
        instance = randomChainInstance(rng, n)
        frames = list()
        for solve in (lambda statistics: solve_hochbaum(instance.unaries, instance.lower, instance.upper, statistics = statistics),
                lambda statistics: solve_fast(instance.unaries, instance.lower, instance.upper, statistics = statistics),
                lambda statistics: solve_fast(instance.unaries, instance.lower, instance.upper, stride = 2, statistics = statistics)):
            statistics = DncStatistics()
            solve(statistics)
            frames.extend(statistics.Frames)

        assert frames
        for frame in frames:
            assert 4 * frame.largestChild <= 3 * frame.size
