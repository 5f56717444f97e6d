import math

import numpy as np
import pytest

from tvtree.convextree import solve_convex_tree
from tvtree.nonconvex import PiMapping, NonconvexSolver, minconv_f1, minconv_f2, minconv_f3, edge_minconv, solve_nonconvex
from tvtree.oracle import GridOracleSpec, discrete_viterbi, minConvolutionOracle, randomChainInstance, randomNonconvexUnary, randomTreeInstance
from tvtree.pwl import PwlFunction, UnaryPwl
from tvtree.tree import Tree, ConvexWeights, TruncatedWeights, truncatedEnergy
from tvtree.tools import BreakpointBudgetError, TvInputError

YS = np.linspace(-4.0, 4.0, 161)

def _oneSided(h, w, ys, below: bool):
    """ `min over x <= y` (or `x >= y`) of `h(x) + w |y - x|` over the breakpoints of `h` and `y`. """
    values = list()
    for y in ys:
        xs = np.append(np.asarray(h.Breaks), y)
        xs = xs[xs <= y] if below else xs[xs >= y]
        values.append(float(np.min(h.evaluateMany(xs) + w * np.abs(y - xs))))
    return np.asarray(values)

def test_f1_on_absolute_value():
    message, mapping = minconv_f1(UnaryPwl.absolute(0.0), 0.5)

    assert message.Slopes == (-1.0, 0.5)
    assert message.Breaks == (0.0,)
    assert mapping.query(3.0) == 0.0
    assert mapping.query(-1.0) == -1.0

def test_f1_rejects_negative_weight():
    with pytest.raises(TvInputError):
        minconv_f1(UnaryPwl.absolute(0.0), -1.0)

@pytest.mark.parametrize("w", [0.0, 0.3, 1.0, 5.0])
def test_one_sided_min_convolutions(rng, w):
    for _ in range(10):
        h = randomNonconvexUnary(rng, 4)

        first, _ = minconv_f1(h, w)
        second, _ = minconv_f2(h, w)

        np.testing.assert_allclose(first.evaluateMany(YS), _oneSided(h, w, YS, True), atol = 1e-9)
        np.testing.assert_allclose(second.evaluateMany(YS), _oneSided(h, w, YS, False), atol = 1e-9)
        assert first.BreakCount <= h.BreakCount
        assert second.BreakCount <= h.BreakCount

def test_f3_truncates_at_the_minimum(rng):
    for _ in range(10):
        h = randomNonconvexUnary(rng, 4)
        C = float(rng.uniform(0.1, 2.0))

        message, mapping = minconv_f3(h, C)

        expected = np.minimum(h.evaluateMany(YS), h.minimum()[1] + C)
        np.testing.assert_allclose(message.evaluateMany(YS), expected, atol = 1e-9)
        assert message.BreakCount <= 2 * h.BreakCount + 1
        assert mapping.Variant == PiMapping.F3

@pytest.mark.parametrize("truncated", [False, True])
def test_edge_min_convolution_matches_oracle(rng, truncated):
    for _ in range(20):
        h = randomNonconvexUnary(rng, 5)
        w = float(rng.uniform(0.0, 3.0))
        C = float(rng.uniform(0.2, 3.0)) if truncated else math.inf

        message, mapping = edge_minconv(h, w, C)

        np.testing.assert_allclose(message.evaluateMany(YS), minConvolutionOracle(h, w, C, YS), atol = 1e-9)
        for y in YS[::8]:
            x = mapping.query(float(y))
            assert h.evaluate(x) + min(w * abs(y - x), C) == pytest.approx(message.evaluate(float(y)), abs = 1e-9)

@pytest.mark.parametrize("variant, expected", [
    (PiMapping.F1, {-1.0: -1.0, 0.0: 0.0, 1.0: 0.0, 2.0: 0.0, 2.5: 2.5}),
    (PiMapping.F2, {-1.0: -1.0, 0.0: 0.0, 1.0: 2.0, 2.0: 2.0, 2.5: 2.5}),
    (PiMapping.F3, {-1.0: -1.0, 0.0: 0.0, 1.0: 5.0, 2.0: 2.0, 2.5: 2.5}),
])
def test_mapping_variants(variant, expected):
    mapping = PiMapping(variant, [0.0], [2.0], 5.0)

    assert {y: mapping.query(y) for y in expected} == expected

def test_mapping_rejects_unknown_variant():
    with pytest.raises(TvInputError):
        PiMapping("f4")

def test_empty_mapping_is_identity():
    assert PiMapping(PiMapping.F1).query(1.25) == 1.25

def test_solver_beats_label_grid(rng):
    for _ in range(5):
        instance = randomTreeInstance(rng, 8, truncated = True)
        result = solve_nonconvex(instance.tree, instance.unaries, instance.weights)

        breakpoints = instance.breakpoints()
        labels = GridOracleSpec.covering(breakpoints, 1e-2).labels(breakpoints)
        _, gridEnergy = discrete_viterbi(instance.tree, instance.unaries, instance.weights, labels)

        assert result.energy <= gridEnergy + 1e-9
        assert result.energy == pytest.approx(truncatedEnergy(instance.tree, instance.unaries, instance.weights, result.x))
        assert not result.statistics.violations()

def test_solution_energy_equals_the_root_message_minimum(rng):
    for truncated in (True, False):
        for n in (2, 7, 12):
            instance = randomTreeInstance(rng, n, truncated = truncated)
            weights = instance.weights if truncated else TruncatedWeights(instance.weights.Upper)

            result = solve_nonconvex(instance.tree, instance.unaries, weights)

            assert abs(result.energy - result.rootValue) <= 1e-9

def test_untruncated_convex_chain_matches_convex_solver(rng):
    instance = randomChainInstance(rng, 30)
    symmetric = np.append(instance.upper, 0.0)
    convex = solve_convex_tree(instance.Tree, instance.unaries, ConvexWeights.symmetric(symmetric))

    result = solve_nonconvex(instance.Tree, instance.unaries, TruncatedWeights(symmetric))

    assert result.energy == pytest.approx(convex.energy, abs = 1e-9)

def test_budget_is_enforced(rng):
    instance = randomTreeInstance(rng, 10, truncated = True)

    with pytest.raises(BreakpointBudgetError):
        NonconvexSolver(breakpointBudget = 5).solve(instance.tree, instance.unaries, instance.weights)

def test_solver_keeps_statistics(rng):
    instance = randomTreeInstance(rng, 10, truncated = True)
    solver = NonconvexSolver()

    solver.solve(instance.tree, instance.unaries, instance.weights)

    assert len(solver.Statistics.Edges) == 9
    assert solver.Statistics.TotalBreakpoints > 0
    assert solver.Statistics.MaxMessageSize <= solver.Statistics.TotalBreakpoints

def test_single_node_is_the_unary_minimum():
    unary = UnaryPwl((-1.0, 2.0, -0.5, 1.0), (-1.0, 0.0, 2.0), (-1.0, 0.0))

    result = solve_nonconvex(Tree.chain(1), [unary], TruncatedWeights([0.0]))

    assert result.x[0] == pytest.approx(unary.minimum()[0])
    assert result.energy == pytest.approx(unary.minimum()[1])

def test_unanchored_unary_is_rejected():
    with pytest.raises(TvInputError):
        solve_nonconvex(Tree.chain(1), [PwlFunction((-1.0, 1.0), (0.0,))], TruncatedWeights([0.0]))
