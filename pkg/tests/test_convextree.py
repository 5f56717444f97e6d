import math

import numpy as np
import pytest

from tvtree.convextree import ConvexPwq, SlopeEventQueue, solve_convex_tree, forwardPass, parsePwqLine, formatPwqLine
from tvtree.depq import IntervalHeap, PairingDepq
from tvtree.oracle import SortFixture, discrete_viterbi, exhaustive_grid, randomChainInstance, randomTreeInstance
from tvtree.pwl import UnaryPwl
from tvtree.tree import Tree, ConvexWeights, convexEnergy
from tvtree.tools import ConvexityError, FileFormatError, TvInputError, UnboundedEnergyError

def test_pwq_validation():
    with pytest.raises(ConvexityError):
        ConvexPwq((), (-1.0,), (0.0,))
    with pytest.raises(ConvexityError):
        ConvexPwq((0.0,), (0.0, 0.0), (1.0, 0.0))
    with pytest.raises(TvInputError):
        ConvexPwq((1.0, 0.0), (0.0, 0.0, 0.0), (0.0, 1.0, 2.0))
    with pytest.raises(TvInputError):
        ConvexPwq((0.0,), (1.0,), (0.0,))

@pytest.mark.parametrize("z", [-2.5, -1.0, 0.0, 0.3, 1.0, 3.0])
def test_l1_tether_values(z):
    f, xi, tau, weight = 1.0, 0.0, 0.5, 2.0
    unary = ConvexPwq.l1Tether(f, xi, tau, weight)

    assert unary.evaluate(z) == pytest.approx(weight * abs(z - f) + (z - xi) ** 2 / (2 * tau))

def test_quadratic_value_and_derivative():
    unary = ConvexPwq.quadratic(2.0, 1.0)

    assert unary.evaluate(3.0) == pytest.approx(6.0)
    assert unary.evaluate(-1.0) == pytest.approx(2.0)
    assert unary.derivativeAt(0.5) == pytest.approx(0.0)

def test_derivative_is_left_continuous():
    unary = ConvexPwq.l1Tether(1.0, 0.0, 0.5, 2.0)

    assert unary.derivativeAt(1.0) == pytest.approx(0.0)
    assert unary.derivativeAt(1.0 + 1e-12) == pytest.approx(4.0)

def test_from_unary_matches_pwl_values():
    unary = UnaryPwl((-2.0, 0.5, 3.0), (-1.0, 2.0), (-1.0, 0.25))
    pwq = ConvexPwq.fromUnary(unary)

    for x in (-3.0, -1.0, 0.0, 2.0, 4.5):
        assert pwq.evaluate(x) == pytest.approx(unary.evaluate(x))

def test_from_unary_rejects_nonconvex():
    with pytest.raises(ConvexityError):
        ConvexPwq.fromUnary(UnaryPwl((1.0, -1.0), (0.0,), (0.0, 0.0)))

def test_pwq_line_format():
    unary = parsePwqLine("1 2 -2 1 2 2 1 1")
    expected = ConvexPwq.l1Tether(1.0, 0.0, 0.5, 2.0)

    assert unary.Breaks == expected.Breaks
    assert unary.A == expected.A
    assert unary.B == expected.B
    assert unary.Anchor == expected.Anchor

    again = parsePwqLine(formatPwqLine(unary))
    assert (again.Breaks, again.A, again.B, again.Anchor) == (unary.Breaks, unary.A, unary.B, unary.Anchor)

@pytest.mark.parametrize("line", ["", "x", "1 2 -2", "0 1 0 0", "1 0 1 0.5 0 0 0 0"])
def test_pwq_line_errors(line):
    with pytest.raises(FileFormatError):
        parsePwqLine(line, 7)

def test_message_clip_intervals():
    message = SlopeEventQueue(PairingDepq())
    message.accumulateUnary(ConvexPwq.fromUnary(UnaryPwl.absolute(0.0)))
    message.accumulateUnary(ConvexPwq.fromUnary(UnaryPwl.absolute(2.0)))

    # derivative -2 below 0, 0 on (0, 2], 2 above
    assert message.derivativeAt(1.0) == pytest.approx(0.0)
    assert message.clip(-1.0, 1.0) == (0.0, 2.0)
    assert message.derivativeAt(-5.0) == pytest.approx(-1.0)
    assert message.derivativeAt(5.0) == pytest.approx(1.0)

def test_clip_rejects_crossed_weights():
    message = SlopeEventQueue(IntervalHeap())
    message.accumulateUnary(ConvexPwq.quadratic(1.0, 0.0))

    with pytest.raises(TvInputError):
        message.clip(1.0, -1.0)

def test_asymmetric_weights():
    tree = Tree.chain(2)

    cheapUp = ConvexWeights.chain([-2.0], [0.5])
    result = solve_convex_tree(tree, [UnaryPwl.absolute(0.0), UnaryPwl.absolute(1.0)], cheapUp)
    np.testing.assert_allclose(result.x, [0.0, 1.0])
    assert result.energy == pytest.approx(0.5)

    cheapDown = ConvexWeights.chain([-0.5], [2.0])
    result = solve_convex_tree(tree, [UnaryPwl.absolute(1.0), UnaryPwl.absolute(0.0)], cheapDown)
    np.testing.assert_allclose(result.x, [1.0, 0.0])
    assert result.energy == pytest.approx(0.5)

def test_unbounded_energy_raises():
    linear = UnaryPwl((1.0,), (), (0.0, 0.0))

    with pytest.raises(UnboundedEnergyError):
        solve_convex_tree(Tree.chain(1), [linear], ConvexWeights([0.0], [0.0]))

def test_chain_matches_exhaustive_search(rng):
    for _ in range(10):
        instance = randomChainInstance(rng, 4, maxBreaks = 2, integer = True)
        tree, weights = instance.Tree, instance.convexWeights()

        result = solve_convex_tree(tree, instance.unaries, weights)
        _, bruteForce = exhaustive_grid(tree, instance.unaries, weights, instance.breakpoints())

        assert result.energy == pytest.approx(bruteForce, abs = 1e-9)
        assert set(result.x.tolist()) <= set(instance.breakpoints().tolist())

def test_tree_matches_exhaustive_search(rng):
    for _ in range(10):
        instance = randomTreeInstance(rng, 4, truncated = False, breakCount = 2)

        result = solve_convex_tree(instance.tree, instance.unaries, instance.weights)
        _, bruteForce = exhaustive_grid(instance.tree, instance.unaries, instance.weights, instance.breakpoints())

        assert result.energy == pytest.approx(bruteForce, abs = 1e-9)

def test_queue_implementations_agree(rng):
    instance = randomChainInstance(rng, 200)
    tree, weights = instance.Tree, instance.convexWeights()

    heap = solve_convex_tree(tree, instance.unaries, weights, queueFactory = IntervalHeap)
    pairing = solve_convex_tree(tree, instance.unaries, weights, queueFactory = PairingDepq)

    np.testing.assert_allclose(heap.x, pairing.x)
    assert heap.counters.Inserts > 0

def test_tv_l1_tether_against_label_grid(rng):
    n = 12
    f = rng.uniform(0.0, 1.0, size = n)
    xi = f + rng.normal(scale = 0.1, size = n)
    unaries = [ConvexPwq.l1Tether(f[i], xi[i], 0.5, 0.3) for i in range(n)]
    tree, weights = Tree.chain(n), ConvexWeights.chain(np.full(n - 1, -0.2), np.full(n - 1, 0.2))

    result = solve_convex_tree(tree, unaries, weights)
    _, gridEnergy = discrete_viterbi(tree, unaries, weights, np.linspace(-0.5, 1.5, 2001))

    assert result.energy == pytest.approx(convexEnergy(tree, unaries, weights, result.x))
    assert result.energy <= gridEnergy + 1e-9
    assert gridEnergy - result.energy < 0.05

def test_forward_pass_sorts():
    inputs = [3.0, 1.0, 7.5, 2.25, 5.0]

    np.testing.assert_allclose(SortFixture(inputs).sorted(), sorted(inputs))

def test_forward_pass_root_entries_are_nan(rng):
    instance = randomChainInstance(rng, 6)
    lower, upper = forwardPass(instance.Tree, instance.unaries, instance.convexWeights())

    assert math.isnan(lower[-1]) and math.isnan(upper[-1])
    assert np.all(lower[:-1] <= upper[:-1])
