import numpy as np
import pytest

from tvtree.convextree import ConvexPwq, solve_convex_tree
from tvtree.quadchain import ClipChain, solve_quad_chain, quadChainEnergy, chainCertificate
from tvtree.tree import Tree, ConvexWeights
from tvtree.tools import TvInputError

def randomInstance(rng, n):
    a = rng.uniform(0.5, 2.0, size = n)
    b = rng.normal(size = n)
    upper = rng.uniform(0.0, 1.0, size = n - 1)
    lower = np.where(rng.random(n - 1) < 0.5, -upper, -rng.uniform(0.0, 1.0, size = n - 1))
    return a, b, lower, upper

def test_two_nodes_fuse():
    x = solve_quad_chain([1.0, 1.0], [0.0, 2.0], [-1.0], [1.0])

    np.testing.assert_allclose(x, [1.0, 1.0], atol = 1e-10)

def test_single_node_is_the_unconstrained_minimizer():
    np.testing.assert_allclose(solve_quad_chain([2.0], [3.0], [], []), [1.5])

def test_zero_weights_decouple(rng):
    a, b, _, _ = randomInstance(rng, 20)

    np.testing.assert_allclose(solve_quad_chain(a, b, np.zeros(19), np.zeros(19)), b / a, atol = 1e-12)

def test_strong_weights_give_the_weighted_mean(rng):
    a, b, _, _ = randomInstance(rng, 30)

    x = solve_quad_chain(a, b, np.full(29, -1e3), np.full(29, 1e3))

    np.testing.assert_allclose(x, np.full(30, b.sum() / a.sum()), atol = 1e-9)

def test_solution_satisfies_the_subgradient_conditions(rng):
    a, b, lower, upper = randomInstance(rng, 500)

    x = solve_quad_chain(a, b, lower, upper)

    assert chainCertificate(a, b, lower, upper, x).violation < 1e-9

def test_agrees_with_the_piecewise_quadratic_tree_solver(rng):
    n = 200
    a, b, lower, upper = randomInstance(rng, n)
    unaries = [ConvexPwq.quadratic(ai, bi) for ai, bi in zip(a, b)]

    reference = solve_convex_tree(Tree.chain(n), unaries, ConvexWeights.chain(lower, upper))
    x = solve_quad_chain(a, b, lower, upper)

    np.testing.assert_allclose(x, reference.x, atol = 1e-8)
    assert quadChainEnergy(a, b, lower, upper, x) == pytest.approx(reference.energy, abs = 1e-8)

def test_compact_mode_and_workspace_reuse(rng):
    workspace = ClipChain(8)
    for n in (5, 40, 12):
        a, b, lower, upper = randomInstance(rng, n)
        expected = solve_quad_chain(a, b, lower, upper)

        np.testing.assert_array_equal(solve_quad_chain(a, b, lower, upper, workspace = workspace), expected)
        np.testing.assert_array_equal(solve_quad_chain(a, b, lower, upper, compact = False), expected)

    assert workspace.Capacity == 40

def test_breakpoint_accounting(rng):
    n = 100
    a, b, lower, upper = randomInstance(rng, n)
    workspace = ClipChain(n)

    solve_quad_chain(a, b, lower, upper, workspace = workspace)

    assert workspace.Statistics.Appended == 2 * n
    assert workspace.Statistics.Removed <= workspace.Statistics.Appended

@pytest.mark.parametrize("n", [10 ** 3, 10 ** 6])
def test_peak_memory_stays_within_six_floats_per_node(rng, n):
    a, b, lower, upper = randomInstance(rng, n)
    workspace = ClipChain(n)

    solve_quad_chain(a, b, lower, upper, workspace = workspace)

    assert workspace.Statistics.PeakFloats <= 6 * n + 16

@pytest.mark.parametrize("scale", [0.01, 1.0, 100.0])
def test_separate_lower_bounds_cost_one_float_per_node(rng, scale):
    n = 500
    a, b, lower, upper = randomInstance(rng, n)
    workspace = ClipChain(n)

    solve_quad_chain(a, b, scale * lower, scale * upper, workspace = workspace)
    compact = workspace.Statistics.PeakFloats
    solve_quad_chain(a, b, scale * lower, scale * upper, workspace = workspace, compact = False)

    assert compact <= 6 * n + 16
    assert workspace.Statistics.PeakFloats == compact + n

def test_invalid_input():
    with pytest.raises(TvInputError):
        solve_quad_chain([1.0, 0.0], [0.0, 0.0], [-1.0], [1.0])
    with pytest.raises(TvInputError):
        solve_quad_chain([1.0, 1.0], [0.0, 0.0], [1.0], [-1.0])
    with pytest.raises(TvInputError):
        solve_quad_chain([1.0, 1.0], [0.0], [-1.0], [1.0])
    with pytest.raises(TvInputError):
        solve_quad_chain([1.0, 1.0, 1.0], [0.0, 0.0, 0.0], [-1.0], [1.0])
