import math

import numpy as np
import pytest

from tvtree.pwl import PwlFunction, UnaryPwl, sum_many, parseUnaryLine, formatUnaryLine, unariesFromLines
from tvtree.tools import FileFormatError, TvInputError, UnboundedEnergyError

def randomFunction(rng, breakCount = 5) -> PwlFunction:
    breaks = np.sort(rng.uniform(-3.0, 3.0, size = breakCount))
    slopes = rng.normal(size = breakCount + 1)
    return PwlFunction(slopes, breaks, (float(rng.uniform(-3.0, 3.0)), float(rng.normal())))

def integrate(function: PwlFunction, x: float) -> float:
    """ Value at `x` by summing the slopes segment by segment from the anchor. """
    x0, value = function.Anchor
    points = sorted(set([x0, x] + [lam for lam in function.Breaks if min(x0, x) < lam < max(x0, x)]))
    total = 0.0
    for left, right in zip(points, points[1:]):
        middle = 0.5 * (left + right)
        k = sum(1 for lam in function.Breaks if lam < middle)
        total += function.Slopes[k] * (right - left)
    return value + total if x >= x0 else value - total

def test_evaluate_absolute_value():
    f = PwlFunction((-1.0, 2.0), (0.0,), (0.0, 1.0))

    assert f.evaluate(-2.0) == pytest.approx(3.0)
    assert f.evaluate(1.0) == pytest.approx(3.0)
    assert f.evaluate(0.0) == pytest.approx(1.0)

def test_evaluate_matches_segment_integration(rng):
    f = randomFunction(rng)
    xs = np.linspace(-5.0, 5.0, 100)

    expected = [integrate(f, x) for x in xs]

    np.testing.assert_allclose([f.evaluate(x) for x in xs], expected, atol = 1e-9)
    np.testing.assert_allclose(f.evaluateMany(xs), expected, atol = 1e-9)

def test_evaluate_without_anchor_fails():
    with pytest.raises(TvInputError):
        PwlFunction((1.0,)).evaluate(0.0)

def test_add_linear_tilts_every_slope(rng):
    f = randomFunction(rng)
    g = f.addLinear(0.75)
    xs = np.linspace(-4.0, 4.0, 41)

    assert g.Breaks == f.Breaks
    np.testing.assert_allclose(g.Slopes, np.asarray(f.Slopes) + 0.75)
    np.testing.assert_allclose(g.evaluateMany(xs), f.evaluateMany(xs) + 0.75 * xs, atol = 1e-9)

def test_reverse_mirrors_the_argument(rng):
    f = randomFunction(rng)
    g = f.reverse()
    xs = np.linspace(-4.0, 4.0, 41)

    np.testing.assert_allclose(g.evaluateMany(xs), f.evaluateMany(-xs), atol = 1e-9)
    assert g.reverse() == f

def test_sum_many_matches_pairwise_sum(rng):
    functions = [randomFunction(rng, int(rng.integers(0, 4))) for _ in range(8)]
    xs = np.linspace(-5.0, 5.0, 201)

    total = sum_many(functions)

    assert total.BreakCount == sum(function.BreakCount for function in functions)
    np.testing.assert_allclose(total.evaluateMany(xs), np.sum([function.evaluateMany(xs) for function in functions], axis = 0), atol = 1e-9)

def test_sum_many_credits_each_break_to_its_function():
    f = UnaryPwl.absolute(0.0)
    g = UnaryPwl((0.0, 3.0, 5.0), (1.0, 2.0), (0.0, 0.0))
    xs = np.linspace(-3.0, 4.0, 29)

    total = sum_many([f, g])

    assert total.Breaks == (0.0, 1.0, 2.0)
    assert total.Slopes == (-1.0, 1.0, 4.0, 6.0)
    np.testing.assert_allclose(total.evaluateMany(xs), f.evaluateMany(xs) + g.evaluateMany(xs), atol = 1e-12)

def test_sum_many_of_nothing_fails():
    with pytest.raises(TvInputError):
        sum_many([])

def test_minimum_prefers_the_lowest_breakpoint():
    f = PwlFunction((-1.0, 0.0, 1.0), (0.0, 2.0), (1.0, 0.0))

    assert f.minimum() == (0.0, 0.0)

def test_minimum_of_unbounded_function_fails():
    with pytest.raises(UnboundedEnergyError):
        PwlFunction((-1.0, -0.5), (0.0,), (0.0, 0.0)).minimum()

def test_normalize_merges_coincident_and_collinear_breaks():
    f = PwlFunction((-1.0, 0.0, 1.0, 1.0), (0.0, 0.0, 2.0), (0.0, 0.0))

    normalized = f.normalize()

    assert normalized.Breaks == (0.0,)
    assert normalized.Slopes == (-1.0, 1.0)

def test_invalid_functions_are_rejected():
    with pytest.raises(TvInputError):
        PwlFunction((0.0, 1.0, 2.0), (1.0, 0.0))
    with pytest.raises(TvInputError):
        PwlFunction((0.0, 1.0), (0.0, 1.0))
    with pytest.raises(TvInputError):
        PwlFunction((math.inf,))
    with pytest.raises(TvInputError):
        UnaryPwl((0.0, 1.0), (0.0,))

def test_unary_bounded_below():
    assert UnaryPwl.absolute(1.0).IsBoundedBelow
    assert not UnaryPwl((1.0, 2.0), (0.0,), (0.0, 0.0)).IsBoundedBelow

def test_from_points_interpolates():
    f = PwlFunction.fromPoints([0.0, 1.0, 3.0], [1.0, 0.0, 2.0], -2.0, 3.0)

    assert f.Breaks == (0.0, 1.0, 3.0)
    assert f.Slopes == (-2.0, -1.0, 1.0, 3.0)
    assert f.evaluate(4.0) == pytest.approx(5.0)

def test_unary_line_format():
    unary = parseUnaryLine("2 -1 0 0.5 1 2 0 3")

    assert unary.Slopes == (-1.0, 0.5, 2.0)
    assert unary.Breaks == (0.0, 1.0)
    assert unary.Anchor == (0.0, 3.0)
    assert parseUnaryLine(formatUnaryLine(unary)) == unary

def test_unary_lines_skip_comments_and_report_line_numbers():
    assert len(unariesFromLines(["# unaries", "1 -1 0 1 0 0", "", "0 0 0 1"])) == 2

    with pytest.raises(FileFormatError, match = "Line '2'"):
        unariesFromLines(["1 -1 0 1 0 0", "1 -1 0 1 0"])
