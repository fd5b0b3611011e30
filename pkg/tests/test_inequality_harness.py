"""Tests for the inequality checks on analytic cases and seeded corpora."""

from math import log
from typing import List

import numpy as np
import pytest

from coaglab.errors import CoagLabError, NegativeDensityError, UnsupportedOrderError
from coaglab.inequality_harness import (
    check_aizenman_bak,
    check_aizenman_bak_direct,
    check_hardy,
    check_linear_aizenman_bak,
    check_norm_equivalence,
    check_weighted_poincare,
    coarsen,
    exponential_equality_value,
    margin_summary,
    sweep,
    tolerance,
    worst_margin,
)
from coaglab.linear_analysis import build_corpus
from coaglab.types import Grid, GridFunction


def test_tolerance():
    assert tolerance(0.0, 0.0) == pytest.approx(1e-8)
    assert tolerance(1.0, -3.0) == pytest.approx(1e-8 + 4e-5)


def test_linear_aizenman_bak_equality(fine_grid: Grid):
    # h = (1 - y) e^{-y} has int h = 0, H = -y e^{-y} and both sides equal 4 at mu = 1
    h = GridFunction.from_function(fine_grid, lambda y: (1.0 - y) * np.exp(-y))
    case = check_linear_aizenman_bak(h, 1.0)
    assert case.name == "linear_aizenman_bak"
    assert case.lhs == pytest.approx(4.0, rel=1e-4)
    assert case.rhs == pytest.approx(4.0, rel=1e-4)
    with pytest.raises(CoagLabError):
        _ = check_linear_aizenman_bak(h, 0.0)


def test_hardy_on_exponential(fine_grid: Grid):
    h = GridFunction.from_function(fine_grid, lambda y: np.exp(-y))
    case = check_hardy(h, 0, 0.0)
    assert case.lhs == pytest.approx(0.5, rel=1e-4)
    assert case.rhs == pytest.approx(1.0, rel=1e-4)
    assert case.passed
    assert case.parameters == {"n": 0, "mu": 0.0}
    with pytest.raises(UnsupportedOrderError):
        _ = check_hardy(h, 3, 0.0)
    with pytest.raises(CoagLabError):
        _ = check_hardy(h, 0, -1.0)


def test_weighted_poincare_on_exponential(fine_grid: Grid):
    h = GridFunction.from_function(fine_grid, lambda y: np.exp(-y))
    case = check_weighted_poincare(h, 1.0)
    assert case.lhs == pytest.approx(1.0, rel=1e-4)
    assert case.rhs == pytest.approx(4.0, rel=1e-4)
    assert case.margin == pytest.approx(3.0, rel=1e-4)


def test_aizenman_bak_exponential_equality(positive_grid: Grid):
    for c, rate in ((3.0, 1.0), (1.0, 0.5), (0.5, 2.0)):
        f = GridFunction.from_function(positive_grid, lambda y, c=c, rate=rate: c * np.exp(-rate * y))
        case = check_aizenman_bak(f)
        expected = exponential_equality_value(c, rate)
        assert case.lhs == pytest.approx(expected, rel=1e-4)
        assert case.rhs == pytest.approx(expected, rel=1e-4)
    assert np.isnan(exponential_equality_value(0.0, 1.0))


def test_aizenman_bak_strict_on_positive_profiles(positive_corpus: List[GridFunction]):
    for f in positive_corpus:
        assert check_aizenman_bak(f).passed


def test_aizenman_bak_direct_matches_fast():
    grid = Grid(n_points=128, y_max=40.0)
    f = GridFunction.from_function(grid, lambda y: 2.0 * (1.0 + np.sin(y) ** 2) * np.exp(-y))
    fast = check_aizenman_bak(f)
    direct = check_aizenman_bak_direct(f)
    assert direct.lhs == pytest.approx(fast.lhs, rel=1e-9)
    assert direct.rhs == pytest.approx(fast.rhs, rel=1e-9)
    assert direct.parameters == {"n_points": 128}


def test_aizenman_bak_rejects_nonpositive(grid: Grid):
    f = GridFunction.from_function(grid, lambda y: np.exp(-y) - 0.5)
    with pytest.raises(NegativeDensityError):
        _ = check_aizenman_bak(f)
    with pytest.raises(NegativeDensityError):
        _ = check_aizenman_bak_direct(f)


def test_coarsen(grid: Grid):
    h = GridFunction.from_function(grid, lambda y: np.exp(-y))
    coarse = coarsen(h)
    assert coarse.grid.n_points == grid.n_points // 2
    assert np.allclose(coarse.grid.nodes, grid.nodes[1::2])
    assert np.allclose(coarse.values, h.values[1::2])


def test_norm_equivalence():
    grid = Grid(n_points=4096, y_max=40.0)
    h = GridFunction.from_function(grid, lambda y: y**2 * np.exp(-y))
    case = check_norm_equivalence(h, 1, (2, 0, 0, 2))
    assert case.passed
    assert case.parameters["K_fit"] > 0.0
    with pytest.raises(UnsupportedOrderError):
        _ = check_norm_equivalence(h, 3, (2, 0, 0, 2))
    with pytest.raises(CoagLabError):
        _ = check_norm_equivalence(h, 1, (1, 0, 0, 2))


def test_sweep(positive_corpus: List[GridFunction]):
    corpus = build_corpus(Grid(n_points=512, y_max=30.0), seed=0, size=2)
    positive = positive_corpus[:2]
    cases = sweep(corpus, positive, [0.5, 1.0], 2.0)
    # 2 positive + 3 exponential + 2 members * (2 weights * 6 + 3 partitions)
    assert len(cases) == 35
    names = {case.name for case in cases}
    assert names == {
        "aizenman_bak",
        "aizenman_bak_equality",
        "linear_aizenman_bak",
        "hardy",
        "weighted_poincare",
        "bilinear_bound",
        "norm_equivalence",
    }
    strict = ("aizenman_bak", "hardy", "weighted_poincare")
    assert all(case.passed for case in cases if case.name in strict)
    assert worst_margin(cases, "missing") == float("inf")
    assert worst_margin(cases, "hardy") == min(case.margin for case in cases if case.name == "hardy")
    summary = margin_summary(cases)
    assert len(summary) == len(names)
    assert summary[0].startswith("aizenman_bak: worst margin")
    for case in (case for case in cases if case.name == "aizenman_bak_equality"):
        assert case.lhs == pytest.approx(case.parameters["exact"], rel=1e-3)

    threaded = sweep(corpus, positive, [0.5, 1.0], 2.0, jobs=2)
    assert [case.margin for case in threaded] == [case.margin for case in cases]
    assert [case.parameters for case in threaded] == [case.parameters for case in cases]


def test_exponential_equality_value():
    assert exponential_equality_value(1.0, 1.0) == pytest.approx(-2.0)
    assert exponential_equality_value(np.e, 2.0) == pytest.approx(-1.0 / 4.0)
    assert exponential_equality_value(2.0, 1.0) == pytest.approx(4.0 * (log(2.0) - 2.0))
