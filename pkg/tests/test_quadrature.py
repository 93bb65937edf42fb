import math

import numpy as np
import pytest

from curlstokes.quadrature import edge_rule, triangle_rule


def tri_monomial_integral(a: int, b: int) -> float:
    # exact integral of x^a y^b over the reference triangle
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


@pytest.mark.parametrize("degree", range(1, 11))
def test_triangle_exactness(degree):
    rule = triangle_rule(degree)
    x = rule.points[:, 1]
    y = rule.points[:, 2]
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            got = float(rule.weights @ (x ** a * y ** b))
            exact = tri_monomial_integral(a, b)
            assert abs(got - exact) <= 1e-13 * exact


@pytest.mark.parametrize("degree", range(1, 13))
def test_edge_exactness(degree):
    rule = edge_rule(degree)
    for k in range(degree + 1):
        got = float(rule.weights @ rule.points ** k)
        exact = 1.0 / (k + 1)
        assert abs(got - exact) <= 1e-13 * exact


def test_frozen_values():
    r2 = triangle_rule(2)
    assert float(r2.weights @ (r2.points[:, 1] * r2.points[:, 2])) == pytest.approx(1 / 24, rel=1e-13)
    r4 = triangle_rule(4)
    assert float(r4.weights @ r4.points[:, 1] ** 4) == pytest.approx(1 / 30, rel=1e-13)
    r1 = triangle_rule(1)
    assert float(r1.weights.sum()) == pytest.approx(0.5, abs=1e-14)
    e1 = edge_rule(1)
    assert float(e1.weights @ e1.points) == pytest.approx(0.5, rel=1e-13)
    e3 = edge_rule(3)
    assert float(e3.weights @ e3.points ** 3) == pytest.approx(0.25, rel=1e-13)
    e5 = edge_rule(5)
    assert float(e5.weights @ e5.points ** 5) == pytest.approx(1 / 6, rel=1e-13)


@pytest.mark.parametrize("degree", range(1, 11))
def test_triangle_rule_structure(degree):
    rule = triangle_rule(degree)
    assert (rule.weights > 0).all()
    assert abs(rule.weights.sum() - 0.5) <= 1e-14
    assert rule.points.min() >= 0.0
    assert rule.points.max() <= 1.0
    assert np.allclose(rule.points.sum(axis=1), 1.0, atol=1e-14)


@pytest.mark.parametrize("degree", range(1, 13))
def test_edge_rule_structure(degree):
    rule = edge_rule(degree)
    assert (rule.weights > 0).all()
    assert abs(rule.weights.sum() - 1.0) <= 1e-14
    assert rule.points.min() > 0.0 and rule.points.max() < 1.0


@pytest.mark.parametrize("degree", [0, 11, -3])
def test_triangle_degree_range(degree):
    with pytest.raises(ValueError):
        triangle_rule(degree)


@pytest.mark.parametrize("degree", [0, 13])
def test_edge_degree_range(degree):
    with pytest.raises(ValueError):
        edge_rule(degree)
