import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avibasis.densepoly import (
    DensePolynomial,
    coeff_dot,
    coefficient_vector,
    finite_diff_gradient,
    graded_monomials,
    monomial_count,
)

X = DensePolynomial.variable(2, 0)
Y = DensePolynomial.variable(2, 1)
CIRCLE = X * X + Y * Y - DensePolynomial.constant(2, 1)


def small_poly(num_vars=2, max_degree=3):
    exponent = st.tuples(*([st.integers(0, max_degree)] * num_vars)).filter(
        lambda e: sum(e) <= max_degree
    )
    return st.dictionaries(exponent, st.integers(-5, 5), max_size=4).map(
        lambda terms: DensePolynomial(num_vars, terms)
    )


class TestArithmetic:
    def test_product_xy(self):
        assert (X * Y).terms == {(1, 1): 1}

    def test_difference_of_squares(self):
        assert ((X + Y) * (X - Y)).terms == {(2, 0): 1, (0, 2): -1}

    def test_circle_times_x(self):
        product = CIRCLE * X
        assert product.terms == {(3, 0): 1, (1, 2): 1, (1, 0): -1}
        rng = np.random.default_rng(5)
        for _ in range(5):
            p = rng.uniform(-2, 2, size=2)
            assert product(p) == pytest.approx(CIRCLE(p) * p[0], rel=1e-12, abs=1e-12)

    def test_num_vars_mismatch(self):
        with pytest.raises(ValueError):
            X + DensePolynomial.variable(3, 0)

    def test_zero_pruning(self):
        p = X - X
        assert p.is_zero
        assert p.terms == {}

    def test_exact_fractions(self):
        half = DensePolynomial.constant(1, Fraction(1, 2))
        third = DensePolynomial.constant(1, Fraction(1, 3))
        prod = half * third
        assert prod.terms == {(0,): Fraction(1, 6)}

    @settings(max_examples=50, deadline=None)
    @given(small_poly(), small_poly(), st.integers(0, 1))
    def test_product_rule_exact(self, a, b, k):
        left = (a * b).diff(k)
        right = a.diff(k) * b + a * b.diff(k)
        assert left == right

    @settings(max_examples=50, deadline=None)
    @given(small_poly(), small_poly(), st.integers(0, 2**32 - 1))
    def test_evaluation_homomorphism(self, a, b, seed):
        x = np.random.default_rng(seed).uniform(-2, 2, size=2)
        lhs = (a * b)(x)
        rhs = a(x) * b(x)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs), abs(rhs))


class TestDiffEval:
    def test_diff_circle(self):
        assert CIRCLE.diff(0).terms == {(1, 0): 2}

    def test_diff_constant(self):
        assert DensePolynomial.constant(2, 4.0).diff(0).is_zero

    def test_diff_cubic(self):
        cubic = CIRCLE * X
        assert cubic.diff(1).terms == {(1, 1): 2}

    def test_diff_out_of_range(self):
        with pytest.raises(IndexError):
            CIRCLE.diff(2)

    def test_eval_roots(self):
        assert CIRCLE(np.array([1.0, 0.0])) == 0.0
        assert (X * Y)(np.array([0.0, -1.0])) == 0.0
        assert DensePolynomial.zero(2)(np.array([3.0, 7.0])) == 0.0

    def test_batch_evaluate(self):
        pts = np.array([[1.0, 0.0], [0.0, 1.0], [2.0, 0.0]])
        assert np.allclose(CIRCLE.evaluate(pts), [0.0, 0.0, 3.0])


class TestFiniteDifferences:
    def test_square(self):
        f = lambda v: float(v[0] ** 2)
        grad = finite_diff_gradient(f, np.array([1.0]), h=1e-5)
        assert grad[0] == pytest.approx(2.0, abs=1e-9)

    def test_constant(self):
        grad = finite_diff_gradient(lambda v: 3.0, np.array([0.3, -1.2]))
        assert np.allclose(grad, 0.0)

    def test_cubic(self):
        f = lambda v: float(v[0] ** 3)
        grad = finite_diff_gradient(f, np.array([1.0]), h=1e-4)
        assert grad[0] == pytest.approx(3.0, abs=1e-7)

    def test_rejects_bad_step(self):
        with pytest.raises(ValueError):
            finite_diff_gradient(lambda v: 0.0, np.zeros(1), h=0.0)


class TestCoefficientVectors:
    def test_zero_polynomial(self):
        vec = coefficient_vector(DensePolynomial.zero(2), 2)
        assert vec.shape == (6,)
        assert np.all(vec == 0)

    def test_univariate_graded(self):
        p = DensePolynomial(1, {(0,): 1, (1,): -1, (3,): 2})
        assert np.allclose(coefficient_vector(p, 3), [1, -1, 0, 2])

    def test_orthogonal_linear_forms(self):
        a = coefficient_vector(X + Y, 1)
        b = coefficient_vector(X - Y, 1)
        assert float(a @ b) == 0.0
        assert coeff_dot(X + Y, X - Y) == 0.0

    def test_degree_overflow(self):
        with pytest.raises(ValueError):
            coefficient_vector(CIRCLE, 1)

    def test_monomial_count(self):
        for n, t in [(1, 3), (2, 4), (4, 3)]:
            assert len(list(graded_monomials(n, t))) == monomial_count(n, t)
            assert monomial_count(n, t) == math.comb(n + t, n)

    def test_coeff_dot_matches_vectors(self):
        p = DensePolynomial(2, {(2, 0): 1.5, (1, 1): -2.0})
        q = DensePolynomial(2, {(1, 1): 3.0, (0, 0): 1.0})
        bound = 2
        vp, vq = coefficient_vector(p, bound), coefficient_vector(q, bound)
        assert coeff_dot(p, q) == pytest.approx(float(vp @ vq))
