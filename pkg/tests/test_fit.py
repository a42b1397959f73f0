import numpy as np
import pytest

from avibasis import (
    DensePolynomial,
    FitConfig,
    NormalizationKind,
    classify,
    evaluate,
    expand,
    fit,
    gradient,
    lstsq,
    normalization_matrix,
    orthogonalize,
)
from avibasis.fit import CandidateData
from conftest import random_cloud, random_polynomial


class TestClassify:
    def test_clear_split(self):
        assert classify(np.array([9.0, 0.0]), 0.1) == ("F", "G")

    def test_boundary_goes_to_g(self):
        assert classify(np.array([0.01]), 0.1) == ("G",)

    def test_numerical_zero_policy(self):
        assert classify(np.array([1e-20]), 0.0) == ("G",)

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            classify(np.array([1.0, 2.0]), 0.0)

    def test_rejects_very_negative(self):
        with pytest.raises(ValueError):
            classify(np.array([1.0, -0.5]), 0.0)

    def test_clamps_roundoff_negative(self):
        assert classify(np.array([1.0, -1e-13]), 0.5) == ("F", "G")


class TestOrthogonalize:
    def test_already_orthogonal(self):
        f = np.array([[1.0], [1.0], [1.0], [1.0]])
        c = np.array([[1.0], [-1.0], [1.0], [-1.0]])
        c_out, w = orthogonalize(c, f)
        assert np.abs(w).max() <= 1e-12
        assert np.allclose(c_out, c)

    def test_self_subtraction(self):
        f = np.random.default_rng(0).normal(size=(6, 2))
        c_out, _ = orthogonalize(f.copy(), f)
        assert np.abs(c_out).max() <= 1e-12

    def test_constant_block_centers(self):
        pts = np.array([[1.0, 4.0], [2.0, 5.0], [3.0, 9.0]])
        f = np.full((3, 1), 0.5)
        c_out, _ = orthogonalize(pts, f)
        assert np.allclose(c_out, pts - pts.mean(axis=0), atol=1e-12)

    def test_result_orthogonal_to_span(self):
        rng = np.random.default_rng(7)
        f = rng.normal(size=(10, 3))
        c_pre = rng.normal(size=(10, 4))
        c_out, _ = orthogonalize(c_pre, f)
        assert np.abs(f.T @ c_out).max() <= 1e-9


class TestNormalizationMatrix:
    def test_identity(self):
        cands = CandidateData(evals=np.zeros((4, 3)))
        assert np.array_equal(
            normalization_matrix(cands, NormalizationKind.identity()), np.eye(3)
        )

    def test_gradient_of_raw_variables(self):
        # candidates = coordinates orthogonalized against the constant:
        # gradients are standard basis vectors at every point
        num_points, n = 5, 3
        grads = np.zeros((num_points, n, n))
        for j in range(n):
            grads[:, j, j] = 1.0
        cands = CandidateData(evals=np.zeros((num_points, n)), grads=grads)
        gram = normalization_matrix(cands, NormalizationKind.gradient())
        assert np.allclose(gram, num_points * np.eye(n))

    def test_coefficient_singleton(self):
        p = DensePolynomial(1, {(0,): 1.0, (1,): -1.0, (3,): 2.0})
        cands = CandidateData(evals=np.zeros((4, 1)), expansions=(p,))
        gram = normalization_matrix(cands, NormalizationKind.coefficient())
        assert np.allclose(gram, [[6.0]])

    def test_subsampled_restriction(self):
        rng = np.random.default_rng(3)
        grads = rng.normal(size=(6, 3, 4))
        kind = NormalizationKind.subsampled_gradient((0, 2), (1, 4, 5))
        cands = CandidateData(evals=np.zeros((6, 4)), grads=grads)
        gram = normalization_matrix(cands, kind)
        sub = grads[np.ix_((1, 4, 5), (0, 2))].reshape(-1, 4)
        assert np.allclose(gram, sub.T @ sub)

    def test_missing_caches(self):
        cands = CandidateData(evals=np.zeros((4, 2)))
        with pytest.raises(ValueError):
            normalization_matrix(cands, NormalizationKind.gradient())
        with pytest.raises(ValueError):
            normalization_matrix(cands, NormalizationKind.coefficient())


class TestNormalizationKind:
    def test_subsampled_requires_subsets(self):
        with pytest.raises(ValueError):
            NormalizationKind("subsampled_gradient")
        with pytest.raises(ValueError):
            NormalizationKind("gradient", var_subset=(0,))
        with pytest.raises(ValueError):
            NormalizationKind("bogus")


class TestFitSmallCases:
    def test_two_points_on_a_line(self):
        pts = np.array([[0.0, 0.0], [1.0, 1.0]])
        model = fit(pts, FitConfig(epsilon=0.0))
        f_eval = evaluate(model, model.f_handles(), pts)
        assert len(model.f_handles()) == 2
        assert np.linalg.matrix_rank(f_eval, tol=1e-10) == 2

    def test_four_point_counts(self, four_points=None):
        pts = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
        grad_model = fit(pts, FitConfig(epsilon=0.0, normalization=NormalizationKind.gradient()))
        vca_model = fit(pts, FitConfig(epsilon=0.0, normalization=NormalizationKind.identity()))
        assert len(grad_model.g_handles()) == 4
        assert len(vca_model.g_handles()) == 5

    def test_single_point(self):
        pts = np.array([[2.0, -1.0, 0.5]])
        model = fit(pts, FitConfig(epsilon=0.0))
        assert len(model.f_handles()) == 1  # just the constant
        g = model.g_handles()
        assert len(g) == 3
        assert all(h.degree == 1 for h in g)
        assert model.max_degree <= 2
        assert not model.truncated
        values = evaluate(model, g, pts)
        assert np.abs(values).max() <= 1e-12

    def test_duplicate_points_kept(self):
        pts = np.array([[1.0, 2.0], [1.0, 2.0], [0.0, 1.0]])
        model = fit(pts, FitConfig(epsilon=0.0))
        f_eval = evaluate(model, model.f_handles(), pts)
        assert np.linalg.matrix_rank(f_eval, tol=1e-8) == 2  # two distinct points

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            fit(np.zeros((0, 2)), FitConfig())

    def test_negative_epsilon_rejected(self):
        with pytest.raises(ValueError):
            FitConfig(epsilon=-0.1)

    def test_subsample_out_of_range(self):
        pts = np.eye(3)
        cfg = FitConfig(normalization=NormalizationKind.subsampled_gradient((5,), (0,)))
        with pytest.raises(ValueError):
            fit(pts, cfg)

    def test_truncation_flag(self):
        rng = np.random.default_rng(0)
        pts = random_cloud(rng, 12, 2)
        model = fit(pts, FitConfig(epsilon=0.0, max_degree=1))
        assert model.truncated

    def test_coefficient_expansion_guard_raises(self):
        from avibasis import ExpansionLimitError

        rng = np.random.default_rng(1)
        pts = random_cloud(rng, 8, 2)
        cfg = FitConfig(
            normalization=NormalizationKind.coefficient(), expansion_cap=4
        )
        with pytest.raises(ExpansionLimitError):
            fit(pts, cfg)

    def test_constant_values_per_normalization(self):
        pts = np.array([[1.0, -3.0], [2.0, 0.0]])
        ident = fit(pts, FitConfig(normalization=NormalizationKind.identity()))
        assert ident.constant_value == pytest.approx(1.0 / np.sqrt(2.0))
        coef = fit(pts, FitConfig(normalization=NormalizationKind.coefficient()))
        assert coef.constant_value == 1.0
        grad = fit(pts, FitConfig(normalization=NormalizationKind.gradient()))
        assert grad.constant_value == pytest.approx(6.0 / 4.0)

    def test_preprocessing_recorded_and_consistent(self):
        rng = np.random.default_rng(8)
        pts = random_cloud(rng, 6, 2) + np.array([10.0, -5.0])
        model = fit(pts, FitConfig(epsilon=0.0, center=True, unit_mean_norm=True))
        assert model.preprocessing.center is not None
        assert model.preprocessing.scale is not None
        values = evaluate(model, model.g_handles(), pts)
        assert np.abs(values).max() <= 1e-8


class TestFitInvariants:
    def test_unit_gradient_norms(self):
        rng = np.random.default_rng(42)
        for _ in range(5):
            pts = random_cloud(rng, int(rng.integers(4, 12)), int(rng.integers(2, 4)))
            model = fit(pts, FitConfig(epsilon=0.0))
            handles = [h for h in model.handles() if h.degree >= 1]
            for h, g in zip(handles, gradient(model, handles, pts)):
                assert np.linalg.norm(g) == pytest.approx(1.0, abs=1e-6)

    def test_unit_coefficient_norms(self):
        rng = np.random.default_rng(43)
        for _ in range(3):
            pts = random_cloud(rng, int(rng.integers(4, 9)), 2)
            model = fit(pts, FitConfig(epsilon=0.0, normalization=NormalizationKind.coefficient()))
            for h in model.handles():
                if h.degree == 0:
                    continue
                assert expand(model, h).coefficient_norm() == pytest.approx(1.0, abs=1e-6)

    def test_extent_of_vanishing(self):
        rng = np.random.default_rng(44)
        pts = random_cloud(rng, 8, 3)
        model = fit(pts, FitConfig(epsilon=0.0))
        handles = [h for h in model.handles() if h.degree >= 1]
        values = evaluate(model, handles, pts)
        for col, h in enumerate(handles):
            lam = model.record(h.degree).eigvals[h.column]
            assert np.linalg.norm(values[:, col]) == pytest.approx(
                np.sqrt(max(lam, 0.0)), abs=1e-8
            )

    def test_cross_degree_orthogonality(self):
        rng = np.random.default_rng(45)
        pts = random_cloud(rng, 9, 3)
        model = fit(pts, FitConfig(epsilon=0.0))
        f_eval = evaluate(model, model.f_handles(), pts)
        gram = f_eval.T @ f_eval
        off = gram - np.diag(np.diag(gram))
        assert np.abs(off).max() <= 1e-8

    def test_epsilon_zero_completeness(self):
        rng = np.random.default_rng(46)
        for _ in range(4):
            num_points = int(rng.integers(4, 13))
            num_vars = int(rng.integers(2, 4))
            pts = random_cloud(rng, num_points, num_vars)
            model = fit(pts, FitConfig(epsilon=0.0))
            f_eval = evaluate(model, model.f_handles(), pts)
            assert np.linalg.matrix_rank(f_eval, tol=1e-8) == num_points
            g_handles = model.g_handles()
            if g_handles:
                g_eval = evaluate(model, g_handles, pts)
                assert np.abs(g_eval).max() <= 1e-8
                # absorption: products of vanishing polynomials with
                # coordinates still vanish on the points
                for k in range(num_vars):
                    assert np.abs(g_eval * pts[:, [k]]).max() <= 1e-8

    def test_degreewise_span_of_random_polynomials(self):
        rng = np.random.default_rng(47)
        pts = random_cloud(rng, 7, 2)
        model = fit(pts, FitConfig(epsilon=0.0))
        for t in range(1, model.max_degree + 1):
            handles = [h for h in model.f_handles() if h.degree <= t]
            f_eval = evaluate(model, handles, pts)
            for _ in range(3):
                poly = random_polynomial(rng, 2, t)
                _, residual = lstsq(f_eval, poly.evaluate(pts))
                assert residual <= 1e-8 * max(1.0, np.linalg.norm(poly.evaluate(pts)))

    def test_determinism(self):
        rng = np.random.default_rng(48)
        pts = random_cloud(rng, 8, 2)
        m1 = fit(pts, FitConfig(epsilon=0.0))
        m2 = fit(pts, FitConfig(epsilon=0.0))
        for r1, r2 in zip(m1.degrees, m2.degrees):
            assert np.array_equal(r1.eigvecs, r2.eigvecs)
            assert np.array_equal(r1.eigvals, r2.eigvals)

    def test_subsampled_gradient_unit_norm_on_subset(self):
        rng = np.random.default_rng(49)
        pts = random_cloud(rng, 8, 3)
        kind = NormalizationKind.subsampled_gradient((0, 1), (0, 2, 4))
        model = fit(pts, FitConfig(epsilon=0.0, normalization=kind))
        handles = [h for h in model.handles() if h.degree >= 1]
        for h, g in zip(handles, gradient(model, handles, pts)):
            restricted = g[np.ix_((0, 2, 4), (0, 1))]
            assert np.linalg.norm(restricted) == pytest.approx(1.0, abs=1e-6)
