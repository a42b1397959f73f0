import numpy as np
import pytest

from avibasis import (
    DensePolynomial,
    ExpansionLimitError,
    FitConfig,
    NormalizationKind,
    PointSet,
    PolyHandle,
    Preprocessing,
    evaluate,
    expand,
    finite_diff_gradient,
    fit,
    gradient,
    gradient_with_op_count,
    reduce_basis,
)
from conftest import random_model


class TestPointSet:
    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            PointSet(np.array([[1.0, np.nan]]))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            PointSet(np.zeros((0, 2)))

    def test_raw_points_roundtrip(self):
        pts = np.array([[1.0, 2.0], [3.0, 4.0]])
        prep = Preprocessing(center=np.array([1.0, 1.0]), scale=2.0)
        ps = PointSet(prep.apply(pts), prep)
        assert np.allclose(ps.raw_points(), pts)


class TestEvaluate:
    def test_constant_handle(self, four_points):
        model = fit(four_points, FitConfig(epsilon=0.0))
        values = evaluate(model, [PolyHandle(0, 0, "F")], np.array([[5.0, -3.0]]))
        assert values[0, 0] == model.constant_value

    def test_g_handles_vanish_at_training_points(self, four_points):
        for kind in (NormalizationKind.gradient(), NormalizationKind.identity()):
            model = fit(four_points, FitConfig(epsilon=0.0, normalization=kind))
            values = evaluate(model, model.g_handles(), four_points)
            assert np.abs(values).max() <= 1e-10

    def test_circle_handle_off_variety_value(self, four_points):
        model = fit(four_points, FitConfig(epsilon=0.0))
        report = reduce_basis(model, four_points)
        # after reduction the kept pair spans {x^2+y^2-1, xy}; find the circle
        circle = DensePolynomial(2, {(2, 0): 1.0, (0, 2): 1.0, (0, 0): -1.0})
        for handle in report.kept:
            poly = expand(model, handle)
            coeff = poly.terms.get((2, 0), 0.0)
            if abs(coeff) < 1e-12:
                continue
            scaled = circle.scale(coeff)
            assert max(abs(c) for c in (poly - scaled).terms.values() or [0.0]) <= 1e-9
            value = evaluate(model, [handle], np.array([[2.0, 0.0]]))[0, 0]
            assert value == pytest.approx(3.0 * coeff, rel=1e-9)
            break
        else:
            pytest.fail("no circle-like kept polynomial found")

    def test_replay_reproduces_eigenvalues(self, four_points):
        rng = np.random.default_rng(2)
        for _ in range(5):
            model, pts = random_model(rng)
            handles = [h for h in model.handles() if h.degree >= 1]
            values = evaluate(model, handles, pts)
            for col, handle in enumerate(handles):
                lam = model.record(handle.degree).eigvals[handle.column]
                assert float(values[:, col] @ values[:, col]) == pytest.approx(
                    lam, abs=1e-9
                )

    def test_handle_validation(self, four_points):
        model = fit(four_points, FitConfig(epsilon=0.0))
        with pytest.raises(IndexError):
            evaluate(model, [PolyHandle(99, 0, "G")], four_points)
        with pytest.raises(IndexError):
            evaluate(model, [PolyHandle(1, 57, "F")], four_points)
        with pytest.raises(ValueError):
            evaluate(model, [PolyHandle(1, 0, "G")], four_points)  # column 0 is F

    def test_dimension_mismatch(self, four_points):
        model = fit(four_points, FitConfig(epsilon=0.0))
        with pytest.raises(ValueError):
            evaluate(model, model.g_handles(), np.zeros((2, 3)))


class TestGradient:
    def test_degree_zero_gradient_is_zero(self, four_points):
        model = fit(four_points, FitConfig(epsilon=0.0))
        (grad,) = gradient(model, [PolyHandle(0, 0, "F")], four_points)
        assert np.all(grad == 0)

    def test_degree_one_gradient_constant_rows(self, four_points):
        model = fit(four_points, FitConfig(epsilon=0.0))
        handles = [h for h in model.handles() if h.degree == 1]
        probe = np.random.default_rng(0).normal(size=(6, 2))
        for handle, grad in zip(handles, gradient(model, handles, probe)):
            assert np.allclose(grad, grad[0:1, :], atol=1e-14)

    def test_circle_gradients_at_four_points(self, four_points):
        model = fit(four_points, FitConfig(epsilon=0.0))
        report = reduce_basis(model, four_points)
        for handle in report.kept:
            poly = expand(model, handle)
            coeff = float(poly.terms.get((2, 0), 0.0))
            if abs(coeff) < 1e-12:
                continue
            (grad,) = gradient(model, [handle], four_points)
            expected = 2.0 * coeff * four_points
            assert np.allclose(grad, expected, atol=1e-10)
            assert np.linalg.norm(grad) == pytest.approx(4.0 * abs(coeff), rel=1e-9)
            return
        pytest.fail("no circle-like kept polynomial found")

    def test_gradient_matches_symbolic_and_finite_differences(self):
        rng = np.random.default_rng(7)
        kinds = [
            NormalizationKind.gradient(),
            NormalizationKind.identity(),
            NormalizationKind.coefficient(),
        ]
        for i in range(6):
            model, pts = random_model(
                rng,
                num_points=int(rng.integers(4, 8)),
                num_vars=int(rng.integers(2, 5)),
                normalization=kinds[i % len(kinds)],
                max_degree=5,
            )
            probes = rng.uniform(-2, 2, size=(4, model.num_vars))
            handles = list(model.handles())
            grads = gradient(model, handles, probes)
            for handle, grad in zip(handles, grads):
                poly = expand(model, handle)
                partials = poly.gradient()
                for p_idx, x in enumerate(probes):
                    symbolic = np.array([d(x) for d in partials])
                    assert np.abs(grad[p_idx] - symbolic).max() <= 1e-9
                    fd = finite_diff_gradient(poly, x, h=1e-5)
                    err = np.abs(grad[p_idx] - fd)
                    assert np.all(err <= 1e-5 * (1.0 + np.abs(grad[p_idx])))

    def test_evaluation_matches_expansion(self):
        rng = np.random.default_rng(9)
        model, pts = random_model(rng, num_points=6, num_vars=2, max_degree=5)
        probes = rng.uniform(-2, 2, size=(5, 2))
        handles = list(model.handles())
        values = evaluate(model, handles, probes)
        for col, handle in enumerate(handles):
            poly = expand(model, handle)
            direct = poly.evaluate(probes)
            assert np.abs(values[:, col] - direct).max() <= 1e-9


class TestExpand:
    def test_constant_expansion(self, four_points):
        model = fit(four_points, FitConfig(epsilon=0.0))
        poly = expand(model, PolyHandle(0, 0, "F"))
        assert poly.terms == {(0, 0): model.constant_value}

    def test_degree_one_is_affine(self, four_points):
        model = fit(four_points, FitConfig(epsilon=0.0))
        handle = [h for h in model.handles() if h.degree == 1][0]
        poly = expand(model, handle)
        assert poly.degree() == 1
        (grad,) = gradient(model, [handle], four_points[:1])
        linear_coeffs = np.array(
            [poly.terms.get((1, 0), 0.0), poly.terms.get((0, 1), 0.0)]
        )
        assert np.allclose(grad[0], linear_coeffs, atol=1e-12)

    def test_term_guard(self, four_points):
        model = fit(four_points, FitConfig(epsilon=0.0))
        handle = model.g_handles()[0]
        with pytest.raises(ExpansionLimitError):
            expand(model, handle, term_cap=2)


class TestOpCount:
    def test_matches_vectorized_gradient(self, four_points):
        model = fit(four_points, FitConfig(epsilon=0.0))
        probe = np.array([0.7, -0.3])
        for handle in model.handles():
            grad, ops = gradient_with_op_count(model, handle, probe)
            (expected,) = gradient(model, [handle], probe[None, :])
            assert np.abs(grad - expected[0]).max() <= 1e-12
            if handle.degree >= 2:
                assert ops > 0

    def test_op_count_scales_with_candidates(self):
        rng = np.random.default_rng(4)
        counts = []
        for num_points in (8, 16):
            pts = rng.uniform(-1.5, 1.5, size=(num_points, 3))
            model = fit(pts, FitConfig(epsilon=0.0))
            degree = model.max_degree
            handle = [h for h in model.handles() if h.degree == degree][0]
            rec = model.record(degree)
            _, ops = gradient_with_op_count(model, handle, pts[0])
            counts.append((ops, model.num_vars * rec.num_candidates))
        ratios = [ops / work for ops, work in counts]
        assert max(ratios) / min(ratios) < 1.5


class TestValidate:
    def test_tampered_partition_detected(self, four_points):
        model = fit(four_points, FitConfig(epsilon=0.0))
        rec = model.degrees[1]
        flipped = tuple("F" if t == "G" else "G" for t in rec.partition)
        object.__setattr__(rec, "partition", flipped)
        with pytest.raises(ValueError):
            model.validate()
