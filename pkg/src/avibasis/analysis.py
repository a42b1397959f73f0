"""Diagnostics, dataset generators, tolerance search, feature extraction.

Covers the experiment-side machinery: consistency reports under translation
and scaling of the input, the max/min norm ratio of a basis under a chosen
normalization mapping, a linear search for a workable vanishing tolerance,
per-class feature vectors, and seeded samplers for benchmark varieties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .densepoly import DensePolynomial
from .fit import (
    COEFFICIENT,
    FitConfig,
    GRADIENT,
    IDENTITY,
    NormalizationKind,
    SUBSAMPLED_GRADIENT,
    fit,
)
from .model import BasisModel, PointSet, Preprocessing, evaluate, expand, gradient

__all__ = [
    "ConcentricEllipses",
    "PolynomialSystem",
    "CustomPoints",
    "DatasetSpec",
    "generate_dataset",
    "extract_features",
    "n_ratio",
    "EpsilonTarget",
    "EpsilonScanPoint",
    "EpsilonSearchResult",
    "epsilon_search",
    "default_epsilon_grid",
    "InvarianceReport",
    "invariance_report",
]


# -- dataset generation -------------------------------------------------------


@dataclass(frozen=True)
class ConcentricEllipses:
    """Union of axis-ratio ellipses centered at the origin, then rotated.

    ``radii`` holds one ``(semi_axis_x, semi_axis_y)`` pair per ellipse.
    """

    radii: tuple[tuple[float, float], ...]
    rotation: float = 0.0

    def __post_init__(self) -> None:
        radii = tuple((float(a), float(b)) for a, b in self.radii)
        if not radii:
            raise ValueError("at least one ellipse is required")
        object.__setattr__(self, "radii", radii)


@dataclass(frozen=True, eq=False)
class PolynomialSystem:
    """Common zero set of a collection of polynomials."""

    polynomials: tuple[DensePolynomial, ...]

    def __post_init__(self) -> None:
        polys = tuple(self.polynomials)
        if not polys:
            raise ValueError("at least one polynomial is required")
        n = polys[0].num_vars
        if any(p.num_vars != n for p in polys):
            raise ValueError("polynomials must share the variable count")
        object.__setattr__(self, "polynomials", polys)

    @property
    def num_vars(self) -> int:
        return self.polynomials[0].num_vars


@dataclass(frozen=True, eq=False)
class CustomPoints:
    """Explicitly provided base points."""

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("custom points must be a non-empty 2-D array")
        object.__setattr__(self, "points", pts)


@dataclass(frozen=True, eq=False)
class DatasetSpec:
    """Recipe for a sampled dataset.

    ``extra_linear_vars`` entries are either a scalar k (appending
    ``k*x0 + (1-k)*x1``) or a full weight vector over the base variables.
    Noise is Gaussian with standard deviation ``noise_std_fraction`` times
    the mean absolute coordinate value, added after mean-centering.
    """

    variety: ConcentricEllipses | PolynomialSystem | CustomPoints
    samples: int
    extra_linear_vars: tuple = ()
    noise_std_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.noise_std_fraction < 0:
            raise ValueError("noise fraction must be >= 0")
        object.__setattr__(self, "extra_linear_vars", tuple(self.extra_linear_vars))


def _sample_ellipses(spec: ConcentricEllipses, samples: int, rng) -> np.ndarray:
    k = len(spec.radii)
    counts = [samples // k + (1 if i < samples % k else 0) for i in range(k)]
    rot = np.array(
        [
            [math.cos(spec.rotation), -math.sin(spec.rotation)],
            [math.sin(spec.rotation), math.cos(spec.rotation)],
        ]
    )
    chunks = []
    for (a, b), count in zip(spec.radii, counts):
        if count == 0:
            continue
        phi = rng.uniform(0.0, 2.0 * math.pi, size=count)
        pts = np.column_stack([a * np.cos(phi), b * np.sin(phi)])
        chunks.append(pts @ rot.T)
    return np.concatenate(chunks, axis=0)


def _project_to_variety(system: PolynomialSystem, start: np.ndarray, rng) -> np.ndarray:
    """Gauss-Newton projection of a seed point onto the zero set."""
    grads = [p.gradient() for p in system.polynomials]
    x = start.copy()
    for attempt in range(25):
        for _ in range(80):
            res = np.array([p(x) for p in system.polynomials])
            if np.abs(res).max() <= 1e-13:
                return x
            jac = np.array([[g(x) for g in gp] for gp in grads])
            step, _ = linalg.lstsq(jac, -res)
            limit = 1.0 + np.linalg.norm(x)
            norm = np.linalg.norm(step)
            if norm > limit:
                step = step * (limit / norm)
            x = x + step
        x = rng.standard_normal(system.num_vars)
    raise RuntimeError("projection onto the variety failed to converge")


def _sample_polynomial_system(system: PolynomialSystem, samples: int, rng) -> np.ndarray:
    pts = np.zeros((samples, system.num_vars))
    for i in range(samples):
        pts[i] = _project_to_variety(system, rng.standard_normal(system.num_vars), rng)
    return pts


def generate_dataset(spec: DatasetSpec) -> PointSet:
    """Sample a dataset per the recipe: variety points, appended linear
    mixture variables, mean-centering, then optional Gaussian noise.

    Fully deterministic for a given seed.  The returned PointSet records
    the centering vector, so pre-centering coordinates are recoverable.
    """
    rng = np.random.default_rng(spec.seed)
    variety = spec.variety
    if isinstance(variety, ConcentricEllipses):
        base = _sample_ellipses(variety, spec.samples, rng)
    elif isinstance(variety, PolynomialSystem):
        base = _sample_polynomial_system(variety, spec.samples, rng)
    elif isinstance(variety, CustomPoints):
        if variety.points.shape[0] != spec.samples:
            raise ValueError("custom points row count must equal the sample count")
        base = variety.points.copy()
    else:
        raise ValueError(f"unknown variety {type(variety).__name__}")

    columns = [base]
    for weights in spec.extra_linear_vars:
        if np.ndim(weights) == 0:
            if base.shape[1] < 2:
                raise ValueError("scalar mixture weights need at least two base variables")
            k = float(weights)
            col = k * base[:, 0] + (1.0 - k) * base[:, 1]
        else:
            w = np.asarray(weights, dtype=float)
            if w.shape != (base.shape[1],):
                raise ValueError("mixture weight vector length must match the base dimension")
            col = base @ w
        columns.append(col[:, None])
    pts = np.concatenate(columns, axis=1)

    center = pts.mean(axis=0)
    pts = pts - center
    if spec.noise_std_fraction > 0:
        sigma = spec.noise_std_fraction * float(np.abs(pts).mean())
        if sigma > 0:
            pts = pts + rng.normal(0.0, sigma, size=pts.shape)
    return PointSet(pts, Preprocessing(center=center))


# -- feature extraction -------------------------------------------------------


def extract_features(class_models: list[BasisModel], x) -> np.ndarray:
    """Concatenated absolute values of every class's vanishing polynomials
    at one point, class by class, degree-ascending within each class."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("expected a single point (1-D array)")
    blocks = []
    for model in class_models:
        if model.num_vars != x.shape[0]:
            raise ValueError(
                f"model expects {model.num_vars} variables, point has {x.shape[0]}"
            )
        handles = model.g_handles()
        if handles:
            blocks.append(np.abs(evaluate(model, handles, x[None, :]))[0])
        else:
            blocks.append(np.zeros(0))
    return np.concatenate(blocks) if blocks else np.zeros(0)


# -- norm-ratio metric --------------------------------------------------------


def n_ratio(model: BasisModel, kind: NormalizationKind, points=None) -> float:
    """Max/min norm of the vanishing polynomials under a chosen mapping.

    Gradient-based mappings measure stacked gradient evaluations and
    require the point set; the coefficient mapping measures coefficient
    vectors; the identity mapping measures combination vectors.  A zero
    minimum norm yields ``inf``.
    """
    handles = model.g_handles()
    if not handles:
        raise ValueError("the model has no vanishing polynomials")
    if kind.variant in (GRADIENT, SUBSAMPLED_GRADIENT):
        if points is None:
            raise ValueError("gradient norms require the point set")
        grads = gradient(model, handles, points)
        if kind.variant == SUBSAMPLED_GRADIENT:
            grads = [g[np.ix_(kind.point_subset, kind.var_subset)] for g in grads]
        norms = [float(np.linalg.norm(g)) for g in grads]
    elif kind.variant == COEFFICIENT:
        norms = [expand(model, h).coefficient_norm() for h in handles]
    elif kind.variant == IDENTITY:
        norms = [
            float(np.linalg.norm(model.record(h.degree).eigvecs[:, h.column]))
            for h in handles
        ]
    else:  # pragma: no cover - NormalizationKind validates variants
        raise ValueError(f"unsupported mapping {kind.variant!r}")
    low, high = min(norms), max(norms)
    if low <= 1e-12 * high:  # numerically zero minimum
        return math.inf
    return high / low


# -- epsilon search -----------------------------------------------------------


@dataclass(frozen=True)
class EpsilonTarget:
    """Shape the vanishing set must have for a tolerance to qualify:
    exactly ``num_linear`` degree-1 polynomials, none of degrees
    2..d_min-1, and at least ``num_at_dmin`` at degree ``d_min``."""

    num_linear: int
    d_min: int
    num_at_dmin: int

    def __post_init__(self) -> None:
        if self.num_linear < 0 or self.num_at_dmin < 0:
            raise ValueError("counts must be >= 0")
        if self.d_min < 2:
            raise ValueError("d_min is the lowest nonlinear degree and must be >= 2")


@dataclass(frozen=True, eq=False)
class EpsilonScanPoint:
    epsilon: float
    g_counts: tuple[int, ...]
    satisfied: bool


@dataclass(frozen=True, eq=False)
class EpsilonSearchResult:
    found: bool
    epsilon: float | None
    lower: float | None
    upper: float | None
    trace: tuple[EpsilonScanPoint, ...]


def default_epsilon_grid(points, count: int = 60) -> np.ndarray:
    """Log-spaced tolerance grid spanning 1e-4..1 times the mean point norm."""
    pts = points.points if isinstance(points, PointSet) else np.asarray(points, dtype=float)
    scale = float(np.linalg.norm(pts, axis=1).mean())
    if scale <= 0:
        scale = 1.0
    return np.geomspace(1e-4, 1.0, count) * scale


def _satisfies(model: BasisModel, target: EpsilonTarget) -> tuple[tuple[int, ...], bool]:
    g_counts = tuple(g for g, _ in model.degree_counts())
    def g_at(degree: int) -> int:
        return g_counts[degree - 1] if degree <= len(g_counts) else 0
    ok = g_at(1) == target.num_linear
    ok = ok and all(g_at(t) == 0 for t in range(2, target.d_min))
    ok = ok and g_at(target.d_min) >= target.num_at_dmin
    return g_counts, ok


def epsilon_search(
    points,
    target: EpsilonTarget,
    normalization: NormalizationKind | None = None,
    grid=None,
    rank_tol: float = 1e-12,
    max_degree: int | None = None,
) -> EpsilonSearchResult:
    """Linear scan for tolerances whose basis matches the target shape.

    Fits once per grid value, finds the longest contiguous run of
    satisfying tolerances ``(eps_1, eps_2)``, and reports their midpoint.
    When nothing on the grid qualifies the result carries ``found=False``
    and the full scan trace.
    """
    normalization = normalization or NormalizationKind.gradient()
    grid = default_epsilon_grid(points) if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0):
        raise ValueError("the tolerance grid must be positive")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("the tolerance grid must be strictly increasing")

    trace = []
    flags = np.zeros(grid.size, dtype=bool)
    for i, eps in enumerate(grid):
        model = fit(
            points,
            FitConfig(
                epsilon=float(eps),
                normalization=normalization,
                rank_tol=rank_tol,
                max_degree=max_degree,
            ),
        )
        g_counts, ok = _satisfies(model, target)
        flags[i] = ok
        trace.append(EpsilonScanPoint(float(eps), g_counts, ok))

    best_start, best_len = -1, 0
    run_start = None
    for i, ok in enumerate(list(flags) + [False]):
        if ok and run_start is None:
            run_start = i
        elif not ok and run_start is not None:
            if i - run_start > best_len:
                best_start, best_len = run_start, i - run_start
            run_start = None
    if best_len == 0:
        return EpsilonSearchResult(False, None, None, None, tuple(trace))
    lower = float(grid[best_start])
    upper = float(grid[best_start + best_len - 1])
    return EpsilonSearchResult(True, (lower + upper) / 2.0, lower, upper, tuple(trace))


# -- translation / scaling consistency ---------------------------------------


@dataclass(frozen=True, eq=False)
class InvarianceReport:
    """Consistency of a gradient-normalized fit under input transforms.

    Counts and eigenvalues are compared degree by degree across the base
    fit, the fit on translated points, and the fit on scaled points (with
    a linearly scaled tolerance).  Polynomials are never matched one by
    one -- eigenvector sign and degenerate rotations are free -- so
    subspace gaps are measured as principal angles between evaluation
    blocks on a shared probe set.
    """

    alpha: float
    translation: np.ndarray
    epsilon: float
    base_counts: tuple[tuple[int, int], ...]
    translated_counts: tuple[tuple[int, int], ...]
    scaled_counts: tuple[tuple[int, int], ...]
    eigenvalue_ratios: tuple[tuple[float, ...], ...]
    translation_eigenvalue_ratios: tuple[tuple[float, ...], ...]
    subspace_gaps: tuple[dict, ...]
    max_eval_discrepancy: float

    @property
    def counts_match(self) -> bool:
        return self.base_counts == self.translated_counts == self.scaled_counts


def _pad_counts(counts: tuple, length: int) -> tuple:
    return counts + ((0, 0),) * (length - len(counts))


def _block_gap(base_block: np.ndarray, other_block: np.ndarray) -> tuple[float, float]:
    """(max principal angle, relative out-of-span energy) between blocks."""
    if base_block.shape[1] == 0 and other_block.shape[1] == 0:
        return 0.0, 0.0
    if base_block.shape[1] == 0 or other_block.shape[1] == 0:
        return math.nan, math.nan
    angles = linalg.principal_angles(base_block, other_block)
    q = linalg.orthonormal_basis(base_block)
    out = other_block - q @ (q.T @ other_block)
    denom = float(np.linalg.norm(other_block))
    energy = float(np.linalg.norm(out)) / denom if denom > 0 else 0.0
    gap = float(angles.max()) if angles.size else 0.0
    return gap, energy


def _eig_ratios(
    lam_other: np.ndarray,
    lam_base: np.ndarray,
    factor: float,
    base_scale: float,
    other_scale: float,
) -> tuple[float, ...]:
    """Ratios other/base for eigenvalues above a relative floor.

    ``factor`` is the expected ratio.  The floor is relative to the
    model-wide largest eigenvalue, which keeps fully vanished directions
    (whose eigenvalues are pure roundoff) out of the comparison.
    """
    size = min(lam_other.size, lam_base.size)
    if size == 0:
        return ()
    floor = 1e-12 * max(base_scale, other_scale / factor, 1e-300)
    out = []
    for i in range(size):
        if lam_base[i] > floor and lam_other[i] > floor * factor:
            out.append(float(lam_other[i] / lam_base[i]))
    return tuple(out)


def _model_eig_scale(model: BasisModel) -> float:
    return max(
        (float(rec.eigvals.max()) for rec in model.degrees if rec.eigvals.size),
        default=0.0,
    )


def invariance_report(
    points,
    b,
    alpha: float,
    epsilon: float,
    probe_count: int = 40,
    seed: int = 0,
    rank_tol: float = 1e-12,
) -> InvarianceReport:
    """Fit (X, eps), (X - b, eps), (alpha X, |alpha| eps) with gradient
    normalization and report per-degree counts, eigenvalue ratios (scaling
    should give alpha^2, translation should give 1), and evaluation
    subspace gaps on a shared probe set."""
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    pts = points.points if isinstance(points, PointSet) else np.asarray(points, dtype=float)
    b = np.asarray(b, dtype=float)
    if b.shape != (pts.shape[1],):
        raise ValueError("translation vector dimension mismatch")

    kind = NormalizationKind.gradient()
    base = fit(pts, FitConfig(epsilon=epsilon, normalization=kind, rank_tol=rank_tol))
    translated = fit(pts - b, FitConfig(epsilon=epsilon, normalization=kind, rank_tol=rank_tol))
    scaled = fit(
        alpha * pts,
        FitConfig(epsilon=abs(alpha) * epsilon, normalization=kind, rank_tol=rank_tol),
    )

    rng = np.random.default_rng(seed)
    spread = np.maximum(pts.std(axis=0), 1e-2 * (float(np.abs(pts).mean()) + 1.0))
    probes = pts.mean(axis=0) + rng.standard_normal((probe_count, pts.shape[1])) * (1.25 * spread)

    length = max(base.max_degree, translated.max_degree, scaled.max_degree)
    base_scale = _model_eig_scale(base)
    scaled_scale = _model_eig_scale(scaled)
    translated_scale = _model_eig_scale(translated)
    gaps = []
    ratios_scaled = []
    ratios_translated = []
    discrepancy = 0.0
    for t in range(1, length + 1):
        entry: dict = {"degree": t}
        lam_b = base.record(t).eigvals if t <= base.max_degree else np.zeros(0)
        lam_s = scaled.record(t).eigvals if t <= scaled.max_degree else np.zeros(0)
        lam_tr = translated.record(t).eigvals if t <= translated.max_degree else np.zeros(0)
        ratios_scaled.append(_eig_ratios(lam_s, lam_b, alpha * alpha, base_scale, scaled_scale))
        ratios_translated.append(
            _eig_ratios(lam_tr, lam_b, 1.0, base_scale, translated_scale)
        )
        for kind_tag in ("F", "G"):
            def block(model: BasisModel, eval_points) -> np.ndarray:
                if t > model.max_degree:
                    return np.zeros((probe_count, 0))
                handles = [
                    h for h in model.handles(kind_tag) if h.degree == t
                ]
                return evaluate(model, handles, eval_points)

            base_block = block(base, probes)
            gap_tr, energy_tr = _block_gap(base_block, block(translated, probes - b))
            gap_sc, energy_sc = _block_gap(base_block, block(scaled, alpha * probes))
            entry[f"{kind_tag}_translation"] = gap_tr
            entry[f"{kind_tag}_scaling"] = gap_sc
            for energy in (energy_tr, energy_sc):
                if not math.isnan(energy):
                    discrepancy = max(discrepancy, energy)
        gaps.append(entry)

    return InvarianceReport(
        alpha=float(alpha),
        translation=b,
        epsilon=float(epsilon),
        base_counts=_pad_counts(base.degree_counts(), length),
        translated_counts=_pad_counts(translated.degree_counts(), length),
        scaled_counts=_pad_counts(scaled.degree_counts(), length),
        eigenvalue_ratios=tuple(ratios_scaled),
        translation_eigenvalue_ratios=tuple(ratios_translated),
        subspace_gaps=tuple(gaps),
        max_eval_discrepancy=discrepancy,
    )
