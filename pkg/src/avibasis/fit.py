"""Degree-by-degree construction of vanishing/nonvanishing polynomial bases.

At each degree, candidate polynomials are formed as pairwise products of
lower-degree nonvanishing polynomials, orthogonalized (in evaluation space)
against everything of lower degree, and combined through a generalized
symmetric eigenproblem whose right-hand side is a pluggable normalization
Gram matrix.  Columns split into nonvanishing (F) and vanishing (G) by
comparing sqrt(eigenvalue) -- the evaluation norm of the polynomial --
against the tolerance epsilon.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .densepoly import DensePolynomial, coeff_dot, monomial_count
from .model import (
    BasisModel,
    DegreeRecord,
    ExpansionLimitError,
    EXPANSION_TERM_CAP,
    PointSet,
    Preprocessing,
    _apply_ortho,
    _apply_ortho_grad,
    _combine_expansion,
    _pair_eval,
    _pair_grad,
)

__all__ = [
    "NormalizationKind",
    "FitConfig",
    "CandidateData",
    "fit",
    "normalization_matrix",
    "orthogonalize",
    "classify",
]

IDENTITY = "identity"
COEFFICIENT = "coefficient"
GRADIENT = "gradient"
SUBSAMPLED_GRADIENT = "subsampled_gradient"
_VARIANTS = (IDENTITY, COEFFICIENT, GRADIENT, SUBSAMPLED_GRADIENT)


@dataclass(frozen=True)
class NormalizationKind:
    """Selects the normalization Gram matrix used in the eigenproblem.

    ``identity`` normalizes combination vectors (the classic VCA behavior),
    ``coefficient`` normalizes coefficient vectors, ``gradient`` normalizes
    the stacked gradient evaluations at the input points, and
    ``subsampled_gradient`` restricts the gradient to a variable subset and
    a point subset.
    """

    variant: str
    var_subset: tuple[int, ...] | None = None
    point_subset: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.variant not in _VARIANTS:
            raise ValueError(f"unknown normalization variant {self.variant!r}")
        if self.variant == SUBSAMPLED_GRADIENT:
            if not self.var_subset or not self.point_subset:
                raise ValueError("subsampled gradient requires non-empty variable and point subsets")
            object.__setattr__(self, "var_subset", tuple(int(i) for i in self.var_subset))
            object.__setattr__(self, "point_subset", tuple(int(i) for i in self.point_subset))
            if any(i < 0 for i in self.var_subset) or any(i < 0 for i in self.point_subset):
                raise ValueError("subset indices must be non-negative")
        elif self.var_subset is not None or self.point_subset is not None:
            raise ValueError(f"{self.variant} normalization takes no subsets")

    @classmethod
    def identity(cls) -> "NormalizationKind":
        return cls(IDENTITY)

    @classmethod
    def coefficient(cls) -> "NormalizationKind":
        return cls(COEFFICIENT)

    @classmethod
    def gradient(cls) -> "NormalizationKind":
        return cls(GRADIENT)

    @classmethod
    def subsampled_gradient(cls, var_subset, point_subset) -> "NormalizationKind":
        return cls(SUBSAMPLED_GRADIENT, tuple(var_subset), tuple(point_subset))

    @property
    def uses_gradients(self) -> bool:
        return self.variant in (GRADIENT, SUBSAMPLED_GRADIENT)


@dataclass(frozen=True)
class FitConfig:
    """Construction parameters.

    ``epsilon`` is the vanishing tolerance on evaluation norms;
    ``max_degree`` (default: number of points) is a hard safety cap;
    ``center``/``unit_mean_norm`` request mean-centering and scaling to
    unit mean point norm before fitting, recorded on the model.
    ``expansion_cap`` bounds the dense term count coefficient
    normalization may reach; exceeding it is an error, never a fallback.
    """

    epsilon: float = 0.0
    normalization: NormalizationKind = field(default_factory=NormalizationKind.gradient)
    max_degree: int | None = None
    rank_tol: float = 1e-12
    center: bool = False
    unit_mean_norm: bool = False
    expansion_cap: int = EXPANSION_TERM_CAP

    def __post_init__(self) -> None:
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.max_degree is not None and self.max_degree < 1:
            raise ValueError("max_degree must be >= 1")
        if self.rank_tol <= 0:
            raise ValueError("rank_tol must be positive")
        if self.expansion_cap < 1:
            raise ValueError("expansion_cap must be >= 1")


@dataclass(frozen=True, eq=False)
class CandidateData:
    """Cached views of one degree's orthogonalized candidates."""

    evals: np.ndarray  # (points, candidates)
    grads: np.ndarray | None = None  # (points, vars, candidates)
    expansions: tuple[DensePolynomial, ...] | None = None


def classify(eigvals: np.ndarray, epsilon: float) -> tuple[str, ...]:
    """Tag each eigenpair F (sqrt(eigenvalue) > epsilon) or G (<=).

    Expects descending eigenvalues.  Roundoff negatives are clamped to
    zero, and sqrt values below 1e-10 times max(largest sqrt, 1) count as
    numerically vanishing even at epsilon = 0.
    """
    ev = np.asarray(eigvals, dtype=float)
    if ev.size == 0:
        return ()
    scale = max(1.0, float(np.abs(ev).max()))
    if np.any(np.diff(ev) > 1e-9 * scale):
        raise ValueError("eigenvalues must be sorted in descending order")
    if float(ev.min()) < -1e-10 * scale:
        raise ValueError("eigenvalue is negative beyond roundoff")
    roots = np.sqrt(np.clip(ev, 0.0, None))
    cut = max(float(epsilon), 1e-10 * max(float(roots.max()), 1.0))
    return tuple("G" if r <= cut else "F" for r in roots)


def orthogonalize(
    c_pre_eval: np.ndarray, f_eval: np.ndarray, rank_tol: float = 1e-12
) -> tuple[np.ndarray, np.ndarray]:
    """Project candidate evaluations off the span of the nonvanishing block.

    Returns ``(c_eval, w)`` with ``c_eval = c_pre_eval - f_eval @ w`` and
    ``w`` the tolerance-controlled least-squares weights.
    """
    c_pre_eval = np.asarray(c_pre_eval, dtype=float)
    f_eval = np.asarray(f_eval, dtype=float)
    if c_pre_eval.shape[0] != f_eval.shape[0]:
        raise ValueError("row counts differ")
    w, _ = linalg.lstsq(f_eval, c_pre_eval, rank_tol)
    if w.ndim == 1:
        w = w[:, None]
    return _apply_ortho(c_pre_eval, f_eval, w), w


def normalization_matrix(candidates: CandidateData, kind: NormalizationKind) -> np.ndarray:
    """Normalization Gram matrix for one degree's candidate set.

    Identity: the identity.  Coefficient: Gram of coefficient vectors
    (requires cached expansions).  Gradient: Gram of the stacked gradient
    evaluations (requires cached gradients).  Subsampled gradient: the same
    on the configured variable/point subsets.  Always symmetric PSD.
    """
    count = candidates.evals.shape[1]
    if kind.variant == IDENTITY:
        return np.eye(count)
    if kind.variant == COEFFICIENT:
        if candidates.expansions is None:
            raise ValueError("coefficient normalization requires cached expansions")
        gram = np.zeros((count, count))
        for i in range(count):
            for j in range(i, count):
                gram[i, j] = gram[j, i] = coeff_dot(
                    candidates.expansions[i], candidates.expansions[j]
                )
        return gram
    if candidates.grads is None:
        raise ValueError("gradient normalization requires cached gradients")
    grads = candidates.grads
    if kind.variant == SUBSAMPLED_GRADIENT:
        num_points, num_vars = grads.shape[0], grads.shape[1]
        if max(kind.point_subset) >= num_points:
            raise ValueError("point subset index out of range")
        if max(kind.var_subset) >= num_vars:
            raise ValueError("variable subset index out of range")
        grads = grads[np.ix_(kind.point_subset, kind.var_subset)]
    flat = grads.reshape(-1, count)
    gram = flat.T @ flat
    return (gram + gram.T) / 2.0


def _constant_value(kind: NormalizationKind, points: np.ndarray) -> float:
    if kind.variant == IDENTITY:
        return 1.0 / np.sqrt(points.shape[0])
    if kind.variant == COEFFICIENT:
        return 1.0
    mean_abs = float(np.abs(points).mean())
    # All-zero input would give a zero constant; any nonzero value spans the
    # same degree-0 space, so fall back to 1.
    return mean_abs if mean_abs > 0.0 else 1.0


def fit(points, config: FitConfig | None = None) -> BasisModel:
    """Construct the vanishing/nonvanishing basis for a point set.

    ``points`` may be a PointSet or a plain ``(num_points, num_vars)``
    array.  Iterates degree by degree until no nonvanishing polynomial
    appears (natural termination) or the degree cap is reached, in which
    case the returned model carries ``truncated=True``.
    """
    config = config or FitConfig()
    pts_in = points.points if isinstance(points, PointSet) else np.asarray(points, dtype=float)
    if pts_in.ndim != 2 or pts_in.shape[0] < 1 or pts_in.shape[1] < 1:
        raise ValueError("empty point set")
    if not np.isfinite(pts_in).all():
        raise ValueError("points contain NaN or Inf")

    center = pts_in.mean(axis=0) if config.center else None
    pts = pts_in - center if center is not None else pts_in
    scale = None
    if config.unit_mean_norm:
        scale = float(np.linalg.norm(pts, axis=1).mean())
        if scale <= 0.0:
            raise ValueError("cannot scale a point set with zero mean norm")
        pts = pts / scale
    prep = Preprocessing(center=center, scale=scale)

    kind = config.normalization
    num_points, num_vars = pts.shape
    if kind.variant == SUBSAMPLED_GRADIENT:
        if max(kind.var_subset) >= num_vars:
            raise ValueError("subsampled variable index out of range")
        if max(kind.point_subset) >= num_points:
            raise ValueError("subsampled point index out of range")
    max_degree = config.max_degree if config.max_degree is not None else num_points

    m = _constant_value(kind, pts)
    f_evals: list[np.ndarray] = [np.full((num_points, 1), m)]
    f_grads: list[np.ndarray] = [np.zeros((num_points, num_vars, 1))]
    symbolic = kind.variant == COEFFICIENT
    f_exps: list[list[DensePolynomial]] = [[DensePolynomial.constant(num_vars, m)]]

    records: list[DegreeRecord] = []
    truncated = True
    for t in range(1, max_degree + 1):
        if t == 1:
            parents: tuple = tuple(range(num_vars))
            pre = pts[:, list(parents)]
            pre_grad = np.zeros((num_points, num_vars, num_vars))
            for j, k in enumerate(parents):
                pre_grad[:, k, j] = 1.0
            pre_exps = [DensePolynomial.variable(num_vars, k) for k in parents] if symbolic else None
        else:
            n1 = f_evals[1].shape[1]
            ntm1 = f_evals[t - 1].shape[1]
            parents = tuple((i, j) for i in range(n1) for j in range(ntm1))
            pre = _pair_eval(f_evals[1], f_evals[t - 1])
            pre_grad = _pair_grad(f_evals[1], f_grads[1], f_evals[t - 1], f_grads[t - 1])
            pre_exps = (
                [f_exps[1][i] * f_exps[t - 1][j] for i, j in parents] if symbolic else None
            )

        f_all = np.concatenate(f_evals, axis=1)
        c_eval, w = orthogonalize(pre, f_all, config.rank_tol)
        f_grad_all = np.concatenate(f_grads, axis=2)
        c_grad = _apply_ortho_grad(pre_grad, f_grad_all, w)
        c_exps = None
        if symbolic:
            if monomial_count(num_vars, t) > config.expansion_cap:
                raise ExpansionLimitError(
                    f"coefficient normalization at degree {t} in {num_vars} variables "
                    f"exceeds the {config.expansion_cap}-term expansion guard"
                )
            flat_exps = [p for block in f_exps for p in block]
            c_exps = []
            for j, p in enumerate(pre_exps):
                combo = p
                for f_idx, fp in enumerate(flat_exps):
                    if w[f_idx, j] != 0.0:
                        combo = combo - fp.scale(float(w[f_idx, j]))
                c_exps.append(combo)
            c_exps = tuple(c_exps)

        cands = CandidateData(evals=c_eval, grads=c_grad, expansions=c_exps)
        gram = normalization_matrix(cands, kind)
        outer = c_eval.T @ c_eval
        eig = linalg.gen_sym_eig((outer + outer.T) / 2.0, gram, config.rank_tol)
        # Store the squared evaluation norms of the output columns rather
        # than the solver's eigenvalues: they agree to solver precision, but
        # for exactly vanishing directions the solver value carries
        # eps-level noise whose square root (~1e-8) would pollute the
        # extent-of-vanishing identity ||h(X)|| = sqrt(lambda).
        out_evals = c_eval @ eig.eigenvectors
        eigvals = np.einsum("ij,ij->j", out_evals, out_evals)
        partition = classify(eigvals, config.epsilon)
        records.append(
            DegreeRecord(
                parents=parents,
                ortho_weights=w,
                eigvecs=eig.eigenvectors,
                eigvals=eigvals,
                partition=partition,
            )
        )

        f_cols = records[-1].columns("F")
        v_f = eig.eigenvectors[:, f_cols]
        f_evals.append(c_eval @ v_f)
        f_grads.append(np.tensordot(c_grad, v_f, axes=([2], [0])))
        if symbolic:
            flat_exps = [p for block in f_exps for p in block]
            f_exps.append(
                [
                    _combine_expansion(pre_exps, flat_exps, w, eig.eigenvectors[:, c])
                    for c in f_cols
                ]
            )

        if len(f_cols) == 0:
            truncated = False
            break

    return BasisModel(
        num_vars=num_vars,
        constant_value=m,
        degrees=tuple(records),
        epsilon=config.epsilon,
        normalization=kind,
        preprocessing=prep,
        truncated=truncated,
    )
