"""Removal of redundant vanishing polynomials from a fitted basis.

A vanishing polynomial is redundant when lower-degree basis polynomials
generate it.  At every input point the gradient of such a polynomial is a
linear combination of the lower-degree gradients, so redundancy is tested
by per-point least squares on gradients: a candidate is dropped only if
the residual is below threshold at every point.

When the fit normalization is not the full gradient mapping, the per-degree
gradient Gram of the vanishing set may be rank deficient (e.g. duplicate or
near-zero polynomials); a rank-deflation pass removes those first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .fit import GRADIENT
from .model import BasisModel, PolyHandle, gradient

__all__ = [
    "RemovedPolynomial",
    "DeflationRecord",
    "ReductionReport",
    "reduce_basis",
    "rank_deflate_degree",
    "gradient_dependence_residuals",
]


@dataclass(frozen=True, eq=False)
class RemovedPolynomial:
    handle: PolyHandle
    max_residual: float
    per_point_residuals: np.ndarray


@dataclass(frozen=True, eq=False)
class DeflationRecord:
    degree: int
    removed: tuple[PolyHandle, ...]
    original_count: int
    gram_rank: int


@dataclass(frozen=True, eq=False)
class ReductionReport:
    """Outcome of one reduction run.

    ``kept``, the gradient-dependence victims in ``removed``, and the
    rank-deflation victims partition the original vanishing set.
    """

    kept: tuple[PolyHandle, ...]
    removed: tuple[RemovedPolynomial, ...]
    rank_deflated: tuple[DeflationRecord, ...]
    threshold: float

    def deflation_victims(self) -> tuple[PolyHandle, ...]:
        return tuple(h for rec in self.rank_deflated for h in rec.removed)


def gradient_dependence_residuals(
    generator_grads: np.ndarray,
    candidate_grad: np.ndarray,
    rank_tol: float = 1e-12,
) -> np.ndarray:
    """Per-point residuals of fitting a gradient by lower-degree gradients.

    ``generator_grads`` has shape ``(points, vars, generators)``,
    ``candidate_grad`` shape ``(points, vars)``.  At each point the best
    linear combination of generator gradients is solved independently; the
    returned vector holds the residual norms.
    """
    num_points = candidate_grad.shape[0]
    residuals = np.zeros(num_points)
    for p in range(num_points):
        _, res = linalg.lstsq(generator_grads[p], candidate_grad[p], rank_tol)
        residuals[p] = res
    return residuals


def _gram_rank(gram: np.ndarray, rank_tol: float, scale: float | None = None) -> int:
    lam = np.linalg.eigvalsh((gram + gram.T) / 2.0)
    top = float(lam[-1]) if scale is None else scale
    if top <= 0.0:
        return 0
    return int(np.count_nonzero(lam > rank_tol * top))


def rank_deflate_degree(
    handles: tuple[PolyHandle, ...],
    normalization_gram: np.ndarray,
    extents: np.ndarray,
    rank_tol: float = 1e-12,
) -> tuple[tuple[PolyHandle, ...], tuple[PolyHandle, ...], int]:
    """Drop rank-deficiency victims from one degree's vanishing set.

    Computes the numerical rank r of the gradient Gram matrix and removes
    ``len(handles) - r`` polynomials, trying smallest extent of vanishing
    first; a candidate survives when removing it would leave the remaining
    set below rank r.  Returns ``(kept, removed, r)``.
    """
    count = len(handles)
    gram = np.asarray(normalization_gram, dtype=float)
    if gram.shape != (count, count):
        raise ValueError("Gram matrix shape does not match the handle count")
    extents = np.asarray(extents, dtype=float)
    lam = np.linalg.eigvalsh((gram + gram.T) / 2.0) if count else np.zeros(0)
    top = float(lam[-1]) if count else 0.0
    rank = _gram_rank(gram, rank_tol) if count else 0
    to_remove = count - rank

    current = list(range(count))
    removed: list[int] = []
    for idx in np.argsort(extents, kind="stable"):
        if len(removed) == to_remove:
            break
        trial = [i for i in current if i != idx]
        if top > 0.0:
            sub = gram[np.ix_(trial, trial)]
            sub_lam = np.linalg.eigvalsh((sub + sub.T) / 2.0) if trial else np.zeros(0)
            if int(np.count_nonzero(sub_lam > rank_tol * top)) < rank:
                continue  # removing this one would lose span; keep it
        removed.append(int(idx))
        current = trial
    kept = tuple(handles[i] for i in sorted(current))
    dropped = tuple(handles[i] for i in sorted(removed))
    return kept, dropped, rank


def reduce_basis(
    model: BasisModel,
    points,
    threshold: float = 1e-9,
    rank_tol: float = 1e-12,
) -> ReductionReport:
    """Remove redundant vanishing polynomials from a fitted model.

    Candidates are processed in ascending degree.  The lowest-degree
    nonempty stratum is always kept (nothing of lower degree could generate
    it); above it, a polynomial is removed only when, at every point, its
    gradient lies within ``threshold`` of the span of the gradients of the
    currently kept lower-degree polynomials.  For fits not normalized by
    the full gradient mapping, degrees are first rank-deflated.
    """
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    g_handles = model.g_handles()
    if not g_handles:
        return ReductionReport((), (), (), threshold)

    grads = gradient(model, g_handles, points)
    grad_of = dict(zip(g_handles, grads))
    by_degree: dict[int, list[PolyHandle]] = {}
    for h in g_handles:
        by_degree.setdefault(h.degree, []).append(h)

    deflation_records: list[DeflationRecord] = []
    survivors: dict[int, list[PolyHandle]] = {}
    if model.normalization.variant != GRADIENT:
        for degree in sorted(by_degree):
            handles = tuple(by_degree[degree])
            stacked = np.stack([grad_of[h] for h in handles], axis=2)
            flat = stacked.reshape(-1, len(handles))
            gram = flat.T @ flat
            extents = np.array([model.extent_of_vanishing(h) for h in handles])
            kept, dropped, rank = rank_deflate_degree(handles, gram, extents, rank_tol)
            survivors[degree] = list(kept)
            if dropped:
                deflation_records.append(
                    DeflationRecord(degree, dropped, len(handles), rank)
                )
    else:
        survivors = {d: list(hs) for d, hs in by_degree.items()}

    kept: list[PolyHandle] = []
    removed: list[RemovedPolynomial] = []
    lowest = min((d for d, hs in survivors.items() if hs), default=None)
    for degree in sorted(survivors):
        for handle in survivors[degree]:
            if degree == lowest:
                kept.append(handle)
                continue
            pool = [h for h in kept if h.degree < degree]
            pool_grads = np.stack([grad_of[h] for h in pool], axis=2)
            residuals = gradient_dependence_residuals(
                pool_grads, grad_of[handle], rank_tol
            )
            max_res = float(residuals.max())
            if max_res <= threshold:
                removed.append(RemovedPolynomial(handle, max_res, residuals))
            else:
                kept.append(handle)
    return ReductionReport(tuple(kept), tuple(removed), tuple(deflation_records), threshold)
