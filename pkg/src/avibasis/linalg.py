"""Dense symmetric eigensolvers and tolerance-controlled least squares.

Every routine is a pure function of its ndarray inputs and returns freshly
allocated arrays, so concurrent callers never share mutable state.
Eigenvalues are always reported in descending order and eigenvector signs
are canonicalized (largest-magnitude entry positive) for reproducibility.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "EigResult",
    "sym_eig",
    "gen_sym_eig",
    "lstsq",
    "orthonormal_basis",
    "principal_angles",
]

_ASYMMETRY_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class EigResult:
    """Eigenpairs sorted by descending eigenvalue.

    ``eigenvectors[:, i]`` pairs with ``eigenvalues[i]``.  For the
    generalized problem, ``retained_rank`` is the numerical rank of the
    right-hand matrix; directions in its null space carry no eigenpair and
    the eigenvector matrix has exactly ``retained_rank`` columns.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    retained_rank: int


def _check_symmetric(a: np.ndarray, name: str) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")
    if a.size == 0:
        return
    scale = float(np.abs(a).max())
    if scale > 0.0 and float(np.abs(a - a.T).max()) > _ASYMMETRY_RTOL * scale:
        raise ValueError(
            f"{name} is not symmetric within relative tolerance {_ASYMMETRY_RTOL:g}"
        )


def _fix_signs(v: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    if v.size == 0:
        return v
    idx = np.abs(v).argmax(axis=0)
    signs = np.sign(v[idx, np.arange(v.shape[1])])
    signs[signs == 0.0] = 1.0
    return v * signs


_DEGENERACY_RTOL = 1e-10


def _canonicalize_degenerate(w: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate each numerically degenerate eigenvalue group to echelon form.

    Within a group of (near-)equal eigenvalues any orthogonal rotation of
    the eigenvector block is an equally valid answer, and LAPACK's choice
    varies across builds.  Rotating the block so that its transpose is in
    QR (column-echelon) form picks one representative deterministically:
    column j of the block gets zero entries in rows 0..j-1 whenever the
    group span allows it.  Orthogonality (and B-orthonormality, for the
    whitened generalized problem) is preserved exactly.  Groups are bounded
    by total eigenvalue spread, so any cross-eigenvalue mixing stays below
    the spread tolerance.
    """
    if v.shape[1] < 2:
        return v
    spread_tol = _DEGENERACY_RTOL * max(1.0, float(np.abs(w).max()))
    start = 0
    for i in range(1, len(w) + 1):
        if i < len(w) and abs(w[start] - w[i]) <= spread_tol:
            continue
        if i - start >= 2:
            block = v[:, start:i]
            q, _ = np.linalg.qr(block.T)
            v[:, start:i] = block @ q
        start = i
    return v


def sym_eig(a: np.ndarray) -> EigResult:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending."""
    a = np.asarray(a, dtype=float)
    _check_symmetric(a, "input matrix")
    w, v = np.linalg.eigh((a + a.T) / 2.0)
    # eigh returns ascending order; reversing keeps ties in a fixed order.
    w = w[::-1].copy()
    v = np.ascontiguousarray(v[:, ::-1])
    v = _fix_signs(_canonicalize_degenerate(w, v))
    return EigResult(w, v, a.shape[0])


def gen_sym_eig(a: np.ndarray, b: np.ndarray, rank_tol: float = 1e-12) -> EigResult:
    """Solve ``a V = b V diag(lam)`` for symmetric PSD ``a`` and ``b``.

    ``b`` may be singular: it is eigendecomposed, directions with eigenvalue
    <= ``rank_tol`` times the largest are discarded, the problem is whitened
    on the retained subspace and solved as a standard symmetric problem.
    The returned vectors satisfy ``V.T @ b @ V = I`` and ``V.T @ a @ V``
    diagonal on the retained subspace.  A numerically zero ``b`` yields an
    empty result.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_symmetric(a, "left-hand matrix")
    _check_symmetric(b, "right-hand matrix")
    if a.shape != b.shape:
        raise ValueError(f"matrix shapes differ: {a.shape} vs {b.shape}")
    dim = a.shape[0]
    if dim == 0:
        return EigResult(np.zeros(0), np.zeros((0, 0)), 0)

    sigma, q = np.linalg.eigh((b + b.T) / 2.0)
    sigma_max = float(sigma[-1])
    if sigma_max <= 0.0:
        return EigResult(np.zeros(0), np.zeros((dim, 0)), 0)
    keep = sigma > rank_tol * sigma_max
    whiten = q[:, keep] / np.sqrt(sigma[keep])

    m = whiten.T @ a @ whiten
    w, u = np.linalg.eigh((m + m.T) / 2.0)
    w = w[::-1].copy()
    u = np.ascontiguousarray(u[:, ::-1])
    # Both inputs are Gram matrices in this codebase, so negative eigenvalues
    # can only be roundoff; snap those to zero.
    tiny = 1e-10 * max(1.0, float(np.abs(w).max()))
    w[(w < 0.0) & (w > -tiny)] = 0.0
    v = _fix_signs(_canonicalize_degenerate(w, whiten @ u))
    return EigResult(w, v, int(np.count_nonzero(keep)))


def lstsq(
    m: np.ndarray, y: np.ndarray, rank_tol: float = 1e-12
) -> tuple[np.ndarray, float]:
    """Minimum-norm least squares via a truncated SVD pseudo-inverse.

    Singular values <= ``rank_tol`` times the largest are treated as zero.
    Returns the solution and the Frobenius norm of the residual ``m w - y``.
    ``y`` may be a vector or a matrix of stacked right-hand sides.
    """
    m = np.asarray(m, dtype=float)
    y = np.asarray(y, dtype=float)
    if m.ndim != 2:
        raise ValueError("design matrix must be 2-D")
    if m.shape[0] != y.shape[0]:
        raise ValueError(f"row counts differ: {m.shape[0]} vs {y.shape[0]}")
    y2 = y if y.ndim == 2 else y[:, None]

    u, s, vt = np.linalg.svd(m, full_matrices=False)
    if s.size and s[0] > 0.0:
        keep = s > rank_tol * s[0]
    else:
        keep = np.zeros(s.shape, dtype=bool)
    coeff = (u[:, keep].T @ y2) / s[keep][:, None]
    w = vt[keep].T @ coeff
    residual = float(np.linalg.norm(m @ w - y2))
    if y.ndim == 1:
        w = w[:, 0]
    return w, residual


def orthonormal_basis(m: np.ndarray, rank_tol: float = 1e-12) -> np.ndarray:
    """Orthonormal basis of the column span of ``m`` (via SVD)."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError("expected a 2-D array")
    if m.size == 0:
        return np.zeros((m.shape[0], 0))
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        return np.zeros((m.shape[0], 0))
    return np.ascontiguousarray(u[:, s > rank_tol * s[0]])


def principal_angles(
    a: np.ndarray, b: np.ndarray, rank_tol: float = 1e-12
) -> np.ndarray:
    """Principal angles (radians, ascending) between two column spans.

    The number of angles is the smaller of the two numerical ranks; callers
    that need span equality should additionally compare the ranks.  Small
    angles are computed from the sine of the projection residual, which
    avoids the sqrt(eps) accuracy floor of the plain arccos formula.
    """
    qa = orthonormal_basis(a, rank_tol)
    qb = orthonormal_basis(b, rank_tol)
    if qa.shape[1] == 0 or qb.shape[1] == 0:
        return np.zeros(0)
    cross = qa.T @ qb
    cos = np.linalg.svd(cross, compute_uv=False)  # descending = angles ascending
    theta = np.arccos(np.clip(cos, -1.0, 1.0))
    small = cos**2 >= 0.5
    if small.any():
        resid = qb - qa @ cross
        sin = np.linalg.svd(resid, compute_uv=False)[::-1]  # ascending by angle
        sin = np.clip(sin[: theta.size], 0.0, 1.0)
        theta[small] = np.arcsin(sin[small])
    return theta
