"""Structural representation of a fitted polynomial basis and its replay.

A fitted basis is stored symbol-free: per degree, the candidate parentage,
the orthogonalization weights, and the eigenvector combinations.  That is
enough to re-evaluate any basis polynomial, its gradient (via the product
rule over cached parent values, no differentiation), or its explicit
expansion, at arbitrary points.  Re-evaluating at the training points goes
through the same arithmetic path as fitting, so it reproduces the fit-time
evaluation matrices exactly.
"""

from __future__ import annotations

import threading
import weakref
from dataclasses import dataclass, field

import numpy as np

from .densepoly import DensePolynomial, monomial_count

__all__ = [
    "Preprocessing",
    "PointSet",
    "PolyHandle",
    "DegreeRecord",
    "BasisModel",
    "ExpansionLimitError",
    "evaluate",
    "gradient",
    "expand",
    "gradient_with_op_count",
    "EXPANSION_TERM_CAP",
]

EXPANSION_TERM_CAP = 1_000_000


class ExpansionLimitError(RuntimeError):
    """Raised when a symbolic expansion would exceed the term-count guard."""


@dataclass(frozen=True, eq=False)
class Preprocessing:
    """Record of the affine transform applied before fitting.

    Model-space coordinates are ``(x - center) / scale``; ``None`` fields
    mean the identity for that part.
    """

    center: np.ndarray | None = None
    scale: float | None = None

    @property
    def is_identity(self) -> bool:
        return self.center is None and self.scale is None

    def apply(self, points: np.ndarray) -> np.ndarray:
        out = np.asarray(points, dtype=float)
        if self.center is not None:
            out = out - self.center
        if self.scale is not None:
            out = out / self.scale
        return out

    def invert(self, points: np.ndarray) -> np.ndarray:
        out = np.asarray(points, dtype=float)
        if self.scale is not None:
            out = out * self.scale
        if self.center is not None:
            out = out + self.center
        return out


@dataclass(frozen=True, eq=False)
class PointSet:
    """A finite set of points, one per row, with its preprocessing record."""

    points: np.ndarray
    preprocessing: Preprocessing = field(default_factory=Preprocessing)

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError("points must be a 2-D array (one point per row)")
        if pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError("empty point set")
        if not np.isfinite(pts).all():
            raise ValueError("points contain NaN or Inf")
        object.__setattr__(self, "points", pts)

    @property
    def num_points(self) -> int:
        return self.points.shape[0]

    @property
    def num_vars(self) -> int:
        return self.points.shape[1]

    def raw_points(self) -> np.ndarray:
        """Points with the recorded preprocessing undone."""
        return self.preprocessing.invert(self.points)


@dataclass(frozen=True)
class PolyHandle:
    """Reference to one basis polynomial: (degree, eigenvector column, tag)."""

    degree: int
    column: int
    kind: str  # "F" or "G"

    def __post_init__(self) -> None:
        if self.kind not in ("F", "G"):
            raise ValueError(f"kind must be 'F' or 'G', got {self.kind!r}")
        if self.degree < 0 or self.column < 0:
            raise ValueError("degree and column must be non-negative")

    def label(self) -> str:
        return f"d{self.degree}_{self.kind.lower()}{self.column}"


@dataclass(frozen=True, eq=False)
class DegreeRecord:
    """Everything produced at one degree of the construction.

    ``parents`` lists candidate parentage: variable indices at degree 1,
    ``(index into degree-1 F, index into degree-(t-1) F)`` pairs above.
    ``ortho_weights`` maps the accumulated lower-degree nonvanishing
    evaluations to the subtraction term; ``eigvecs`` columns combine the
    orthogonalized candidates into basis polynomials.  ``partition`` tags
    each column F (nonvanishing) or G (vanishing).
    """

    parents: tuple
    ortho_weights: np.ndarray
    eigvecs: np.ndarray
    eigvals: np.ndarray
    partition: tuple[str, ...]

    @property
    def num_candidates(self) -> int:
        return len(self.parents)

    @property
    def num_outputs(self) -> int:
        return self.eigvecs.shape[1]

    def columns(self, kind: str) -> np.ndarray:
        return np.array([i for i, tag in enumerate(self.partition) if tag == kind], dtype=int)


@dataclass(frozen=True, eq=False)
class BasisModel:
    """Complete structural record of a basis-construction run."""

    num_vars: int
    constant_value: float
    degrees: tuple[DegreeRecord, ...]
    epsilon: float
    normalization: "NormalizationKind"  # noqa: F821 - defined in .fit
    preprocessing: Preprocessing = field(default_factory=Preprocessing)
    truncated: bool = False

    def __post_init__(self) -> None:
        if self.constant_value == 0.0:
            raise ValueError("constant basis polynomial must be nonzero")
        if self.num_vars < 1:
            raise ValueError("num_vars must be >= 1")

    @property
    def max_degree(self) -> int:
        return len(self.degrees)

    @property
    def deflation_occurred(self) -> bool:
        """Whether any degree dropped normalization-null candidate directions."""
        return any(r.num_outputs < r.num_candidates for r in self.degrees)

    def record(self, degree: int) -> DegreeRecord:
        if not 1 <= degree <= len(self.degrees):
            raise IndexError(f"no degree-{degree} record in this model")
        return self.degrees[degree - 1]

    def handles(self, kind: str | None = None) -> tuple[PolyHandle, ...]:
        """All handles in ascending degree, stored column order.

        Degree 0 (the constant) is included only when ``kind`` is None or
        ``"F"``.
        """
        out = []
        if kind in (None, "F"):
            out.append(PolyHandle(0, 0, "F"))
        for t, rec in enumerate(self.degrees, start=1):
            for col, tag in enumerate(rec.partition):
                if kind is None or tag == kind:
                    out.append(PolyHandle(t, col, tag))
        return tuple(out)

    def g_handles(self) -> tuple[PolyHandle, ...]:
        return self.handles("G")

    def f_handles(self) -> tuple[PolyHandle, ...]:
        return self.handles("F")

    def degree_counts(self) -> tuple[tuple[int, int], ...]:
        """Per-degree ``(|G_t|, |F_t|)`` for degrees 1..max_degree."""
        return tuple(
            (int(np.sum([tag == "G" for tag in rec.partition])),
             int(np.sum([tag == "F" for tag in rec.partition])))
            for rec in self.degrees
        )

    def extent_of_vanishing(self, handle: PolyHandle) -> float:
        """sqrt(eigenvalue) of the handle, i.e. its training evaluation norm."""
        if handle.degree == 0:
            raise ValueError("the constant has no eigenvalue record")
        rec = self.record(handle.degree)
        return float(np.sqrt(max(rec.eigvals[handle.column], 0.0)))

    def validate(self) -> None:
        """Check internal consistency (shapes and partition vs epsilon)."""
        from .fit import classify  # local import to avoid a cycle

        f_counts = [1]
        for t, rec in enumerate(self.degrees, start=1):
            if t == 1:
                if len(rec.parents) != self.num_vars:
                    raise ValueError("degree-1 parent list must cover all variables")
                for k in rec.parents:
                    if not 0 <= int(k) < self.num_vars:
                        raise ValueError("degree-1 parent index out of range")
            else:
                for i, j in rec.parents:
                    if not (0 <= int(i) < f_counts[1] and 0 <= int(j) < f_counts[t - 1]):
                        raise ValueError(f"degree-{t} parent pair out of range")
                if len(rec.parents) != f_counts[1] * f_counts[t - 1]:
                    raise ValueError(f"degree-{t} parent count inconsistent")
            total_f_cols = sum(f_counts[:t])
            if rec.ortho_weights.shape != (total_f_cols, rec.num_candidates):
                raise ValueError(f"degree-{t} weight matrix has wrong shape")
            if rec.eigvecs.shape[0] != rec.num_candidates:
                raise ValueError(f"degree-{t} eigenvector rows != candidate count")
            if rec.eigvecs.shape[1] != rec.eigvals.shape[0] or rec.eigvecs.shape[1] != len(rec.partition):
                raise ValueError(f"degree-{t} output counts inconsistent")
            if rec.num_outputs > rec.num_candidates:
                raise ValueError(f"degree-{t} has more outputs than candidates")
            if tuple(classify(rec.eigvals, self.epsilon)) != tuple(rec.partition):
                raise ValueError(f"degree-{t} partition inconsistent with stored epsilon")
            f_counts.append(len(rec.columns("F")))


# -- shared arithmetic steps (used verbatim by fitting and by replay) --------


def _pair_eval(f1_eval: np.ndarray, ftm1_eval: np.ndarray) -> np.ndarray:
    """Entry-wise products of every (degree-1 F, degree-(t-1) F) pair.

    Pair order is degree-1-major: pair (i, j) lands at column i * n_{t-1} + j.
    """
    m = f1_eval.shape[0]
    return (f1_eval[:, :, None] * ftm1_eval[:, None, :]).reshape(m, -1)


def _pair_grad(
    f1_eval: np.ndarray,
    f1_grad: np.ndarray,
    ftm1_eval: np.ndarray,
    ftm1_grad: np.ndarray,
) -> np.ndarray:
    """Product-rule gradients of the pair products, same column order."""
    m, n, _ = f1_grad.shape
    g = (
        f1_grad[:, :, :, None] * ftm1_eval[:, None, None, :]
        + f1_eval[:, None, :, None] * ftm1_grad[:, :, None, :]
    )
    return g.reshape(m, n, -1)


def _apply_ortho(pre: np.ndarray, f_all: np.ndarray, w: np.ndarray) -> np.ndarray:
    return pre - f_all @ w


def _apply_ortho_grad(pre_grad: np.ndarray, f_grad_all: np.ndarray, w: np.ndarray) -> np.ndarray:
    return pre_grad - np.tensordot(f_grad_all, w, axes=([2], [0]))


class _Forward:
    """Degree-by-degree replay of a model at a given set of points.

    Maintains, per degree, the nonvanishing-block evaluations (and
    optionally gradients) plus the candidate evaluations/gradients of the
    last processed degree.  Fitting drives the identical helpers, so a
    replay at the training points is arithmetically the fit itself.
    """

    def __init__(self, model: BasisModel, points: np.ndarray, need_grads: bool):
        self.model = model
        self.points = points
        self.need_grads = need_grads
        m = points.shape[0]
        n = model.num_vars
        self.f_evals: list[np.ndarray] = [np.full((m, 1), model.constant_value)]
        self.f_grads: list[np.ndarray] = [np.zeros((m, n, 1))]
        self.block_evals: dict[int, np.ndarray] = {}
        self.block_grads: dict[int, np.ndarray] = {}

    def run(self, up_to_degree: int) -> None:
        for t in range(1, up_to_degree + 1):
            rec = self.model.record(t)
            if t == 1:
                pre = self.points[:, list(rec.parents)]
                if self.need_grads:
                    m, n = self.points.shape
                    pre_grad = np.zeros((m, n, len(rec.parents)))
                    for j, k in enumerate(rec.parents):
                        pre_grad[:, int(k), j] = 1.0
            else:
                pre = _pair_eval(self.f_evals[1], self.f_evals[t - 1])
                if self.need_grads:
                    pre_grad = _pair_grad(
                        self.f_evals[1], self.f_grads[1],
                        self.f_evals[t - 1], self.f_grads[t - 1],
                    )
            f_all = np.concatenate(self.f_evals, axis=1)
            c_eval = _apply_ortho(pre, f_all, rec.ortho_weights)
            # same products as at fit time, so training-point replays are
            # bit-identical to the fitted evaluation matrices
            self.block_evals[t] = c_eval @ rec.eigvecs
            f_cols = rec.columns("F")
            v_f = rec.eigvecs[:, f_cols]
            self.f_evals.append(c_eval @ v_f)
            if self.need_grads:
                f_grad_all = np.concatenate(self.f_grads, axis=2)
                c_grad = _apply_ortho_grad(pre_grad, f_grad_all, rec.ortho_weights)
                self.block_grads[t] = np.tensordot(c_grad, rec.eigvecs, axes=([2], [0]))
                self.f_grads.append(np.tensordot(c_grad, v_f, axes=([2], [0])))

    def handle_eval(self, handle: PolyHandle) -> np.ndarray:
        if handle.degree == 0:
            return np.full(self.points.shape[0], self.model.constant_value)
        return self.block_evals[handle.degree][:, handle.column]

    def handle_grad(self, handle: PolyHandle) -> np.ndarray:
        m, n = self.points.shape
        if handle.degree == 0:
            return np.zeros((m, n))
        return self.block_grads[handle.degree][:, :, handle.column]


def _check_handles(model: BasisModel, handles) -> list[PolyHandle]:
    out = list(handles)
    for h in out:
        if h.degree > model.max_degree:
            raise IndexError(f"handle degree {h.degree} exceeds model degree {model.max_degree}")
        if h.degree == 0:
            if h.column != 0 or h.kind != "F":
                raise IndexError("degree 0 has only the constant F handle")
            continue
        rec = model.record(h.degree)
        if h.column >= rec.num_outputs:
            raise IndexError(f"handle column {h.column} out of range at degree {h.degree}")
        if rec.partition[h.column] != h.kind:
            raise ValueError(f"handle {h.label()} kind disagrees with the model partition")
    return out


def _model_space(model: BasisModel, points) -> np.ndarray:
    pts = points.points if isinstance(points, PointSet) else np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != model.num_vars:
        raise ValueError(f"expected points with {model.num_vars} columns")
    if not np.isfinite(pts).all():
        raise ValueError("points contain NaN or Inf")
    return model.preprocessing.apply(pts)


def evaluate(model: BasisModel, handles, points) -> np.ndarray:
    """Evaluation matrix of the given handles at the given points.

    Points are given in the coordinates the model was fit from; the model's
    recorded preprocessing is applied before the replay.  Returns shape
    ``(num_points, len(handles))``.
    """
    handles = _check_handles(model, handles)
    pts = _model_space(model, points)
    fwd = _Forward(model, pts, need_grads=False)
    fwd.run(max((h.degree for h in handles), default=0))
    if not handles:
        return np.zeros((pts.shape[0], 0))
    return np.column_stack([fwd.handle_eval(h) for h in handles])


def gradient(model: BasisModel, handles, points) -> list[np.ndarray]:
    """Per-handle gradient matrices, each of shape ``(num_points, num_vars)``.

    Gradients are taken with respect to model-space coordinates (the
    coordinates the basis polynomials live in); they are computed by the
    product-rule recursion over cached parent values, not by symbolic
    differentiation or finite differences.
    """
    handles = _check_handles(model, handles)
    pts = _model_space(model, points)
    fwd = _Forward(model, pts, need_grads=True)
    fwd.run(max((h.degree for h in handles), default=0))
    return [fwd.handle_grad(h) for h in handles]


def _combine_expansion(pre_exps, flat_f, w, u) -> DensePolynomial:
    """Weighted candidate products minus the orthogonalization subtraction."""
    num_vars = flat_f[0].num_vars
    wu = w @ u
    out = DensePolynomial.zero(num_vars)
    for j, p in enumerate(pre_exps):
        if u[j] != 0.0:
            out = out + p.scale(float(u[j]))
    for f_idx, p in enumerate(flat_f):
        if wu[f_idx] != 0.0:
            out = out - p.scale(float(wu[f_idx]))
    return out


_EXPANSION_CACHE: "weakref.WeakKeyDictionary[BasisModel, dict]" = weakref.WeakKeyDictionary()
_EXPANSION_LOCK = threading.Lock()


def _extend_expansions(model: BasisModel, degree: int, term_cap: int) -> dict:
    """Per-model cache of degree-wise expansions, grown on demand.

    ``pre`` maps a degree to its pre-candidate expansions; ``f_blocks[t]``
    holds the degree-t nonvanishing expansions.  Models are immutable, so
    the cache is shared by all expansion requests against the same model.
    """
    with _EXPANSION_LOCK:
        state = _EXPANSION_CACHE.get(model)
        if state is None:
            n = model.num_vars
            state = {
                "f_blocks": [[DensePolynomial.constant(n, model.constant_value)]],
                "pre": {},
            }
            _EXPANSION_CACHE[model] = state
        n = model.num_vars
        for t in range(1, degree + 1):
            done_pre = t in state["pre"]
            need_f_block = t < degree and len(state["f_blocks"]) <= t
            if done_pre and not need_f_block:
                continue
            if monomial_count(n, t) > term_cap:
                raise ExpansionLimitError(
                    f"expansion at degree {t} in {n} variables may exceed "
                    f"{term_cap} terms"
                )
            rec = model.record(t)
            if not done_pre:
                if t == 1:
                    pre = [DensePolynomial.variable(n, int(k)) for k in rec.parents]
                else:
                    f1 = state["f_blocks"][1]
                    ftm1 = state["f_blocks"][t - 1]
                    pre = [f1[int(i)] * ftm1[int(j)] for i, j in rec.parents]
                state["pre"][t] = pre
            if need_f_block:
                flat_f = [p for block in state["f_blocks"][:t] for p in block]
                state["f_blocks"].append(
                    [
                        _combine_expansion(
                            state["pre"][t], flat_f, rec.ortho_weights,
                            rec.eigvecs[:, int(c)],
                        )
                        for c in rec.columns("F")
                    ]
                )
        return state


def expand(model: BasisModel, handle: PolyHandle, term_cap: int = EXPANSION_TERM_CAP) -> DensePolynomial:
    """Exact symbolic expansion of one basis polynomial (model space).

    Replays the construction over dense polynomial arithmetic.  Cost is
    exponential in degree, so a term-count guard refuses expansions whose
    dense size bound exceeds ``term_cap``.
    """
    (handle,) = _check_handles(model, [handle])
    if handle.degree == 0:
        return DensePolynomial.constant(model.num_vars, model.constant_value)
    if monomial_count(model.num_vars, handle.degree) > term_cap:
        raise ExpansionLimitError(
            f"expansion at degree {handle.degree} in {model.num_vars} variables "
            f"may exceed {term_cap} terms"
        )
    state = _extend_expansions(model, handle.degree, term_cap)
    rec = model.record(handle.degree)
    flat_f = [p for block in state["f_blocks"][: handle.degree] for p in block]
    return _combine_expansion(
        state["pre"][handle.degree], flat_f, rec.ortho_weights,
        rec.eigvecs[:, handle.column],
    )


def gradient_with_op_count(model: BasisModel, handle: PolyHandle, point) -> tuple[np.ndarray, int]:
    """Gradient of one handle at one point, counting the propagation cost.

    The final-degree propagation is run as explicit scalar arithmetic and
    every multiply/add is counted.  Parent values and gradients come from
    the lower-degree passes (they are shared across polynomials during a
    fit) and are not charged to this polynomial, matching the per-point,
    per-polynomial cost contract of the recursion.
    """
    (handle,) = _check_handles(model, [handle])
    pts = _model_space(model, point)
    if pts.shape[0] != 1:
        raise ValueError("op-counted propagation takes a single point")
    n = model.num_vars
    if handle.degree == 0:
        return np.zeros(n), 0

    fwd = _Forward(model, pts, need_grads=True)
    fwd.run(handle.degree - 1)
    rec = model.record(handle.degree)
    u = rec.eigvecs[:, handle.column]
    wu = rec.ortho_weights @ u  # per-polynomial description, shared across points

    f_vals = [blk[0] for blk in fwd.f_evals]  # per degree: (count,)
    f_grads = [blk[0] for blk in fwd.f_grads]  # per degree: (n, count)

    ops = 0
    grad = np.zeros(n)
    if handle.degree == 1:
        # Degree-1 candidates are raw coordinates; their gradients are the
        # standard basis, and lower-degree polynomials (the constant) have
        # zero gradient, so the combination vector is the gradient.
        for j, k in enumerate(rec.parents):
            grad[int(k)] += u[j]
            ops += 1
        return grad, ops

    left_vals, left_grads = f_vals[1], f_grads[1]
    right_vals, right_grads = f_vals[handle.degree - 1], f_grads[handle.degree - 1]
    pairs = [(int(i), int(j)) for i, j in rec.parents]
    a = np.zeros(len(pairs))
    b = np.zeros(len(pairs))
    for c, (i, j) in enumerate(pairs):
        a[c] = u[c] * right_vals[j]
        b[c] = u[c] * left_vals[i]
        ops += 2
    flat_f_grads = np.concatenate(f_grads, axis=1)  # (n, total F columns)
    for k in range(n):
        acc = 0.0
        for c, (i, j) in enumerate(pairs):
            acc += a[c] * left_grads[k, i] + b[c] * right_grads[k, j]
            ops += 4
        for f_idx in range(flat_f_grads.shape[1]):
            acc -= wu[f_idx] * flat_f_grads[k, f_idx]
            ops += 2
        grad[k] = acc
    return grad, ops
