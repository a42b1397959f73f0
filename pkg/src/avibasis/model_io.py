"""JSON persistence for fitted models and reduction reports.

Floats are stored as 17-significant-digit decimal strings so doubles
round-trip exactly: serialize -> deserialize -> serialize is byte-identical
and a reloaded model evaluates bit-for-bit like the in-memory one.
"""

from __future__ import annotations

import json

import numpy as np

from .fit import NormalizationKind
from .model import BasisModel, DegreeRecord, PolyHandle, Preprocessing
from .reduction import DeflationRecord, ReductionReport, RemovedPolynomial

__all__ = [
    "FORMAT_VERSION",
    "model_to_dict",
    "model_from_dict",
    "report_to_dict",
    "report_from_dict",
    "save_model",
    "load_model",
    "dumps",
]

FORMAT_VERSION = 1


def _enc(x: float) -> str:
    return f"{float(x):.17g}"


def _enc_array(a: np.ndarray):
    if a.ndim == 1:
        return [_enc(x) for x in a]
    return [_enc_array(row) for row in a]


def _dec_vector(data) -> np.ndarray:
    return np.array([float(x) for x in data], dtype=float)


def _dec_matrix(data, cols_hint: int | None = None) -> np.ndarray:
    rows = [[float(x) for x in row] for row in data]
    if not rows:
        return np.zeros((0, cols_hint or 0))
    width = len(rows[0])
    return np.array(rows, dtype=float).reshape(len(rows), width)


def _handle_to_dict(h: PolyHandle) -> dict:
    return {"degree": h.degree, "column": h.column, "kind": h.kind}


def _handle_from_dict(d: dict) -> PolyHandle:
    return PolyHandle(int(d["degree"]), int(d["column"]), str(d["kind"]))


def model_to_dict(model: BasisModel, report: ReductionReport | None = None) -> dict:
    degrees = []
    for t, rec in enumerate(model.degrees, start=1):
        parents = (
            [int(k) for k in rec.parents]
            if t == 1
            else [[int(i), int(j)] for i, j in rec.parents]
        )
        degrees.append(
            {
                "degree": t,
                "parents": parents,
                "ortho_weights": _enc_array(rec.ortho_weights),
                "eigvecs": _enc_array(rec.eigvecs),
                "eigvals": _enc_array(rec.eigvals),
                "partition": list(rec.partition),
            }
        )
    prep = model.preprocessing
    out = {
        "format_version": FORMAT_VERSION,
        "num_vars": model.num_vars,
        "constant_value": _enc(model.constant_value),
        "epsilon": _enc(model.epsilon),
        "normalization": {
            "variant": model.normalization.variant,
            "var_subset": list(model.normalization.var_subset)
            if model.normalization.var_subset is not None
            else None,
            "point_subset": list(model.normalization.point_subset)
            if model.normalization.point_subset is not None
            else None,
        },
        "preprocessing": {
            "center": _enc_array(prep.center) if prep.center is not None else None,
            "scale": _enc(prep.scale) if prep.scale is not None else None,
        },
        "truncated": model.truncated,
        "degrees": degrees,
    }
    if report is not None:
        out["reduction"] = report_to_dict(report)
    return out


def model_from_dict(data: dict) -> tuple[BasisModel, ReductionReport | None]:
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version!r}")
    records = []
    for entry in sorted(data["degrees"], key=lambda e: int(e["degree"])):
        t = int(entry["degree"])
        if t == 1:
            parents: tuple = tuple(int(k) for k in entry["parents"])
        else:
            parents = tuple((int(i), int(j)) for i, j in entry["parents"])
        eigvals = _dec_vector(entry["eigvals"])
        eigvecs = _dec_matrix(entry["eigvecs"], cols_hint=eigvals.size)
        if eigvecs.shape[0] == 0:
            eigvecs = np.zeros((len(parents), eigvals.size))
        weights = _dec_matrix(entry["ortho_weights"], cols_hint=len(parents))
        records.append(
            DegreeRecord(
                parents=parents,
                ortho_weights=weights,
                eigvecs=eigvecs,
                eigvals=eigvals,
                partition=tuple(str(tag) for tag in entry["partition"]),
            )
        )
    norm = data["normalization"]
    kind = NormalizationKind(
        norm["variant"],
        tuple(norm["var_subset"]) if norm.get("var_subset") is not None else None,
        tuple(norm["point_subset"]) if norm.get("point_subset") is not None else None,
    )
    prep_data = data.get("preprocessing") or {}
    prep = Preprocessing(
        center=_dec_vector(prep_data["center"]) if prep_data.get("center") is not None else None,
        scale=float(prep_data["scale"]) if prep_data.get("scale") is not None else None,
    )
    model = BasisModel(
        num_vars=int(data["num_vars"]),
        constant_value=float(data["constant_value"]),
        degrees=tuple(records),
        epsilon=float(data["epsilon"]),
        normalization=kind,
        preprocessing=prep,
        truncated=bool(data.get("truncated", False)),
    )
    model.validate()
    report = report_from_dict(data["reduction"]) if "reduction" in data else None
    return model, report


def report_to_dict(report: ReductionReport) -> dict:
    return {
        "threshold": _enc(report.threshold),
        "kept": [_handle_to_dict(h) for h in report.kept],
        "removed": [
            {
                "handle": _handle_to_dict(r.handle),
                "max_residual": _enc(r.max_residual),
                "per_point_residuals": _enc_array(r.per_point_residuals),
            }
            for r in report.removed
        ],
        "rank_deflated": [
            {
                "degree": rec.degree,
                "removed": [_handle_to_dict(h) for h in rec.removed],
                "original_count": rec.original_count,
                "gram_rank": rec.gram_rank,
            }
            for rec in report.rank_deflated
        ],
    }


def report_from_dict(data: dict) -> ReductionReport:
    return ReductionReport(
        kept=tuple(_handle_from_dict(h) for h in data["kept"]),
        removed=tuple(
            RemovedPolynomial(
                _handle_from_dict(r["handle"]),
                float(r["max_residual"]),
                _dec_vector(r["per_point_residuals"]),
            )
            for r in data["removed"]
        ),
        rank_deflated=tuple(
            DeflationRecord(
                int(rec["degree"]),
                tuple(_handle_from_dict(h) for h in rec["removed"]),
                int(rec["original_count"]),
                int(rec["gram_rank"]),
            )
            for rec in data["rank_deflated"]
        ),
        threshold=float(data["threshold"]),
    )


def dumps(data: dict) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def save_model(path, model: BasisModel, report: ReductionReport | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(model_to_dict(model, report)))


def load_model(path) -> tuple[BasisModel, ReductionReport | None]:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
