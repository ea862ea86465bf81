"""Dataset ingestion, built-in data, and result persistence.

CSV files are UTF-8, comma-separated, '.' decimal, with a header row.
Floats are written with ``repr`` so values survive a round trip exactly.
JSON documents carry a ``schema_version`` field.
"""

import csv
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import (
    CountMismatch,
    DatasetUnavailable,
    NonFinite,
    OutOfRange,
    ParseError,
    RaggedRows,
    UnknownDataset,
)
from .selection import CriterionCurve, ModelOrderPosterior, OrderDiagnostics

SCHEMA_VERSION = 1

BUILTIN_COUNTS = {"enzyme": 245, "acidity": 155, "galaxy": 82}

BUILTIN_FILES = {name: f"{name}.csv" for name in BUILTIN_COUNTS}


@dataclass
class RealDataset:
    """One of the built-in one-dimensional benchmark datasets."""

    name: str
    values: np.ndarray

    @property
    def data(self) -> np.ndarray:
        return self.values[:, None]


def _fmt(x) -> str:
    return repr(float(x))


def load_csv(path, has_header: bool = False, label_column=None):
    """Read a rectangular numeric CSV into an (N, d) array.

    ``label_column`` (an integer index or, with a header, a column name)
    is split off and returned as an integer vector; otherwise labels are
    None.  Malformed cells raise ParseError with a 1-based location;
    NaN/Inf cells raise NonFinite; inconsistent widths raise RaggedRows.
    """
    with open(path, newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    return _parse_rows(rows, has_header, label_column)


def _parse_rows(rows, has_header, label_column):
    rows = [r for r in rows if r]
    if not rows:
        raise ParseError("empty file")
    header = None
    if has_header:
        header, rows = rows[0], rows[1:]
        if not rows:
            raise ParseError("no data rows after header")

    label_idx = None
    if label_column is not None:
        if isinstance(label_column, str):
            if header is None or label_column not in header:
                raise ParseError(f"label column {label_column!r} not in header")
            label_idx = header.index(label_column)
        else:
            label_idx = int(label_column)

    width = len(rows[0])
    values = np.empty((len(rows), width))
    offset = 2 if has_header else 1
    for i, row in enumerate(rows):
        if len(row) != width:
            raise RaggedRows(f"row {i + offset} has {len(row)} cells, expected {width}")
        for j, cell in enumerate(row):
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise ParseError(f"cannot parse {cell!r}", row=i + offset, col=j + 1) from None
            if not math.isfinite(values[i, j]):
                raise NonFinite(f"non-finite value at row {i + offset} col {j + 1}")

    if label_idx is None:
        return values, None
    if not 0 <= label_idx < width:
        raise ParseError(f"label column index {label_idx} out of range")
    labels = values[:, label_idx].astype(int)
    data = np.delete(values, label_idx, axis=1)
    return data, labels


def write_csv_dataset(data, path, labels=None, columns=None):
    """Write an (N, d) array (plus optional integer labels) as CSV."""
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    d = data.shape[1]
    if columns is None:
        columns = [f"x{j + 1}" for j in range(d)]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(columns) + (["label"] if labels is not None else []))
        for i in range(data.shape[0]):
            row = [_fmt(v) for v in data[i]]
            if labels is not None:
                row.append(str(int(labels[i])))
            writer.writerow(row)


def load_builtin(name: str) -> RealDataset:
    """Load a vendored benchmark dataset by name.

    Raises UnknownDataset for unrecognized names, DatasetUnavailable when
    a recognized dataset has no vendored file (see datasets/PROVENANCE.md),
    and CountMismatch when the file does not hold the documented number of
    values.
    """
    if name not in BUILTIN_COUNTS:
        raise UnknownDataset(f"no built-in dataset named {name!r}")
    resource = resources.files("gmmselect.datasets").joinpath(BUILTIN_FILES[name])
    if not resource.is_file():
        raise DatasetUnavailable(
            f"dataset {name!r} is recognized but not vendored; "
            "see gmmselect/datasets/PROVENANCE.md for how to supply it"
        )
    with resources.as_file(resource) as path:
        values, _ = load_csv(path, has_header=True)
    values = values.reshape(-1)
    if values.shape[0] != BUILTIN_COUNTS[name]:
        raise CountMismatch(
            f"{name} should hold {BUILTIN_COUNTS[name]} values, found {values.shape[0]}"
        )
    return RealDataset(name=name, values=values)


def available_builtins() -> list:
    """Names of built-in datasets that are actually vendored."""
    out = []
    for name in sorted(BUILTIN_COUNTS):
        if resources.files("gmmselect.datasets").joinpath(BUILTIN_FILES[name]).is_file():
            out.append(name)
    return out


# ---------------------------------------------------------------------------
# Result persistence


def emit_results(obj, path, format: str = "csv", timings: bool = False):
    """Write a posterior, criterion curve, or sweep result to disk.

    CSV holds one row per record at full float precision; JSON is a
    schema-versioned document that loads back field-for-field.  Sweep
    wall-times are only written when ``timings`` is set, keeping default
    outputs byte-identical across runs.
    """
    from .sweep import SweepResult  # local import to avoid a cycle

    path = Path(path)
    if format not in ("csv", "json"):
        raise OutOfRange(f"format must be csv or json, got {format!r}")
    if isinstance(obj, ModelOrderPosterior):
        _emit_posterior(obj, path, format)
    elif isinstance(obj, CriterionCurve):
        _emit_curve(obj, path, format)
    elif isinstance(obj, SweepResult):
        _emit_sweep(obj, path, format, timings)
    else:
        raise OutOfRange(f"cannot emit a {type(obj).__name__}")


def _emit_posterior(post, path, format):
    if format == "csv":
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["K", "log_score", "prob"])
            for k, score, prob in zip(post.k_values, post.log_scores, post.probs):
                writer.writerow([k, _fmt(score), _fmt(prob)])
        return
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "model_order_posterior",
        "k_values": list(post.k_values),
        "log_scores": [float(v) for v in post.log_scores],
        "probs": [float(v) for v in post.probs],
        "k_star": post.k_star,
        "capped_from": post.capped_from,
        "diagnostics": [
            {
                "k": diag.k,
                "elbo": diag.elbo,
                "restart": diag.restart,
                "strategy": diag.strategy,
                "iterations": diag.iterations,
                "fallbacks": list(diag.fallbacks),
            }
            for diag in post.diagnostics
        ],
    }
    _write_json(doc, path)


def load_posterior_json(path) -> ModelOrderPosterior:
    doc = _read_json(path, "model_order_posterior")
    return ModelOrderPosterior(
        k_values=list(doc["k_values"]),
        log_scores=np.array(doc["log_scores"]),
        probs=np.array(doc["probs"]),
        k_star=doc["k_star"],
        diagnostics=[OrderDiagnostics(**d) for d in doc["diagnostics"]],
        capped_from=doc["capped_from"],
    )


def _emit_curve(curve, path, format):
    if format == "csv":
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["K", "loglik", "aic", "bic"])
            for k, ll, a, b in zip(curve.k_values, curve.logliks, curve.aic, curve.bic):
                writer.writerow([k, _fmt(ll), _fmt(a), _fmt(b)])
        return
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "criterion_curve",
        "k_values": list(curve.k_values),
        "logliks": [float(v) for v in curve.logliks],
        "aic": [float(v) for v in curve.aic],
        "bic": [float(v) for v in curve.bic],
        "k_aic": curve.k_aic,
        "k_bic": curve.k_bic,
        "n_obs": curve.n_obs,
    }
    _write_json(doc, path)


def load_curve_json(path) -> CriterionCurve:
    doc = _read_json(path, "criterion_curve")
    return CriterionCurve(
        k_values=list(doc["k_values"]),
        logliks=np.array(doc["logliks"]),
        aic=np.array(doc["aic"]),
        bic=np.array(doc["bic"]),
        k_aic=doc["k_aic"],
        k_bic=doc["k_bic"],
        n_obs=doc["n_obs"],
    )


def _emit_sweep(sweep, path, format, timings):
    if format == "csv":
        header = ["k_hat", "n", "seed", "method", "k_star", "error"]
        if timings:
            header.append("runtime_seconds")
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(header)
            for cell in sweep.cells:
                row = [cell.k_hat, cell.n, cell.seed, cell.method,
                       "" if cell.k_star is None else cell.k_star,
                       cell.error or ""]
                if timings:
                    row.append(_fmt(cell.runtime_seconds))
                writer.writerow(row)
        return
    doc = sweep.to_doc(timings=timings)
    _write_json(doc, path)


def load_sweep_json(path):
    from .sweep import SweepResult

    doc = _read_json(path, "sweep_result")
    return SweepResult.from_doc(doc)


def export_model_json(weights, means, precisions, diagnostics, path):
    """Persist a fitted mixture in the model JSON schema."""
    means = np.atleast_2d(np.asarray(means, dtype=float))
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "gmm_model",
        "d": means.shape[1],
        "K": means.shape[0],
        "weights": [float(w) for w in np.asarray(weights).reshape(-1)],
        "means": [[float(v) for v in row] for row in means],
        "precisions": [[[float(v) for v in row] for row in q]
                       for q in np.asarray(precisions, dtype=float)],
        "diagnostics": diagnostics,
    }
    _write_json(doc, path)


def load_model_json(path) -> dict:
    return _read_json(path, "gmm_model")


def _write_json(doc, path):
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=2)
        handle.write("\n")


def _read_json(path, kind):
    with open(path, encoding="utf-8") as handle:
        doc = json.load(handle)
    if doc.get("kind") != kind:
        raise ParseError(f"expected a {kind} document, got {doc.get('kind')!r}")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema_version {doc.get('schema_version')!r}")
    return doc
