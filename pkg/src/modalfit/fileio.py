"""File formats for samples, models, fit reports and error tables.

Floats are written with 17 significant digits, which round-trips every double
exactly, so write -> read -> write is byte-stable. Every writer goes through a
temporary file in the target directory followed by an atomic rename.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

from .types import FirstOrderModel, FitReport, FrequencySampleSet, SecondOrderModel

SAMPLES_HEADER = ("xi_re", "xi_im", "h_re", "h_im")
REPORT_HEADER = ("iter", "max_den_weight", "ls_residual", "max_rel_err", "max_pole_move")
ERRORS_HEADER = ("xi_im", "rel_err")
EVAL_HEADER = ("omega", "h_re", "h_im", "h_abs", "flag")


class FormatError(ValueError):
    """A file does not follow the expected layout."""


def fmt(x: float) -> str:
    return format(float(x), ".16e")


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _read_rows(path, header: Sequence[str]) -> list[list[str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != tuple(header):
        raise FormatError(f"{path}: expected header {','.join(header)}")
    body = rows[1:]
    for k, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise FormatError(f"{path}:{k}: expected {len(header)} fields, got {len(row)}")
    return body


def _floats(path, rows, columns: int) -> np.ndarray:
    try:
        return np.array([[float(v) for v in row[:columns]] for row in rows], dtype=float).reshape(-1, columns)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_table(path, header: Sequence[str], rows) -> None:
    atomic_write_text(path, _csv_text(header, rows))


# samples

def samples_to_csv(samples: FrequencySampleSet) -> str:
    rows = ((fmt(z.real), fmt(z.imag), fmt(h.real), fmt(h.imag))
            for z, h in zip(samples.points.tolist(), samples.values.tolist()))
    return _csv_text(SAMPLES_HEADER, rows)


def write_samples(path, samples: FrequencySampleSet) -> None:
    atomic_write_text(path, samples_to_csv(samples))


def read_samples(path) -> FrequencySampleSet:
    data = _floats(path, _read_rows(path, SAMPLES_HEADER), 4)
    if data.shape[0] == 0:
        raise FormatError(f"{path}: no samples")
    return FrequencySampleSet(data[:, 0] + 1j * data[:, 1], data[:, 2] + 1j * data[:, 3])


# models

def model_to_dict(model) -> dict:
    if isinstance(model, SecondOrderModel):
        return {
            "type": "second_order_modal",
            "omega": model.omega.tolist(),
            "psi": model.psi.tolist(),
            "b": model.b.tolist(),
            "c": model.c.tolist(),
        }
    if isinstance(model, FirstOrderModel):
        residues = model.b * model.c
        return {
            "type": "first_order",
            "lambda_re": model.a.real.tolist(),
            "lambda_im": model.a.imag.tolist(),
            "phi_re": residues.real.tolist(),
            "phi_im": residues.imag.tolist(),
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_dict(data: dict):
    kind = data.get("type")
    try:
        if kind == "second_order_modal":
            return SecondOrderModel(data["omega"], data["psi"], data["b"], data.get("c"))
        if kind == "first_order":
            lam = np.asarray(data["lambda_re"], float) + 1j * np.asarray(data["lambda_im"], float)
            phi = np.asarray(data["phi_re"], float) + 1j * np.asarray(data["phi_im"], float)
            return FirstOrderModel(lam, phi)
    except KeyError as exc:
        raise FormatError(f"model is missing field {exc}") from None
    raise FormatError(f"unknown model type {kind!r}")


def write_model(path, model) -> None:
    atomic_write_text(path, json.dumps(model_to_dict(model)) + "\n")


def read_model(path):
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise FormatError(f"{path}: expected a JSON object")
    return model_from_dict(data)


# reports and error tables

def report_to_csv(report: FitReport) -> str:
    rows = ((str(rec.iteration), fmt(rec.max_den_weight), fmt(rec.ls_residual),
             fmt(rec.max_rel_err), fmt(rec.max_pole_move)) for rec in report.records)
    return _csv_text(REPORT_HEADER, rows)


def write_report(path, report: FitReport) -> None:
    atomic_write_text(path, report_to_csv(report))


def errors_to_csv(xi_im: np.ndarray, columns: dict[str, np.ndarray], footer: bool = False) -> str:
    """One row per point; with ``footer`` two extra rows hold the max and mean of every column."""
    names = list(columns)
    header = ["xi_im", *names]
    cols = [np.asarray(columns[n], float) for n in names]
    rows = [[fmt(x), *(fmt(c[i]) for c in cols)] for i, x in enumerate(np.asarray(xi_im, float))]
    if footer:
        rows.append(["max", *(fmt(np.max(c)) for c in cols)])
        rows.append(["mean", *(fmt(np.mean(c)) for c in cols)])
    return _csv_text(header, rows)


def write_errors(path, xi_im, columns: dict[str, np.ndarray], footer: bool = False) -> None:
    atomic_write_text(path, errors_to_csv(xi_im, columns, footer))


def read_errors(path) -> tuple[list[str], np.ndarray, dict[str, float], dict[str, float]]:
    """Return ``(names, table, max_row, mean_row)``; footer rows are split off when present."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "xi_im":
        raise FormatError(f"{path}: expected a header starting with xi_im")
    names = rows[0][1:]
    body = [r for r in rows[1:] if r[0] not in ("max", "mean")]
    summary = {r[0]: dict(zip(names, map(float, r[1:]))) for r in rows[1:] if r[0] in ("max", "mean")}
    table = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(-1, len(names) + 1)
    return names, table, summary.get("max", {}), summary.get("mean", {})
