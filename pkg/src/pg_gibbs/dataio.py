"""Strict CSV ingestion and the bundled example datasets.

Dialect: comma separated, header row required, UTF-8, '.' decimal point.
The response column must hold exactly 0 or 1.
"""

from __future__ import annotations

import csv
import math
from importlib import resources
from pathlib import Path

import numpy as np

from .model import Dataset

BUNDLED = ("proper_2x1", "separated", "n4p1", "n6p2")


class CSVFormatError(ValueError):
    """Malformed input; the message names the offending row and column."""


def _parse_float(text: str, row: int, col: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise CSVFormatError(f"row {row}, column {col!r}: cannot parse {text!r} as a number") from None
    if not math.isfinite(v):
        raise CSVFormatError(f"row {row}, column {col!r}: non-finite value {text!r}")
    return v


def read_dataset(
    path,
    y: str = "y",
    covariates: list[str] | str = "all-others",
    intercept: bool = False,
) -> Dataset:
    """Load a Dataset from CSV. Rows are numbered as file lines, header = row 1."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except UnicodeDecodeError as exc:
        raise CSVFormatError(f"{path}: not valid UTF-8 ({exc.reason})") from None
    if not rows or not any(h.strip() for h in rows[0]):
        raise CSVFormatError(f"{path}: missing header row")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise CSVFormatError(f"{path}: duplicate column names in header")
    if y not in header:
        raise CSVFormatError(f"{path}: response column {y!r} not found in header {header}")
    if covariates == "all-others":
        cov = [h for h in header if h != y]
    else:
        cov = list(covariates)
        missing = [c for c in cov if c not in header]
        if missing:
            raise CSVFormatError(f"{path}: covariate column(s) {missing} not found in header")
        if y in cov:
            raise CSVFormatError(f"{path}: response column {y!r} listed as a covariate")
    if not cov and not intercept:
        raise CSVFormatError("no covariates selected; add --intercept or name covariate columns")
    iy = header.index(y)
    ic = [header.index(c) for c in cov]

    ys, xs = [], []
    for lineno, rec in enumerate(rows[1:], start=2):
        if not rec or (len(rec) == 1 and not rec[0].strip()):
            continue  # blank line
        if len(rec) != len(header):
            raise CSVFormatError(f"row {lineno}: expected {len(header)} fields, found {len(rec)}")
        yt = rec[iy].strip()
        if yt not in ("0", "1"):
            raise CSVFormatError(f"row {lineno}, column {y!r}: response must be 0 or 1, got {yt!r}")
        ys.append(float(yt))
        xs.append([_parse_float(rec[j].strip(), lineno, header[j]) for j in ic])
    if not ys:
        raise CSVFormatError(f"{path}: no data rows")
    X = np.array(xs, dtype=float).reshape(len(ys), len(cov))
    names = tuple(cov)
    if intercept:
        X = np.column_stack([np.ones(len(ys)), X])
        names = ("intercept",) + names
    return Dataset(X, np.array(ys), names)


def bundled_path(name: str) -> Path:
    if name not in BUNDLED:
        raise KeyError(f"unknown bundled dataset {name!r}; choose from {BUNDLED}")
    return Path(str(resources.files("pg_gibbs") / "data" / f"{name}.csv"))


def load_bundled(name: str) -> Dataset:
    """The bundled examples. Intercept-only files get an intercept column;
    n6p2 is an intercept plus one covariate."""
    return read_dataset(bundled_path(name), intercept=name in ("proper_2x1", "separated", "n6p2"))


def write_draws(path, draws_per_chain, names, burnin: int, thin: int) -> None:
    """Draws CSV: chain, iteration, then one column per coefficient; floats via repr."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["chain", "iteration", *names])
        for k, d in enumerate(draws_per_chain):
            for i, row in enumerate(np.asarray(d)):
                w.writerow([k, burnin + i * thin, *(repr(float(v)) for v in row)])


def read_draws(path) -> tuple[list[str], np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of :func:`write_draws`: (names, chain ids, iterations, draws)."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    names = rows[0][2:]
    body = rows[1:]
    chain = np.array([int(r[0]) for r in body], dtype=int)
    it = np.array([int(r[1]) for r in body], dtype=int)
    draws = np.array([[float(v) for v in r[2:]] for r in body], dtype=float).reshape(len(body), len(names))
    return names, chain, it, draws
