"""Reading and writing LIBSVM/SVMLight and CSV datasets."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, EmptyFile, ParseError
from .kernels import Dataset


def _parse_label(token: str, lineno: int, classify: bool):
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"bad label {token!r}", lineno) from None
    if not np.isfinite(value):
        raise ParseError(f"non-finite label {token!r}", lineno)
    if classify and value.is_integer():
        return int(value)
    return value


def _finish(rows, labels, d, n_features, classify):
    if not rows:
        raise EmptyFile("no data rows found")
    if n_features is not None:
        if d > n_features:
            raise DimensionMismatch(f"data has feature index {d} but only {n_features} expected")
        d = n_features
    X = np.zeros((len(rows), d))
    for i, row in enumerate(rows):
        for j, v in row:
            X[i, j] = v
    y = np.array(labels) if classify else np.array(labels, dtype=np.float64)
    return Dataset(X, y)


def parse_libsvm(path, task: str = "classify", n_features: int | None = None) -> Dataset:
    """Read a LIBSVM/SVMLight file into a dense :class:`Dataset`.

    Feature indices are 1-based; the dense width is the largest index seen, or
    ``n_features`` when given (padding test files to the training width).
    ``#`` starts a comment and ``qid:`` tokens are ignored.
    """
    classify = task == "classify"
    rows, labels = [], []
    d = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            labels.append(_parse_label(tokens[0], lineno, classify))
            row = []
            for tok in tokens[1:]:
                key, sep, val = tok.partition(":")
                if not sep:
                    raise ParseError(f"expected index:value, got {tok!r}", lineno)
                if key == "qid":
                    continue
                try:
                    idx = int(key)
                    value = float(val)
                except ValueError:
                    raise ParseError(f"bad feature token {tok!r}", lineno) from None
                if idx < 1:
                    raise ParseError(f"feature indices are 1-based, got {idx}", lineno)
                if not np.isfinite(value):
                    raise ParseError(f"non-finite value in {tok!r}", lineno)
                row.append((idx - 1, value))
                d = max(d, idx)
            rows.append(row)
    return _finish(rows, labels, d, n_features, classify)


def write_libsvm(path, X, y) -> None:
    """Write nonzero entries of ``X`` in LIBSVM format (values round-trip exactly)."""
    X = np.asarray(X, dtype=np.float64)
    with open(path, "w", encoding="utf-8") as fh:
        for xi, yi in zip(X, np.asarray(y).tolist()):
            feats = " ".join(f"{j + 1}:{float(v)!r}" for j, v in enumerate(xi) if v != 0.0)
            fh.write(f"{yi} {feats}".rstrip() + "\n")


def parse_csv(path, task: str = "classify", header: bool = False,
              n_features: int | None = None) -> Dataset:
    """Read a CSV whose first column is the target and the rest are features."""
    classify = task == "classify"
    rows, labels = [], []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, rec in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not rec or all(not c.strip() for c in rec):
                continue
            labels.append(_parse_label(rec[0].strip(), lineno, classify))
            try:
                vals = [float(c) for c in rec[1:]]
            except ValueError:
                raise ParseError("non-numeric feature", lineno) from None
            if not all(np.isfinite(vals)):
                raise ParseError("non-finite feature", lineno)
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise ParseError(f"expected {width} features, got {len(vals)}", lineno)
            rows.append(list(enumerate(vals)))
    if n_features is not None and width is not None and width != n_features:
        raise DimensionMismatch(f"data has {width} features but {n_features} expected")
    return _finish(rows, labels, width or 0, n_features, classify)


def load_dataset(path, fmt: str = "libsvm", task: str = "classify", header: bool = False,
                 n_features: int | None = None) -> Dataset:
    if not Path(path).exists():
        raise FileNotFoundError(path)
    if fmt == "csv":
        return parse_csv(path, task=task, header=header, n_features=n_features)
    return parse_libsvm(path, task=task, n_features=n_features)
