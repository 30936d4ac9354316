"""MatrixMarket coordinate and headerless dense CSV reading/writing.

Values are written with ``repr`` so a write/read round trip is exact.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import ParameterError, ParseError
from .matrix import Matrix

__all__ = ["load_matrix", "save_matrix", "read_matrixmarket", "read_csv_dense", "guess_format"]

MM_HEADER = "%%MatrixMarket matrix coordinate real general"
FORMATS = ("matrixmarket", "csv-dense")


def guess_format(path) -> str:
    ext = os.path.splitext(str(path))[1].lower()
    if ext in (".mtx", ".mm"):
        return "matrixmarket"
    if ext in (".csv", ".txt"):
        return "csv-dense"
    raise ParameterError(f"cannot infer matrix format from {path!r}; pass it explicitly")


def _number(tok, lineno, what):
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"bad {what} {tok!r}", lineno) from None
    if not np.isfinite(v):
        raise ParseError(f"non-finite {what} {tok!r}", lineno)
    return v


def _index(tok, lineno, what):
    try:
        return int(tok)
    except ValueError:
        raise ParseError(f"bad {what} {tok!r}", lineno) from None


def read_matrixmarket(lines) -> Matrix:
    it = iter(enumerate(lines, start=1))
    try:
        lineno, header = next(it)
    except StopIteration:
        raise ParseError("empty file", 1) from None
    parts = header.strip().lower().split()
    if len(parts) != 5 or parts[0] != "%%matrixmarket" or parts[1] != "matrix":
        raise ParseError("missing '%%MatrixMarket matrix ...' header", lineno)
    layout, field, symmetry = parts[2:]
    if layout != "coordinate" or field not in ("real", "integer", "double") or symmetry != "general":
        raise ParseError(f"unsupported MatrixMarket type '{layout} {field} {symmetry}'", lineno)

    size = None
    for lineno, line in it:
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        toks = s.split()
        if len(toks) != 3:
            raise ParseError("size line must be 'rows cols entries'", lineno)
        size = tuple(_index(t, lineno, "size") for t in toks)
        break
    if size is None:
        raise ParseError("missing size line", lineno)
    m, n, count = size
    if m < 1 or n < 1 or count < 0:
        raise ParseError(f"invalid size {size}", lineno)

    rows = np.empty(count, dtype=np.int64)
    cols = np.empty(count, dtype=np.int64)
    vals = np.empty(count)
    seen = {}
    k = 0
    for lineno, line in it:
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        if k >= count:
            raise ParseError(f"more than the declared {count} entries", lineno)
        toks = s.split()
        if len(toks) != 3:
            raise ParseError("entry line must be 'row col value'", lineno)
        i = _index(toks[0], lineno, "row index")
        j = _index(toks[1], lineno, "column index")
        if not (1 <= i <= m and 1 <= j <= n):
            raise ParseError(f"index ({i}, {j}) outside {m}x{n}", lineno)
        if (i, j) in seen:
            raise ParseError(f"duplicate coordinate ({i}, {j}), first seen on line {seen[(i, j)]}", lineno)
        seen[(i, j)] = lineno
        rows[k], cols[k], vals[k] = i - 1, j - 1, _number(toks[2], lineno, "value")
        k += 1
    if k != count:
        raise ParseError(f"expected {count} entries, found {k}", lineno)
    return Matrix.from_coo((m, n), rows, cols, vals)


def read_csv_dense(lines) -> Matrix:
    data = []
    width = None
    last = 0
    for lineno, line in enumerate(lines, start=1):
        last = lineno
        s = line.strip()
        if not s:
            continue
        toks = [t.strip() for t in s.split(",")]
        row = [_number(t, lineno, "value") for t in toks]
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(f"expected {width} columns, found {len(row)}", lineno)
        data.append(row)
    if not data:
        raise ParseError("no data rows", max(last, 1))
    return Matrix.from_dense(np.array(data))


def load_matrix(path, format: str | None = None) -> Matrix:
    """Read a matrix; MatrixMarket gives sparse storage, CSV gives dense."""
    fmt = format or guess_format(path)
    if fmt not in FORMATS:
        raise ParameterError(f"unknown matrix format {fmt!r}")
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if fmt == "matrixmarket":
        return read_matrixmarket(lines)
    return read_csv_dense(lines)


def save_matrix(A: Matrix, path, format: str | None = None) -> None:
    fmt = format or guess_format(path)
    if fmt not in FORMATS:
        raise ParameterError(f"unknown matrix format {fmt!r}")
    with open(path, "w", encoding="utf-8") as fh:
        if fmt == "matrixmarket":
            rows, cols, vals = A.nonzeros()
            fh.write(MM_HEADER + "\n")
            fh.write(f"{A.m} {A.n} {vals.size}\n")
            for i, j, v in zip(rows.tolist(), cols.tolist(), vals.tolist()):
                fh.write(f"{i + 1} {j + 1} {v!r}\n")
        else:
            for row in A.toarray().tolist():
                fh.write(",".join(repr(v) for v in row) + "\n")
