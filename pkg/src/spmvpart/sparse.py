"""Sparse matrix formats (COO/CSR/CSC), Matrix Market I/O and SpMV kernels."""
from __future__ import annotations

import random

import numpy as np

__all__ = [
    "CooMatrix",
    "CsrMatrix",
    "CscMatrix",
    "MatrixMarketError",
    "parse_matrix_market",
    "load_matrix_market",
    "coo_to_csr",
    "csr_to_coo",
    "coo_to_csc",
    "csc_to_coo",
    "spmv_csr",
    "spmv_csc",
    "row_nnz_counts",
    "col_nnz_counts",
    "generate_random_sparse",
]


class MatrixMarketError(ValueError):
    """Raised for malformed or unsupported Matrix Market input."""


def _as_int_array(values) -> np.ndarray:
    return np.asarray(values, dtype=np.int64)


class CooMatrix:
    """Coordinate-format sparse matrix.

    Entries are stored canonically sorted row-major (row, then column) with
    unique (row, col) coordinates. Explicit zeros are kept as stored entries.
    Values are float64.
    """

    __slots__ = ("n_rows", "n_cols", "row", "col", "val")

    def __init__(self, n_rows: int, n_cols: int, entries=()):
        if n_rows < 0 or n_cols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        ent = list(entries)
        if ent:
            row = _as_int_array([e[0] for e in ent])
            col = _as_int_array([e[1] for e in ent])
            val = np.asarray([e[2] for e in ent], dtype=np.float64)
        else:
            row = np.empty(0, dtype=np.int64)
            col = np.empty(0, dtype=np.int64)
            val = np.empty(0, dtype=np.float64)
        if row.size:
            if row.min() < 0 or row.max() >= n_rows or col.min() < 0 or col.max() >= n_cols:
                raise ValueError("entry coordinates out of range")
            order = np.lexsort((col, row))
            row, col, val = row[order], col[order], val[order]
            key = row * max(n_cols, 1) + col
            dup = np.nonzero(np.diff(key) == 0)[0]
            if dup.size:
                i, j = int(row[dup[0]]), int(col[dup[0]])
                raise ValueError(f"duplicate entry at ({i}, {j})")
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.row = row
        self.col = col
        self.val = val

    @classmethod
    def _from_arrays(cls, n_rows, n_cols, row, col, val) -> "CooMatrix":
        # Trusted path: arrays already unique and sorted row-major.
        m = object.__new__(cls)
        m.n_rows = int(n_rows)
        m.n_cols = int(n_cols)
        m.row = _as_int_array(row)
        m.col = _as_int_array(col)
        m.val = np.asarray(val, dtype=np.float64)
        return m

    @property
    def nnz(self) -> int:
        return int(self.val.size)

    @property
    def entries(self) -> list[tuple[int, int, float]]:
        return [
            (int(i), int(j), float(v))
            for i, j, v in zip(self.row, self.col, self.val)
        ]

    def __eq__(self, other) -> bool:
        if not isinstance(other, CooMatrix):
            return NotImplemented
        return (
            self.n_rows == other.n_rows
            and self.n_cols == other.n_cols
            and np.array_equal(self.row, other.row)
            and np.array_equal(self.col, other.col)
            and np.array_equal(self.val, other.val)
        )

    def __hash__(self):
        return hash((self.n_rows, self.n_cols, self.nnz))

    def __repr__(self) -> str:
        return f"CooMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz})"


class CsrMatrix:
    """Compressed sparse row matrix (val/col/ptr arrays)."""

    __slots__ = ("n_rows", "n_cols", "val", "col", "ptr")

    def __init__(self, n_rows, n_cols, val, col, ptr):
        val = np.asarray(val, dtype=np.float64)
        col = _as_int_array(col)
        ptr = _as_int_array(ptr)
        if ptr.size != n_rows + 1 or ptr[0] != 0 or ptr[-1] != val.size:
            raise ValueError("bad row pointer array")
        if np.any(np.diff(ptr) < 0):
            raise ValueError("row pointer must be non-decreasing")
        if val.size != col.size:
            raise ValueError("val/col length mismatch")
        if col.size and (col.min() < 0 or col.max() >= n_cols):
            raise ValueError("column index out of range")
        rows = np.repeat(np.arange(n_rows), np.diff(ptr))
        if col.size > 1 and not np.all((np.diff(rows) != 0) | (np.diff(col) > 0)):
            raise ValueError("columns must be strictly increasing within each row")
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.val = val
        self.col = col
        self.ptr = ptr

    @property
    def nnz(self) -> int:
        return int(self.val.size)

    def __repr__(self) -> str:
        return f"CsrMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz})"


class CscMatrix:
    """Compressed sparse column matrix (val/row/ptr arrays)."""

    __slots__ = ("n_rows", "n_cols", "val", "row", "ptr")

    def __init__(self, n_rows, n_cols, val, row, ptr):
        val = np.asarray(val, dtype=np.float64)
        row = _as_int_array(row)
        ptr = _as_int_array(ptr)
        if ptr.size != n_cols + 1 or ptr[0] != 0 or ptr[-1] != val.size:
            raise ValueError("bad column pointer array")
        if np.any(np.diff(ptr) < 0):
            raise ValueError("column pointer must be non-decreasing")
        if val.size != row.size:
            raise ValueError("val/row length mismatch")
        if row.size and (row.min() < 0 or row.max() >= n_rows):
            raise ValueError("row index out of range")
        cols = np.repeat(np.arange(n_cols), np.diff(ptr))
        if row.size > 1 and not np.all((np.diff(cols) != 0) | (np.diff(row) > 0)):
            raise ValueError("rows must be strictly increasing within each column")
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.val = val
        self.row = row
        self.ptr = ptr

    @property
    def nnz(self) -> int:
        return int(self.val.size)

    def __repr__(self) -> str:
        return f"CscMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz})"


def parse_matrix_market(src) -> CooMatrix:
    """Parse Matrix Market coordinate text into a CooMatrix.

    Supports real, integer and pattern fields with general or symmetric
    symmetry. Indices are converted from 1-based to 0-based. For symmetric
    input each off-diagonal entry is mirrored once; diagonal entries are
    never doubled. Pattern entries get value 1.0. Duplicate coordinates,
    complex fields and malformed input raise MatrixMarketError.
    """
    if isinstance(src, bytes):
        src = src.decode("utf-8")
    lines = src.splitlines()
    if not lines:
        raise MatrixMarketError("empty input")
    head = lines[0].split()
    if len(head) != 5 or head[0] != "%%MatrixMarket":
        raise MatrixMarketError(f"malformed header line: {lines[0]!r}")
    obj, fmt, field, sym = (t.lower() for t in head[1:])
    if obj != "matrix":
        raise MatrixMarketError(f"unsupported object {obj!r}")
    if fmt != "coordinate":
        raise MatrixMarketError(f"unsupported format {fmt!r}, only coordinate is supported")
    if field == "complex":
        raise MatrixMarketError("complex matrices are not supported")
    if field not in ("real", "integer", "pattern"):
        raise MatrixMarketError(f"unsupported field {field!r}")
    if sym not in ("general", "symmetric"):
        raise MatrixMarketError(f"unsupported symmetry {sym!r}")

    body = [ln for ln in lines[1:] if ln.strip() and not ln.lstrip().startswith("%")]
    if not body:
        raise MatrixMarketError("missing size line")
    size = body[0].split()
    if len(size) != 3:
        raise MatrixMarketError(f"malformed size line: {body[0]!r}")
    try:
        m, n, declared = (int(t) for t in size)
    except ValueError as exc:
        raise MatrixMarketError(f"malformed size line: {body[0]!r}") from exc
    if m < 0 or n < 0 or declared < 0:
        raise MatrixMarketError(f"malformed size line: {body[0]!r}")
    data = body[1:]
    if len(data) != declared:
        raise MatrixMarketError(f"expected {declared} entries, found {len(data)}")

    want = 2 if field == "pattern" else 3
    seen: set[tuple[int, int]] = set()
    entries: list[tuple[int, int, float]] = []

    def push(i: int, j: int, v: float) -> None:
        if (i, j) in seen:
            raise MatrixMarketError(f"duplicate entry at ({i + 1}, {j + 1})")
        seen.add((i, j))
        entries.append((i, j, v))

    for ln in data:
        toks = ln.split()
        if len(toks) != want:
            raise MatrixMarketError(f"malformed entry line: {ln!r}")
        try:
            i = int(toks[0])
            j = int(toks[1])
            v = 1.0 if field == "pattern" else float(toks[2])
        except ValueError as exc:
            raise MatrixMarketError(f"malformed entry line: {ln!r}") from exc
        if not (1 <= i <= m and 1 <= j <= n):
            raise MatrixMarketError(f"index out of range: ({i}, {j})")
        push(i - 1, j - 1, v)
        if sym == "symmetric" and i != j:
            push(j - 1, i - 1, v)

    return CooMatrix(m, n, entries)


def load_matrix_market(path) -> CooMatrix:
    with open(path, "rb") as fh:
        return parse_matrix_market(fh.read())


def coo_to_csr(a: CooMatrix) -> CsrMatrix:
    counts = np.bincount(a.row, minlength=a.n_rows)
    ptr = np.concatenate(([0], np.cumsum(counts)))
    return CsrMatrix(a.n_rows, a.n_cols, a.val.copy(), a.col.copy(), ptr)


def csr_to_coo(m: CsrMatrix) -> CooMatrix:
    row = np.repeat(np.arange(m.n_rows), np.diff(m.ptr))
    return CooMatrix._from_arrays(m.n_rows, m.n_cols, row, m.col.copy(), m.val.copy())


def coo_to_csc(a: CooMatrix) -> CscMatrix:
    order = np.lexsort((a.row, a.col))
    counts = np.bincount(a.col, minlength=a.n_cols)
    ptr = np.concatenate(([0], np.cumsum(counts)))
    return CscMatrix(a.n_rows, a.n_cols, a.val[order], a.row[order], ptr)


def csc_to_coo(m: CscMatrix) -> CooMatrix:
    col = np.repeat(np.arange(m.n_cols), np.diff(m.ptr))
    order = np.lexsort((col, m.row))
    return CooMatrix._from_arrays(
        m.n_rows, m.n_cols, m.row[order], col[order], m.val[order]
    )


def _check_x(x, n_cols: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size != n_cols:
        raise ValueError(f"x has shape {x.shape}, expected ({n_cols},)")
    return x


def spmv_csr(a: CsrMatrix, x) -> np.ndarray:
    """y = A @ x computed row by row, accumulating in ascending column order."""
    x = _check_x(x, a.n_cols)
    y = np.zeros(a.n_rows, dtype=np.float64)
    if a.val.size:
        rows = np.repeat(np.arange(a.n_rows), np.diff(a.ptr))
        # np.add.at applies updates in entry order, which is exactly the
        # row-major, ascending-column accumulation order.
        np.add.at(y, rows, a.val * x[a.col])
    return y


def spmv_csc(a: CscMatrix, x) -> np.ndarray:
    """y = A @ x scanning columns in ascending order, scattering into y."""
    x = _check_x(x, a.n_cols)
    y = np.zeros(a.n_rows, dtype=np.float64)
    if a.val.size:
        cols = np.repeat(np.arange(a.n_cols), np.diff(a.ptr))
        np.add.at(y, a.row, a.val * x[cols])
    return y


def row_nnz_counts(a: CooMatrix) -> np.ndarray:
    return np.bincount(a.row, minlength=a.n_rows).astype(np.int64)


def col_nnz_counts(a: CooMatrix) -> np.ndarray:
    return np.bincount(a.col, minlength=a.n_cols).astype(np.int64)


def generate_random_sparse(
    n_rows: int,
    n_cols: int,
    density: float,
    seed: int,
    integer_values: bool = False,
) -> CooMatrix:
    """Seeded random sparse matrix with round(density * n_rows * n_cols) entries.

    Coordinates are sampled without replacement, so there are no duplicates.
    With integer_values the values are drawn from 1..9 (stored as float64),
    which keeps every SpMV on the result exact in double precision.
    """
    if n_rows <= 0 or n_cols <= 0:
        raise ValueError("matrix dimensions must be positive")
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density must be in (0, 1], got {density}")
    total = n_rows * n_cols
    k = int(round(density * total))
    rng = random.Random(seed)
    flat = rng.sample(range(total), k)
    entries = []
    for t in flat:
        i, j = divmod(t, n_cols)
        v = float(rng.randint(1, 9)) if integer_values else rng.uniform(-1.0, 1.0)
        entries.append((i, j, v))
    return CooMatrix(n_rows, n_cols, entries)
