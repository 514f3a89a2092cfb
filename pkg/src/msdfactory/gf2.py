"""Dense linear algebra over GF(2) on bit-packed rows.

Each row is stored as a Python ``int`` whose bit ``j`` holds column ``j``.
Row addition is XOR and row weight is ``int.bit_count``, so elimination and
inner products run at word speed without any numpy round trips.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np


class NoSolution(ValueError):
    """Raised when a linear system over GF(2) is inconsistent."""


def _mask(cols: int) -> int:
    return (1 << cols) - 1


class BinaryMatrix:
    """Immutable ``rows x cols`` matrix over GF(2).

    A vector is a one-row matrix.  Construction accepts anything that looks
    like a 0/1 table; use :meth:`from_ints` when rows are already packed.
    """

    __slots__ = ("_rows", "_ncols")

    def __init__(self, data: Iterable[Sequence[int]] | np.ndarray, cols: int | None = None):
        arr = np.asarray(data, dtype=np.int64)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1) if arr.size else arr.reshape(0, cols or 0)
        if arr.ndim != 2:
            raise ValueError("expected a 2-D table of bits")
        if cols is not None and arr.shape[1] != cols:
            raise ValueError(f"expected {cols} columns, got {arr.shape[1]}")
        ncols = arr.shape[1]
        rows = []
        for r in arr % 2:
            v = 0
            for j in np.flatnonzero(r):
                v |= 1 << int(j)
            rows.append(v)
        self._rows = tuple(rows)
        self._ncols = ncols

    @classmethod
    def from_ints(cls, rows: Iterable[int], cols: int) -> "BinaryMatrix":
        m = cls.__new__(cls)
        mask = _mask(cols)
        packed = tuple(int(r) for r in rows)
        if any(r & ~mask for r in packed):
            raise ValueError("row has bits beyond the column count")
        m._rows = packed
        m._ncols = cols
        return m

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BinaryMatrix":
        return cls.from_ints([0] * rows, cols)

    @classmethod
    def identity(cls, n: int) -> "BinaryMatrix":
        return cls.from_ints([1 << i for i in range(n)], n)

    @classmethod
    def from_support(cls, supports: Iterable[Iterable[int]], cols: int) -> "BinaryMatrix":
        """Build from 0-based column index lists, one per row."""
        rows = []
        for s in supports:
            v = 0
            for j in s:
                if not 0 <= j < cols:
                    raise IndexError(f"column {j} out of range for {cols} columns")
                v |= 1 << j
            rows.append(v)
        return cls.from_ints(rows, cols)

    @classmethod
    def from_text(cls, text: str) -> "BinaryMatrix":
        """Parse the golden-file literal: one row per line, characters '0'/'1'."""
        lines = [ln.strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln and not ln.startswith("#")]
        if not lines:
            return cls.zeros(0, 0)
        width = len(lines[0])
        rows = []
        for ln in lines:
            if len(ln) != width or set(ln) - {"0", "1"}:
                raise ValueError(f"malformed matrix row {ln!r}")
            rows.append(sum(1 << j for j, ch in enumerate(ln) if ch == "1"))
        return cls.from_ints(rows, width)

    def to_text(self) -> str:
        return "\n".join(
            "".join("1" if (r >> j) & 1 else "0" for j in range(self._ncols)) for r in self._rows
        ) + ("\n" if self._rows else "")

    # -- shape and access -------------------------------------------------

    @property
    def rows(self) -> int:
        return len(self._rows)

    @property
    def cols(self) -> int:
        return self._ncols

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self._rows), self._ncols)

    @property
    def packed_rows(self) -> tuple[int, ...]:
        return self._rows

    def __getitem__(self, idx: tuple[int, int]) -> int:
        i, j = idx
        if not (0 <= i < self.rows and 0 <= j < self._ncols):
            raise IndexError(f"index {idx} out of range for shape {self.shape}")
        return (self._rows[i] >> j) & 1

    def row(self, i: int) -> "BinaryMatrix":
        return BinaryMatrix.from_ints([self._rows[i]], self._ncols)

    def row_weights(self) -> list[int]:
        return [r.bit_count() for r in self._rows]

    def col_weights(self) -> list[int]:
        return [sum((r >> j) & 1 for r in self._rows) for j in range(self._ncols)]

    def support(self, i: int) -> list[int]:
        r = self._rows[i]
        return [j for j in range(self._ncols) if (r >> j) & 1]

    def to_numpy(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.uint8)
        for i, r in enumerate(self._rows):
            for j in range(self._ncols):
                if (r >> j) & 1:
                    out[i, j] = 1
        return out

    def __array__(self, dtype=None, copy=None):
        arr = self.to_numpy()
        return arr if dtype is None else arr.astype(dtype)

    # -- algebra ----------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryMatrix):
            return NotImplemented
        return self._ncols == other._ncols and self._rows == other._rows

    def __hash__(self) -> int:
        return hash((self._ncols, self._rows))

    def __repr__(self) -> str:
        return f"BinaryMatrix({self.rows}x{self.cols})"

    def __add__(self, other: "BinaryMatrix") -> "BinaryMatrix":
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        return BinaryMatrix.from_ints([a ^ b for a, b in zip(self._rows, other._rows)], self._ncols)

    def transpose(self) -> "BinaryMatrix":
        cols = [0] * self._ncols
        for i, r in enumerate(self._rows):
            while r:
                low = r & -r
                cols[low.bit_length() - 1] |= 1 << i
                r ^= low
        return BinaryMatrix.from_ints(cols, len(self._rows))

    @property
    def T(self) -> "BinaryMatrix":
        return self.transpose()

    def __matmul__(self, other: "BinaryMatrix") -> "BinaryMatrix":
        if self._ncols != other.rows:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        out = []
        orows = other._rows
        for r in self._rows:
            acc = 0
            while r:
                low = r & -r
                acc ^= orows[low.bit_length() - 1]
                r ^= low
            out.append(acc)
        return BinaryMatrix.from_ints(out, other._ncols)

    def apply(self, x: int) -> int:
        """Multiply by a packed column vector ``x``; returns the packed result."""
        y = 0
        for i, r in enumerate(self._rows):
            if (r & x).bit_count() & 1:
                y |= 1 << i
        return y

    def vstack(self, other: "BinaryMatrix") -> "BinaryMatrix":
        if self._ncols != other._ncols:
            raise ValueError("column mismatch in vstack")
        return BinaryMatrix.from_ints(self._rows + other._rows, self._ncols)

    def hstack(self, other: "BinaryMatrix") -> "BinaryMatrix":
        if self.rows != other.rows:
            raise ValueError("row mismatch in hstack")
        shift = self._ncols
        return BinaryMatrix.from_ints(
            [a | (b << shift) for a, b in zip(self._rows, other._rows)], self._ncols + other._ncols
        )

    def select_rows(self, idx: Iterable[int]) -> "BinaryMatrix":
        return BinaryMatrix.from_ints([self._rows[i] for i in idx], self._ncols)

    def select_cols(self, idx: Sequence[int]) -> "BinaryMatrix":
        out = []
        for r in self._rows:
            v = 0
            for newj, j in enumerate(idx):
                if (r >> j) & 1:
                    v |= 1 << newj
            out.append(v)
        return BinaryMatrix.from_ints(out, len(idx))

    def is_zero(self) -> bool:
        return not any(self._rows)


def _echelon(rows: Sequence[int], ncols: int) -> tuple[list[int], list[int]]:
    """Reduced row echelon form; returns (nonzero rows, pivot columns)."""
    work = list(rows)
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        bit = 1 << c
        p = next((i for i in range(r, len(work)) if work[i] & bit), None)
        if p is None:
            continue
        work[r], work[p] = work[p], work[r]
        for i in range(len(work)):
            if i != r and work[i] & bit:
                work[i] ^= work[r]
        pivots.append(c)
        r += 1
        if r == len(work):
            break
    return work[:r], pivots


def rank(m: BinaryMatrix) -> int:
    return len(_echelon(m.packed_rows, m.cols)[1])


def row_reduce(m: BinaryMatrix) -> tuple[BinaryMatrix, list[int]]:
    rows, piv = _echelon(m.packed_rows, m.cols)
    return BinaryMatrix.from_ints(rows, m.cols), piv


def nullspace_basis(m: BinaryMatrix) -> BinaryMatrix:
    """Rows spanning ``{g : m g^T = 0}``; there are ``cols - rank`` of them."""
    rows, pivots = _echelon(m.packed_rows, m.cols)
    pivset = set(pivots)
    basis = []
    for f in range(m.cols):
        if f in pivset:
            continue
        v = 1 << f
        for r, p in zip(rows, pivots):
            if (r >> f) & 1:
                v |= 1 << p
        basis.append(v)
    return BinaryMatrix.from_ints(basis, m.cols)


def in_row_span(m: BinaryMatrix, v: int) -> bool:
    rows, pivots = _echelon(m.packed_rows, m.cols)
    for r, p in zip(rows, pivots):
        if (v >> p) & 1:
            v ^= r
    return v == 0


def same_row_span(a: BinaryMatrix, b: BinaryMatrix) -> bool:
    if a.cols != b.cols:
        return False
    return all(in_row_span(a, r) for r in b.packed_rows) and all(
        in_row_span(b, r) for r in a.packed_rows
    )


def _solve_left(a: BinaryMatrix, b: BinaryMatrix) -> BinaryMatrix:
    # X a = b: express each row of b in the row basis of a, tracking combinations.
    n = a.rows
    tagged = [(r, 1 << i) for i, r in enumerate(a.packed_rows)]
    basis: list[tuple[int, int, int]] = []  # (pivot bit, row, combination)
    for r, comb in tagged:
        for p, br, bc in basis:
            if r & p:
                r ^= br
                comb ^= bc
        if r:
            p = r & -r
            # keep the basis fully reduced on pivot columns
            basis = [(bp, br ^ r, bc ^ comb) if br & p else (bp, br, bc) for bp, br, bc in basis]
            basis.append((p, r, comb))
    out = []
    for target in b.packed_rows:
        comb = 0
        for p, br, bc in basis:
            if target & p:
                target ^= br
                comb ^= bc
        if target:
            raise NoSolution("right-hand side is outside the row span")
        out.append(comb)
    return BinaryMatrix.from_ints(out, n)


def solve_linear(a: BinaryMatrix, b: BinaryMatrix, side: str = "right") -> BinaryMatrix:
    """Return some ``X`` with ``X a = b`` (side="left") or ``a X = b`` (side="right").

    Underdetermined systems get an arbitrary valid solution.
    """
    if side == "left":
        if a.cols != b.cols:
            raise ValueError(f"incompatible shapes {a.shape} and {b.shape} for X a = b")
        return _solve_left(a, b)
    if side == "right":
        if a.rows != b.rows:
            raise ValueError(f"incompatible shapes {a.shape} and {b.shape} for a X = b")
        # a X = b  <=>  X^T a^T = b^T
        return _solve_left(a.transpose(), b.transpose()).transpose()
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")
