"""Exact-rational sparse matrix kernel and the structural predicates on it.

All functions are pure: they take SparseMatrix values and return new ones.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from collections.abc import Iterable, Sequence
from fractions import Fraction

import numpy as np
from scipy import sparse

from sparse_j_factorizer.errors import ShapeMismatch
from sparse_j_factorizer.models import HBSequence, Partition, SparseMatrix

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def identity(n: int) -> SparseMatrix:
    return SparseMatrix(n, n, {(i, i): Fraction(1) for i in range(n)})


def diagonal(values: Sequence[Fraction | int]) -> SparseMatrix:
    n = len(values)
    return SparseMatrix(n, n, {(i, i): Fraction(v) for i, v in enumerate(values)})


def ones_J(n: int) -> SparseMatrix:
    """The n x n matrix with every entry 1/n."""
    if n < 1:
        raise ValueError(f"order must be positive, got {n}")
    value = Fraction(1, n)
    return SparseMatrix(n, n, {(i, j): value for i in range(n) for j in range(n)})


def direct_sum(*blocks: SparseMatrix) -> SparseMatrix:
    """Block-diagonal matrix blocks[0] (+) blocks[1] (+) ..."""
    if not blocks:
        raise ValueError("direct_sum needs at least one block")
    entries: dict[tuple[int, int], Fraction] = {}
    r0 = c0 = 0
    for block in blocks:
        for (i, j), v in block.entries.items():
            entries[(r0 + i, c0 + j)] = v
        r0 += block.rows
        c0 += block.cols
    return SparseMatrix(r0, c0, entries)


def block_diag_J(partition: Partition) -> SparseMatrix:
    """J_0 = J_1 (+) ... (+) J_tau for the clusters of ``partition``."""
    return direct_sum(*(ones_J(nk) for nk in partition.parts))


def assemble_blocks(
    a11: SparseMatrix, a12: SparseMatrix, a22: SparseMatrix
) -> SparseMatrix:
    """Symmetric block matrix [[A11, A12], [A12^T, A22]]."""
    if a11.rows != a12.rows or a12.cols != a22.rows:
        raise ShapeMismatch(a11.shape, a12.shape, "assemble_blocks")
    top = a11.rows
    order = top + a22.rows
    entries: dict[tuple[int, int], Fraction] = dict(a11.entries)
    for (i, j), v in a12.entries.items():
        entries[(i, top + j)] = v
        entries[(top + j, i)] = v
    for (i, j), v in a22.entries.items():
        entries[(top + i, top + j)] = v
    return SparseMatrix(order, order, entries)


# ---------------------------------------------------------------------------
# arithmetic
# ---------------------------------------------------------------------------


def scale(a: SparseMatrix, factor: Fraction | int) -> SparseMatrix:
    factor = Fraction(factor)
    return SparseMatrix(a.rows, a.cols, {k: v * factor for k, v in a.entries.items()})


def transpose(a: SparseMatrix) -> SparseMatrix:
    return SparseMatrix(a.cols, a.rows, {(j, i): v for (i, j), v in a.entries.items()})


def subtract(a: SparseMatrix, b: SparseMatrix) -> SparseMatrix:
    if a.shape != b.shape:
        raise ShapeMismatch(a.shape, b.shape, "subtract")
    entries = dict(a.entries)
    for k, v in b.entries.items():
        entries[k] = entries.get(k, Fraction(0)) - v
    return SparseMatrix(a.rows, a.cols, entries)


def matmul(a: SparseMatrix, b: SparseMatrix) -> SparseMatrix:
    """Exact product A @ B; exact cancellations are dropped from the result."""
    if a.cols != b.rows:
        raise ShapeMismatch(a.shape, b.shape, "matmul")

    b_rows: dict[int, list[tuple[int, Fraction]]] = defaultdict(list)
    for (k, j), v in b.entries.items():
        b_rows[k].append((j, v))

    acc: dict[tuple[int, int], Fraction] = {}
    for (i, k), av in a.entries.items():
        for j, bv in b_rows.get(k, ()):
            acc[(i, j)] = acc.get((i, j), Fraction(0)) + av * bv
    return SparseMatrix(a.rows, b.cols, acc)


def matmul_chain(factors: Sequence[SparseMatrix]) -> SparseMatrix:
    """Ordered product factors[0] @ factors[1] @ ... evaluated left to right."""
    if not factors:
        raise ValueError("matmul_chain needs at least one factor")
    result = factors[0]
    for factor in factors[1:]:
        result = matmul(result, factor)
    return result


# ---------------------------------------------------------------------------
# slicing
# ---------------------------------------------------------------------------


def submatrix(
    a: SparseMatrix, row0: int, col0: int, rows: int, cols: int
) -> SparseMatrix:
    entries = {
        (i - row0, j - col0): v
        for (i, j), v in a.entries.items()
        if row0 <= i < row0 + rows and col0 <= j < col0 + cols
    }
    return SparseMatrix(rows, cols, entries)


def trailing_block(a: SparseMatrix, order: int) -> SparseMatrix:
    """Trailing principal submatrix of the given order."""
    start = a.rows - order
    return submatrix(a, start, start, order, order)


# ---------------------------------------------------------------------------
# metrics and predicates
# ---------------------------------------------------------------------------


def nnz(a: SparseMatrix) -> int:
    return len(a.entries)


def row_nnz(a: SparseMatrix) -> list[int]:
    counts = [0] * a.rows
    for i, _ in a.entries:
        counts[i] += 1
    return counts


def col_nnz(a: SparseMatrix) -> list[int]:
    counts = [0] * a.cols
    for _, j in a.entries:
        counts[j] += 1
    return counts


def d_max(a: SparseMatrix) -> int:
    """Largest number of stored nonzeros in any row (diagonal included)."""
    return max(row_nnz(a), default=0)


def max_abs_diff(a: SparseMatrix, b: SparseMatrix) -> Fraction:
    diff = subtract(a, b)
    return max((abs(v) for v in diff.entries.values()), default=Fraction(0))


def is_symmetric(a: SparseMatrix) -> bool:
    if a.rows != a.cols:
        return False
    return all(a.get(j, i) == v for (i, j), v in a.entries.items())


def is_doubly_stochastic(a: SparseMatrix) -> bool:
    """Nonnegative with every row sum and column sum exactly 1."""
    if a.rows != a.cols:
        return False
    row_sums = [Fraction(0)] * a.rows
    col_sums = [Fraction(0)] * a.cols
    for (i, j), v in a.entries.items():
        if v < 0:
            return False
        row_sums[i] += v
        col_sums[j] += v
    return all(s == 1 for s in row_sums) and all(s == 1 for s in col_sums)


def is_hierarchically_banded(a: SparseMatrix, partition: Partition) -> bool:
    """Check the hierarchically banded structure with respect to ``partition``.

    A must be symmetric. For an entry (i, j) with i <= j in cluster k, either
    i == j, or j lies in the trailing block of level k at the same local
    offset as i (the diagonal band of the (1,2)-block).
    """
    if a.rows != partition.n or a.cols != partition.n:
        return False
    if not is_symmetric(a):
        return False
    for i, j in a.entries:
        if i >= j:
            continue
        k = partition.cluster_of(i)
        start = partition.offset(k)
        band_start = start + partition.part(k)
        if j < band_start or j - band_start != i - start:
            return False
    return True


def extract_hb_sequence(a: SparseMatrix, partition: Partition) -> HBSequence | None:
    """Return the HB sequence of ``a`` or None when ``a`` is not HB."""
    if not is_hierarchically_banded(a, partition):
        return None
    levels = tuple(
        trailing_block(a, partition.m(k - 1)) for k in range(1, partition.tau + 1)
    )
    return HBSequence(matrices=levels, partition=partition)


def residual(a: SparseMatrix, partition: Partition) -> Fraction:
    """max |J0 A J0 - J| computed exactly.

    J0 A J0 is constant on each cluster block (k, j), with value
    S_kj / (n_k n_j) where S_kj is the sum of A over that block, so only the
    tau x tau block sums are formed.
    """
    n = partition.n
    if a.shape != (n, n):
        raise ShapeMismatch(a.shape, (n, n), "residual")

    cluster = [k for k, nk in enumerate(partition.parts) for _ in range(nk)]
    sums: dict[tuple[int, int], Fraction] = defaultdict(Fraction)
    for (i, j), v in a.entries.items():
        sums[(cluster[i], cluster[j])] += v

    target = Fraction(1, n)
    value = Fraction(0)
    for k, nk in enumerate(partition.parts):
        for j, nj in enumerate(partition.parts):
            value = max(value, abs(sums.get((k, j), Fraction(0)) / (nk * nj) - target))
    logger.debug("residual for %s: %s", partition, value)
    return value


# ---------------------------------------------------------------------------
# conversions
# ---------------------------------------------------------------------------


def to_dense(a: SparseMatrix) -> list[list[Fraction]]:
    dense = [[Fraction(0)] * a.cols for _ in range(a.rows)]
    for (i, j), v in a.entries.items():
        dense[i][j] = v
    return dense


def from_dense(rows: Iterable[Iterable[Fraction | int]]) -> SparseMatrix:
    grid = [list(r) for r in rows]
    return SparseMatrix.from_items(
        len(grid),
        len(grid[0]),
        ((i, j, v) for i, row in enumerate(grid) for j, v in enumerate(row)),
    )


def to_csr(a: SparseMatrix) -> sparse.csr_matrix:
    """Float copy of ``a``; each rational is rounded to the nearest double."""
    items = a.items()
    data = np.array([float(v) for _, _, v in items], dtype=np.float64)
    rows = np.array([i for i, _, _ in items], dtype=np.int64)
    cols = np.array([j for _, j, _ in items], dtype=np.int64)
    return sparse.csr_matrix((data, (rows, cols)), shape=a.shape)
