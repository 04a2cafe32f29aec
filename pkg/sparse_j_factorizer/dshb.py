"""Doubly stochastic hierarchically banded (DSHB) factorization.

The construction works on the scaled sequence A~^(k) = (n / m_{k-1}) A^(k),
each of which is doubly stochastic:

    A~^(k)_11 = diag(m_k/m_{k-1} (m_k times), 1 (n_k - m_k times))
    A~^(k)_12 = (n_k/m_{k-1}) on the first m_k band positions
    A~^(k)_22 = (m_k/m_{k-1}) A~^(k+1),     A~^(tau) = I_{n_tau}
"""

from __future__ import annotations

import logging
from fractions import Fraction

from sparse_j_factorizer.matrix import assemble_blocks, d_max, diagonal, identity, nnz, scale
from sparse_j_factorizer.models import DshbFactorization, HBSequence, Partition, SparseMatrix
from sparse_j_factorizer.partition import partition_from_parts

logger = logging.getLogger(__name__)


def scaled_diagonal_block(partition: Partition, k: int) -> SparseMatrix:
    """A~^(k)_11 for level k < tau."""
    n_k, m_k, m_prev = partition.part(k), partition.m(k), partition.m(k - 1)
    return diagonal([Fraction(m_k, m_prev)] * m_k + [Fraction(1)] * (n_k - m_k))


def scaled_band_block(partition: Partition, k: int) -> SparseMatrix:
    """A~^(k)_12 for level k < tau: n_k/m_{k-1} on the first m_k diagonal slots."""
    n_k, m_k, m_prev = partition.part(k), partition.m(k), partition.m(k - 1)
    weight = Fraction(n_k, m_prev)
    return SparseMatrix(n_k, m_k, {(i, i): weight for i in range(m_k)})


def scaled_sequence(partition: Partition) -> tuple[SparseMatrix, ...]:
    """The doubly stochastic sequence A~^(1), ..., A~^(tau)."""
    tau = partition.tau
    scaled: list[SparseMatrix] = [identity(partition.part(tau))]
    for k in range(tau - 1, 0, -1):
        ratio = Fraction(partition.m(k), partition.m(k - 1))
        scaled.append(
            assemble_blocks(
                scaled_diagonal_block(partition, k),
                scaled_band_block(partition, k),
                scale(scaled[-1], ratio),
            )
        )
    scaled.reverse()
    return tuple(scaled)


def dshb_factorize(partition: Partition) -> DshbFactorization:
    """Build the DSHB factor A = A~^(1) and its HB sequence A^(k) = (m_{k-1}/n) A~^(k)."""
    tilde = scaled_sequence(partition)
    levels = tuple(
        scale(t, Fraction(partition.m(k - 1), partition.n))
        for k, t in enumerate(tilde, start=1)
    )
    a = tilde[0]
    result = DshbFactorization(
        A=a,
        sequence=HBSequence(matrices=levels, partition=partition),
        scaled_sequence=tilde,
        partition=partition,
    )
    counted = nnz(a)
    if counted != result.published_nnz:
        logger.debug(
            "DSHB nnz for %s: counted %d, published closed form %d",
            partition, counted, result.published_nnz,
        )
    logger.info("DSHB factor for %s: nnz=%d d_max=%d", partition, counted, d_max(a))
    return result


def dshb_two_block(n1: int, n2: int) -> DshbFactorization:
    """Closed-form DSHB factor for n = n1 + n2 (requires n1 >= n2 >= 1)."""
    return dshb_factorize(partition_from_parts([n1, n2]))


def expected_dshb_nnz(partition: Partition) -> int:
    """Directly derived count sum((2k - 1) n_k): n_k diagonal plus 2 m_k band entries per level."""
    return sum((2 * k - 1) * nk for k, nk in enumerate(partition.parts, start=1))

