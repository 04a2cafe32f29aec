"""Sequential doubly stochastic (SDS) factorization.

The T-factors reuse the leading blocks of the DSHB scaled sequence:

    T^(k) = [[A~^(k)_11, A~^(k)_12], [A~^(k)_12^T, (m_k/m_{k-1}) I_{m_k}]]

and T^(tau) = I. Embedding T^(k) as the trailing block of an order-n identity
gives T^_(k); A_L = T^_(1) ... T^_(tau) and A_R = T^_(tau) ... T^_(1).
"""

from __future__ import annotations

import logging
from fractions import Fraction

from sparse_j_factorizer.dshb import scaled_sequence
from sparse_j_factorizer.errors import LevelOutOfRange
from sparse_j_factorizer.matrix import (
    assemble_blocks,
    d_max,
    direct_sum,
    identity,
    matmul,
    matmul_chain,
    nnz,
    scale,
    submatrix,
)
from sparse_j_factorizer.models import Partition, SdsFactorization, SparseMatrix

logger = logging.getLogger(__name__)


def _t_from_scaled(partition: Partition, k: int, tilde: SparseMatrix) -> SparseMatrix:
    if k == partition.tau:
        return identity(partition.part(k))
    n_k, m_k = partition.part(k), partition.m(k)
    a11 = submatrix(tilde, 0, 0, n_k, n_k)
    a12 = submatrix(tilde, 0, n_k, n_k, m_k)
    a22 = scale(identity(m_k), Fraction(m_k, partition.m(k - 1)))
    return assemble_blocks(a11, a12, a22)


def _embed(partition: Partition, t: SparseMatrix) -> SparseMatrix:
    lead = partition.n - t.rows
    return direct_sum(identity(lead), t) if lead else t


def _check_level(partition: Partition, k: int) -> None:
    if not 1 <= k <= partition.tau:
        raise LevelOutOfRange(k, partition.tau)


def t_factor(partition: Partition, k: int) -> SparseMatrix:
    """T^(k) of order m_{k-1}; symmetric, doubly stochastic, at most 2 nonzeros per row."""
    _check_level(partition, k)
    return _t_from_scaled(partition, k, scaled_sequence(partition)[k - 1])


def hat_factor(partition: Partition, k: int) -> SparseMatrix:
    """T^_(k) = I_{n_1} (+) ... (+) I_{n_{k-1}} (+) T^(k), of order n."""
    return _embed(partition, t_factor(partition, k))


def v_recursion(partition: Partition) -> list[SparseMatrix]:
    """V^(tau) = I and V^(k) = T^(k) (I_{n_k} (+) V^(k+1)); returns [V^(1), ..., V^(tau)]."""
    tilde = scaled_sequence(partition)
    tau = partition.tau
    v: list[SparseMatrix] = [identity(partition.part(tau))]
    for k in range(tau - 1, 0, -1):
        t = _t_from_scaled(partition, k, tilde[k - 1])
        v.append(matmul(t, direct_sum(identity(partition.part(k)), v[-1])))
    v.reverse()
    return v


def sds_factorize(partition: Partition) -> SdsFactorization:
    """Assemble every T-factor and the left and right SDS factors."""
    tilde = scaled_sequence(partition)
    t_factors = tuple(
        _t_from_scaled(partition, k, tilde[k - 1]) for k in range(1, partition.tau + 1)
    )
    hats = tuple(_embed(partition, t) for t in t_factors)

    a_left = matmul_chain(hats)
    a_right = matmul_chain(hats[::-1])
    logger.info(
        "SDS factors for %s: nnz(A_L)=%d d_max(A_L)=%d d_max(A_R)=%d",
        partition, nnz(a_left), d_max(a_left), d_max(a_right),
    )
    for k, t in enumerate(t_factors[:-1], start=1):
        logger.debug(
            "T^(%d): nnz=%d (published n_k + 2 m_k = %d)",
            k, nnz(t), partition.part(k) + 2 * partition.m(k),
        )
    return SdsFactorization(
        t_factors=t_factors,
        hat_factors=hats,
        a_left=a_left,
        a_right=a_right,
        partition=partition,
        v_matrices=tuple(v_recursion(partition)),
    )


def expected_sds_nnz(partition: Partition) -> int:
    """sum((2**k - 1) n_k), shared by A_L and A_R."""
    return sum((2**k - 1) * nk for k, nk in enumerate(partition.parts, start=1))


def expected_t_nnz(partition: Partition, k: int) -> int:
    """Counted structural nonzeros of T^(k): n_k + 3 m_k (n_tau for the last level)."""
    return partition.part(k) + 3 * partition.m(k)
