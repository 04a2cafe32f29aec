"""Reduced hierarchically banded (RHB) factorization J = J0 A J0.

Each level k contributes a (1,1)-block diag(alpha_k, 1, ..., 1) and a
(1,2)-block with exactly one nonzero per later cluster, placed on the band at
the first row/column of that cluster. The whole factor is assembled bottom-up
from the terminal diagonal block.
"""

from __future__ import annotations

import logging
from fractions import Fraction

from sparse_j_factorizer.matrix import assemble_blocks, d_max, diagonal, nnz
from sparse_j_factorizer.models import HBSequence, Partition, RhbFactorization, SparseMatrix
from sparse_j_factorizer.partition import partition_from_parts

logger = logging.getLogger(__name__)

DENOMINATORS = ("global", "local")


def _level_denominator(partition: Partition, k: int, denominator: str) -> int:
    if denominator == "global":
        return partition.n
    # Stand-alone subproblem of level k; the terminal level shares the
    # two-block subproblem of level tau - 1.
    return partition.m(min(k, partition.tau - 1) - 1) if partition.tau > 1 else partition.n


def rhb_coefficients(
    partition: Partition, denominator: str = "global"
) -> tuple[tuple[Fraction, ...], tuple[tuple[Fraction, ...], ...]]:
    """Return (alphas, betas) for every level of the RHB factor.

    alpha_k = n_k**2 / d_k - n_k + 1 and beta^(k)_{k+l} = n_k * n_{k+l} / d_k,
    where d_k is n for ``"global"`` and m_{k-1} for ``"local"``.
    """
    if denominator not in DENOMINATORS:
        raise ValueError(f"denominator must be one of {DENOMINATORS}, got {denominator!r}")
    tau = partition.tau
    alphas: list[Fraction] = []
    betas: list[tuple[Fraction, ...]] = []
    for k in range(1, tau + 1):
        d_k = _level_denominator(partition, k, denominator)
        n_k = partition.part(k)
        alphas.append(Fraction(n_k * n_k, d_k) - n_k + 1)
        if k < tau:
            betas.append(
                tuple(Fraction(n_k * partition.part(j), d_k) for j in range(k + 1, tau + 1))
            )
    return tuple(alphas), tuple(betas)


def _band_block(partition: Partition, k: int, level_betas: tuple[Fraction, ...]) -> SparseMatrix:
    """The n_k x m_k (1,2)-block with one entry per later cluster."""
    entries: dict[tuple[int, int], Fraction] = {}
    position = 0
    for offset, beta in enumerate(level_betas, start=1):
        entries[(position, position)] = beta
        position += partition.part(k + offset)
    return SparseMatrix(partition.part(k), partition.m(k), entries)


def _leading_diagonal(order: int, alpha: Fraction) -> SparseMatrix:
    return diagonal([alpha] + [Fraction(1)] * (order - 1))


def rhb_factorize(partition: Partition, denominator: str = "global") -> RhbFactorization:
    """Build the RHB factor A of J for ``partition``.

    For tau = 1 the factor is the identity. With ``denominator="global"``
    J0 A J0 = J holds exactly for every partition; ``"local"`` solves each
    level as its own subproblem and only agrees with it for tau <= 2.
    """
    alphas, betas = rhb_coefficients(partition, denominator)
    tau = partition.tau

    levels: list[SparseMatrix] = [_leading_diagonal(partition.part(tau), alphas[-1])]
    for k in range(tau - 1, 0, -1):
        a11 = _leading_diagonal(partition.part(k), alphas[k - 1])
        a12 = _band_block(partition, k, betas[k - 1])
        levels.append(assemble_blocks(a11, a12, levels[-1]))
    levels.reverse()

    a = levels[0]
    logger.info(
        "RHB factor for %s (%s denominators): nnz=%d d_max=%d",
        partition, denominator, nnz(a), d_max(a),
    )
    return RhbFactorization(
        A=a,
        sequence=HBSequence(matrices=tuple(levels), partition=partition),
        partition=partition,
        alphas=alphas,
        betas=betas,
        denominator=denominator,
    )


def rhb_two_block(n1: int, n2: int) -> RhbFactorization:
    """Closed-form RHB factor for n = n1 + n2 (requires n1 >= n2 >= 1)."""
    return rhb_factorize(partition_from_parts([n1, n2]))


def expected_rhb_nnz(factorization: RhbFactorization) -> int:
    """n + tau(tau - 1), less one for every alpha_k that is exactly zero."""
    p = factorization.partition
    zero_alphas = sum(1 for alpha in factorization.alphas if alpha == 0)
    return p.n + p.tau * (p.tau - 1) - zero_alphas
