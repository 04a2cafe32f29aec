"""Exact checks of every factorization over a fixed sweep of partitions.

The sweep is the hand-picked partitions below plus the base-2 and base-3
digit partitions of every n in [2, 64].
"""

from __future__ import annotations

import pytest

from sparse_j_factorizer.dshb import dshb_factorize, expected_dshb_nnz
from sparse_j_factorizer.matrix import (
    d_max,
    direct_sum,
    is_doubly_stochastic,
    is_symmetric,
    matmul_chain,
    nnz,
    ones_J,
    residual,
    transpose,
)
from sparse_j_factorizer.models import Partition
from sparse_j_factorizer.partition import partition_from_base, partition_from_parts
from sparse_j_factorizer.rhb import expected_rhb_nnz, rhb_factorize
from sparse_j_factorizer.sds import sds_factorize, t_factor

_NAMED = [(2, 1), (1, 1), (3, 2), (3, 2, 1), (8, 4, 2, 1), (16, 8, 4, 2, 1)]


def _sweep() -> list[Partition]:
    seen: dict[tuple[int, ...], Partition] = {}
    for parts in _NAMED:
        seen.setdefault(parts, partition_from_parts(parts))
    for p in (2, 3):
        for n in range(2, 65):
            partition = partition_from_base(n, p)
            seen.setdefault(partition.parts, partition)
    return list(seen.values())


SWEEP = _sweep()
SWEEP_IDS = [",".join(str(nk) for nk in p.parts) for p in SWEEP]
MULTI_LEVEL = [p for p in SWEEP if p.tau >= 2]
MULTI_LEVEL_IDS = [",".join(str(nk) for nk in p.parts) for p in MULTI_LEVEL]
TWO_LEVEL = [p for p in SWEEP if p.tau == 2]
TWO_LEVEL_IDS = [",".join(str(nk) for nk in p.parts) for p in TWO_LEVEL]


def _factor(partition: Partition, method: str):
    if method == "rhb":
        return rhb_factorize(partition).A
    if method == "dshb":
        return dshb_factorize(partition).A
    sds = sds_factorize(partition)
    return sds.a_left if method == "sds-left" else sds.a_right


class TestExactIdentity:
    @pytest.mark.parametrize("method", ["rhb", "dshb", "sds-left", "sds-right"])
    @pytest.mark.parametrize("partition", SWEEP, ids=SWEEP_IDS)
    def test_residual_is_zero(self, partition, method):
        assert residual(_factor(partition, method), partition) == 0


class TestRhbCounts:
    @pytest.mark.parametrize("partition", MULTI_LEVEL, ids=MULTI_LEVEL_IDS)
    def test_nnz_and_row_width(self, partition):
        rhb = rhb_factorize(partition)
        a = rhb.A
        assert nnz(a) == expected_rhb_nnz(rhb)
        assert nnz(a) == partition.n + partition.tau * (partition.tau - 1)
        assert d_max(a) == partition.tau


class TestDshbStochasticity:
    @pytest.mark.parametrize("partition", SWEEP, ids=SWEEP_IDS)
    def test_scaled_sequence_and_counts(self, partition):
        dshb = dshb_factorize(partition)
        assert is_doubly_stochastic(dshb.A)
        assert all(is_doubly_stochastic(tilde) for tilde in dshb.scaled_sequence)
        assert nnz(dshb.A) == expected_dshb_nnz(partition)
        assert d_max(dshb.A) == partition.tau


class TestSdsStructure:
    @pytest.mark.parametrize("partition", SWEEP, ids=SWEEP_IDS)
    def test_factors(self, partition):
        sds = sds_factorize(partition)
        for t in sds.t_factors:
            assert is_symmetric(t)
            assert is_doubly_stochastic(t)
            assert d_max(t) <= 2
        assert sds.a_right == transpose(sds.a_left)
        assert nnz(sds.a_left) == nnz(sds.a_right) == sum(
            (2**k - 1) * nk for k, nk in enumerate(partition.parts, start=1)
        )
        assert d_max(sds.a_left) == partition.tau
        assert d_max(sds.a_right) == 2 ** (partition.tau - 1)
        assert sds.v_matrices[0] == sds.a_left

    @pytest.mark.parametrize("partition", SWEEP, ids=SWEEP_IDS)
    def test_intermediate_identity(self, partition):
        sds = sds_factorize(partition)
        for k, v in enumerate(sds.v_matrices, start=1):
            jbar = direct_sum(*(ones_J(nk) for nk in partition.parts[k - 1 :]))
            assert matmul_chain([jbar, v, jbar]) == ones_J(partition.m(k - 1))


class TestTwoLevelConsistency:
    @pytest.mark.parametrize("partition", TWO_LEVEL, ids=TWO_LEVEL_IDS)
    def test_dshb_equals_first_t_factor(self, partition):
        t1 = t_factor(partition, 1)
        assert dshb_factorize(partition).A == t1
        assert sds_factorize(partition).a_left == t1
