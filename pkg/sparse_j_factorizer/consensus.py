"""Three-phase mixing schedules and the finite-time averaging simulator.

A schedule is W^(1), ..., W^(q) applied as X <- W X. Phase 1 and Phase 3
factor J0 inside each cluster, Phase 2 applies the inter-cluster A-factor, so
the exact product W^(q) ... W^(1) equals J0 A J0 = J.
"""

from __future__ import annotations

import logging
from fractions import Fraction

import numpy as np

from sparse_j_factorizer.dshb import dshb_factorize
from sparse_j_factorizer.errors import NotPowerOfTwo, ShapeMismatch
from sparse_j_factorizer.matrix import (
    block_diag_J,
    d_max,
    direct_sum,
    identity,
    matmul_chain,
    nnz,
    to_csr,
)
from sparse_j_factorizer.models import (
    ConsensusTrace,
    CostReport,
    CostRow,
    IntraMethod,
    MixingRound,
    MixingSchedule,
    Partition,
    Phase,
    Phase2Method,
    SparseMatrix,
)
from sparse_j_factorizer.rhb import rhb_factorize
from sparse_j_factorizer.sds import sds_factorize

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-10

T_ORDERS = ("left", "right")


def _log2_exact(size: int) -> int | None:
    if size < 1 or size & (size - 1):
        return None
    return size.bit_length() - 1


def one_peer_round(size: int, shift: int) -> SparseMatrix:
    """(I + P**shift) / 2 for the cyclic shift P of the given order."""
    half = Fraction(1, 2)
    return SparseMatrix.from_items(
        size,
        size,
        [(r, r, half) for r in range(size)]
        + [(r, (r + shift) % size, half) for r in range(size)],
    )


def intra_cluster_schedule(
    partition: Partition, method: IntraMethod | str
) -> list[SparseMatrix]:
    """Rounds whose exact product is J0 = J_1 (+) ... (+) J_tau.

    ``dense`` returns J0 itself. ``one-peer-exp`` returns max_k log2(n_k)
    rounds; in round i each cluster of size n_k > 2**i applies
    (I + P**(2**i)) / 2 and every other cluster stays idle.
    """
    method = IntraMethod(method)
    if method == IntraMethod.DENSE:
        return [block_diag_J(partition)]

    logs: list[int] = []
    for k, size in enumerate(partition.parts, start=1):
        exponent = _log2_exact(size)
        if exponent is None:
            raise NotPowerOfTwo(k, size)
        logs.append(exponent)

    rounds: list[SparseMatrix] = []
    for i in range(max(logs)):
        blocks = [
            one_peer_round(size, 2**i) if i < exponent else identity(size)
            for size, exponent in zip(partition.parts, logs)
        ]
        rounds.append(direct_sum(*blocks))
    return rounds


def phase2_rounds(
    partition: Partition, method: Phase2Method | str, t_order: str = "left"
) -> list[tuple[SparseMatrix, str]]:
    """Inter-cluster rounds as (matrix, label) pairs in application order."""
    method = Phase2Method(method)
    if method == Phase2Method.RHB:
        return [(rhb_factorize(partition).A, "A_RHB")]
    if method == Phase2Method.DSHB:
        return [(dshb_factorize(partition).A, "A_DSHB")]

    sds = sds_factorize(partition)
    if method == Phase2Method.SDS_LEFT:
        return [(sds.a_left, "A_L")]
    if method == Phase2Method.SDS_RIGHT:
        return [(sds.a_right, "A_R")]

    if t_order not in T_ORDERS:
        raise ValueError(f"t_order must be one of {T_ORDERS}, got {t_order!r}")
    # T^_(tau) is the identity and is never scheduled.
    labelled = [(hat, f"T_hat_{k}") for k, hat in enumerate(sds.hat_factors[:-1], start=1)]
    # Applying T^_(tau-1) first accumulates T^_(1) ... T^_(tau-1) = A_L.
    return labelled[::-1] if t_order == "left" else labelled


def build_schedule(
    partition: Partition,
    phase2: Phase2Method | str,
    intra: IntraMethod | str,
    t_order: str = "left",
) -> MixingSchedule:
    """Concatenate Phase 1, Phase 2 and a verbatim copy of Phase 1 as Phase 3."""
    phase2 = Phase2Method(phase2)
    intra = IntraMethod(intra)

    intra_rounds = intra_cluster_schedule(partition, intra)
    rounds: list[MixingRound] = [
        MixingRound(w, Phase.PHASE1, f"{intra.value}_{i}")
        for i, w in enumerate(intra_rounds, start=1)
    ]
    rounds += [
        MixingRound(w, Phase.PHASE2, label)
        for w, label in phase2_rounds(partition, phase2, t_order)
    ]
    rounds += [
        MixingRound(w, Phase.PHASE3, f"{intra.value}_{i}")
        for i, w in enumerate(intra_rounds, start=1)
    ]

    schedule = MixingSchedule(
        rounds=tuple(rounds),
        n=partition.n,
        partition=partition,
        phase2=phase2,
        intra=intra,
    )
    logger.info(
        "schedule for %s: phase2=%s intra=%s rounds=%d",
        partition, phase2.value, intra.value, len(schedule),
    )
    return schedule


def schedule_product(schedule: MixingSchedule) -> SparseMatrix:
    """Exact W^(q) ... W^(2) W^(1)."""
    if not schedule.rounds:
        return identity(schedule.n)
    return matmul_chain([r.matrix for r in reversed(schedule.rounds)])


def random_initial_state(n: int, dim: int, seed: int | None) -> np.ndarray:
    """Uniform [-1, 1] initial values, one row per agent."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-1.0, 1.0, size=(n, dim))


def _max_deviation(x: np.ndarray, average: np.ndarray) -> float:
    return float(np.max(np.abs(x - average)))


def simulate(
    schedule: MixingSchedule,
    x0: np.ndarray,
    tolerance: float = DEFAULT_TOLERANCE,
    seed: int | None = None,
) -> ConsensusTrace:
    """Run X <- W X over the schedule in floating point.

    Args:
        schedule: Mixing rounds in application order.
        x0: Initial state with one row per agent (a 1-D array is a column).
        tolerance: Max deviation from the true average counted as consensus.
        seed: Seed that produced ``x0``, recorded in the trace.

    Returns:
        A ConsensusTrace with one error entry per round plus the initial state.

    Raises:
        ShapeMismatch: If ``x0`` does not have ``schedule.n`` rows.
        ValueError: If ``tolerance`` is not positive.
    """
    if tolerance <= 0:
        raise ValueError(f"tolerance must be positive, got {tolerance}")
    x = np.array(x0, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.shape[0] != schedule.n:
        raise ShapeMismatch((schedule.n, schedule.n), x.shape, "simulate")

    average = x.mean(axis=0)
    states = [x.copy()]
    errors = [_max_deviation(x, average)]
    costs: list[tuple[int, int]] = []
    for index, rnd in enumerate(schedule.rounds, start=1):
        x = to_csr(rnd.matrix) @ x
        states.append(x.copy())
        errors.append(_max_deviation(x, average))
        costs.append((nnz(rnd.matrix), d_max(rnd.matrix)))
        logger.debug(
            "round %d (%s %s): max deviation %.3e",
            index, rnd.phase.value, rnd.label, errors[-1],
        )

    trace = ConsensusTrace(
        states=states,
        errors=errors,
        round_costs=costs,
        phases=[r.phase.value for r in schedule.rounds],
        labels=[r.label for r in schedule.rounds],
        tolerance=tolerance,
        seed=seed,
    )
    if trace.consensus_reached:
        logger.info("consensus reached after %s rounds", trace.rounds_to_consensus)
    else:
        logger.warning(
            "consensus not reached: final deviation %.3e > %.1e",
            trace.final_error, tolerance,
        )
    return trace


def cost_report(partition: Partition) -> CostReport:
    """Directly counted nnz, d_max and Phase-2 round count per Phase-2 choice."""
    n, tau = partition.n, partition.tau
    rhb = rhb_factorize(partition)
    dshb = dshb_factorize(partition)
    sds = sds_factorize(partition)
    sds_total = sum((2**k - 1) * nk for k, nk in enumerate(partition.parts, start=1))

    t_factors = sds.t_factors[:-1]
    rows = (
        CostRow(Phase2Method.RHB, (nnz(rhb.A),), d_max(rhb.A), 1, (n + tau * (tau - 1),)),
        CostRow(Phase2Method.DSHB, (nnz(dshb.A),), d_max(dshb.A), 1, (dshb.published_nnz,)),
        CostRow(Phase2Method.SDS_LEFT, (nnz(sds.a_left),), d_max(sds.a_left), 1, (sds_total,)),
        CostRow(Phase2Method.SDS_RIGHT, (nnz(sds.a_right),), d_max(sds.a_right), 1, (sds_total,)),
        CostRow(
            Phase2Method.T_SEQUENCE,
            tuple(nnz(t) for t in t_factors),
            max((d_max(t) for t in t_factors), default=0),
            tau - 1,
            tuple(partition.part(k) + 2 * partition.m(k) for k in range(1, tau)),
        ),
    )
    return CostReport(partition=partition, rows=rows)
