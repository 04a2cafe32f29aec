"""Core data models for the sparse J-factorizer."""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from types import MappingProxyType

import numpy as np

# Exact rational scalar; Fraction keeps num/den normalized with den >= 1.
Rational = Fraction


@dataclass(frozen=True)
class Partition:
    """A validated decomposition n = n_1 + ... + n_tau with n_k >= m_k.

    Build instances with ``partition_from_parts`` or ``partition_from_base``;
    the constructor itself does not re-validate.
    """

    n: int
    parts: tuple[int, ...]
    suffix_sums: tuple[int, ...]  # m_1 .. m_{tau-1}

    @property
    def tau(self) -> int:
        return len(self.parts)

    def part(self, k: int) -> int:
        """n_k for 1-based level k."""
        return self.parts[k - 1]

    def m(self, k: int) -> int:
        """Suffix sum m_k, with the conventions m_0 = n and m_tau = 0."""
        if k == 0:
            return self.n
        if k == self.tau:
            return 0
        return self.suffix_sums[k - 1]

    def offset(self, k: int) -> int:
        """0-based index of the first row of cluster k."""
        return self.n - self.m(k - 1)

    def cluster_of(self, index: int) -> int:
        """1-based cluster containing the 0-based row ``index``."""
        for k in range(1, self.tau + 1):
            if index < self.offset(k) + self.part(k):
                return k
        raise IndexError(f"row {index} outside partition of order {self.n}")

    def to_text(self) -> str:
        return f"n={self.n};parts={','.join(str(p) for p in self.parts)}"

    def __str__(self) -> str:
        return self.to_text()


@dataclass(frozen=True)
class SparseMatrix:
    """Coordinate-style sparse matrix over exact rationals.

    ``entries`` maps 0-based (row, col) to a nonzero Fraction. Zeros passed in
    are dropped, so the number of stored entries is the structural nnz.
    """

    rows: int
    cols: int
    entries: Mapping[tuple[int, int], Fraction] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"matrix shape must be positive, got {self.rows}x{self.cols}")
        clean: dict[tuple[int, int], Fraction] = {}
        for (i, j), value in sorted(self.entries.items()):
            if not (0 <= i < self.rows and 0 <= j < self.cols):
                raise ValueError(
                    f"entry ({i}, {j}) outside {self.rows}x{self.cols} matrix"
                )
            value = Fraction(value)
            if value != 0:
                clean[(i, j)] = value
        object.__setattr__(self, "entries", MappingProxyType(clean))

    @classmethod
    def from_items(
        cls, rows: int, cols: int, items: Iterable[tuple[int, int, Fraction | int]]
    ) -> SparseMatrix:
        """Build from (row, col, value) triples, summing repeated coordinates."""
        acc: dict[tuple[int, int], Fraction] = {}
        for i, j, value in items:
            acc[(i, j)] = acc.get((i, j), Fraction(0)) + Fraction(value)
        return cls(rows, cols, acc)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def get(self, i: int, j: int) -> Fraction:
        return self.entries.get((i, j), Fraction(0))

    def items(self) -> list[tuple[int, int, Fraction]]:
        """Stored entries as (row, col, value), row-major."""
        return [(i, j, v) for (i, j), v in self.entries.items()]


@dataclass(frozen=True)
class HBSequence:
    """The chain A^(1), ..., A^(tau) of trailing blocks of an HB matrix.

    A^(k) has order m_{k-1}; A^(tau) is diagonal of order n_tau.
    """

    matrices: tuple[SparseMatrix, ...]
    partition: Partition

    def level(self, k: int) -> SparseMatrix:
        return self.matrices[k - 1]

    def __len__(self) -> int:
        return len(self.matrices)


@dataclass(frozen=True)
class RhbFactorization:
    """Reduced hierarchically banded factor A with its HB sequence."""

    A: SparseMatrix
    sequence: HBSequence
    partition: Partition
    alphas: tuple[Fraction, ...]  # alpha_1 .. alpha_tau
    betas: tuple[tuple[Fraction, ...], ...]  # betas[k-1][l-1] = beta^(k)_{k+l}
    denominator: str = "global"


@dataclass(frozen=True)
class DshbFactorization:
    """Doubly stochastic HB factor A, its HB sequence and the scaled sequence."""

    A: SparseMatrix
    sequence: HBSequence
    scaled_sequence: tuple[SparseMatrix, ...]  # A~^(k) = (n / m_{k-1}) A^(k)
    partition: Partition

    @property
    def scaling_factors(self) -> tuple[Fraction, ...]:
        p = self.partition
        return tuple(Fraction(p.n, p.m(k - 1)) for k in range(1, p.tau + 1))

    @property
    def published_nnz(self) -> int:
        """The closed form sum(k * n_k) printed with the DSHB theorem."""
        return sum(k * nk for k, nk in enumerate(self.partition.parts, start=1))


@dataclass(frozen=True)
class SdsFactorization:
    """T-factors, their augmented forms and the left/right SDS factors."""

    t_factors: tuple[SparseMatrix, ...]
    hat_factors: tuple[SparseMatrix, ...]
    a_left: SparseMatrix
    a_right: SparseMatrix
    partition: Partition
    v_matrices: tuple[SparseMatrix, ...] = ()


class Phase(Enum):
    """Phase of a mixing round in a three-phase schedule."""

    PHASE1 = "phase1"
    PHASE2 = "phase2"
    PHASE3 = "phase3"


class Phase2Method(Enum):
    """Choice of inter-cluster (Phase 2) mixing."""

    RHB = "rhb"
    DSHB = "dshb"
    SDS_LEFT = "sds-left"
    SDS_RIGHT = "sds-right"
    T_SEQUENCE = "t-factors"


class IntraMethod(Enum):
    """Generator for the intra-cluster (Phase 1 and 3) rounds."""

    DENSE = "dense"
    ONE_PEER_EXP = "one-peer-exp"


@dataclass(frozen=True)
class MixingRound:
    matrix: SparseMatrix
    phase: Phase
    label: str


@dataclass(frozen=True)
class MixingSchedule:
    """Ordered rounds W^(1), ..., W^(q); applying them in order yields J."""

    rounds: tuple[MixingRound, ...]
    n: int
    partition: Partition
    phase2: Phase2Method
    intra: IntraMethod

    def __len__(self) -> int:
        return len(self.rounds)

    def phase_rounds(self, phase: Phase) -> list[MixingRound]:
        return [r for r in self.rounds if r.phase == phase]


@dataclass
class ConsensusTrace:
    """Result of simulating X <- W X over a schedule.

    ``errors[0]`` is the deviation of the initial state; ``errors[r]`` the
    deviation after round r.
    """

    states: list[np.ndarray]
    errors: list[float]
    round_costs: list[tuple[int, int]]  # (nnz, d_max) per round
    phases: list[str]
    labels: list[str]
    tolerance: float
    seed: int | None = None

    @property
    def final_error(self) -> float:
        return self.errors[-1]

    @property
    def consensus_reached(self) -> bool:
        return self.final_error <= self.tolerance

    @property
    def rounds_to_consensus(self) -> int | None:
        """First round after which every recorded error is within tolerance."""
        if not self.consensus_reached:
            return None
        r = len(self.errors) - 1
        while r > 0 and self.errors[r - 1] <= self.tolerance:
            r -= 1
        return r


@dataclass(frozen=True)
class CostRow:
    """Directly counted communication cost of one Phase-2 choice."""

    method: Phase2Method
    nnz: tuple[int, ...]  # one entry per Phase-2 matrix
    d_max: int
    rounds: int
    published_nnz: tuple[int, ...]  # closed forms from the trade-off table

    @property
    def matches_published(self) -> bool:
        return self.nnz == self.published_nnz


@dataclass(frozen=True)
class CostReport:
    partition: Partition
    rows: tuple[CostRow, ...]

    def row(self, method: Phase2Method) -> CostRow:
        for row in self.rows:
            if row.method == method:
                return row
        raise KeyError(method)


@dataclass
class CliConfig:
    """Configuration collected from the command line."""

    command: str
    n: int | None = None
    base: int | None = None
    parts: tuple[int, ...] | None = None
    method: Phase2Method = Phase2Method.DSHB
    intra: IntraMethod = IntraMethod.DENSE
    output_dir: str = "."
    fmt: str = "json"
    seed: int = 0
    dim: int = 4
    tolerance: float = 1e-10
    t_order: str = "left"
    inputs: tuple[str, ...] = ()
    report_format: str = "text"
    trace_path: str | None = None
    verbose: bool = False
