"""Construction and validation of dominance partitions n = n_1 + ... + n_tau."""

from __future__ import annotations

import logging
from collections.abc import Sequence

from sparse_j_factorizer.errors import (
    DominanceViolation,
    EmptyPartition,
    InvalidBase,
    MatrixFormatError,
    NonPositivePart,
)
from sparse_j_factorizer.models import Partition

logger = logging.getLogger(__name__)


def partition_from_parts(parts: Sequence[int]) -> Partition:
    """Validate ``parts`` in the given order and return a Partition.

    Args:
        parts: Cluster sizes n_1, ..., n_tau, largest scale first.

    Returns:
        A Partition with n = sum(parts) and suffix sums m_1 .. m_{tau-1}.

    Raises:
        EmptyPartition: If ``parts`` is empty.
        NonPositivePart: If some n_k <= 0.
        DominanceViolation: If n_k < m_k for some k in [tau - 1].
    """
    parts = tuple(int(p) for p in parts)
    if not parts:
        raise EmptyPartition()
    for index, value in enumerate(parts, start=1):
        if value <= 0:
            raise NonPositivePart(index, value)

    # suffix[k] = n_{k+1} + ... + n_tau for k = 0 .. tau
    suffix = [0] * (len(parts) + 1)
    for k in range(len(parts) - 1, -1, -1):
        suffix[k] = suffix[k + 1] + parts[k]

    suffix_sums = tuple(suffix[1:-1])
    for k, (part, m_k) in enumerate(zip(parts, suffix_sums), start=1):
        if part < m_k:
            raise DominanceViolation(k, part, m_k)

    return Partition(n=suffix[0], parts=parts, suffix_sums=suffix_sums)


def partition_from_base(n: int, p: int) -> Partition:
    """Partition n by the nonzero digits of its base-p representation.

    Each nonzero digit i at position e contributes the part i * p**e; zero
    digits are dropped. Parts are ordered from the most significant digit.
    """
    if n < 2 or p < 2:
        raise InvalidBase(n, p)

    parts: list[int] = []
    scale = 1
    remaining = n
    while remaining:
        remaining, digit = divmod(remaining, p)
        if digit:
            parts.append(digit * scale)
        scale *= p
    parts.reverse()

    partition = partition_from_parts(parts)
    logger.debug("base-%d partition of %d: %s", p, n, partition)
    return partition


def parse_parts(text: str) -> tuple[int, ...]:
    """Parse a comma-separated list of integers such as ``"8,4,2,1"``."""
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise MatrixFormatError(f"cannot parse parts list {text!r}") from exc


def parse_partition(text: str) -> Partition:
    """Parse the textual form ``"n=15;parts=8,4,2,1"`` and validate it."""
    fields: dict[str, str] = {}
    for chunk in text.strip().split(";"):
        if not chunk:
            continue
        key, sep, value = chunk.partition("=")
        if not sep:
            raise MatrixFormatError(f"malformed partition text {text!r}")
        fields[key.strip()] = value.strip()

    if "parts" not in fields:
        raise MatrixFormatError(f"partition text {text!r} has no parts field")
    partition = partition_from_parts(parse_parts(fields["parts"]))

    if "n" in fields:
        try:
            declared = int(fields["n"])
        except ValueError as exc:
            raise MatrixFormatError(f"malformed n in {text!r}") from exc
        if declared != partition.n:
            raise MatrixFormatError(
                f"declared n={declared} but parts sum to {partition.n}"
            )
    return partition
