"""Exception hierarchy for the sparse J-factorizer."""

from __future__ import annotations


class FactorizationError(Exception):
    """Base class for every error raised by this package."""


class PartitionError(FactorizationError, ValueError):
    """A partition n = n_1 + ... + n_tau is malformed."""


class EmptyPartition(PartitionError):
    def __init__(self) -> None:
        super().__init__("partition must contain at least one part")


class NonPositivePart(PartitionError):
    """A part n_k is zero or negative."""

    def __init__(self, index: int, value: int) -> None:
        self.index = index
        self.value = value
        super().__init__(f"part {index} must be a positive integer, got {value}")


class DominanceViolation(PartitionError):
    """A part n_k is smaller than the sum m_k of all later parts."""

    def __init__(self, k: int, part: int, suffix_sum: int) -> None:
        self.k = k
        self.part = part
        self.suffix_sum = suffix_sum
        super().__init__(
            f"dominance violated at k={k}: n_{k}={part} < m_{k}={suffix_sum}"
        )


class InvalidBase(PartitionError):
    def __init__(self, n: int, base: int) -> None:
        self.n = n
        self.base = base
        super().__init__(f"base-p partition needs n >= 2 and p >= 2, got n={n}, p={base}")


class ShapeMismatch(FactorizationError, ValueError):
    """Two matrices have incompatible shapes for the requested operation."""

    def __init__(self, left: tuple[int, int], right: tuple[int, int], op: str) -> None:
        self.left = left
        self.right = right
        super().__init__(f"shape mismatch in {op}: {left} vs {right}")


class LevelOutOfRange(FactorizationError, ValueError):
    def __init__(self, k: int, tau: int) -> None:
        self.k = k
        self.tau = tau
        super().__init__(f"level k={k} out of range [1, {tau}]")


class NotPowerOfTwo(FactorizationError, ValueError):
    """One-peer exponential mixing needs every cluster size to be a power of 2."""

    def __init__(self, k: int, size: int) -> None:
        self.k = k
        self.size = size
        super().__init__(f"cluster {k} has size {size}, which is not a power of 2")


class MatrixFormatError(FactorizationError, ValueError):
    """Serialized matrix, manifest or partition text could not be parsed."""


class VerificationFailure(FactorizationError):
    """J0 A J0 differs from J."""

    def __init__(self, residual: object) -> None:
        self.residual = residual
        super().__init__(f"J0 A J0 != J (max abs difference {residual})")
