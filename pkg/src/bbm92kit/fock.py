"""n-photon two-polarization states and their overlap rules.

A state of n photons shared between the horizontal (H) and vertical (V)
polarization modes is stored as a real amplitude vector of length n+1,
indexed by the number k of H photons.  All four measurement basis states
(H/V and the +/-45 degree diagonals) have real amplitudes in this basis,
so real arithmetic suffices throughout the toolkit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum, IntEnum

import numpy as np

from .errors import NumericalError

# Amplitudes use exact integer binomials converted to float; C(32, 16) is still
# exactly representable in a double, and nothing downstream needs larger n.
MAX_PHOTONS = 32


class Basis(Enum):
    """Measurement basis: Z splits H/V, X splits the +/-45 diagonals."""

    Z = "Z"
    X = "X"


class Bit(IntEnum):
    """Key bit assigned to a detector outcome."""

    ZERO = 0
    ONE = 1


@dataclass(frozen=True)
class PolarizedFockState:
    """Normalized pure state of ``n`` photons over the H/V occupation basis.

    ``amplitudes[k]`` is the coefficient of the state with k photons in H
    and n-k photons in V.
    """

    n: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"photon count must be >= 1, got {self.n}")
        amps = np.array(self.amplitudes, dtype=float)
        if amps.shape != (self.n + 1,):
            raise ValueError(
                f"expected {self.n + 1} amplitudes for n={self.n}, got shape {amps.shape}"
            )
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"amplitudes must have unit norm, got {norm!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.n + 1


@dataclass(frozen=True)
class ModePartition:
    """Split of ``n`` photons into per-mode photon numbers ``parts``."""

    parts: tuple[int, ...]

    def __init__(self, parts, n: int | None = None):
        parts = tuple(int(p) for p in parts)
        if not parts:
            raise ValueError("partition must contain at least one mode")
        if any(p < 1 for p in parts):
            raise ValueError(f"all parts must be >= 1, got {parts}")
        if n is not None and sum(parts) != n:
            raise ValueError(f"parts {parts} sum to {sum(parts)}, declared n={n}")
        object.__setattr__(self, "parts", parts)

    @property
    def n(self) -> int:
        return sum(self.parts)


def basis_state(n: int, w: Basis, b: Bit) -> PolarizedFockState:
    """State selected by detector bit ``b`` when measuring ``n`` photons in basis ``w``.

    In the Z basis these are the pure-H (bit 0) and pure-V (bit 1) occupation
    states.  In the X basis they are the n-fold diagonal states, whose
    occupation amplitudes are signed square roots of binomial coefficients
    scaled by 2^(-n/2).
    """
    if n < 1:
        raise ValueError(f"photon count must be >= 1, got {n}")
    if n > MAX_PHOTONS:
        raise ValueError(f"photon count {n} exceeds supported maximum {MAX_PHOTONS}")
    b = Bit(b)
    amps = np.zeros(n + 1)
    if w is Basis.Z:
        amps[n if b is Bit.ZERO else 0] = 1.0
    else:
        sign = 1.0 if b is Bit.ZERO else -1.0
        scale = 2.0 ** (-n / 2.0)
        for k in range(n + 1):
            amps[k] = sign ** (n - k) * scale * math.sqrt(math.comb(n, k))
    return PolarizedFockState(n, amps)


def inner_product(s1: PolarizedFockState, s2: PolarizedFockState) -> float:
    """Overlap of two states with the same photon number."""
    if s1.n != s2.n:
        raise ValueError(f"photon numbers differ: {s1.n} != {s2.n}")
    return float(np.dot(s1.amplitudes, s2.amplitudes))


def multimode_inner_product(
    partition: ModePartition, w1: Basis, b1: Bit, w2: Basis, b2: Bit
) -> float:
    """Overlap of two basis states whose photons are spread over several modes.

    With the photon number of each mode fixed, a multimode basis state is a
    product of single-mode basis states, so the overlap is the product of the
    per-mode overlaps.  The result always coincides with the single-mode value
    for the total photon number; that equality is checked here because every
    operator bound downstream relies on it.
    """
    product = 1.0
    for n_j in partition.parts:
        product *= inner_product(basis_state(n_j, w1, b1), basis_state(n_j, w2, b2))
    single = inner_product(
        basis_state(partition.n, w1, b1), basis_state(partition.n, w2, b2)
    )
    if abs(product - single) > 1e-9:
        raise NumericalError(
            f"multimode overlap {product!r} deviates from single-mode value {single!r}"
        )
    return product
