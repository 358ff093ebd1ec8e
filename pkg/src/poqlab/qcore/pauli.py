"""Phase-tracked n-qubit Pauli words in symplectic (x, z, phase) form.

A word is stored as ``i^k * X(x) * Z(z)`` where ``x`` and ``z`` are bitmasks
(bit i set means an X resp. Z factor on qubit i) and ``k`` counts quarter
turns of the global phase.  The letter Y never appears explicitly: it is the
product ``i * X * Z`` on one site, so ``x & z`` marks the Y sites.  Qubit 0 is
the leftmost letter and the most significant amplitude bit.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

_LETTER_TO_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_PHASES = (1 + 0j, 1j, -1 + 0j, -1j)

_SIGMA = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _phase_power(phase: complex) -> int:
    for k, p in enumerate(_PHASES):
        if abs(phase - p) < 1e-12:
            return k
    raise ValueError(f"phase must be one of +1, +i, -1, -i, got {phase!r}")


@dataclass(frozen=True)
class PauliWord:
    """An element of the n-qubit Pauli group."""

    n: int
    x: int
    z: int
    k: int  # operator = i^k * X(x) * Z(z)

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("negative qubit count")
        mask = (1 << self.n) - 1
        if self.x & ~mask or self.z & ~mask:
            raise ValueError("bitmask exceeds word length")
        object.__setattr__(self, "k", self.k % 4)

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_letters(cls, letters: str, phase: complex = 1) -> "PauliWord":
        """Build from a string over I/X/Y/Z, e.g. ``"XZI"``; qubit 0 first."""
        x = z = 0
        n = len(letters)
        n_y = 0
        for i, c in enumerate(letters):
            try:
                xb, zb = _LETTER_TO_BITS[c]
            except KeyError:
                raise ValueError(f"unknown Pauli letter {c!r}") from None
            x |= xb << i
            z |= zb << i
            n_y += xb & zb
        # each Y site carries an intrinsic factor i relative to X(x)Z(z)
        return cls(n, x, z, (_phase_power(phase) + n_y) % 4)

    @classmethod
    def identity(cls, n: int) -> "PauliWord":
        return cls(n, 0, 0, 0)

    @classmethod
    def x_word(cls, mask: int, n: int) -> "PauliWord":
        """sigma_X^mask: X on every qubit with a set bit."""
        return cls(n, mask, 0, 0)

    @classmethod
    def z_word(cls, mask: int, n: int) -> "PauliWord":
        return cls(n, 0, mask, 0)

    @classmethod
    def from_pattern(cls, pattern: str, mask: int) -> "PauliWord":
        """sigma_W(a): letter ``pattern[i]`` applied where bit i of mask is set.

        This realises the W(a) notation: the pattern ranges over {X,Z}^n and
        the support mask selects which sites act nontrivially.
        """
        n = len(pattern)
        letters = [
            pattern[i] if (mask >> i) & 1 else "I" for i in range(n)
        ]
        return cls.from_letters("".join(letters))

    # -- attributes --------------------------------------------------------

    @property
    def letters(self) -> str:
        out = []
        for i in range(self.n):
            xb = (self.x >> i) & 1
            zb = (self.z >> i) & 1
            out.append("IXZY"[xb + 2 * zb])
        return "".join(out)

    @property
    def phase(self) -> complex:
        """Global phase in the letter representation (I/X/Y/Z string)."""
        n_y = bin(self.x & self.z).count("1")
        return _PHASES[(self.k - n_y) % 4]

    @property
    def weight(self) -> int:
        return bin(self.x | self.z).count("1")

    @property
    def is_xz_type(self) -> bool:
        """True when no site carries a Y letter."""
        return (self.x & self.z) == 0

    @property
    def is_observable(self) -> bool:
        """Hermitian with phase +-1; such words square to the identity."""
        return self.phase in (1, -1) and self.dagger() == self

    def support(self) -> int:
        return self.x | self.z

    # -- group operations --------------------------------------------------

    def __mul__(self, other: "PauliWord") -> "PauliWord":
        if self.n != other.n:
            raise ValueError("length mismatch in Pauli product")
        # Z(z1) X(x2) = (-1)^{|z1 & x2|} X(x2) Z(z1)
        swaps = bin(self.z & other.x).count("1")
        return PauliWord(
            self.n,
            self.x ^ other.x,
            self.z ^ other.z,
            (self.k + other.k + 2 * swaps) % 4,
        )

    def dagger(self) -> "PauliWord":
        swaps = bin(self.x & self.z).count("1")
        return PauliWord(self.n, self.x, self.z, (-self.k + 2 * swaps) % 4)

    def inverse(self) -> "PauliWord":
        return self.dagger()

    def negate(self) -> "PauliWord":
        return PauliWord(self.n, self.x, self.z, (self.k + 2) % 4)

    def commutes_with(self, other: "PauliWord") -> bool:
        s = bin(self.z & other.x).count("1") + bin(self.x & other.z).count("1")
        return s % 2 == 0

    def embed(self, n: int, positions: tuple[int, ...]) -> "PauliWord":
        """Place this word's site i at ``positions[i]`` of an n-qubit word."""
        if len(positions) != self.n:
            raise ValueError("positions length must match word length")
        x = z = 0
        for i, p in enumerate(positions):
            if not 0 <= p < n:
                raise ValueError(f"position {p} outside [0,{n})")
            x |= ((self.x >> i) & 1) << p
            z |= ((self.z >> i) & 1) << p
        return PauliWord(n, x, z, self.k)

    def dense(self) -> np.ndarray:
        """Dense 2^n matrix; for validation and small oracles only."""
        if self.n > 12:
            raise ValueError("dense() capped at 12 qubits")
        mats = [_SIGMA[c] for c in self.letters]
        m = reduce(np.kron, mats) if mats else np.eye(1, dtype=complex)
        return self.phase * m

    def __repr__(self) -> str:
        p = {1: "+", -1: "-", 1j: "+i", -1j: "-i"}[self.phase]
        return f"{p}{self.letters}"
