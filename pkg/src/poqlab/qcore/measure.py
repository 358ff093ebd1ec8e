"""Projective measurements: PVMs, Born sampling, Bell measurements."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable

import numpy as np

from .pauli import PauliWord
from .states import Layout, RegisterError, StateVector, _front_matrix


class MeasurementError(ValueError):
    pass


# -- projector kinds -----------------------------------------------------------
#
# Projectors act on a "front matrix" of shape (2^sub, 2^rest): the measured
# registers moved to the most significant axis, everything else flattened.


def _word_sub_masks(w: PauliWord, sub_qubits: int) -> tuple[int, int]:
    """Amplitude-index masks for a word spanning the whole sub space."""
    x_amp = z_amp = 0
    for i in range(w.n):
        bit = 1 << (sub_qubits - 1 - i)
        if (w.x >> i) & 1:
            x_amp |= bit
        if (w.z >> i) & 1:
            z_amp |= bit
    return x_amp, z_amp


def _word_rows(m: np.ndarray, x_amp: int, z_amp: int, k: int) -> np.ndarray:
    """Apply i^k X(x) Z(z) to the row (front) axis of a front matrix."""
    idx = np.arange(m.shape[0], dtype=np.int64)
    signs = np.where(np.bitwise_count(idx & z_amp) & 1, -1.0, 1.0)
    out = np.empty_like(m)
    out[idx ^ x_amp] = (1j**k) * signs[:, None] * m
    return out


@dataclass(frozen=True)
class WordProjector:
    """Product of commuting eigenprojectors (I + s_i * sigma_i)/2."""

    words: tuple[tuple[PauliWord, int], ...]  # (observable word, sign +-1)

    def apply(self, m: np.ndarray, layout: Layout) -> np.ndarray:
        q = layout.num_qubits
        out = m
        for w, s in self.words:
            x_amp, z_amp = _word_sub_masks(w, q)
            out = (out + s * _word_rows(out, x_amp, z_amp, w.k)) / 2
        return out

    def dense(self, layout: Layout) -> np.ndarray:
        d = 2**layout.num_qubits
        p = np.eye(d, dtype=complex)
        for w, s in self.words:
            p = p @ (np.eye(d) + s * w.dense()) / 2
        return p


@dataclass(frozen=True, eq=False)
class KetProjector:
    """Rank-one projector |v><v|."""

    vec: np.ndarray

    def apply(self, m: np.ndarray, layout: Layout) -> np.ndarray:
        coeff = self.vec.conj() @ m
        return np.outer(self.vec, coeff)

    def dense(self, layout: Layout) -> np.ndarray:
        return np.outer(self.vec, self.vec.conj())


@dataclass(frozen=True)
class DiagProjector:
    """0/1 diagonal projector selecting computational basis indices."""

    indices: tuple[int, ...]

    def apply(self, m: np.ndarray, layout: Layout) -> np.ndarray:
        out = np.zeros_like(m)
        out[list(self.indices)] = m[list(self.indices)]
        return out

    def dense(self, layout: Layout) -> np.ndarray:
        d = 2**layout.num_qubits
        p = np.zeros((d, d), dtype=complex)
        for i in self.indices:
            p[i, i] = 1.0
        return p


@dataclass(frozen=True, eq=False)
class DenseProjector:
    """Arbitrary projector matrix on the measured registers."""

    mat: np.ndarray

    def apply(self, m: np.ndarray, layout: Layout) -> np.ndarray:
        return self.mat @ m

    def dense(self, layout: Layout) -> np.ndarray:
        return self.mat


@dataclass(frozen=True)
class Pvm:
    """Labelled projective measurement on a register subset."""

    registers: tuple[str, ...]
    outcomes: tuple[tuple[Hashable, object], ...]

    def labels(self) -> tuple[Hashable, ...]:
        return tuple(lb for lb, _ in self.outcomes)

    def sub_layout(self, layout: Layout) -> Layout:
        return layout.keep(self.registers)

    def validate(self, layout: Layout, atol: float = 1e-9) -> None:
        """Idempotency, pairwise orthogonality and completeness."""
        sub = self.sub_layout(layout)
        d = 2**sub.num_qubits
        mats = [p.dense(sub) for _, p in self.outcomes]
        total = np.zeros((d, d), dtype=complex)
        for i, p in enumerate(mats):
            if np.max(np.abs(p - p.conj().T)) > atol:
                raise MeasurementError(f"outcome {i}: projector not Hermitian")
            if np.max(np.abs(p @ p - p)) > atol:
                raise MeasurementError(f"outcome {i}: projector not idempotent")
            for j in range(i):
                if np.max(np.abs(p @ mats[j])) > atol:
                    raise MeasurementError(f"outcomes {i},{j} not orthogonal")
            total += p
        if np.max(np.abs(total - np.eye(d))) > atol:
            raise MeasurementError("projectors do not sum to identity")


# -- application ----------------------------------------------------------------


def _restore(state: StateVector, names: tuple[str, ...], m: np.ndarray) -> np.ndarray:
    """Invert the _front_matrix reshuffle back to flat amplitudes."""
    q = state.num_qubits
    front = state.layout.qubits(*names)
    rest = [i for i in range(q) if i not in front]
    t = m.reshape((2,) * q)
    inv = np.argsort(tuple(front) + tuple(rest))
    return np.transpose(t, inv).reshape(-1)


def pvm_branches(state: StateVector, pvm: Pvm) -> list[tuple[Hashable, StateVector]]:
    """Unnormalised projected branches for every outcome, in PVM order."""
    for r in pvm.registers:
        if r not in state.layout.names:
            raise RegisterError(f"PVM register {r!r} not in state layout")
    m = _front_matrix(state, pvm.registers)
    sub = pvm.sub_layout(state.layout)
    out = []
    for label, proj in pvm.outcomes:
        branch = proj.apply(m, sub)
        out.append((label, StateVector.raw(_restore(state, pvm.registers, branch), state.layout)))
    return out


def pvm_distribution(state: StateVector, pvm: Pvm, *, check: bool = True) -> dict:
    """Exact Born distribution over outcome labels."""
    probs = {}
    m = _front_matrix(state, pvm.registers)
    sub = pvm.sub_layout(state.layout)
    for label, proj in pvm.outcomes:
        branch = proj.apply(m, sub)
        probs[label] = float(np.vdot(branch, branch).real)
    if check:
        total = sum(probs.values())
        if abs(total - 1.0) > 1e-10:
            raise MeasurementError(f"PVM probabilities sum to {total}")
    return probs


def measure_pvm(state: StateVector, pvm: Pvm, rng: np.random.Generator):
    """Sample one outcome; returns (label, renormalised post state)."""
    branches = pvm_branches(state, pvm)
    probs = np.array([b.norm() ** 2 for _, b in branches])
    total = probs.sum()
    if abs(total - 1.0) > 1e-10:
        raise MeasurementError(f"PVM probabilities sum to {total}")
    idx = int(rng.choice(len(probs), p=probs / total))
    label, branch = branches[idx]
    nrm = branch.norm()
    if nrm < 1e-14:
        raise MeasurementError(
            f"sampled outcome {label!r} has vanishing probability; RNG bug?"
        )
    return label, StateVector(branch.amps / nrm, state.layout)


# -- Bell measurement -------------------------------------------------------------


def bell_kets(n: int) -> dict[tuple[str, str], np.ndarray]:
    """Orthonormal Bell basis; key (a, b) marks (X^a Z^b (x) I)|Phi+_n>.

    The key is chosen so that sigma_X^a sigma_Z^b is the correction restoring
    a state teleported through |Phi+_n> when this outcome occurs.
    """
    kets = {}
    dim = 4**n
    for a in range(2**n):
        for b in range(2**n):
            v = np.zeros(dim, dtype=complex)
            for j in range(2**n):
                sign = -1.0 if bin(b & j).count("1") & 1 else 1.0
                v[((j ^ a) << n) | j] = sign
            v /= np.sqrt(2**n)
            key = (format(a, f"0{n}b"), format(b, f"0{n}b"))
            kets[key] = v
    return kets


def bell_pvm(n: int, half1: str, half2: str) -> Pvm:
    outcomes = tuple(
        (key, KetProjector(vec)) for key, vec in sorted(bell_kets(n).items())
    )
    return Pvm(registers=(half1, half2), outcomes=outcomes)


def bell_measure(
    state: StateVector, half1: str, half2: str, rng: np.random.Generator
):
    """Bell-measure two n-qubit registers.

    Returns (a, b, post): a is the X-correction key, b the Z-correction key,
    so applying sigma_X^a sigma_Z^b to the teleported register restores the
    input state.
    """
    w1 = state.layout.width(half1)
    w2 = state.layout.width(half2)
    if w1 != w2:
        raise RegisterError(f"halves have widths {w1} != {w2}")
    (a, b), post = measure_pvm(state, bell_pvm(w1, half1, half2), rng)
    return a, b, post


def contract_epr(state: StateVector, half1: str, half2: str) -> StateVector:
    """<Phi+_n| contraction of two registers; result is unnormalised."""
    n = state.layout.width(half1)
    if state.layout.width(half2) != n:
        raise RegisterError("EPR contraction needs equal-width registers")
    m = _front_matrix(state, (half1, half2))
    rest = np.zeros(m.shape[1], dtype=complex)
    for j in range(2**n):
        rest += m[(j << n) | j]
    rest /= np.sqrt(2**n)
    remaining = tuple(x for x in state.layout.names if x not in (half1, half2))
    return StateVector.raw(rest, state.layout.keep(remaining))
