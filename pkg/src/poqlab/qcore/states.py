"""Dense statevectors and density matrices over named qubit registers.

Conventions fixed here and asserted throughout the test suite:

* qubit index 0 is the most significant amplitude bit;
* bitstrings are printed most-significant-first;
* states are value-like: every operation returns a fresh object.

Storage is dense and capped (default 22 qubits, ``POQLAB_MAX_QUBITS``
overrides).
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .pauli import PauliWord

DEFAULT_MAX_QUBITS = 22

NORM_ATOL = 1e-10


class RegisterError(ValueError):
    """Register name/width problems: unknown, overlapping or mismatched."""


class QubitBudgetError(ValueError):
    """Requested state exceeds the dense-simulation qubit cap."""


def max_qubits() -> int:
    raw = os.environ.get("POQLAB_MAX_QUBITS")
    return int(raw) if raw else DEFAULT_MAX_QUBITS


@dataclass(frozen=True)
class Layout:
    """Ordered map register name -> contiguous qubit range."""

    regs: tuple[tuple[str, int], ...]

    def __post_init__(self):
        seen = set()
        for name, width in self.regs:
            if name in seen:
                raise RegisterError(f"duplicate register {name!r}")
            if width < 1:
                raise RegisterError(f"register {name!r} has width {width}")
            seen.add(name)

    @classmethod
    def of(cls, *regs: tuple[str, int]) -> "Layout":
        return cls(tuple(regs))

    @property
    def num_qubits(self) -> int:
        return sum(w for _, w in self.regs)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.regs)

    def width(self, name: str) -> int:
        for rname, w in self.regs:
            if rname == name:
                return w
        raise RegisterError(f"unknown register {name!r}")

    def offset(self, name: str) -> int:
        off = 0
        for rname, w in self.regs:
            if rname == name:
                return off
            off += w
        raise RegisterError(f"unknown register {name!r}")

    def qubits(self, *names: str) -> list[int]:
        """Global qubit indices of the named registers, in order."""
        out: list[int] = []
        for name in names:
            off = self.offset(name)
            out.extend(range(off, off + self.width(name)))
        return out

    def extended(self, name: str, width: int) -> "Layout":
        return Layout(self.regs + ((name, width),))

    def keep(self, names: tuple[str, ...]) -> "Layout":
        """Sub-layout in the requested order (matches front-axis reshapes)."""
        return Layout(tuple((n, self.width(n)) for n in names))

    def amp_bit(self, qubit: int) -> int:
        """Bit position of a qubit inside an integer amplitude index."""
        return self.num_qubits - 1 - qubit

    def amp_mask(self, qubits) -> int:
        mask = 0
        for q in qubits:
            mask |= 1 << self.amp_bit(q)
        return mask


class StateVector:
    """Pure state over a Layout.  Immutable by convention."""

    __slots__ = ("amps", "layout")

    def __init__(self, amps: np.ndarray, layout: Layout, *, validate: bool = True):
        amps = np.asarray(amps, dtype=complex)
        q = layout.num_qubits
        if q > max_qubits():
            raise QubitBudgetError(f"{q} qubits exceeds cap {max_qubits()}")
        if amps.shape != (2**q,):
            raise ValueError(f"expected {2**q} amplitudes, got {amps.shape}")
        if validate and abs(np.linalg.norm(amps) - 1.0) > NORM_ATOL:
            raise ValueError(f"state norm {np.linalg.norm(amps)} != 1")
        self.amps = amps
        self.layout = layout

    @classmethod
    def raw(cls, amps: np.ndarray, layout: Layout) -> "StateVector":
        """Unnormalised branch vector (internal + oracle use)."""
        return cls(amps, layout, validate=False)

    @property
    def num_qubits(self) -> int:
        return self.layout.num_qubits

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def copy(self) -> "StateVector":
        return StateVector.raw(self.amps.copy(), self.layout)

    def __repr__(self) -> str:
        return f"StateVector({self.layout.regs}, {len(self.amps)} amps)"


class DensityMatrix:
    """Mixed state over a Layout; Hermitian, unit trace, PSD."""

    __slots__ = ("mat", "layout")

    def __init__(self, mat: np.ndarray, layout: Layout, *, validate: bool = True):
        mat = np.asarray(mat, dtype=complex)
        d = 2**layout.num_qubits
        if mat.shape != (d, d):
            raise ValueError(f"expected {d}x{d} matrix, got {mat.shape}")
        if validate:
            if np.max(np.abs(mat - mat.conj().T)) > NORM_ATOL:
                raise ValueError("density matrix is not Hermitian")
            if abs(np.trace(mat).real - 1.0) > NORM_ATOL:
                raise ValueError(f"trace {np.trace(mat)} != 1")
            evals = np.linalg.eigvalsh(mat)
            if evals.min() < -1e-9:
                raise ValueError(f"negative eigenvalue {evals.min()}")
        self.mat = mat
        self.layout = layout

    @property
    def num_qubits(self) -> int:
        return self.layout.num_qubits

    def __repr__(self) -> str:
        return f"DensityMatrix({self.layout.regs})"


# -- construction ------------------------------------------------------------


def zero_state(layout: Layout) -> StateVector:
    amps = np.zeros(2**layout.num_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(amps, layout)


def basis_state(layout: Layout, bits: str) -> StateVector:
    """Computational basis state from a bitstring, qubit 0 first."""
    q = layout.num_qubits
    if len(bits) != q or set(bits) - {"0", "1"}:
        raise ValueError(f"need a {q}-bit string, got {bits!r}")
    amps = np.zeros(2**q, dtype=complex)
    amps[int(bits, 2)] = 1.0
    return StateVector(amps, layout)


def from_amplitudes(layout: Layout, amps) -> StateVector:
    return StateVector(np.asarray(amps, dtype=complex), layout)


def epr_state(n: int, name_a: str = "A", name_b: str = "B") -> StateVector:
    """|Phi+_n> = 2^{-n/2} sum_j |j>_A |j>_B on two n-qubit registers."""
    layout = Layout.of((name_a, n), (name_b, n))
    amps = np.zeros(4**n, dtype=complex)
    for j in range(2**n):
        amps[(j << n) | j] = 1.0
    amps /= np.sqrt(2**n)
    return StateVector(amps, layout)


def tensor(a: StateVector, b: StateVector) -> StateVector:
    """a (x) b; b's registers become the least significant qubits."""
    common = set(a.layout.names) & set(b.layout.names)
    if common:
        raise RegisterError(f"register collision in tensor: {common}")
    layout = Layout(a.layout.regs + b.layout.regs)
    return StateVector(np.kron(a.amps, b.amps), layout, validate=False)


def attach_epr(state: StateVector, name1: str, name2: str, n: int) -> StateVector:
    """Append a fresh |Phi+_n> block in registers (name1, name2)."""
    return tensor(state, epr_state(n, name1, name2))


# -- bit-indexed Pauli kernels ------------------------------------------------


def _popcount(arr: np.ndarray, mask: int) -> np.ndarray:
    return np.bitwise_count(arr & mask)


def _word_masks(state: StateVector, w: PauliWord, qubits: list[int]):
    if w.n != len(qubits):
        raise RegisterError(
            f"word length {w.n} != target width {len(qubits)}"
        )
    x_amp = z_amp = 0
    for i, q in enumerate(qubits):
        bit = 1 << state.layout.amp_bit(q)
        if (w.x >> i) & 1:
            x_amp |= bit
        if (w.z >> i) & 1:
            z_amp |= bit
    return x_amp, z_amp


def apply_word_amps(
    amps: np.ndarray, x_amp: int, z_amp: int, k: int, ctrl_amp: int = 0
) -> np.ndarray:
    """Apply i^k X(x) Z(z) by index permutation and sign flips.

    With ``ctrl_amp`` nonzero the word acts only on basis states where every
    control bit is 1 (the controls must be disjoint from x_amp).
    """
    idx = np.arange(len(amps), dtype=np.int64)
    phase = 1j**k
    signs = np.where(_popcount(idx, z_amp) & 1, -1.0, 1.0)
    if ctrl_amp == 0:
        out = np.empty_like(amps)
        out[idx ^ x_amp] = phase * signs * amps
        return out
    sel = (idx & ctrl_amp) == ctrl_amp
    out = amps.copy()
    src = idx[sel]
    out[src ^ x_amp] = phase * signs[sel] * amps[src]
    return out


def apply_pauli(state: StateVector, w: PauliWord, target) -> StateVector:
    """w |state> on the target register(s), global phase included."""
    names = (target,) if isinstance(target, str) else tuple(target)
    qubits = state.layout.qubits(*names)
    x_amp, z_amp = _word_masks(state, w, qubits)
    return StateVector.raw(
        apply_word_amps(state.amps, x_amp, z_amp, w.k), state.layout
    )


def controlled_apply(
    state: StateVector, w: PauliWord, target: str, control: str
) -> StateVector:
    """Per-bit controlled word: control qubit i gates letter i on target.

    Matches the product form X(a_1)^{c_1} ... X(a_n)^{c_n}: each letter of w
    is applied to target qubit i exactly on the |1> branch of control qubit i.
    """
    layout = state.layout
    tq = layout.qubits(target)
    cq = layout.qubits(control)
    if set(tq) & set(cq):
        raise RegisterError("control and target registers overlap")
    if w.n != len(tq) or w.n != len(cq):
        raise RegisterError(
            f"word length {w.n} must match target ({len(tq)}) and control ({len(cq)})"
        )
    if w.phase != 1:
        raise ValueError("per-bit controlled words require phase +1")
    amps = state.amps
    for i in range(w.n):
        xb = (w.x >> i) & 1
        zb = (w.z >> i) & 1
        if not (xb or zb):
            continue
        x_amp = (1 << layout.amp_bit(tq[i])) if xb else 0
        z_amp = (1 << layout.amp_bit(tq[i])) if zb else 0
        k_site = 1 if (xb and zb) else 0  # Y = i X Z on one site
        ctrl = 1 << layout.amp_bit(cq[i])
        amps = apply_word_amps(amps, x_amp, z_amp, k_site, ctrl)
    return StateVector.raw(amps, layout)


def controlled_word(
    state: StateVector, w: PauliWord, target, control_qubit: tuple[str, int]
) -> StateVector:
    """Whole word w on target gated by one control qubit (register, index)."""
    names = (target,) if isinstance(target, str) else tuple(target)
    qubits = state.layout.qubits(*names)
    creg, ci = control_qubit
    cglobal = state.layout.offset(creg) + ci
    if cglobal in qubits:
        raise RegisterError("control qubit lies inside the target register")
    x_amp, z_amp = _word_masks(state, w, qubits)
    ctrl = 1 << state.layout.amp_bit(cglobal)
    return StateVector.raw(
        apply_word_amps(state.amps, x_amp, z_amp, w.k, ctrl), state.layout
    )


def apply_hadamard_layer(state: StateVector, register: str) -> StateVector:
    """H^{(x)width} on every qubit of the register."""
    q = state.num_qubits
    t = state.amps.reshape((2,) * q)
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    for g in state.layout.qubits(register):
        t = np.moveaxis(np.tensordot(h, t, axes=([1], [g])), 0, g)
    return StateVector.raw(t.reshape(-1), state.layout)


def apply_cnot_layer(state: StateVector, control: str, target: str) -> StateVector:
    """CNOT from control qubit i onto target qubit i, for every i."""
    layout = state.layout
    cq = layout.qubits(control)
    tq = layout.qubits(target)
    if len(cq) != len(tq):
        raise RegisterError("cnot layer needs equal-width registers")
    amps = state.amps
    for c, t in zip(cq, tq):
        amps = apply_word_amps(
            amps, 1 << layout.amp_bit(t), 0, 0, 1 << layout.amp_bit(c)
        )
    return StateVector.raw(amps, layout)


# -- reduction, traces, purification ------------------------------------------


def _front_matrix(state: StateVector, names: tuple[str, ...]) -> np.ndarray:
    """Reshape amplitudes to (2^front, 2^rest) with named regs in front."""
    q = state.num_qubits
    front = state.layout.qubits(*names)
    rest = [i for i in range(q) if i not in front]
    t = state.amps.reshape((2,) * q)
    t = np.transpose(t, tuple(front) + tuple(rest))
    return t.reshape(2 ** len(front), -1)


def reduce_pure(state: StateVector, keep) -> DensityMatrix:
    """Reduced density operator of a pure (possibly unnormalised) state."""
    names = (keep,) if isinstance(keep, str) else tuple(keep)
    m = _front_matrix(state, names)
    rho = m @ m.conj().T
    return DensityMatrix(rho, state.layout.keep(names), validate=False)


def to_density(state: StateVector) -> DensityMatrix:
    return DensityMatrix(np.outer(state.amps, state.amps.conj()), state.layout)


def partial_trace(rho: DensityMatrix, keep) -> DensityMatrix:
    """Trace out everything but the named registers."""
    names = (keep,) if isinstance(keep, str) else tuple(keep)
    q = rho.num_qubits
    front = rho.layout.qubits(*names)
    if not set(front) <= set(range(q)):
        raise RegisterError("keep registers outside layout")
    rest = [i for i in range(q) if i not in front]
    f, r = len(front), len(rest)
    t = rho.mat.reshape((2,) * (2 * q))
    perm = tuple(front) + tuple(rest) + tuple(g + q for g in front) + tuple(
        g + q for g in rest
    )
    t = np.transpose(t, perm).reshape(2**f, 2**r, 2**f, 2**r)
    out = np.einsum("arbr->ab", t)
    return DensityMatrix(out, rho.layout.keep(names))


def purify(rho: DensityMatrix, env_name: str = "N", tol: float = 1e-12) -> StateVector:
    """Purify into an appended environment register (skipped if rho is pure)."""
    evals, evecs = np.linalg.eigh(rho.mat)
    keep = evals > tol
    evals, evecs = evals[keep], evecs[:, keep]
    rank = len(evals)
    if rank == 1:
        v = evecs[:, 0] * np.sqrt(evals[0])
        return StateVector(v / np.linalg.norm(v), rho.layout)
    env_q = int(np.ceil(np.log2(rank)))
    m = np.zeros((2**rho.num_qubits, 2**env_q), dtype=complex)
    for j in range(rank):
        m[:, j] = np.sqrt(evals[j]) * evecs[:, j]
    amps = m.reshape(-1)
    layout = rho.layout.extended(env_name, env_q)
    return StateVector(amps / np.linalg.norm(amps), layout)


# -- metrics -------------------------------------------------------------------


def _as_density(x) -> DensityMatrix:
    return to_density(x) if isinstance(x, StateVector) else x


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 in [0, 1].

    Pure arguments take the exact shortcut <psi|sigma|psi>; the general
    eigendecomposition path is reserved for mixed-mixed pairs.
    """
    if isinstance(rho, StateVector) and isinstance(sigma, StateVector):
        if len(rho.amps) != len(sigma.amps):
            raise ValueError("dimension mismatch")
        return float(min(1.0, abs(np.vdot(rho.amps, sigma.amps)) ** 2))
    if isinstance(sigma, StateVector):
        rho, sigma = sigma, rho
    if isinstance(rho, StateVector):
        if len(rho.amps) != sigma.mat.shape[0]:
            raise ValueError("dimension mismatch")
        return float(min(1.0, np.vdot(rho.amps, sigma.mat @ rho.amps).real))
    if rho.mat.shape != sigma.mat.shape:
        raise ValueError("dimension mismatch")
    evals, evecs = np.linalg.eigh(rho.mat)
    evals = np.clip(evals, 0, None)
    sqrt_r = (evecs * np.sqrt(evals)) @ evecs.conj().T
    m = sqrt_r @ sigma.mat @ sqrt_r
    mu = np.clip(np.linalg.eigvalsh(m), 0, None)
    return float(min(1.0, np.sum(np.sqrt(mu)) ** 2))


def trace_distance(rho, sigma) -> float:
    r, s = _as_density(rho), _as_density(sigma)
    if r.mat.shape != s.mat.shape:
        raise ValueError("dimension mismatch")
    evals = np.linalg.eigvalsh(r.mat - s.mat)
    return float(0.5 * np.sum(np.abs(evals)))


# -- debug dump ----------------------------------------------------------------


def dump_json(state: StateVector) -> str:
    """Debug dump: layout descriptor plus [re, im] amplitude pairs."""
    payload = {
        "layout": [[n, w] for n, w in state.layout.regs],
        "amplitudes": [[float(a.real), float(a.imag)] for a in state.amps],
    }
    return json.dumps(payload)


def load_json(text: str) -> StateVector:
    payload = json.loads(text)
    layout = Layout(tuple((n, w) for n, w in payload["layout"]))
    amps = np.array([complex(re, im) for re, im in payload["amplitudes"]])
    return StateVector(amps, layout)
