"""XZ local Hamiltonians: parsing, energy, ground states, term decomposition.

A Hamiltonian is H = (1/m) sum_l gamma_l H_l with each H_l a tensor product
of sigma_X, sigma_Z and identities of weight at most k, and gamma_l in
[-1, 1].  The derived quantity gamma = (1/m) sum |gamma_l| bounds every
energy.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np

from .qcore import DensityMatrix, Layout, PauliWord, StateVector, from_amplitudes

GROUND_MAX_QUBITS = 12

# The games cover linearity questions only up to weight 6; heavier terms
# escape that net.
GAME_WEIGHT_CAP = 6


class HamiltonianFormatError(ValueError):
    """Malformed or invariant-violating Hamiltonian document."""


@dataclass(frozen=True)
class XZTerm:
    """One weighted term gamma_l * H_l."""

    coeff: float
    word: PauliWord

    def __post_init__(self):
        if not -1.0 <= self.coeff <= 1.0:
            raise HamiltonianFormatError(
                f"coefficient {self.coeff} outside [-1, 1]"
            )
        if not self.word.is_xz_type:
            raise HamiltonianFormatError(
                f"term {self.word.letters!r} contains a Y letter"
            )
        if self.word.phase != 1:
            raise HamiltonianFormatError("term words must carry phase +1")

    @property
    def pauli(self) -> str:
        return self.word.letters

    @property
    def weight(self) -> int:
        return self.word.weight


@dataclass(frozen=True)
class XZHamiltonian:
    n: int
    k: int
    terms: tuple[XZTerm, ...]
    alpha: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if not self.terms:
            raise HamiltonianFormatError("Hamiltonian has no terms")
        for t in self.terms:
            if t.word.n != self.n:
                raise HamiltonianFormatError(
                    f"term {t.pauli!r} is not {self.n} letters long"
                )
            if t.weight > self.k:
                raise HamiltonianFormatError(
                    f"term {t.pauli!r} has weight {t.weight} > k={self.k}"
                )
        if self.alpha is not None and not 0.0 <= self.alpha <= 1.0:
            raise HamiltonianFormatError(f"alpha {self.alpha} outside [0, 1]")
        if self.beta is not None and not 0.0 <= self.beta <= 1.0:
            raise HamiltonianFormatError(f"beta {self.beta} outside [0, 1]")
        if self.alpha is not None and self.beta is not None:
            if not self.alpha < self.beta:
                raise HamiltonianFormatError(
                    f"need alpha < beta, got {self.alpha} >= {self.beta}"
                )
        if self.k > GAME_WEIGHT_CAP:
            warnings.warn(
                f"k={self.k} exceeds the weight-{GAME_WEIGHT_CAP} cap of the "
                "linearity test; heavy terms are not covered by the game",
                stacklevel=2,
            )

    @property
    def m(self) -> int:
        return len(self.terms)

    @property
    def gamma(self) -> float:
        return float(sum(abs(t.coeff) for t in self.terms) / self.m)


# -- parse / serialize ---------------------------------------------------------


def parse_dict(doc: dict, *, strict_gamma: bool = False) -> XZHamiltonian:
    for key in ("n", "k", "terms"):
        if key not in doc:
            raise HamiltonianFormatError(f"missing field {key!r}")
    unknown = set(doc) - {"n", "k", "alpha", "beta", "terms"}
    if unknown:
        raise HamiltonianFormatError(f"unknown fields {sorted(unknown)}")
    n, k = doc["n"], doc["k"]
    if not isinstance(n, int) or n < 1:
        raise HamiltonianFormatError(f"n must be a positive int, got {n!r}")
    if not isinstance(k, int) or k < 1:
        raise HamiltonianFormatError(f"k must be a positive int, got {k!r}")
    terms = []
    for i, td in enumerate(doc["terms"]):
        extra = set(td) - {"coeff", "pauli"}
        if extra:
            raise HamiltonianFormatError(f"term {i}: unknown fields {sorted(extra)}")
        try:
            coeff = float(td["coeff"])
            pauli = td["pauli"]
        except (KeyError, TypeError, ValueError) as exc:
            raise HamiltonianFormatError(f"term {i}: {exc}") from None
        if set(pauli) - {"I", "X", "Z"}:
            raise HamiltonianFormatError(
                f"term {i}: letters must be I/X/Z, got {pauli!r}"
            )
        try:
            terms.append(XZTerm(coeff, PauliWord.from_letters(pauli)))
        except HamiltonianFormatError as exc:
            raise HamiltonianFormatError(f"term {i}: {exc}") from None
    h = XZHamiltonian(n, k, tuple(terms), doc.get("alpha"), doc.get("beta"))
    if h.gamma > 1.0 + 1e-12:
        msg = f"gamma = {h.gamma} exceeds 1"
        if strict_gamma:
            raise HamiltonianFormatError(msg)
        warnings.warn(msg, stacklevel=2)
    return h


def parse(text: str, *, strict_gamma: bool = False) -> XZHamiltonian:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise HamiltonianFormatError(f"line {exc.lineno}: {exc.msg}") from None
    return parse_dict(doc, strict_gamma=strict_gamma)


def load(path, *, strict_gamma: bool = False) -> XZHamiltonian:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read(), strict_gamma=strict_gamma)


def serialize(h: XZHamiltonian) -> str:
    doc: dict = {"n": h.n, "k": h.k}
    if h.alpha is not None:
        doc["alpha"] = h.alpha
    if h.beta is not None:
        doc["beta"] = h.beta
    doc["terms"] = [{"coeff": t.coeff, "pauli": t.pauli} for t in h.terms]
    return json.dumps(doc, indent=2) + "\n"


# -- evaluation ------------------------------------------------------------------


def _expval_pure(word: PauliWord, state: StateVector) -> complex:
    from .qcore import apply_pauli

    applied = apply_pauli(state, word, state.layout.names)
    return complex(np.vdot(state.amps, applied.amps))


def energy(h: XZHamiltonian, rho: Union[DensityMatrix, StateVector]) -> float:
    """tr(H rho) = (1/m) sum_l gamma_l tr(H_l rho)."""
    if 2**h.n != (len(rho.amps) if isinstance(rho, StateVector) else rho.mat.shape[0]):
        raise ValueError(
            f"state dimension does not match {h.n}-qubit Hamiltonian"
        )
    total = 0.0 + 0.0j
    for t in h.terms:
        if isinstance(rho, StateVector):
            total += t.coeff * _expval_pure(t.word, rho)
        else:
            total += t.coeff * np.trace(t.word.dense() @ rho.mat)
    total /= h.m
    if abs(total.imag) > 1e-10:
        raise ValueError(f"energy has imaginary part {total.imag}")
    return float(total.real)


def dense_matrix(h: XZHamiltonian) -> np.ndarray:
    """Dense 2^n x 2^n matrix of H; memory-light per-term assembly."""
    if h.n > GROUND_MAX_QUBITS:
        raise ValueError(f"dense cap is {GROUND_MAX_QUBITS} qubits, n={h.n}")
    d = 2**h.n
    mat = np.zeros((d, d), dtype=complex)
    idx = np.arange(d, dtype=np.int64)
    for t in h.terms:
        # word matrix has one entry per column: row = col ^ x, sign from z
        x_amp = z_amp = 0
        for i in range(h.n):
            bit = 1 << (h.n - 1 - i)
            if (t.word.x >> i) & 1:
                x_amp |= bit
            if (t.word.z >> i) & 1:
                z_amp |= bit
        signs = np.where(np.bitwise_count(idx & z_amp) & 1, -1.0, 1.0)
        mat[idx ^ x_amp, idx] += (t.coeff / h.m) * signs
    return mat


def ground(h: XZHamiltonian) -> tuple[float, StateVector]:
    """Minimum eigenvalue and a canonical ground state.

    Degenerate ground spaces are resolved deterministically: project the
    computational basis vectors onto the eigenspace and take the first with
    nonzero projection, then make the first nonzero amplitude real positive.
    """
    if h.n > GROUND_MAX_QUBITS:
        raise ValueError(f"ground() capped at {GROUND_MAX_QUBITS} qubits")
    mat = dense_matrix(h)
    evals, evecs = np.linalg.eigh(mat)
    lam0 = float(evals[0])
    space = evecs[:, evals <= lam0 + 1e-10]
    proj = space @ space.conj().T
    vec = None
    for j in range(2**h.n):
        cand = proj[:, j]
        if np.linalg.norm(cand) > 1e-8:
            vec = cand / np.linalg.norm(cand)
            break
    assert vec is not None, "eigenspace projector annihilated every basis vector"
    first = np.flatnonzero(np.abs(vec) > 1e-12)[0]
    vec = vec * (np.abs(vec[first]) / vec[first])
    state = from_amplitudes(Layout.of(("W", h.n)), vec)
    return lam0, state


def decomposition_pairs(h: XZHamiltonian, ell: int) -> list[tuple[str, str]]:
    """All (W, e) with sigma_W(e) equal to term ell; e is the support mask.

    W agrees with the term's letters on the support and ranges over {X, Z}
    elsewhere, so the list has 2^(n - weight) entries.  Pairs are returned
    with off-support letters cycling X before Z, lowest site fastest last.
    """
    if not 0 <= ell < h.m:
        raise IndexError(f"term index {ell} outside [0, {h.m})")
    term = h.terms[ell]
    letters = term.pauli
    e_mask = term.word.support()
    e_str = "".join("1" if (e_mask >> i) & 1 else "0" for i in range(h.n))
    free = [i for i in range(h.n) if not (e_mask >> i) & 1]
    pairs = []
    for combo in range(2 ** len(free)):
        w = list(letters)
        for j, site in enumerate(free):
            w[site] = "XZ"[(combo >> (len(free) - 1 - j)) & 1]
        pairs.append(("".join(w), e_str))
    return pairs


def embed(h: XZHamiltonian, n_new: int) -> XZHamiltonian:
    """Pad every term with identities on the right to reach n_new qubits."""
    if n_new < h.n:
        raise ValueError(f"cannot shrink n={h.n} to {n_new}")
    if n_new == h.n:
        return h
    pad = "I" * (n_new - h.n)
    terms = tuple(
        XZTerm(t.coeff, PauliWord.from_letters(t.pauli + pad)) for t in h.terms
    )
    return XZHamiltonian(n_new, h.k, terms, h.alpha, h.beta)
