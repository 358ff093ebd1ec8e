"""Concrete prover strategies: honest provers, semi-honest hooks, and
parameterized deviations for bound sweeps.

Register conventions: Alice owns "A" (her EPR halves), the witness "W",
an optional witness-purification register "WP" and an optional noise
environment "N"; Bob owns "B".  All PVMs act only on the owner's registers
(locality), which `Strategy` enforces on first use.
"""
from __future__ import annotations

import json
from typing import Callable, Hashable

import numpy as np

from . import hamiltonian as ham
from .games import MS_LINES, MS_OPS, MS_PARITY, GameSpec
from .qcore import (
    DensityMatrix,
    DiagProjector,
    Layout,
    PauliWord,
    Pvm,
    StateVector,
    WordProjector,
    bell_pvm,
    depolarize,
    epr_state,
    from_amplitudes,
    purify,
    tensor,
    to_density,
)


class StrategyError(ValueError):
    pass


class Strategy:
    """Shared state plus per-question PVMs for each prover.

    PVM builders are lazy: games enumerate thousands of questions and most
    strategies answer them from a closed formula.  Built PVMs are cached.
    """

    def __init__(
        self,
        name: str,
        n: int,
        state: StateVector,
        alice_regs: tuple[str, ...],
        bob_regs: tuple[str, ...],
        alice_pvm_builder: Callable[[Hashable], Pvm],
        bob_pvm_builder: Callable[[Hashable], Pvm],
        bob_observable_builder: Callable[[Hashable], PauliWord] | None = None,
    ):
        self.name = name
        self.n = n
        self.state = state
        self.alice_regs = alice_regs
        self.bob_regs = bob_regs
        self._alice_builder = alice_pvm_builder
        self._bob_builder = bob_pvm_builder
        self._bob_obs_builder = bob_observable_builder
        self._alice_cache: dict = {}
        self._bob_cache: dict = {}

    def _check_locality(self, pvm: Pvm, owner_regs: tuple[str, ...], label):
        if not set(pvm.registers) <= set(owner_regs):
            raise StrategyError(
                f"PVM for {label!r} acts on {pvm.registers}, outside {owner_regs}"
            )

    def alice_pvm(self, label) -> Pvm:
        if label not in self._alice_cache:
            pvm = self._alice_builder(label)
            self._check_locality(pvm, self.alice_regs, label)
            self._alice_cache[label] = pvm
        return self._alice_cache[label]

    def bob_pvm(self, label) -> Pvm:
        if label not in self._bob_cache:
            pvm = self._bob_builder(label)
            self._check_locality(pvm, self.bob_regs, label)
            self._bob_cache[label] = pvm
        return self._bob_cache[label]

    def bob_observable(self, label) -> PauliWord:
        """The +-1 observable behind Bob's PVM, as a phase-tracked word."""
        if self._bob_obs_builder is None:
            raise StrategyError(f"{self.name} exposes no Bob observables")
        return self._bob_obs_builder(label)

    def __repr__(self):
        return f"Strategy({self.name!r}, n={self.n})"


# -- honest measurement builders -------------------------------------------------


def _two_outcome(word: PauliWord, registers: tuple[str, ...]) -> Pvm:
    """Observable word -> PVM with bit labels; outcome o maps to (1-o)/2."""
    return Pvm(
        registers,
        (
            (0, WordProjector(((word, +1),))),
            (1, WordProjector(((word, -1),))),
        ),
    )


def _bob_word(label, n: int) -> PauliWord:
    kind = label[0]
    if kind == "word":
        return PauliWord.from_letters(label[1])
    if kind == "ms9":
        return MS_OPS[9].embed(n, (label[1], label[2]))
    if kind == "var":
        return MS_OPS[label[1]]
    raise StrategyError(f"no observable for Bob question {label!r}")


def _honest_bob_builders(n: int):
    def pvm_builder(label) -> Pvm:
        return _two_outcome(_bob_word(label, n), ("B",))

    def obs_builder(label) -> PauliWord:
        return _bob_word(label, n)

    return pvm_builder, obs_builder


def _honest_alice_builder(n: int, teleport_pvm: Pvm | None = None):
    def builder(label) -> Pvm:
        kind = label[0]
        if kind == "lin":
            w1 = PauliWord.from_letters(label[1])
            w2 = PauliWord.from_letters(label[2])
            outcomes = tuple(
                (
                    (b1, b2),
                    WordProjector(((w1, 1 - 2 * b1), (w2, 1 - 2 * b2))),
                )
                for b1 in (0, 1)
                for b2 in (0, 1)
            )
            return Pvm(("A",), outcomes)
        if kind == "line":
            _, name, i, j = label
            words = [MS_OPS[k].embed(n, (i, j)) for k in MS_LINES[name]]
            outcomes = tuple(
                (
                    bits,
                    WordProjector(tuple((w, 1 - 2 * b) for w, b in zip(words, bits))),
                )
                for bits in ((b1, b2, b3) for b1 in (0, 1) for b2 in (0, 1) for b3 in (0, 1))
            )
            return Pvm(("A",), outcomes)
        if kind == "teleport":
            if teleport_pvm is not None:
                return teleport_pvm
            return bell_pvm(n, "W", "A")
        raise StrategyError(f"no PVM for Alice question {label!r}")

    return builder


# -- presets ---------------------------------------------------------------------


def honest_lwpbt(n: int) -> Strategy:
    """n EPR pairs; each question answered by the indicated Pauli word."""
    if n < 2:
        raise StrategyError("honest_lwpbt needs n >= 2")
    bob_pvm, bob_obs = _honest_bob_builders(n)
    return Strategy(
        name=f"honest_lwpbt({n})",
        n=n,
        state=epr_state(n, "A", "B"),
        alice_regs=("A",),
        bob_regs=("B",),
        alice_pvm_builder=_honest_alice_builder(n),
        bob_pvm_builder=bob_pvm,
        bob_observable_builder=bob_obs,
    )


def honest_magic_square() -> Strategy:
    """Table-2 operator strategy on two EPR pairs."""
    s = honest_lwpbt(2)
    s.name = "honest_magic_square"
    return s


def _witness_state(witness) -> StateVector:
    """Normalize witness input to a pure state on registers (W[, WP])."""
    if isinstance(witness, DensityMatrix):
        n = witness.num_qubits
        relabeled = DensityMatrix(witness.mat, Layout.of(("W", n)), validate=False)
        return purify(relabeled, "WP")
    if isinstance(witness, StateVector):
        names = witness.layout.names
        if names == ("W",) or names == ("W", "WP"):
            return witness
        if len(names) == 1:
            return from_amplitudes(Layout.of(("W", witness.num_qubits)), witness.amps)
        raise StrategyError(f"witness must live on one register, got {names}")
    raise StrategyError(f"unsupported witness type {type(witness)!r}")


def honest_ham(h: ham.XZHamiltonian, witness) -> Strategy:
    """Honest Hamiltonian-game provers: Alice holds the witness and
    teleports it on request; everything else is honest LWPBT."""
    wit = _witness_state(witness)
    if wit.layout.width("W") != h.n:
        raise StrategyError(
            f"witness has {wit.layout.width('W')} qubits, Hamiltonian has {h.n}"
        )
    state = tensor(wit, epr_state(h.n, "A", "B"))
    bob_pvm, bob_obs = _honest_bob_builders(h.n)
    return Strategy(
        name=f"honest_ham(n={h.n})",
        n=h.n,
        state=state,
        alice_regs=tuple(r for r in ("W", "WP") if r in wit.layout.names) + ("A",),
        bob_regs=("B",),
        alice_pvm_builder=_honest_alice_builder(h.n),
        bob_pvm_builder=bob_pvm,
        bob_observable_builder=bob_obs,
    )


def semi_honest(
    h: ham.XZHamiltonian, witness, teleport_pvm: Pvm | None = None
) -> Strategy:
    """Semi-honest provers: Bob is honest on every word question (rigidity
    forces this); Alice's teleport measurement may be replaced wholesale."""
    base = honest_ham(h, witness)
    if teleport_pvm is None:
        base.name = f"semi_honest(n={h.n})"
        return base
    labels = set(teleport_pvm.labels())
    expected = {
        (format(a, f"0{h.n}b"), format(b, f"0{h.n}b"))
        for a in range(2**h.n)
        for b in range(2**h.n)
    }
    if labels != expected:
        raise StrategyError("teleport PVM must be labelled by all key pairs")
    wit = _witness_state(witness)
    state = tensor(wit, epr_state(h.n, "A", "B"))
    bob_pvm, bob_obs = _honest_bob_builders(h.n)
    return Strategy(
        name=f"semi_honest(n={h.n})",
        n=h.n,
        state=state,
        alice_regs=tuple(r for r in ("W", "WP") if r in wit.layout.names) + ("A",),
        bob_regs=("B",),
        alice_pvm_builder=_honest_alice_builder(h.n, teleport_pvm),
        bob_pvm_builder=bob_pvm,
        bob_observable_builder=bob_obs,
    )


def depolarized(base: Strategy, delta: float) -> Strategy:
    """Per-qubit depolarization of the shared EPR block (witness untouched).

    The noisy mixed state is purified into an environment register "N" held
    by Alice, so the strategy keeps a pure shared state; all PVMs are
    unchanged.
    """
    if not 0.0 <= delta <= 1.0:
        raise StrategyError(f"delta must lie in [0, 1], got {delta}")
    if delta == 0.0:
        return Strategy(
            name=f"depolarized({base.name}, 0.0)",
            n=base.n,
            state=base.state,
            alice_regs=base.alice_regs,
            bob_regs=base.bob_regs,
            alice_pvm_builder=base._alice_builder,
            bob_pvm_builder=base._bob_builder,
            bob_observable_builder=base._bob_obs_builder,
        )
    rho = to_density(base.state)
    rho = depolarize(rho, ("A",) + base.bob_regs, delta)
    state = purify(rho, "N")
    alice_regs = base.alice_regs
    if "N" in state.layout.names:
        alice_regs = alice_regs + ("N",)
    return Strategy(
        name=f"depolarized({base.name}, {delta})",
        n=base.n,
        state=state,
        alice_regs=alice_regs,
        bob_regs=base.bob_regs,
        alice_pvm_builder=base._alice_builder,
        bob_pvm_builder=base._bob_builder,
        bob_observable_builder=base._bob_obs_builder,
    )


def bit_flip_bob(base: Strategy) -> Strategy:
    """Bob flips every answer bit (his observables are negated)."""

    def pvm_builder(label) -> Pvm:
        pvm = base._bob_builder(label)
        flipped = tuple(
            ((1 - lb) if isinstance(lb, int) else lb, proj)
            for lb, proj in pvm.outcomes
        )
        return Pvm(pvm.registers, flipped)

    def obs_builder(label) -> PauliWord:
        return base.bob_observable(label).negate()

    return Strategy(
        name=f"bit_flip_bob({base.name})",
        n=base.n,
        state=base.state,
        alice_regs=base.alice_regs,
        bob_regs=base.bob_regs,
        alice_pvm_builder=base._alice_builder,
        bob_pvm_builder=pvm_builder,
        bob_observable_builder=obs_builder,
    )


def classical_random(game: GameSpec) -> Strategy:
    """Product state, uniformly random valid answers for every question."""
    n = game.n
    needs_teleport = any(row.q_alice == ("teleport",) for row in game.rows)
    a_coins = max(2, 2 * n) if needs_teleport else 2
    layout = Layout.of(("A", a_coins), ("B", 1))
    amps = np.full(2 ** (a_coins + 1), 1.0 / np.sqrt(2 ** (a_coins + 1)), dtype=complex)
    state = from_amplitudes(layout, amps)

    def coin_outcomes(prefix_bits: int, total: int, label_of):
        """Group the A basis by the first `prefix_bits` coin values."""
        outcomes = []
        tail = total - prefix_bits
        for v in range(2**prefix_bits):
            idx = tuple(v << tail | t for t in range(2**tail))
            outcomes.append((label_of(v), DiagProjector(idx)))
        return tuple(outcomes)

    def alice_builder(label) -> Pvm:
        kind = label[0]
        if kind == "lin":
            return Pvm(
                ("A",),
                coin_outcomes(2, a_coins, lambda v: ((v >> 1) & 1, v & 1)),
            )
        if kind == "line":
            parity = MS_PARITY[label[1]]

            def assignment(v):
                b1, b2 = (v >> 1) & 1, v & 1
                return (b1, b2, (b1 + b2 + parity) % 2)

            return Pvm(("A",), coin_outcomes(2, a_coins, assignment))
        if kind == "teleport":
            def key_pair(v):
                return (
                    format(v >> n, f"0{n}b"),
                    format(v & (2**n - 1), f"0{n}b"),
                )

            return Pvm(("A",), coin_outcomes(2 * n, a_coins, key_pair))
        raise StrategyError(f"no PVM for Alice question {label!r}")

    def bob_builder(label) -> Pvm:
        return Pvm(
            ("B",),
            ((0, DiagProjector((0,))), (1, DiagProjector((1,)))),
        )

    return Strategy(
        name="classical_random",
        n=n,
        state=state,
        alice_regs=("A",),
        bob_regs=("B",),
        alice_pvm_builder=alice_builder,
        bob_pvm_builder=bob_builder,
        bob_observable_builder=None,
    )


# -- descriptors -------------------------------------------------------------------


def witness_from_descriptor(spec: str, h: ham.XZHamiltonian):
    """Resolve "ground", "maximally_mixed" or "file:..." to a witness."""
    if spec == "ground":
        return ham.ground(h)[1]
    if spec == "maximally_mixed":
        d = 2**h.n
        return DensityMatrix(np.eye(d, dtype=complex) / d, Layout.of(("W", h.n)))
    if spec.startswith("file:"):
        from .qcore import load_json

        state = load_json(open(spec[5:], encoding="utf-8").read())
        return state
    raise StrategyError(f"unknown witness spec {spec!r}")


def from_descriptor(desc, game: GameSpec, h: ham.XZHamiltonian | None = None) -> Strategy:
    """Build a strategy from a JSON/CLI descriptor for the given game.

    Descriptor: {"preset": name, "delta": float?, "witness": spec?}.
    A bare string is treated as the preset name.
    """
    if isinstance(desc, str):
        desc = json.loads(desc) if desc.lstrip().startswith("{") else {"preset": desc}
    preset = desc.get("preset")
    delta = desc.get("delta")
    witness_spec = desc.get("witness", "ground")
    needs_witness = any(row.q_alice == ("teleport",) for row in game.rows)

    if preset in ("honest", "honest_ham", "semi_honest"):
        if needs_witness:
            if h is None:
                raise StrategyError("honest play on this game needs a Hamiltonian")
            base = honest_ham(h, witness_from_descriptor(witness_spec, h))
            if preset == "semi_honest":
                base.name = f"semi_honest(n={h.n})"
        else:
            base = honest_lwpbt(game.n)
    elif preset == "honest_lwpbt":
        base = honest_lwpbt(game.n)
    elif preset == "honest_magic_square":
        base = honest_magic_square()
    elif preset == "classical_random":
        return classical_random(game)
    elif preset == "depolarized":
        inner = dict(desc)
        inner["preset"] = "honest"
        inner.pop("delta", None)
        base = from_descriptor(inner, game, h)
        return depolarized(base, float(delta if delta is not None else 0.0))
    elif preset == "bit_flip_bob":
        inner = dict(desc)
        inner["preset"] = "honest"
        base = from_descriptor(inner, game, h)
        return bit_flip_bob(base)
    else:
        raise StrategyError(f"unknown preset {preset!r}")
    if delta:
        return depolarized(base, float(delta))
    return base
