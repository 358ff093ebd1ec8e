"""Knowledge extraction: black-box oracle access, the swap gadget, the
full extraction pipeline, and rigidity diagnostics.

The extractor holds a 2n-qubit register (E1, E2) initialized to EPR pairs.
It asks Alice to teleport her witness, drives Bob through the swap-gadget
circuit built from controlled applications of his own observables, and
corrects the output half E1 with the teleportation keys.  Everything is
mediated by OracleAccess, which records each call; the extractor never
touches prover registers directly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Hashable

import numpy as np

from . import games
from .hamiltonian import XZHamiltonian, energy, ground
from .qcore import (
    DensityMatrix,
    PauliWord,
    StateVector,
    apply_cnot_layer,
    apply_hadamard_layer,
    apply_pauli,
    attach_epr,
    contract_epr,
    controlled_apply,
    controlled_word,
    epr_state,
    fidelity,
    pvm_branches,
    reduce_pure,
    tensor,
    trace_distance,
)


class OracleError(RuntimeError):
    pass


class OracleAccess:
    """Black-box handle to a strategy.

    Exposes exactly: controlled application of prover observables keyed by
    question, execution of Alice's teleport PVM, and injection of content
    into the public message register.  Private prover registers are never
    readable through this interface; every call lands in the access log.
    """

    ALLOWED = ("controlled_observable", "teleport_pvm", "inject_message")

    def __init__(self, strategy):
        self.strategy = strategy
        self.log: list[tuple] = []

    def controlled_observable(
        self, state: StateVector, prover: str, question, control: tuple[str, int]
    ) -> StateVector:
        """Apply the prover's observable for `question`, gated on one qubit."""
        if prover != "bob":
            raise OracleError(
                "only Bob's controlled observables are wired up; the extractor "
                "never uses V_A"
            )
        word = self.strategy.bob_observable(question)
        self.log.append(("controlled_observable", prover, question, control))
        return controlled_word(state, word, self.strategy.bob_regs, control)

    def teleport_branches(self, state: StateVector):
        """Alice's teleport PVM, expanded into all outcome branches."""
        pvm = self.strategy.alice_pvm(("teleport",))
        self.log.append(("teleport_pvm", "branches"))
        return pvm_branches(state, pvm)

    def run_teleport_coherent(
        self, state: StateVector, message_register: str = "M"
    ) -> StateVector:
        """Teleport PVM with the classical outcome written to a message
        register: |post> = sum_{a,b} |a,b>_M (x) M_ab |state>."""
        pvm = self.strategy.alice_pvm(("teleport",))
        self.log.append(("teleport_pvm", "coherent", message_register))
        branches = pvm_branches(state, pvm)
        n = self.strategy.n
        width = 2 * n
        layout = state.layout.extended(message_register, width)
        stacked = np.zeros((len(state.amps), 2**width), dtype=complex)
        for (a, b), branch in branches:
            stacked[:, (int(a, 2) << n) | int(b, 2)] = branch.amps
        return StateVector.raw(stacked.reshape(-1), layout)

    def inject_message(self, state: StateVector, content) -> StateVector:
        """Place content in the public message register.

        A string is a classical query symbol (logged, no state change).  A
        StateVector is tensored in as a fresh register, covering coherent
        superpositions of messages.
        """
        self.log.append(("inject_message", getattr(content, "layout", content)))
        if isinstance(content, StateVector):
            return tensor(state, content)
        return state

    def log_ops(self) -> set[str]:
        return {entry[0] for entry in self.log}


# -- circuits -------------------------------------------------------------------


@dataclass(frozen=True)
class _HLayer:
    reg: str

    def __call__(self, state):
        return apply_hadamard_layer(state, self.reg)


@dataclass(frozen=True)
class _CnotLayer:
    control: str
    target: str

    def __call__(self, state):
        return apply_cnot_layer(state, self.control, self.target)


@dataclass(frozen=True)
class _CtrlPauliLayer:
    word: PauliWord
    target: str
    control: str

    def __call__(self, state):
        return controlled_apply(state, self.word, self.target, self.control)


@dataclass(frozen=True)
class _CtrlProverLayer:
    """Per-bit controlled prover observables: E1 bit i gates question i.

    Gates run in descending site order so the net operator is the product
    W(q_1)^{c_1} ... W(q_n)^{c_n} with site 1 leftmost; the order matters
    for adversarial observables that fail to commute across sites.
    """

    oracle: OracleAccess
    questions: tuple[Hashable, ...]
    control: str

    def __call__(self, state):
        for i in reversed(range(len(self.questions))):
            state = self.oracle.controlled_observable(
                state, "bob", self.questions[i], (self.control, i)
            )
        return state


@dataclass(frozen=True)
class Circuit:
    """A self-inverse-step circuit; inverse = steps reversed."""

    name: str
    steps: tuple

    def apply(self, state: StateVector) -> StateVector:
        for step in self.steps:
            state = step(state)
        return state

    def apply_inverse(self, state: StateVector) -> StateVector:
        for step in reversed(self.steps):
            state = step(state)
        return state


def _weight1_question(kind: str, i: int, n: int) -> tuple:
    letters = "".join(kind if j == i else "I" for j in range(n))
    return ("word", letters)


def ideal_swap(n: int, target: str = "B", e1: str = "E1", e2: str = "E2") -> Circuit:
    """The EPR-augmented swap circuit: ctrl-X, H, ctrl-Z, H, ctrl-X.

    Acting on |psi>_target (x) |Phi+_n>_(e1,e2) it realizes the swap-gate
    sum 2^{-3n/2} sum_{a,b,c} (-1)^{b.c} X(a) Z(b) |psi> |c, a+c>; with the
    aux pinned to EPR pairs the circuit is robust to the |0...0> amplitude
    of the input.
    """
    if n < 1:
        raise ValueError("n >= 1 required")
    x_all = PauliWord.from_letters("X" * n)
    z_all = PauliWord.from_letters("Z" * n)
    return Circuit(
        f"ideal_swap({n})",
        (
            _CtrlPauliLayer(x_all, target, e1),
            _HLayer(e1),
            _CtrlPauliLayer(z_all, target, e1),
            _HLayer(e1),
            _CtrlPauliLayer(x_all, target, e1),
        ),
    )


def swap_gadget(
    oracle: OracleAccess, n: int, e1: str = "E1", e2: str = "E2"
) -> Circuit:
    """The rigidity isometry as a circuit over Bob's observables.

    Layer order: H on E1, controlled Z_B(b_j'), H on E1, controlled
    X_B(a_i'), then the internal CNOT (E2 controls E1).  On
    |psi>_B (x) |Phi+_n> this produces
    2^{-3n/2} sum_{a,b,c} (-1)^{b.c} X_B^a Z_B^b |psi> |c, a+c>.
    """
    z_questions = tuple(_weight1_question("Z", i, n) for i in range(n))
    x_questions = tuple(_weight1_question("X", i, n) for i in range(n))
    for q in z_questions + x_questions:
        oracle.strategy.bob_observable(q)  # fail fast if a question is missing
    return Circuit(
        f"swap_gadget({n})",
        (
            _HLayer(e1),
            _CtrlProverLayer(oracle, z_questions, e1),
            _HLayer(e1),
            _CtrlProverLayer(oracle, x_questions, e1),
            _CnotLayer(control=e2, target=e1),
        ),
    )


def swap_isometry_matrix(circuit: Circuit, n: int, target: str = "B") -> np.ndarray:
    """Matrix of |psi>_target -> circuit(|psi> (x) |Phi+_n>), shape 8^n x 2^n."""
    from .qcore import Layout, from_amplitudes

    cols = []
    layout = Layout.of((target, n))
    for j in range(2**n):
        amps = np.zeros(2**n, dtype=complex)
        amps[j] = 1.0
        state = tensor(from_amplitudes(layout, amps), epr_state(n, "E1", "E2"))
        cols.append(circuit.apply(state).amps)
    return np.array(cols).T


def swap_distance(circ_a: Circuit, circ_b: Circuit, n: int, target: str = "B") -> float:
    """Operator distance between two swap circuits as isometries from the
    target register (aux pinned to |Phi+_n>)."""
    ma = swap_isometry_matrix(circ_a, n, target)
    mb = swap_isometry_matrix(circ_b, n, target)
    return float(np.linalg.norm(ma - mb, 2))


# -- extraction -------------------------------------------------------------------


@dataclass
class ExtractionReport:
    """Everything the extractor certifies about one run."""

    n: int
    p_used: float
    epsilon: float
    alpha: float
    gamma: float
    energy: float
    bound: float
    slack: float
    fidelity_ground: float | None
    q_ab: dict[str, float]
    zeta: DensityMatrix = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p_used": self.p_used,
            "epsilon": self.epsilon,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "energy": self.energy,
            "bound": self.bound,
            "slack": self.slack,
            "fidelity_ground": self.fidelity_ground,
            "q_ab": self.q_ab,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _apply_keys(branch: StateVector, a: str, b: str, out_reg: str) -> StateVector:
    """sigma_X^a then sigma_Z^b on the output register (Fig-order)."""
    n = len(a)
    x_mask = sum(1 << i for i, c in enumerate(a) if c == "1")
    z_mask = sum(1 << i for i, c in enumerate(b) if c == "1")
    out = apply_pauli(branch, PauliWord.x_word(x_mask, n), out_reg)
    return apply_pauli(out, PauliWord.z_word(z_mask, n), out_reg)


def output_mixture(
    oracle: OracleAccess,
    n: int,
    order: str = "gadget_first",
) -> tuple[DensityMatrix, dict[str, float]]:
    """Run the extraction circuit exactly over all 4^n teleport outcomes.

    Returns the output state zeta = sum_ab q_ab Z^b X^a rho_ab X^a Z^b on
    the E1 register together with the outcome weights.
    """
    world = oracle.inject_message(oracle.strategy.state, "Teleport")
    world = attach_epr(world, "E1", "E2", n)
    gadget = swap_gadget(oracle, n)
    if order == "gadget_first":
        world = gadget.apply(world)
        branches = oracle.teleport_branches(world)
    elif order == "teleport_first":
        branches = [
            (key, gadget.apply(br)) for key, br in oracle.teleport_branches(world)
        ]
    else:
        raise ValueError(f"unknown order {order!r}")
    dim = 2**n
    zeta = np.zeros((dim, dim), dtype=complex)
    weights: dict[str, float] = {}
    for (a, b), branch in branches:
        weights[f"{a}|{b}"] = float(branch.norm() ** 2)
        corrected = _apply_keys(branch, a, b, "E1")
        zeta += reduce_pure(corrected, "E1").mat
    total = sum(weights.values())
    if abs(total - 1.0) > 1e-9:
        raise OracleError(f"teleport outcome weights sum to {total}")
    layout = branches[0][1].layout.keep(("E1",))
    return DensityMatrix(zeta, layout), weights


def output_mixture_dilated(oracle: OracleAccess, n: int) -> DensityMatrix:
    """Independent computation of zeta: write the keys to a quantum message
    register, correct with message-controlled Paulis, then trace to E1."""
    world = oracle.inject_message(oracle.strategy.state, "Teleport")
    world = attach_epr(world, "E1", "E2", n)
    world = swap_gadget(oracle, n).apply(world)
    world = oracle.run_teleport_coherent(world, "M")
    # message layout: first n bits carry a, last n carry b
    layout = world.layout
    amps = world.amps
    from .qcore.states import apply_word_amps

    for i in range(n):
        a_bit = 1 << layout.amp_bit(layout.offset("M") + i)
        t_bit = 1 << layout.amp_bit(layout.offset("E1") + i)
        amps = apply_word_amps(amps, t_bit, 0, 0, a_bit)  # ctrl-X from a_i
    for i in range(n):
        b_bit = 1 << layout.amp_bit(layout.offset("M") + n + i)
        t_bit = 1 << layout.amp_bit(layout.offset("E1") + i)
        amps = apply_word_amps(amps, 0, t_bit, 0, b_bit)  # ctrl-Z from b_i
    world = StateVector.raw(amps, layout)
    return reduce_pure(world, "E1")


def extract(
    oracle: OracleAccess,
    h: XZHamiltonian,
    p_used: float,
    alpha: float | None = None,
    order: str = "gadget_first",
    threads: int = 1,
    epsilon: float | None = None,
) -> ExtractionReport:
    """Full extraction: teleport + swap gadget + key correction.

    epsilon may be passed in to reuse a previously computed game loss;
    otherwise 1 - exact_value(G(H, p_used)) is evaluated here.
    """
    n = h.n
    zeta, weights = output_mixture(oracle, n, order)
    if epsilon is None:
        game = games.hamiltonian_game(h, p_used)
        epsilon = games.exact_loss(game, oracle.strategy, threads)
    lam0 = None
    fid = None
    if n <= 12:
        lam0, gstate = ground(h)
        fid = fidelity(zeta, gstate)
    if alpha is None:
        alpha = max(0.0, lam0) if lam0 is not None else 0.0
    e = energy(h, zeta)
    bound = alpha + 2.0 * epsilon / p_used
    return ExtractionReport(
        n=n,
        p_used=p_used,
        epsilon=epsilon,
        alpha=alpha,
        gamma=h.gamma,
        energy=e,
        bound=bound,
        slack=bound - e,
        fidelity_ground=fid,
        q_ab=weights,
        zeta=zeta,
    )


# -- rigidity diagnostics -----------------------------------------------------------


@dataclass(frozen=True)
class RigidityReport:
    deviations: dict[str, float]
    max_deviation: float
    epsilon: float
    constant_estimate: float | None  # max_dev / (n^6 eps^(1/4)); None at eps=0

    def to_dict(self) -> dict:
        return {
            "deviations": self.deviations,
            "max_deviation": self.max_deviation,
            "epsilon": self.epsilon,
            "constant_estimate": self.constant_estimate,
        }


def _all_words(n: int, cap: int) -> list[str]:
    from itertools import product as iproduct

    words = []
    for letters in iproduct("IXZ", repeat=n):
        w = "".join(letters)
        if sum(c != "I" for c in w) <= cap:
            words.append(w)
    return words


def rigidity_deviation(
    strategy, n: int, questions=None, epsilon: float | None = None
) -> RigidityReport:
    """Per-question norms ||W_B(a)|psi> - V_B^dag sigma_W(a) V_B |psi>||.

    V_B is realized by the swap gadget with a fresh EPR block; the report
    includes the worst question and the empirical rigidity-constant
    estimate max_dev / (n^6 eps^(1/4)) with eps the LWPBT loss.
    """
    oracle = OracleAccess(strategy)
    gadget = swap_gadget(oracle, n)
    if questions is None:
        questions = _all_words(n, min(games.LINEARITY_WEIGHT_CAP, n))
    deviations = {}
    for letters in questions:
        wb = strategy.bob_observable(("word", letters))
        direct = apply_pauli(strategy.state, wb, strategy.bob_regs)
        world = attach_epr(strategy.state, "E1", "E2", n)
        world = gadget.apply(world)
        world = apply_pauli(world, PauliWord.from_letters(letters), "E1")
        world = gadget.apply_inverse(world)
        back = contract_epr(world, "E1", "E2")
        deviations[letters] = float(np.linalg.norm(direct.amps - back.amps))
    if epsilon is None:
        epsilon = games.exact_loss(games.lwpbt(n), strategy)
    max_dev = max(deviations.values())
    const = None
    if epsilon > 0:
        const = max_dev / (n**6 * epsilon**0.25)
    return RigidityReport(deviations, max_dev, epsilon, const)


# -- the theorem-side bound --------------------------------------------------------


@dataclass(frozen=True)
class BoundCheck:
    slack: float
    in_regime: bool  # epsilon <= eta* as the theorem statement requires


def check_knowledge_bound(report: ExtractionReport, params) -> BoundCheck:
    """Slack of tr(H zeta) <= alpha + (2/p*) epsilon at the derived p*."""
    slack = (
        float(params.alpha)
        + 2.0 * report.epsilon / float(params.p_star)
        - report.energy
    )
    return BoundCheck(slack=slack, in_regime=report.epsilon <= float(params.eta_star))


def commutation_gap(oracle_factory, n: int) -> float:
    """Trace distance between teleport-then-swap and swap-then-teleport."""
    zeta_a, _ = output_mixture(oracle_factory(), n, order="gadget_first")
    zeta_b, _ = output_mixture(oracle_factory(), n, order="teleport_first")
    return trace_distance(zeta_a, zeta_b)
