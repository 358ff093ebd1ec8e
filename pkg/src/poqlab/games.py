"""Non-local games: Magic Square, low-weight Pauli braiding, Energy test,
and their p-mixture for a target XZ Hamiltonian.

A GameSpec is a flat list of verifier contexts.  Each context carries the
verifier's hidden randomness (theta), the questions actually delivered to
the players, the sampling probability, and an acceptance function that may
be randomized (it returns the acceptance probability given both answers).
Contexts with identical question pairs are deliberately kept separate so
the transcript distribution matches the protocol description.

Question labels shared with the strategies module:

* Bob:   ("word", letters) | ("ms9", i, j) | ("var", k)
* Alice: ("lin", letters, letters) | ("line", name, i, j) | ("teleport",)

Answer conventions: observable outcomes map to bits via (1 - o)/2, except
the Energy-test answer c which stays in {-1, +1} (handled inside the
acceptance function); teleportation answers are bitstring pairs.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations, product
from typing import Callable, Hashable

import numpy as np

from .hamiltonian import XZHamiltonian
from .qcore import PauliWord, pvm_branches, pvm_distribution

LINEARITY_WEIGHT_CAP = 6

# Magic square structure: 9 variables in a 3x3 grid; every line except c3
# must have even parity, c3 odd parity.
MS_LINES: dict[str, tuple[int, int, int]] = {
    "r1": (1, 2, 3),
    "r2": (4, 5, 6),
    "r3": (7, 8, 9),
    "c1": (1, 4, 7),
    "c2": (2, 5, 8),
    "c3": (3, 6, 9),
}
MS_PARITY = {name: (1 if name == "c3" else 0) for name in MS_LINES}

# Operator solution on two qubits; A9 = (XZ) (x) (ZX) = Y (x) Y with phase +1.
MS_OPS: dict[int, PauliWord] = {
    1: PauliWord.from_letters("IZ"),
    2: PauliWord.from_letters("ZI"),
    3: PauliWord.from_letters("ZZ"),
    4: PauliWord.from_letters("XI"),
    5: PauliWord.from_letters("IX"),
    6: PauliWord.from_letters("XX"),
    7: PauliWord.from_letters("XZ"),
    8: PauliWord.from_letters("ZX"),
    9: PauliWord.from_letters("XZ") * PauliWord.from_letters("ZX"),
}


class GameBuildError(ValueError):
    pass


class StrategyQuestionError(KeyError):
    """The strategy has no PVM for a question the game can ask."""


@dataclass(frozen=True)
class Question:
    """One verifier context: hidden randomness, questions, predicate."""

    theta: tuple
    q_alice: Hashable
    q_bob: Hashable
    prob: float
    accept: Callable[[Hashable, Hashable], float]


@dataclass(frozen=True)
class GameSpec:
    name: str
    n: int
    rows: tuple[Question, ...]

    def __post_init__(self):
        total = math.fsum(row.prob for row in self.rows)
        if abs(total - 1.0) > 1e-12:
            raise GameBuildError(f"question probabilities sum to {total}")


@dataclass(frozen=True)
class Transcript:
    round: int
    theta: tuple
    q_alice: Hashable
    r_alice: Hashable
    q_bob: Hashable
    r_bob: Hashable
    win: bool

    def to_json(self) -> str:
        return json.dumps(
            {
                "round": self.round,
                "theta": _plain(self.theta),
                "qA": _plain(self.q_alice),
                "rA": _plain(self.r_alice),
                "qB": _plain(self.q_bob),
                "rB": _plain(self.r_bob),
                "win": self.win,
            }
        )


def _plain(x):
    if isinstance(x, tuple):
        return [_plain(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


# -- Magic Square -----------------------------------------------------------------


def _ms_accept(line: str, pos: int):
    parity = MS_PARITY[line]

    def accept(ra, rb) -> float:
        if sum(ra) % 2 != parity:
            return 0.0
        return 1.0 if ra[pos] == rb else 0.0

    return accept


def magic_square() -> GameSpec:
    """Mermin-Peres Magic Square game on the fixed qubit pair (0, 1)."""
    rows = []
    for line, ks in MS_LINES.items():
        for pos, k in enumerate(ks):
            rows.append(
                Question(
                    theta=("ms", line, k),
                    q_alice=("line", line, 0, 1),
                    q_bob=("var", k),
                    prob=1.0 / 18.0,
                    accept=_ms_accept(line, pos),
                )
            )
    return GameSpec("magic_square", 2, tuple(rows))


# -- Low-weight Pauli braiding test -------------------------------------------------


def _bits(mask: int, n: int) -> str:
    return format(mask, f"0{n}b")


def _low_weight_masks(n: int, cap: int = LINEARITY_WEIGHT_CAP) -> list[int]:
    return [a for a in range(2**n) if bin(a).count("1") <= cap]


def _lin_accept(which: str):
    def accept(ra, rb) -> float:
        b1, b2 = ra
        if which == "a":
            return 1.0 if b1 == rb else 0.0
        if which == "a2":
            return 1.0 if b2 == rb else 0.0
        return 1.0 if (b1 + b2) % 2 == rb else 0.0

    return accept


def lwpbt(n: int) -> GameSpec:
    """Low-weight Pauli braiding test: linearity plus anti-commutation.

    With probability 1/2 each the verifier runs the linearity test (pattern
    W, masks a, a' of weight <= 6; Bob gets W(a), W(a') or W(a+a')) or the
    anti-commutation test (a Magic Square line embedded on a random qubit
    pair, Bob receiving the embedded operator, or the special question for
    variable 9).
    """
    if n < 2:
        raise GameBuildError("lwpbt needs n >= 2 (two-qubit anti-commutation)")
    rows = []
    masks = _low_weight_masks(n)
    patterns = ["".join(p) for p in product("XZ", repeat=n)]
    ctx_prob = 0.5 / (len(patterns) * len(masks) ** 2)
    for pattern in patterns:
        for a in masks:
            word_a = PauliWord.from_pattern(pattern, a).letters
            for a2 in masks:
                word_a2 = PauliWord.from_pattern(pattern, a2).letters
                options = [("a", a), ("a2", a2)]
                if bin(a ^ a2).count("1") <= LINEARITY_WEIGHT_CAP:
                    options.append(("sum", a ^ a2))
                for which, mask in options:
                    word_b = PauliWord.from_pattern(pattern, mask).letters
                    rows.append(
                        Question(
                            theta=("lin", pattern, _bits(a, n), _bits(a2, n), which),
                            q_alice=("lin", word_a, word_a2),
                            q_bob=("word", word_b),
                            prob=ctx_prob / len(options),
                            accept=_lin_accept(which),
                        )
                    )
    pairs = list(combinations(range(n), 2))
    ac_prob = 0.5 / (len(pairs) * 6 * 3)
    for i, j in pairs:
        for line, ks in MS_LINES.items():
            for pos, k in enumerate(ks):
                if k == 9:
                    q_bob: Hashable = ("ms9", i, j)
                else:
                    q_bob = ("word", MS_OPS[k].embed(n, (i, j)).letters)
                rows.append(
                    Question(
                        theta=("ac", line, i, j, k),
                        q_alice=("line", line, i, j),
                        q_bob=q_bob,
                        prob=ac_prob,
                        accept=_ms_accept(line, pos),
                    )
                )
    return GameSpec(f"lwpbt({n})", n, tuple(rows))


# -- Energy test ---------------------------------------------------------------------


def _et_accept(letters: str, coeff: float):
    sign = (coeff > 0) - (coeff < 0)
    reject_prob = abs(coeff)

    def accept(ra, rb) -> float:
        alpha, beta = ra
        c = 1 - 2 * rb  # Bob's bit back to +-1
        d = 1
        for i, letter in enumerate(letters):
            if letter == "Z" and alpha[i] == "1":
                d = -d
            elif letter == "X" and beta[i] == "1":
                d = -d
        if c * d != sign:
            return 1.0
        return 1.0 - reject_prob

    return accept


def energy_test(h: XZHamiltonian) -> GameSpec:
    """Energy test: Alice teleports, Bob measures a random term.

    The verifier picks a term uniformly, then a (W, e) decomposition pair
    uniformly; Alice is told to teleport and answers the key pair
    (alpha, beta), Bob measures the term word and answers c.  Acceptance:
    the key-corrected outcome must oppose the coefficient sign, otherwise
    reject with probability |gamma_l| (folded in analytically).
    """
    from .hamiltonian import decomposition_pairs

    rows = []
    for ell, term in enumerate(h.terms):
        pairs = decomposition_pairs(h, ell)
        accept = _et_accept(term.pauli, term.coeff)
        for pattern, e_str in pairs:
            rows.append(
                Question(
                    theta=("et", ell, pattern, e_str),
                    q_alice=("teleport",),
                    q_bob=("word", term.pauli),
                    prob=1.0 / (h.m * len(pairs)),
                    accept=accept,
                )
            )
    return GameSpec(f"energy_test(n={h.n})", h.n, tuple(rows))


def hamiltonian_game(h: XZHamiltonian, p: float) -> GameSpec:
    """G(H, p): LWPBT with weight (1-p) mixed with the Energy test at p."""
    if not 0.0 < p < 1.0:
        raise GameBuildError(f"p must lie in (0, 1), got {p}")
    base = lwpbt(h.n)
    et = energy_test(h)
    rows = tuple(
        Question(q.theta, q.q_alice, q.q_bob, q.prob * (1.0 - p), q.accept)
        for q in base.rows
    ) + tuple(
        Question(q.theta, q.q_alice, q.q_bob, q.prob * p, q.accept) for q in et.rows
    )
    return GameSpec(f"G(H,p={p})", h.n, rows)


# -- exact evaluation -----------------------------------------------------------------


def joint_distribution(strategy, q_alice, q_bob) -> dict:
    """Exact Born distribution over joint answers for one question pair."""
    try:
        pvm_a = strategy.alice_pvm(q_alice)
        pvm_b = strategy.bob_pvm(q_bob)
    except KeyError as exc:
        raise StrategyQuestionError(str(exc)) from None
    out = {}
    for la, branch in pvm_branches(strategy.state, pvm_a):
        sub = pvm_distribution(branch, pvm_b, check=False)
        for lb, prob in sub.items():
            out[(la, lb)] = prob
    return out


def _distributions(game: GameSpec, strategy, threads: int) -> dict:
    pairs = []
    seen = set()
    for row in game.rows:
        key = (row.q_alice, row.q_bob)
        if key not in seen:
            seen.add(key)
            pairs.append(key)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            dists = list(
                pool.map(lambda k: joint_distribution(strategy, *k), pairs)
            )
    else:
        dists = [joint_distribution(strategy, *k) for k in pairs]
    return dict(zip(pairs, dists))


def exact_loss(game: GameSpec, strategy, threads: int = 1) -> float:
    """1 - exact_value, accumulated as a direct loss sum.

    Summing losses keeps near-perfect strategies accurate: honest rows
    contribute amplitudes-squared of the losing branches (~1e-30) instead
    of cancellation error from 1 - (sum of winning mass).
    """
    dists = _distributions(game, strategy, threads)
    row_losses = []
    for row in game.rows:
        dist = dists[(row.q_alice, row.q_bob)]
        loss = math.fsum(
            p * (1.0 - row.accept(la, lb)) for (la, lb), p in dist.items()
        )
        row_losses.append(row.prob * loss)
    return math.fsum(row_losses)


def exact_value(game: GameSpec, strategy, threads: int = 1) -> float:
    """Winning probability sum_theta mu * sum_{a,b} accept * Born(a,b)."""
    return 1.0 - exact_loss(game, strategy, threads)


# -- sampled play ----------------------------------------------------------------------


def play(
    game: GameSpec,
    strategy,
    rounds: int,
    seed: int,
    transcript_path=None,
    threads: int = 1,
):
    """Sample i.i.d. rounds; returns (win_count, transcripts).

    Every round draws from an independent RNG stream spawned off the root
    seed, so transcripts are reproducible and order-independent.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    streams = np.random.SeedSequence(seed).spawn(rounds)
    cum = np.cumsum([row.prob for row in game.rows])
    dist_cache: dict = {}
    outcome_cache: dict = {}

    def outcomes_for(row):
        key = (row.q_alice, row.q_bob)
        if key not in outcome_cache:
            dist = dist_cache.get(key)
            if dist is None:
                dist = joint_distribution(strategy, *key)
                dist_cache[key] = dist
            labels = list(dist.keys())
            probs = np.array([dist[lb] for lb in labels])
            outcome_cache[key] = (labels, probs / probs.sum())
        return outcome_cache[key]

    wins = 0
    transcripts = []
    for r in range(rounds):
        rng = np.random.default_rng(streams[r])
        row = game.rows[
            min(int(np.searchsorted(cum, rng.random(), side="right")), len(game.rows) - 1)
        ]
        labels, probs = outcomes_for(row)
        la, lb = labels[int(rng.choice(len(labels), p=probs))]
        win = bool(rng.random() < row.accept(la, lb))
        wins += win
        transcripts.append(Transcript(r, row.theta, row.q_alice, la, row.q_bob, lb, win))
    if transcript_path is not None:
        with open(transcript_path, "w", encoding="utf-8") as fh:
            for t in transcripts:
                fh.write(t.to_json() + "\n")
    return wins, transcripts


def hoeffding_halfwidth(rounds: int, confidence: float) -> float:
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * rounds))


def estimate_value(
    game: GameSpec,
    strategy,
    rounds: int,
    seed: int,
    confidence: float = 0.95,
    transcript_path=None,
):
    """Monte Carlo estimate with a two-sided Hoeffding interval."""
    wins, transcripts = play(game, strategy, rounds, seed, transcript_path)
    mean = wins / rounds
    half = hoeffding_halfwidth(rounds, confidence)
    return mean, (max(0.0, mean - half), min(1.0, mean + half)), transcripts
