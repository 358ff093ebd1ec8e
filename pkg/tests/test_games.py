"""Game construction, exact values against dense Born oracles, sampling."""
import json
import math

import numpy as np
import pytest

from poqlab import games, hamiltonian as ham, strategies
from poqlab.qcore import Layout, basis_state, from_amplitudes

from oracles import dense_value, dense_word, eigenprojectors, hoeffding_halfwidth

HZ1 = ham.parse_dict({"n": 1, "k": 1, "terms": [{"coeff": 1.0, "pauli": "Z"}]})
HZZ = ham.parse_dict({"n": 2, "k": 2, "terms": [{"coeff": 1.0, "pauli": "ZZ"}]})
HMIX = ham.parse_dict(
    {
        "n": 2,
        "k": 2,
        "terms": [{"coeff": 0.5, "pauli": "XI"}, {"coeff": -1.0, "pauli": "ZZ"}],
    }
)


# -- dense Born oracle for honest strategies ------------------------------------------


def _proj_chain(mats_signs):
    d = mats_signs[0][0].shape[0]
    p = np.eye(d, dtype=complex)
    for m, s in mats_signs:
        p = p @ (np.eye(d) + s * m) / 2
    return p


def _full_letters(total, placements):
    letters = ["I"] * total
    for pos, letter in placements:
        letters[pos] = letter
    return "".join(letters)


def dense_honest_projectors(n, with_witness=False):
    """(alice_proj, bob_proj) on the global order (W?, A, B)."""
    total = (3 if with_witness else 2) * n
    a_off = n if with_witness else 0
    b_off = a_off + n

    def word_at(letters, off):
        return dense_word(
            _full_letters(total, [(off + i, c) for i, c in enumerate(letters)])
        )

    def ms_word(k, i, j, off):
        two = {
            1: "IZ", 2: "ZI", 3: "ZZ", 4: "XI", 5: "IX",
            6: "XX", 7: "XZ", 8: "ZX", 9: "YY",
        }[k]
        return dense_word(
            _full_letters(total, [(off + i, two[0]), (off + j, two[1])])
        )

    def bell_projectors():
        phi = np.zeros(4**n, dtype=complex)
        for j in range(2**n):
            phi[(j << n) | j] = 1
        phi /= np.sqrt(2**n)
        out = []
        for a in range(2**n):
            for b in range(2**n):
                xa = _full_letters(n, [(i, "X") for i in range(n) if (a >> (n - 1 - i)) & 1])
                zb = _full_letters(n, [(i, "Z") for i in range(n) if (b >> (n - 1 - i)) & 1])
                corr = dense_word(xa) @ dense_word(zb)
                ket = np.kron(corr, np.eye(2**n)) @ phi
                proj = np.kron(np.outer(ket, ket.conj()), np.eye(2**n))
                out.append(
                    ((format(a, f"0{n}b"), format(b, f"0{n}b")), proj)
                )
        return out

    lines = games.MS_LINES

    def alice_proj(label):
        kind = label[0]
        if kind == "lin":
            m1, m2 = word_at(label[1], a_off), word_at(label[2], a_off)
            return [
                ((b1, b2), _proj_chain([(m1, 1 - 2 * b1), (m2, 1 - 2 * b2)]))
                for b1 in (0, 1)
                for b2 in (0, 1)
            ]
        if kind == "line":
            _, name, i, j = label
            mats = [ms_word(k, i, j, a_off) for k in lines[name]]
            return [
                (bits, _proj_chain(list(zip(mats, [1 - 2 * b for b in bits]))))
                for bits in [
                    (b1, b2, b3) for b1 in (0, 1) for b2 in (0, 1) for b3 in (0, 1)
                ]
            ]
        if kind == "teleport":
            return bell_projectors()
        raise KeyError(label)

    def bob_proj(label):
        kind = label[0]
        if kind == "word":
            m = word_at(label[1], b_off)
        elif kind == "ms9":
            m = ms_word(9, label[1], label[2], b_off)
        elif kind == "var":
            m = ms_word(label[1], 0, 1, b_off)
        else:
            raise KeyError(label)
        p_plus, p_minus = eigenprojectors(m)
        return [(0, p_plus), (1, p_minus)]

    return alice_proj, bob_proj


def epr_dense(n, with_witness=None):
    """Dense state vector for (W?, A, B) with EPR pairs between A and B."""
    phi = np.zeros(4**n, dtype=complex)
    for j in range(2**n):
        phi[(j << n) | j] = 1
    phi /= np.sqrt(2**n)
    if with_witness is None:
        return phi
    return np.kron(with_witness, phi)


# -- structure ------------------------------------------------------------------------


@pytest.mark.parametrize(
    "game",
    [
        games.magic_square(),
        games.lwpbt(2),
        games.lwpbt(3),
        games.energy_test(HMIX),
        games.hamiltonian_game(HZZ, 0.3),
    ],
    ids=lambda g: g.name,
)
def test_probabilities_sum_to_one(game):
    assert abs(math.fsum(r.prob for r in game.rows) - 1.0) < 1e-12


def test_lwpbt_requires_two_qubits():
    with pytest.raises(games.GameBuildError):
        games.lwpbt(1)
    with pytest.raises(games.GameBuildError):
        games.hamiltonian_game(HZZ, 0.0)


def test_ms_ops_structure():
    """Lines multiply to +-identity with the c3 sign flip; rows commute."""
    ident = games.PauliWord.identity(2)
    for name, ks in games.MS_LINES.items():
        w = games.MS_OPS[ks[0]] * games.MS_OPS[ks[1]] * games.MS_OPS[ks[2]]
        assert w == (ident.negate() if name == "c3" else ident), name
        for a in ks:
            for b in ks:
                assert games.MS_OPS[a].commutes_with(games.MS_OPS[b])


# -- magic square ---------------------------------------------------------------------


def test_magic_square_honest_wins():
    g = games.magic_square()
    s = strategies.honest_magic_square()
    assert abs(games.exact_value(g, s) - 1.0) < 1e-9
    # cross-check through the dense Born oracle
    ap, bp = dense_honest_projectors(2)
    assert abs(dense_value(g, epr_dense(2), ap, bp) - 1.0) < 1e-9


def test_magic_square_bob_random_half():
    """Honest Alice against a coin-flipping Bob: exactly 1/2."""
    from poqlab.qcore import epr_state, tensor

    g = games.magic_square()
    hs = strategies.honest_magic_square()
    state = tensor(epr_state(2, "A", "B"), _coin_state())
    hybrid = strategies.Strategy(
        "alice_honest_bob_coin", 2, state, ("A",), ("B", "C"),
        hs._alice_builder, _coin_bob_builder(), None,
    )
    assert abs(games.exact_value(g, hybrid) - 0.5) < 1e-12


def _coin_state():
    from poqlab.qcore import from_amplitudes

    return from_amplitudes(
        Layout.of(("C", 1)), np.array([1, 1]) / np.sqrt(2)
    )


def _coin_bob_builder():
    from poqlab.qcore import DiagProjector, Pvm

    def build(label):
        return Pvm(("C",), ((0, DiagProjector((0,))), (1, DiagProjector((1,)))))

    return build


def test_magic_square_all_zeros_classical():
    """Deterministic all-zeros play, brute-forced over the 18 question pairs."""
    g = games.magic_square()
    value = math.fsum(row.prob * row.accept((0, 0, 0), 0) for row in g.rows)
    assert abs(value - 15.0 / 18.0) < 1e-12


def test_classical_random_magic_square():
    g = games.magic_square()
    s = strategies.classical_random(g)
    assert abs(games.exact_value(g, s) - 0.5) < 1e-12


# -- LWPBT ----------------------------------------------------------------------------


@pytest.mark.parametrize("n", [2, 3])
def test_lwpbt_honest_wins(n):
    g = games.lwpbt(n)
    s = strategies.honest_lwpbt(n)
    assert abs(games.exact_value(g, s) - 1.0) < 1e-9


def test_lwpbt2_honest_dense_oracle():
    g = games.lwpbt(2)
    ap, bp = dense_honest_projectors(2)
    assert abs(dense_value(g, epr_dense(2), ap, bp) - 1.0) < 1e-9


def test_lwpbt_identity_question_answer():
    s = strategies.honest_lwpbt(2)
    probs = {}
    from poqlab.qcore import pvm_distribution

    probs = pvm_distribution(s.state, s.bob_pvm(("word", "II")))
    assert abs(probs[0] - 1.0) < 1e-12  # W(0) answered by bit 0 always


def test_lwpbt_zero_state_value():
    """Honest PVMs on |0>^{2n}: Z-pattern linearity stays consistent."""
    g = games.lwpbt(2)
    hs = strategies.honest_lwpbt(2)
    s0 = strategies.Strategy(
        "zeros", 2, basis_state(Layout.of(("A", 2), ("B", 2)), "0000"),
        ("A",), ("B",), hs._alice_builder, hs._bob_builder, hs._bob_obs_builder,
    )
    num = den = 0.0
    cache = {}
    for row in g.rows:
        if row.theta[0] == "lin" and row.theta[1] == "ZZ":
            key = (row.q_alice, row.q_bob)
            if key not in cache:
                cache[key] = games.joint_distribution(s0, *key)
            win = sum(p * row.accept(la, lb) for (la, lb), p in cache[key].items())
            num += row.prob * win
            den += row.prob
    assert abs(num / den - 1.0) < 1e-12
    value = games.exact_value(g, s0)
    ap, bp = dense_honest_projectors(2)
    zero_vec = np.zeros(16)
    zero_vec[0] = 1.0
    assert abs(value - dense_value(g, zero_vec, ap, bp)) < 1e-10
    assert abs(value - 0.7239583333333334) < 1e-12  # frozen from the dense oracle


def test_lwpbt_bit_flip_bob():
    """Flipping every Bob bit kills the perfectly-correlated test entirely."""
    g = games.lwpbt(2)
    bf = strategies.bit_flip_bob(strategies.honest_lwpbt(2))
    cache = {}
    num = den = 0.0
    for row in g.rows:
        if row.theta[0] == "lin" and row.theta[2] == "00" and row.theta[3] == "00":
            key = (row.q_alice, row.q_bob)
            if key not in cache:
                cache[key] = games.joint_distribution(bf, *key)
            win = sum(p * row.accept(la, lb) for (la, lb), p in cache[key].items())
            num += row.prob * win
            den += row.prob
    assert num / den < 1e-12
    assert games.exact_value(g, bf) < 1e-12


# -- energy test ----------------------------------------------------------------------


def test_energy_test_z_witnesses():
    """H = Z at n=1: witness |1> wins always, |0> never, |+> half the time."""
    et = games.energy_test(HZ1)
    wl = Layout.of(("W", 1))
    cases = [
        (basis_state(wl, "1"), 1.0),
        (basis_state(wl, "0"), 0.0),
        (from_amplitudes(wl, np.array([1, 1]) / np.sqrt(2)), 0.5),
    ]
    for witness, expect in cases:
        s = strategies.honest_ham(HZ1, witness)
        got = games.exact_value(et, s)
        assert abs(got - expect) < 1e-9, (witness, got, expect)
        # Appendix-style loss formula: (|gamma| + gamma tr(H phi)) / 2
        e = ham.energy(HZ1, witness)
        assert abs((1.0 - got) - (1.0 + e) / 2.0) < 1e-9


def test_energy_test_dense_oracle():
    et = games.energy_test(HZ1)
    s = strategies.honest_ham(HZ1, basis_state(Layout.of(("W", 1)), "1"))
    ap, bp = dense_honest_projectors(1, with_witness=True)
    wit = np.array([0, 1], dtype=complex)
    assert abs(dense_value(et, epr_dense(1, wit), ap, bp) - 1.0) < 1e-9
    assert abs(games.exact_value(et, s) - 1.0) < 1e-9


def test_energy_test_loss_formula_general(game_fixture_paths):
    """Semi-honest ET loss equals E_l[(|g_l| + g_l tr(H_l phi))/2] exactly."""
    rng = np.random.default_rng(21)
    for path in game_fixture_paths:
        h = ham.load(path)
        if h.n > 2:
            continue
        v = rng.normal(size=2**h.n) + 1j * rng.normal(size=2**h.n)
        v /= np.linalg.norm(v)
        witness = from_amplitudes(Layout.of(("W", h.n)), v)
        s = strategies.honest_ham(h, witness)
        loss = games.exact_loss(games.energy_test(h), s)
        want = (h.gamma + ham.energy(h, witness)) / 2.0
        assert abs(loss - want) < 1e-9, path.name


def test_energy_test_classical_random():
    et = games.energy_test(HMIX)
    s = strategies.classical_random(et)
    # uniform c makes E[c d] = 0: loss is gamma / 2
    assert abs(games.exact_value(et, s) - (1.0 - HMIX.gamma / 2.0)) < 1e-12


# -- Hamiltonian game -----------------------------------------------------------------


def test_hamiltonian_game_mixing_identity():
    p = 0.37
    g = games.hamiltonian_game(HZZ, p)
    _, gstate = ham.ground(HZZ)
    s = strategies.honest_ham(HZZ, gstate)
    v = games.exact_value(g, s)
    v_l = games.exact_value(games.lwpbt(2), s)
    v_e = games.exact_value(games.energy_test(HZZ), s)
    assert abs(v - ((1 - p) * v_l + p * v_e)) < 1e-12


def test_hamiltonian_game_honest_formula():
    """omega = 1 - p (gamma + tr(H phi)) / 2 for honest provers."""
    _, gstate = ham.ground(HZZ)
    for p in (0.1, 0.5):
        v = games.exact_value(games.hamiltonian_game(HZZ, p), strategies.honest_ham(HZZ, gstate))
        assert abs(v - 1.0) < 1e-9  # gamma + lambda0 = 0 here
    wit = basis_state(Layout.of(("W", 2)), "00")
    for p in (0.1, 0.5):
        v = games.exact_value(games.hamiltonian_game(HZZ, p), strategies.honest_ham(HZZ, wit))
        want = 1.0 - p * (HZZ.gamma / 2.0 + 1.0 / 2.0)
        assert abs(v - want) < 1e-9


def test_hamiltonian_game_z_embedded():
    """H = Z embedded at n=2 as ZI: omega = 1 - p (gamma + lambda0)/2 = 1."""
    h = ham.embed(HZ1, 2)
    lam0, gstate = ham.ground(h)
    assert abs(lam0 + 1.0) < 1e-12
    v = games.exact_value(games.hamiltonian_game(h, 0.5), strategies.honest_ham(h, gstate))
    assert abs(v - 1.0) < 1e-9


def test_hamiltonian_game_maximally_mixed_witness():
    """tr(H zeta) = 0 for the maximally mixed witness: omega = 1 - p gamma/2."""
    h = HMIX
    wit = strategies.witness_from_descriptor("maximally_mixed", h)
    p = 0.4
    v = games.exact_value(games.hamiltonian_game(h, p), strategies.honest_ham(h, wit))
    assert abs(v - (1.0 - p * h.gamma / 2.0)) < 1e-9


def test_hamiltonian_game_dense_oracle():
    g = games.hamiltonian_game(HZZ, 0.5)
    _, gstate = ham.ground(HZZ)
    s = strategies.honest_ham(HZZ, gstate)
    ap, bp = dense_honest_projectors(2, with_witness=True)
    dense = dense_value(g, epr_dense(2, gstate.amps), ap, bp)
    assert abs(dense - games.exact_value(g, s)) < 1e-9


def test_exact_value_outcome_permutation_invariant():
    from poqlab.qcore import Pvm

    g = games.magic_square()
    hs = strategies.honest_magic_square()

    def shuffled_bob(label):
        pvm = hs._bob_builder(label)
        return Pvm(pvm.registers, tuple(reversed(pvm.outcomes)))

    s2 = strategies.Strategy(
        "shuffled", 2, hs.state, ("A",), ("B",), hs._alice_builder, shuffled_bob, None
    )
    assert abs(games.exact_value(g, s2) - games.exact_value(g, hs)) < 1e-12


def test_missing_pvm_raises():
    g = games.magic_square()
    s = strategies.honest_lwpbt(2)

    def broken(label):
        raise KeyError(label)

    s2 = strategies.Strategy("broken", 2, s.state, ("A",), ("B",), s._alice_builder, broken, None)
    with pytest.raises(games.StrategyQuestionError):
        games.exact_value(g, s2)


def test_threads_match_single():
    g = games.hamiltonian_game(HZZ, 0.5)
    _, gstate = ham.ground(HZZ)
    s = strategies.honest_ham(HZZ, gstate)
    assert games.exact_value(g, s, threads=1) == games.exact_value(g, s, threads=4)


# -- sampled play ---------------------------------------------------------------------


def test_play_honest_magic_square_all_wins():
    g = games.magic_square()
    s = strategies.honest_magic_square()
    wins, transcripts = games.play(g, s, rounds=10_000, seed=4)
    assert wins == 10_000
    assert len(transcripts) == 10_000


def test_play_deterministic_transcripts(tmp_path):
    g = games.magic_square()
    s = strategies.classical_random(g)
    p1 = tmp_path / "a.jsonl"
    p2 = tmp_path / "b.jsonl"
    games.play(g, s, rounds=500, seed=7, transcript_path=p1)
    games.play(g, s, rounds=500, seed=7, transcript_path=p2)
    assert p1.read_bytes() == p2.read_bytes()
    lines = p1.read_text().splitlines()
    assert len(lines) == 500
    row = json.loads(lines[0])
    assert set(row) == {"round", "theta", "qA", "rA", "qB", "rB", "win"}


def test_estimate_within_3sigma_of_exact():
    g = games.magic_square()
    s = strategies.classical_random(g)
    exact = games.exact_value(g, s)
    rounds = 100_000
    mean, (lo, hi), _ = games.estimate_value(g, s, rounds=rounds, seed=123)
    sigma = math.sqrt(exact * (1 - exact) / rounds)
    assert abs(mean - exact) <= 3 * sigma
    assert lo <= exact <= hi


def test_hoeffding_interval_definition():
    assert abs(
        games.hoeffding_halfwidth(10_000, 0.99) - hoeffding_halfwidth(10_000, 0.99)
    ) < 1e-15
