"""poqlab command line: ground | value | play | extract | rigidity | params | sweep.

Exact-mode commands are deterministic given their inputs; sampling commands
require --seed.  Exit codes: 0 ran, 2 validation error, 3 out-of-regime
warning treated as error under --strict.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

from . import extractor as ext
from . import games, params, strategies
from . import hamiltonian as ham
from .qcore import dump_json

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_REGIME = 3


class RegimeWarning(Exception):
    """Raised under --strict when epsilon exceeds eta*."""


def _fmt(x: float) -> str:
    return f"{x:.12f}"


def _parse_strategy_arg(text: str) -> dict:
    text = text.strip()
    if text.startswith("{"):
        return json.loads(text)
    if ":" in text:
        name, _, rest = text.partition(":")
        desc = {"preset": name}
        for pair in rest.split(","):
            key, _, val = pair.partition("=")
            desc[key.strip()] = val.strip()
        if "delta" in desc:
            desc["delta"] = float(desc["delta"])
        return desc
    return {"preset": text}


def _load_ham(path: str, min_n: int = 1) -> tuple[ham.XZHamiltonian, list[str]]:
    h = ham.load(path)
    notes = []
    if h.n < min_n:
        notes.append(f"note: embedded n={h.n} Hamiltonian at n={min_n} (identity padding)")
        h = ham.embed(h, min_n)
    return h, notes


def _pick_p(args, h: ham.XZHamiltonian) -> tuple[float, params.GameParams | None]:
    alpha = args.alpha
    if alpha is None:
        # default target: the ground energy, floored at 0 (clamped into the
        # valid [0, gamma] window against eigensolver round-off)
        alpha = min(max(0.0, ham.ground(h)[0]), h.gamma)
    gp = params.derive(h.n, Fraction(h.gamma), alpha, args.C)
    if getattr(args, "p_star", False):
        return float(gp.p_star), gp
    if getattr(args, "p", None) is not None:
        return args.p, gp
    return float(gp.p_star), gp


def _build_game(args, h: ham.XZHamiltonian | None, p: float | None):
    kind = getattr(args, "game", "hamiltonian")
    if kind == "magic-square":
        return games.magic_square()
    if kind == "lwpbt":
        n = args.n if getattr(args, "n", None) else (h.n if h else None)
        if n is None:
            raise ValueError("lwpbt needs --n or --ham")
        return games.lwpbt(n)
    if kind == "energy-test":
        if h is None:
            raise ValueError("energy-test needs --ham")
        return games.energy_test(h)
    if h is None:
        raise ValueError("hamiltonian game needs --ham")
    return games.hamiltonian_game(h, p)


# -- subcommands -----------------------------------------------------------------


def cmd_ground(args) -> int:
    h, notes = _load_ham(args.ham)
    lam0, state = ham.ground(h)
    for line in notes:
        print(line)
    print(f"lambda0 = {_fmt(lam0)}")
    print(f"n = {h.n}  k = {h.k}  m = {h.m}  gamma = {h.gamma!r}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(dump_json(state))
        print(f"ground state written to {args.out}")
    return EXIT_OK


def cmd_value(args) -> int:
    h = notes = None
    p = None
    if args.ham:
        min_n = 2 if args.game == "hamiltonian" else 1
        h, notes = _load_ham(args.ham, min_n)
        for line in notes:
            print(line)
    if args.game == "hamiltonian":
        p, _ = _pick_p(args, h)
    game = _build_game(args, h, p)
    strat = strategies.from_descriptor(_parse_strategy_arg(args.strategy), game, h)
    omega = games.exact_value(game, strat, threads=args.threads)
    payload = {"game": game.name, "strategy": strat.name, "omega": omega}
    if p is not None:
        payload["p"] = p
    if args.format == "json":
        print(json.dumps(payload, indent=2))
    else:
        print(f"game = {game.name}")
        print(f"strategy = {strat.name}")
        if p is not None:
            print(f"p = {p!r}")
        print(f"omega = {_fmt(omega)}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    return EXIT_OK


def cmd_play(args) -> int:
    h = None
    p = None
    if args.ham:
        min_n = 2 if args.game == "hamiltonian" else 1
        h, notes = _load_ham(args.ham, min_n)
        for line in notes:
            print(line)
    if args.game == "hamiltonian":
        p, _ = _pick_p(args, h)
    game = _build_game(args, h, p)
    strat = strategies.from_descriptor(_parse_strategy_arg(args.strategy), game, h)
    mean, (lo, hi), transcripts = games.estimate_value(
        game,
        strat,
        rounds=args.rounds,
        seed=args.seed,
        confidence=args.confidence,
        transcript_path=args.out,
    )
    wins = sum(t.win for t in transcripts)
    print(f"game = {game.name}")
    print(f"strategy = {strat.name}")
    print(f"rounds = {args.rounds}  wins = {wins}  seed = {args.seed}")
    print(f"estimate = {_fmt(mean)}")
    print(f"ci{int(args.confidence * 100)} = [{_fmt(lo)}, {_fmt(hi)}]")
    if args.out:
        print(f"transcripts written to {args.out}")
    return EXIT_OK


def _extraction_report(args, h: ham.XZHamiltonian):
    p, gp = _pick_p(args, h)
    game = games.hamiltonian_game(h, p)
    strat = strategies.from_descriptor(_parse_strategy_arg(args.strategy), game, h)
    oracle = ext.OracleAccess(strat)
    epsilon = games.exact_loss(game, strat, threads=args.threads)
    report = ext.extract(
        oracle, h, p, alpha=float(gp.alpha), epsilon=epsilon, threads=args.threads
    )
    return report, gp, strat


def cmd_extract(args) -> int:
    h, notes = _load_ham(args.ham, 2)
    report, gp, strat = _extraction_report(args, h)
    check = ext.check_knowledge_bound(report, gp)
    for line in notes:
        print(line)
    if args.format == "json":
        print(report.to_json())
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(report.to_json() + "\n")
        if args.strict and not check.in_regime:
            raise RegimeWarning(
                f"epsilon {report.epsilon} exceeds eta* {float(gp.eta_star)}"
            )
        return EXIT_OK
    print(f"strategy = {strat.name}")
    print(f"n = {report.n}  p_used = {report.p_used!r}")
    print(f"epsilon = {report.epsilon!r}")
    print(f"alpha = {_fmt(report.alpha)}  gamma = {_fmt(report.gamma)}")
    print(f"energy = {_fmt(report.energy)}")
    print(f"bound = {report.bound!r}")
    print(f"slack = {report.slack!r}")
    if report.fidelity_ground is not None:
        print(f"fidelity_ground = {_fmt(report.fidelity_ground)}")
    regime = "in-regime" if check.in_regime else "OUT-OF-REGIME (epsilon > eta*)"
    print(f"theorem regime: {regime}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_json() + "\n")
        print(f"report written to {args.out}")
    if args.dump_zeta:
        payload = {
            "layout": [[n_, w] for n_, w in report.zeta.layout.regs],
            "matrix": [
                [[float(v.real), float(v.imag)] for v in row] for row in report.zeta.mat
            ],
        }
        with open(args.dump_zeta, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
            fh.write("\n")
        print(f"zeta written to {args.dump_zeta}")
    if args.strict and not check.in_regime:
        raise RegimeWarning(f"epsilon {report.epsilon} exceeds eta* {float(gp.eta_star)}")
    return EXIT_OK


def cmd_rigidity(args) -> int:
    n = args.n
    game = games.lwpbt(n)
    strat = strategies.from_descriptor(_parse_strategy_arg(args.strategy), game, None)
    report = ext.rigidity_deviation(strat, n)
    print(f"strategy = {strat.name}")
    for letters in sorted(report.deviations):
        print(f"deviation[{letters}] = {report.deviations[letters]!r}")
    print(f"max_deviation = {report.max_deviation!r}")
    print(f"epsilon = {report.epsilon!r}")
    print(f"constant_estimate = {report.constant_estimate!r}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2)
            fh.write("\n")
    return EXIT_OK


def cmd_params(args) -> int:
    gp = params.derive(args.n, args.gamma, args.alpha, args.C)
    rats = gp.as_rationals()
    floats = gp.as_floats()
    if args.format == "json":
        print(json.dumps({"rational": rats, "float": floats}, indent=2))
    else:
        print(f"n = {gp.n}  gamma = {rats['gamma']}  alpha = {rats['alpha']}  C = {rats['C']}")
        for key in ("eta_star", "p_star", "kappa", "D", "eta_hat"):
            print(f"{key} = {rats[key]}  ({floats[key]!r})")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump({"rational": rats, "float": floats}, fh, indent=2)
            fh.write("\n")
    return EXIT_OK


SWEEP_COLUMNS = ("delta", "epsilon", "energy", "bound", "slack", "max_rigidity_deviation")


def _render_sweep_figure(rows: list[dict], path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    deltas = [r["delta"] for r in rows]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 7), sharex=True)
    ax1.plot(deltas, [r["epsilon"] for r in rows], "o-", label="epsilon")
    ax1.plot(deltas, [r["slack"] for r in rows], "s-", label="slack")
    ax1.set_ylabel("game loss / bound slack")
    ax1.legend()
    ax1.grid(True, alpha=0.3)
    ax2.plot(
        deltas,
        [r["max_rigidity_deviation"] for r in rows],
        "d-",
        color="tab:red",
        label="max rigidity deviation",
    )
    ax2.plot(deltas, [r["energy"] for r in rows], "^-", color="tab:green", label="tr(H zeta)")
    ax2.set_xlabel("depolarization delta")
    ax2.set_ylabel("deviation / energy")
    ax2.legend()
    ax2.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": "poqlab"})
    plt.close(fig)


def cmd_sweep(args) -> int:
    h, notes = _load_ham(args.ham, 2)
    grid = [float(x) for x in args.delta_grid.split(",") if x.strip() != ""]
    if not grid:
        raise ValueError("empty delta grid")
    p, gp = _pick_p(args, h)
    base_desc = _parse_strategy_arg(args.strategy)
    game = games.hamiltonian_game(h, p)
    lwpbt_game = games.lwpbt(h.n)
    rows = []
    for delta in grid:
        desc = dict(base_desc)
        desc["delta"] = delta
        strat = strategies.from_descriptor(desc, game, h)
        epsilon = games.exact_loss(game, strat, threads=args.threads)
        oracle = ext.OracleAccess(strat)
        report = ext.extract(
            oracle, h, p, alpha=float(gp.alpha), epsilon=epsilon, threads=args.threads
        )
        rig = ext.rigidity_deviation(
            strat, h.n, epsilon=games.exact_loss(lwpbt_game, strat, threads=args.threads)
        )
        rows.append(
            {
                "delta": delta,
                "epsilon": report.epsilon,
                "energy": report.energy,
                "bound": report.bound,
                "slack": report.slack,
                "max_rigidity_deviation": rig.max_deviation,
            }
        )
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(row[k]) for k in SWEEP_COLUMNS})
    text = buf.getvalue()
    for line in notes:
        print(line)
    print(text, end="")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        if not args.no_plot:
            fig_path = args.out.rsplit(".", 1)[0] + ".png"
            _render_sweep_figure(rows, fig_path)
            print(f"figure written to {fig_path}")
    return EXIT_OK


# -- argument plumbing ----------------------------------------------------------------


def _add_common(sp, *, needs_ham: bool, sampling: bool = False):
    sp.add_argument("--ham", required=needs_ham, help="Hamiltonian JSON file")
    sp.add_argument("--strategy", default="honest", help="preset name or JSON descriptor")
    sp.add_argument("--p", type=float, default=None, help="Energy-test weight")
    sp.add_argument(
        "--p-star", action="store_true", help="use the derived p* instead of --p"
    )
    sp.add_argument("--alpha", type=float, default=None, help="target energy")
    sp.add_argument("--C", type=float, default=2.0, help="rigidity constant (> 1)")
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--strict", action="store_true")
    sp.add_argument("--out", default=None)
    sp.add_argument("--format", choices=("json", "csv", "table"), default="table")
    if sampling:
        sp.add_argument("--rounds", type=int, required=True)
        sp.add_argument("--seed", type=int, required=True)
        sp.add_argument("--confidence", type=float, default=0.95)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="poqlab", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("ground", help="exact ground energy and state")
    sp.add_argument("--ham", required=True)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_ground)

    sp = sub.add_parser("value", help="exact game value")
    sp.add_argument(
        "--game",
        choices=("hamiltonian", "lwpbt", "magic-square", "energy-test"),
        default="hamiltonian",
    )
    sp.add_argument("--n", type=int, default=None)
    _add_common(sp, needs_ham=False)
    sp.set_defaults(func=cmd_value)

    sp = sub.add_parser("play", help="Monte Carlo rounds with transcripts")
    sp.add_argument(
        "--game",
        choices=("hamiltonian", "lwpbt", "magic-square", "energy-test"),
        default="hamiltonian",
    )
    sp.add_argument("--n", type=int, default=None)
    _add_common(sp, needs_ham=False, sampling=True)
    sp.set_defaults(func=cmd_play)

    sp = sub.add_parser("extract", help="run the knowledge extractor")
    _add_common(sp, needs_ham=True)
    sp.add_argument("--dump-zeta", default=None)
    sp.set_defaults(func=cmd_extract)

    sp = sub.add_parser("rigidity", help="per-question rigidity deviations")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--strategy", default="honest_lwpbt")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_rigidity)

    sp = sub.add_parser("params", help="eta*, p*, kappa, D table")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--gamma", required=True)
    sp.add_argument("--alpha", required=True)
    sp.add_argument("--C", default="2")
    sp.add_argument("--format", choices=("json", "table"), default="table")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_params)

    sp = sub.add_parser("sweep", help="depolarization sweep CSV + figure")
    _add_common(sp, needs_ham=True)
    sp.add_argument("--delta-grid", default="0,0.02,0.05,0.1")
    sp.add_argument("--no-plot", action="store_true")
    sp.set_defaults(func=cmd_sweep)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except RegimeWarning as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except (
        ham.HamiltonianFormatError,
        strategies.StrategyError,
        games.GameBuildError,
        games.StrategyQuestionError,
        params.ParameterError,
        FileNotFoundError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
