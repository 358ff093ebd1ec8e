#!/usr/bin/env python3
"""Regenerate the fixture Hamiltonians and their expected-value sidecars.

Deliberately independent of the poqlab package: Hamiltonians are assembled
with plain numpy kron products and diagonalized with numpy.  Run from the
repository root:

    python3 scripts/make_fixtures.py
"""
import json
import pathlib

import numpy as np

SIGMA = {
    "I": np.eye(2),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]]),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]]),
}

FIXTURES = {
    # n=1 field term; used by ground/parse paths (games embed it at n=2)
    "Z.json": {
        "n": 1,
        "k": 1,
        "terms": [{"coeff": 1.0, "pauli": "Z"}],
    },
    # the same field embedded at two qubits, game-capable as-is
    "zfield-2qubit.json": {
        "n": 2,
        "k": 1,
        "terms": [{"coeff": 1.0, "pauli": "ZI"}],
    },
    "ZZ.json": {
        "n": 2,
        "k": 2,
        "terms": [{"coeff": 1.0, "pauli": "ZZ"}],
    },
    "mixed-2term.json": {
        "n": 2,
        "k": 2,
        "terms": [
            {"coeff": 0.5, "pauli": "XI"},
            {"coeff": -1.0, "pauli": "ZZ"},
        ],
    },
    "xxzz-2qubit.json": {
        "n": 2,
        "k": 2,
        "terms": [
            {"coeff": 0.8, "pauli": "XX"},
            {"coeff": 0.6, "pauli": "ZZ"},
        ],
    },
    # seeded random 3-qubit instance (seed 7, weights <= 2)
    "random-3qubit.json": None,
}


def random_3qubit(seed: int = 7) -> dict:
    rng = np.random.default_rng(seed)
    terms = []
    for _ in range(4):
        weight = int(rng.integers(1, 3))
        sites = sorted(rng.choice(3, size=weight, replace=False).tolist())
        letters = ["I"] * 3
        for s in sites:
            letters[s] = "XZ"[int(rng.integers(0, 2))]
        coeff = float(np.round(rng.uniform(-1, 1), 3))
        terms.append({"coeff": coeff, "pauli": "".join(letters)})
    return {"n": 3, "k": 2, "terms": terms}


def dense(doc: dict) -> np.ndarray:
    n, terms = doc["n"], doc["terms"]
    h = np.zeros((2**n, 2**n))
    for t in terms:
        mat = np.eye(1)
        for c in t["pauli"]:
            mat = np.kron(mat, SIGMA[c])
        h += t["coeff"] * mat
    return h / len(terms)


def sidecar(doc: dict) -> dict:
    h = dense(doc)
    evals = np.linalg.eigvalsh(h)
    gamma = float(np.mean([abs(t["coeff"]) for t in doc["terms"]]))
    lam0 = float(evals[0])
    out = {
        "lambda0": lam0,
        "gamma": gamma,
        "m": len(doc["terms"]),
        # honest value of G(H, p) with a ground witness: 1 - p (gamma+lam0)/2
        "honest_omega": {
            str(p): 1.0 - p * (gamma + lam0) / 2.0 for p in (0.1, 0.5)
        },
    }
    return out


def main() -> None:
    root = pathlib.Path(__file__).resolve().parent.parent / "fixtures"
    root.mkdir(exist_ok=True)
    docs = dict(FIXTURES)
    docs["random-3qubit.json"] = random_3qubit()
    for name, doc in docs.items():
        path = root / name
        path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        side = root / (name[: -len(".json")] + ".expected.json")
        side.write_text(json.dumps(sidecar(doc), indent=2) + "\n", encoding="utf-8")
        print(f"wrote {path.name} and {side.name}")


if __name__ == "__main__":
    main()
