"""Noise channels on density matrices."""
from __future__ import annotations

import numpy as np

from .states import DensityMatrix


def _depolarize_qubit(mat: np.ndarray, q: int, num_qubits: int, delta: float) -> np.ndarray:
    """rho -> (1-delta) rho + delta (I/2 (x) tr_q rho) on one qubit."""
    d = 2**num_qubits
    t = mat.reshape((2,) * (2 * num_qubits))
    # move the qubit's row/col axes to the front
    axes = [q] + [i for i in range(num_qubits) if i != q]
    perm = axes + [a + num_qubits for a in axes]
    t = np.transpose(t, perm).reshape(2, d // 2, 2, d // 2)
    marg = t[0, :, 0, :] + t[1, :, 1, :]
    out = (1 - delta) * t
    out[0, :, 0, :] += (delta / 2) * marg
    out[1, :, 1, :] += (delta / 2) * marg
    inv = np.argsort(perm)
    return np.transpose(out.reshape((2,) * (2 * num_qubits)), inv).reshape(d, d)


def depolarize(rho: DensityMatrix, register, delta: float) -> DensityMatrix:
    """Per-qubit depolarizing channel on every qubit of the register(s)."""
    if not 0 <= delta <= 1:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    names = (register,) if isinstance(register, str) else tuple(register)
    mat = rho.mat
    for q in rho.layout.qubits(*names):
        mat = _depolarize_qubit(mat, q, rho.num_qubits, delta)
    return DensityMatrix(mat, rho.layout)
