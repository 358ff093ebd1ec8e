"""poqlab: two-prover Hamiltonian games and classical knowledge extraction
for XZ local Hamiltonians, simulated exactly at desk scale.

Subpackages and modules:

* qcore       dense statevector kernel (registers, Pauli words, PVMs, noise)
* hamiltonian XZ Hamiltonians: parsing, energy, ground states, D_l pairs
* games       Magic Square, LWPBT, Energy test, G(H, p); exact + sampled play
* strategies  honest/semi-honest/deviating prover presets
* extractor   oracle access, swap gadget, extraction pipeline, rigidity
* params      eta*, p*, kappa, D in exact rational arithmetic
* cli         poqlab command-line front end
"""

from . import extractor, games, hamiltonian, params, qcore, strategies

__version__ = "0.1.0"

__all__ = [
    "extractor",
    "games",
    "hamiltonian",
    "params",
    "qcore",
    "strategies",
    "__version__",
]
