"""Closed-form parameter algebra for the Hamiltonian game.

All quantities are computed in exact rational arithmetic (the n^24 factors
dwarf double precision) and exposed both as Fractions and floats:

    eta* = 16 (gamma + alpha)^4 / (27 (1+C)^4 n^24)
    p*   = 32 (gamma + alpha)^3 / (27 (1+C)^4 n^24)
    eta_hat = 16 gamma^4 / (27 (1+C)^4 n^24),   kappa = 1 - eta_hat
    D    = 27 (1+C)^4 / (16 (gamma + alpha)^3)

These satisfy eta* = p* (gamma + alpha) / 2 identically, which couples the
Energy-test weight to the target energy rather than to a promise gap.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction


class ParameterError(ValueError):
    pass


def _frac(x) -> Fraction:
    """Exact Fraction view of the input (floats convert exactly, base 2)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise ParameterError(f"cannot interpret {x!r} as a rational")


@dataclass(frozen=True)
class GameParams:
    n: int
    gamma: Fraction
    alpha: Fraction
    C: Fraction
    eta_star: Fraction
    p_star: Fraction
    eta_hat: Fraction
    kappa: Fraction
    D: Fraction

    def as_floats(self) -> dict:
        return {
            "n": self.n,
            "gamma": float(self.gamma),
            "alpha": float(self.alpha),
            "C": float(self.C),
            "eta_star": float(self.eta_star),
            "p_star": float(self.p_star),
            "eta_hat": float(self.eta_hat),
            "kappa": float(self.kappa),
            "D": float(self.D),
        }

    def as_rationals(self) -> dict:
        return {
            "n": self.n,
            "gamma": str(self.gamma),
            "alpha": str(self.alpha),
            "C": str(self.C),
            "eta_star": str(self.eta_star),
            "p_star": str(self.p_star),
            "eta_hat": str(self.eta_hat),
            "kappa": str(self.kappa),
            "D": str(self.D),
        }


def derive(n: int, gamma, alpha, C=Fraction(2)) -> GameParams:
    """All derived parameters for (n, gamma, alpha, C).

    Requires 0 <= alpha <= gamma <= 1 < C and n >= 1.  C defaults to 2, the
    smallest simple value respecting the required ordering.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    g, a, c = _frac(gamma), _frac(alpha), _frac(C)
    if not 0 <= a:
        raise ParameterError(f"alpha must be >= 0, got {alpha}")
    if not a <= g:
        raise ParameterError(f"alpha must be <= gamma, got alpha={alpha} gamma={gamma}")
    if not g <= 1:
        raise ParameterError(f"gamma must be <= 1, got {gamma}")
    if not 1 < c:
        raise ParameterError(f"C must exceed 1, got {C}")
    denom = 27 * (1 + c) ** 4 * Fraction(n) ** 24
    eta_star = 16 * (g + a) ** 4 / denom
    p_star = 32 * (g + a) ** 3 / denom
    eta_hat = 16 * g**4 / denom
    if g + a == 0:
        raise ParameterError("gamma + alpha = 0 leaves p* undefined")
    d_const = 27 * (1 + c) ** 4 / (16 * (g + a) ** 3)
    return GameParams(
        n=n,
        gamma=g,
        alpha=a,
        C=c,
        eta_star=eta_star,
        p_star=p_star,
        eta_hat=eta_hat,
        kappa=1 - eta_hat,
        D=d_const,
    )


def coupled_p(eta: float, n: int, C: float) -> float:
    """p = 4 eta^(3/4) / (3^(3/4) (1+C) n^6), the lemma-level coupling."""
    if not 0 < eta < 1:
        raise ParameterError(f"eta must lie in (0, 1), got {eta}")
    return 4.0 * eta**0.75 / (3.0**0.75 * (1.0 + C) * n**6)


def coupled_eta(p: float, n: int, C: float) -> float:
    """Inverse coupling: eta = (3^(3/4) (1+C) n^6 p / 4)^(4/3).

    Values >= 1 mean p is too large for the lemma regime; flagged with a
    warning rather than raised.
    """
    if p <= 0:
        raise ParameterError(f"p must be positive, got {p}")
    eta = (3.0**0.75 * (1.0 + C) * n**6 * p / 4.0) ** (4.0 / 3.0)
    if eta >= 1:
        warnings.warn(
            f"eta = {eta} >= 1: p = {p} is outside the lemma regime", stacklevel=2
        )
    return eta


def semi_honest_value(h_or_gamma, p, energy):
    """Winning probability 1 - p (gamma/2 + energy/2) of semi-honest play.

    Accepts an XZHamiltonian or a bare gamma; Fractions in, Fractions out.
    """
    gamma = getattr(h_or_gamma, "gamma", h_or_gamma)
    return 1 - p * (gamma + energy) / 2
