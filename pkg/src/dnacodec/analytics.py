"""Closed-form evaluation math: density, ceilings, finite-blocklength rates, longevity."""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

RHO_CONV = 113.7  # EB per gram per (bit per base)
CANONICAL_N = 252
CANONICAL_EPS = 1e-6
SECONDS_PER_YEAR = 365.25 * 86400
GAS_R = 8.314462618  # J / (mol K)
T_STORAGE = 298.15

_STD_NORMAL = NormalDist()


def density(L: float, n: float, B: float, r: float, rho: float = RHO_CONV) -> float:
    """Physical density in EB/g: 8L / (n B r) * rho."""
    den = n * B * r
    if den <= 0:
        raise ValueError("n, B and r must be positive")
    return 8.0 * L / den * rho


def alphabet_ceiling(r: float, rho: float = RHO_CONV) -> float:
    """2 bits/base scaled by Poisson survival per unit copy mass: 2 (1 - e^-r) / r * rho."""
    if r <= 0:
        raise ValueError("r must be positive")
    return 2.0 * (-math.expm1(-r)) / r * rho


def qinv(eps: float) -> float:
    """Inverse Gaussian tail function Q^-1(eps)."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    return -_STD_NORMAL.inv_cdf(eps)


def h2(p: float) -> float:
    if p <= 0 or p >= 1:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def fbl_rate(p_sub: float, n: int = CANONICAL_N, eps: float = CANONICAL_EPS) -> tuple[float, float]:
    """Normal-approximation rate of a BSC(p) at blocklength n and error eps.

    Returns (R, C) with R = C - sqrt(V/n) Q^-1(eps) + log2(n)/(2n), clamped to [0, 1].
    """
    if not 0 <= p_sub < 0.5:
        raise ValueError("p_sub must lie in [0, 0.5)")
    C = 1.0 - h2(p_sub)
    V = 0.0 if p_sub == 0 else p_sub * (1 - p_sub) * math.log2((1 - p_sub) / p_sub) ** 2
    R = C - math.sqrt(V / n) * qinv(eps) + math.log2(n) / (2 * n)
    return min(1.0, max(0.0, R)), C


# per-profile inner payload chain and channel substitution rate
PROFILE_CHAIN = {
    "hifi": {"payload_bits": 208, "n": 252, "p_sub": 1.3e-3},
    "lofi": {"payload_bits": 176, "n": 252, "p_sub": 8e-3},
}


@dataclass(frozen=True)
class Decomposition:
    eta_code: float
    eta_fbl: float
    eta_ch: float

    @property
    def product(self) -> float:
        return self.eta_code * self.eta_fbl * self.eta_ch


def decomposition(profile: str, achieved_fraction: float, safety: float = 1.08,
                  eps: float = CANONICAL_EPS) -> Decomposition:
    """Split an achieved capacity fraction into code, finite-blocklength and channel factors."""
    chain = PROFILE_CHAIN[profile]
    eta_code = chain["payload_bits"] / chain["n"] / safety
    R, C = fbl_rate(chain["p_sub"], chain["n"], eps)
    eta_fbl = R / C
    return Decomposition(eta_code, eta_fbl, achieved_fraction / (eta_code * eta_fbl))


# --- longevity ----------------------------------------------------------------


@dataclass(frozen=True)
class LongevityModel:
    """Exponential strand loss at rate lambda_strand per year.

    The calibrated rate is authoritative. The chemistry chain (aqueous
    depurination at T_ref, Arrhenius shift to 25 C, dry-state suppression,
    purines per strand) is kept for exploration; its default constants are
    textbook-order values and do not reproduce the calibrated rate.
    """

    lambda_strand: float
    k_ref: float | None = None  # per purine per second at T_ref
    T_ref: float | None = None
    Ea: float | None = None  # J / mol
    suppression: float = 300.0
    purines_per_strand: float = 70.0

    @classmethod
    def calibrated(cls, r_initial: float = 5.0, r_cliff: float = 3.25, years: float = 133.0) -> "LongevityModel":
        if not 0 < r_cliff < r_initial or years <= 0:
            raise ValueError("calibration needs 0 < r_cliff < r_initial and positive years")
        return cls(math.log(r_initial / r_cliff) / years)

    @classmethod
    def from_chemistry(cls, k_ref: float = 4e-9, T_ref: float = 343.15, Ea: float = 127e3,
                       suppression: float = 300.0, purines_per_strand: float = 70.0,
                       T: float = T_STORAGE) -> "LongevityModel":
        k_T = k_ref * math.exp(-Ea / GAS_R * (1.0 / T - 1.0 / T_ref))
        lam = k_T * SECONDS_PER_YEAR / suppression * purines_per_strand
        return cls(lam, k_ref, T_ref, Ea, suppression, purines_per_strand)


DEFAULT_LONGEVITY = LongevityModel.calibrated()


def effective_r(r_initial: float, years: float, model: LongevityModel = DEFAULT_LONGEVITY) -> float:
    return r_initial * math.exp(-model.lambda_strand * years)


def longevity_years(r_initial: float, r_cliff: float, model: LongevityModel = DEFAULT_LONGEVITY) -> float:
    """Storage time until redundancy decays from r_initial to the decoding cliff."""
    if not 0 < r_cliff < r_initial:
        raise ValueError("need 0 < r_cliff < r_initial")
    return math.log(r_initial / r_cliff) / model.lambda_strand
