"""Bogoliubov spectrum of transverse spin excitations of the polar condensate.

All energies in h*Hz, wavevectors in 1/um, rates in 1/s. The kinetic
coefficient ``kin`` converts k^2 to eps_k/h; it defaults to 87Rb.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .params import kinetic_coefficient

RB87_KIN = kinetic_coefficient()
TWO_PI = 2.0 * math.pi


class StableQuenchError(ValueError):
    """Raised when an unstable-regime quantity is requested for q >= q0."""


class Regime(str, enum.Enum):
    STABLE = "stable"
    SHALLOW = "shallow"
    DEEP = "deep"


@dataclass(frozen=True)
class QuenchClass:
    regime: Regime
    q0: float
    q_half: float


def _check_q0(q0):
    if q0 <= 0:
        raise ValueError("q0 must be positive")


def epsilon(k, kin=RB87_KIN):
    return kin * np.square(k)


def dispersion_sq(k, q, q0, kin=RB87_KIN):
    """E_s^2 = (eps_k + q)(eps_k + q - q0), in (h*Hz)^2."""
    _check_q0(q0)
    e = epsilon(k, kin) + q
    return e * (e - q0)


def growth_rate(k, q, q0, kin=RB87_KIN):
    """Power growth rate 2 sqrt(|E_s^2|)/hbar of unstable modes, 0 for gapped ones."""
    es2 = np.asarray(dispersion_sq(k, q, q0, kin))
    rate = np.where(es2 < 0, 2.0 * TWO_PI * np.sqrt(np.abs(es2)), 0.0)
    return rate if rate.ndim else float(rate)


def classify(q, q0) -> QuenchClass:
    _check_q0(q0)
    if q >= q0:
        regime = Regime.STABLE
    elif q >= q0 / 2:
        regime = Regime.SHALLOW
    else:
        regime = Regime.DEEP
    return QuenchClass(regime, q0, q0 / 2)


def unstable_band(q, q0, kin=RB87_KIN) -> tuple[float, float]:
    """Wavevector interval (k_lo, k_hi) on which E_s^2 < 0."""
    _check_q0(q0)
    if q >= q0:
        raise StableQuenchError(f"q = {q} >= q0 = {q0}: no unstable modes")
    lo = math.sqrt(max(-q, 0.0) / kin)
    hi = math.sqrt((q0 - q) / kin)
    return lo, hi


def max_growth_rate(q, q0) -> float:
    """Largest growth rate over all k (1/s)."""
    c = classify(q, q0)
    if c.regime is Regime.STABLE:
        return 0.0
    if c.regime is Regime.DEEP:
        return TWO_PI * q0
    return 2.0 * TWO_PI * math.sqrt(q * (q0 - q))


def dominant_wavevector(q, q0, kin=RB87_KIN) -> float:
    """Wavevector of the fastest-growing mode.

    eps_k* = q0/2 - q for deep quenches, k* = 0 for shallow ones.
    """
    c = classify(q, q0)
    if c.regime is Regime.STABLE:
        raise StableQuenchError(f"q = {q} >= q0 = {q0}: no unstable modes")
    if c.regime is Regime.SHALLOW:
        return 0.0
    return math.sqrt((q0 / 2 - q) / kin)


def predicted_domain_size(q, q0, kin=RB87_KIN) -> float:
    """Half wavelength pi/k* of the dominant mode (um); deep quenches only."""
    c = classify(q, q0)
    if c.regime is not Regime.DEEP:
        raise StableQuenchError(
            f"domain size undefined for a {c.regime.value} quench (q={q}, q0={q0})"
        )
    return math.pi / dominant_wavevector(q, q0, kin)


@dataclass
class SpectrumTable:
    k: np.ndarray
    eps: np.ndarray
    es2: np.ndarray
    rate: np.ndarray
    tau_ms: np.ndarray
    q: float
    q0: float

    COLUMNS = ("k_um_inv", "eps_hz", "es2_hz2", "rate_per_s", "tau_ms")

    def __len__(self):
        return len(self.k)

    def argmax(self) -> int:
        return int(np.argmax(self.rate))

    def rows(self):
        return zip(self.k, self.eps, self.es2, self.rate, self.tau_ms)

    def to_csv(self, path):
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for row in self.rows():
                w.writerow([repr(float(v)) for v in row])
        return path


def spectrum_table(q, q0, k_max, n_k=4096, kin=RB87_KIN) -> SpectrumTable:
    if n_k < 2:
        raise ValueError("n_k must be at least 2")
    k = np.linspace(0.0, k_max, n_k)
    es2 = dispersion_sq(k, q, q0, kin)
    rate = growth_rate(k, q, q0, kin)
    with np.errstate(divide="ignore"):
        tau_ms = np.where(rate > 0, 1e3 / np.where(rate > 0, rate, 1.0), np.inf)
    return SpectrumTable(k, epsilon(k, kin), es2, rate, tau_ms, q, q0)


def default_k_max(spin_healing_length_um: float) -> float:
    return 4.0 / spin_healing_length_um
