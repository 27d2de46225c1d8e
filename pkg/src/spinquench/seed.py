"""Pre-quench state: polar condensate plus seeded fluctuations in m = +-1.

Vacuum seeding follows the truncated-Wigner prescription: every plane-wave
mode of psi_+ and psi_- receives an independent circular complex Gaussian
amplitude with <|alpha|^2> = 1/2 (times ``scale``).  The mode functions are
exp(i k.r)/sqrt(A) on the periodic box of area A, so the amplitudes are in
units of sqrt(atoms).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
from scipy.optimize import brentq

from . import rng
from .dynamics import Couplings, trap_potential
from .field import Grid2D, SpinField, atom_number
from .params import DerivedScales, PhysicalParams
from .spectrum import RB87_KIN

MODES = ("vacuum", "thermal", "none", "single_mode")

# rng stream labels
_VACUUM = 0x5600
_THERMAL = 0x5400
_BOGO = 0x4200


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SeedSpec:
    mode: str = "vacuum"
    rng_seed: int = 0
    # combined population of m = +1 and m = -1 for the thermal seed
    thermal_population: float = 0.0
    k_single: tuple[float, float] = (0.0, 0.0)  # (kx, kz) in 1/um
    amp_single: float = 0.0  # sqrt(atoms) in the seeded m = +1 mode
    # seed the growing eigenvector at this q instead of a lone m = +1 wave
    single_mode_q: float | None = None
    scale: float = 1.0  # multiplies the vacuum variance
    basis: str = "bare"  # or "bogoliubov"
    q_prep: float | None = None  # q at which the Bogoliubov basis is built
    q0: float | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"seed mode must be one of {MODES}, got {self.mode!r}")
        if self.thermal_population < 0:
            raise ValueError("thermal_population must be non-negative")
        if self.amp_single < 0:
            raise ValueError("amp_single must be non-negative")
        if self.scale < 0:
            raise ValueError("scale must be non-negative")
        if self.basis not in ("bare", "bogoliubov"):
            raise ValueError(f"unknown seeding basis {self.basis!r}")
        if self.basis == "bogoliubov" and (self.q_prep is None or self.q0 is None):
            raise ValueError("bogoliubov basis needs q_prep and q0")


@dataclass(frozen=True)
class BogoliubovMode:
    k: float
    u: float
    v: float
    energy: float  # h*Hz


# --------------------------------------------------------------------------
# ground state


def uniform_state(grid: Grid2D, column_density: float) -> SpinField:
    return SpinField.polar(grid, math.sqrt(column_density))


def thomas_fermi(grid: Grid2D, potential: np.ndarray, g0: float, n_atoms: float) -> np.ndarray:
    """Column density of the 2D Thomas-Fermi profile holding ``n_atoms`` on the grid."""
    dA = grid.cell_area

    def excess(mu):
        return np.clip(mu - potential, 0.0, None).sum() * dA / g0 - n_atoms

    hi = potential.min() + g0 * n_atoms / dA
    mu = brentq(excess, potential.min(), hi, xtol=1e-14, rtol=1e-14)
    n = np.clip(mu - potential, 0.0, None) / g0
    return n * (n_atoms / (n.sum() * dA))


def scalar_energy(psi, k2, potential, kin, g0, dA) -> float:
    psik = sfft.fft2(psi)
    n = np.abs(psi) ** 2
    kin_e = kin * np.sum(k2 * np.abs(psik) ** 2) * dA / psi.size
    return float(kin_e + np.sum(potential * n) * dA + 0.5 * g0 * np.sum(n * n) * dA)


def imaginary_time(grid: Grid2D, potential: np.ndarray, couplings: Couplings, n_atoms: float,
                   dt_ms: float = 0.02, tol: float = 1e-10, max_iter: int = 200_000,
                   psi0: np.ndarray | None = None) -> np.ndarray:
    """Relax the scalar condensate by split-step imaginary time.

    Starts from the Thomas-Fermi profile unless ``psi0`` is given, and stops
    once the relative energy change per step drops below ``tol``.
    """
    dA = grid.cell_area
    k2 = grid.k_squared()
    if psi0 is None:
        psi0 = np.sqrt(thomas_fermi(grid, potential, couplings.g0, n_atoms))
    psi = psi0.astype(np.complex128)
    tau = 2 * math.pi * dt_ms * 1e-3
    kin_half = np.exp(-0.5 * tau * couplings.kin * k2)
    e_old = scalar_energy(psi, k2, potential, couplings.kin, couplings.g0, dA)
    for it in range(max_iter):
        psi = sfft.ifft2(sfft.fft2(psi) * kin_half)
        psi *= np.exp(-tau * (potential + couplings.g0 * np.abs(psi) ** 2))
        psi = sfft.ifft2(sfft.fft2(psi) * kin_half)
        psi *= math.sqrt(n_atoms / (np.sum(np.abs(psi) ** 2) * dA))
        # energy every 10 steps; average change per step must fall below tol
        if it % 10 == 9:
            e = scalar_energy(psi, k2, potential, couplings.kin, couplings.g0, dA)
            if abs(e - e_old) / abs(e) < tol * 10:
                return np.abs(psi)
            e_old = e
    raise ConvergenceError(f"imaginary-time relaxation did not converge in {max_iter} steps")


def ground_state(params: PhysicalParams, scales: DerivedScales, grid: Grid2D, trap: bool = True,
                 method: str = "thomas-fermi", n_atoms: float | None = None, **kw) -> SpinField:
    """All atoms in m = 0.

    Without a trap the state is uniform at the reference column density of
    ``scales`` (so the local critical point is exactly q0).  With a trap the
    profile is Thomas-Fermi or relaxed in imaginary time and normalised to
    ``n_atoms`` (default: ``params.atom_number``).
    """
    if not trap:
        return uniform_state(grid, scales.n2d_um2)
    n_atoms = params.atom_number if n_atoms is None else n_atoms
    c = Couplings.from_scales(scales)
    V = trap_potential(grid, params)
    if method == "thomas-fermi":
        amp = np.sqrt(thomas_fermi(grid, V, c.g0, n_atoms))
    elif method == "imaginary-time":
        amp = imaginary_time(grid, V, c, n_atoms, **kw)
    else:
        raise ValueError(f"unknown ground-state method {method!r}")
    return SpinField.polar(grid, amp)


# --------------------------------------------------------------------------
# Bogoliubov modes of the polar state (polar basis phi_x, phi_y)


def bogoliubov_uv(k, q, q0, kin=RB87_KIN) -> BogoliubovMode:
    """u, v of b_k = u phi_k + v phi_{-k}^dagger for a gapped transverse mode.

    In the polar basis the linearised equations read
    i hbar d/dt (phi_k, phi_-k^dag) = [[A, B], [-B, -A]] (phi_k, phi_-k^dag)
    with A = eps_k + q - q0/2 and B = q0/2.  The returned energy is
    sign(A) sqrt(A^2 - B^2), i.e. +-sqrt((eps+q)(eps+q-q0)).
    """
    A = kin * k * k + q - q0 / 2
    B = q0 / 2
    disc = A * A - B * B
    if disc <= 0:
        raise ValueError(f"mode k={k} is not gapped (E_s^2 = {disc:g}); u, v are not real")
    root = math.sqrt(disc)
    t = (A - math.copysign(root, A)) / B if B != 0 else 0.0
    u = 1.0 / math.sqrt(1.0 - t * t)
    return BogoliubovMode(k=k, u=u, v=t * u, energy=math.copysign(root, A))


def unstable_pair(k, q, q0, kin=RB87_KIN) -> complex:
    """Ratio psi_-(-k)^* / psi_+(k) of the growing eigenvector at quench value q.

    Linearising about a real psi_0, (psi_+(k), psi_-(-k)^*) obey
    i hbar d/dt x = [[A, B], [-B, -A]] x with A = eps + q - q0/2, B = -q0/2.
    """
    A = kin * k * k + q - q0 / 2
    B = -q0 / 2
    lam2 = B * B - A * A
    if lam2 <= 0:
        raise ValueError(f"mode k={k} is stable at q={q}")
    return (1j * math.sqrt(lam2) - A) / B


# --------------------------------------------------------------------------
# seeding


def _to_real_space(grid: Grid2D, amps_k: np.ndarray) -> np.ndarray:
    return sfft.ifft2(amps_k) * (amps_k.size / math.sqrt(grid.area))


def vacuum_amplitudes(grid: Grid2D, seed: int, component: int, variance: float = 0.5,
                      stream_base: int = _VACUUM) -> np.ndarray:
    """Per-mode complex amplitudes (FFT order) for one component."""
    jx, jz = grid.mode_indices
    return rng.complex_normal(seed, stream_base + component, jx, jz, variance)


def _negate_k(a: np.ndarray) -> np.ndarray:
    """a(-k) in FFT index order."""
    return np.roll(np.flip(a, axis=(0, 1)), shift=(1, 1), axis=(0, 1))


def apply_vacuum_seed(f: SpinField, spec: SeedSpec, kin=RB87_KIN) -> SpinField:
    out = f.copy()
    if spec.mode == "none" or spec.scale == 0:
        return out
    var = 0.5 * spec.scale
    g = f.grid
    if spec.basis == "bare":
        for comp, idx in ((0, 0), (2, 2)):
            out.psi[idx] += _to_real_space(g, vacuum_amplitudes(g, spec.rng_seed, comp, var))
        return out

    k = np.sqrt(g.k_squared())
    A = kin * k**2 + spec.q_prep - spec.q0 / 2
    B = spec.q0 / 2
    disc = A * A - B * B
    gapped = disc > 0
    root = np.sqrt(np.where(gapped, disc, 0.0))
    t = np.where(gapped, (A - np.copysign(root, A)) / B, 0.0)
    u = 1.0 / np.sqrt(1.0 - t * t)
    v = t * u
    phis = []
    for pol in (0, 1):
        beta = vacuum_amplitudes(g, spec.rng_seed, pol, var, _BOGO)
        phis.append(u * beta - v * np.conj(_negate_k(beta)))
    phx, phy = phis
    out.psi[0] += _to_real_space(g, (-phx + 1j * phy) / math.sqrt(2))
    out.psi[2] += _to_real_space(g, (phx + 1j * phy) / math.sqrt(2))
    return out


def apply_thermal_seed(f: SpinField, spec: SeedSpec) -> SpinField:
    """Incoherent m = +-1 admixture co-located with the condensate.

    psi_+- = sqrt(eps) psi_0(r) xi(r) with xi independent unit complex
    Gaussians per grid point and eps = (N_pm / 2) / N_0, so the mean
    combined population of m = +-1 is ``thermal_population``.
    """
    out = f.copy()
    if spec.mode == "none" or spec.thermal_population == 0:
        return out
    n0 = atom_number(f)
    eps = 0.5 * spec.thermal_population / n0
    g = f.grid
    ix, iz = np.meshgrid(np.arange(g.nx), np.arange(g.nz), indexing="ij")
    for comp in (0, 2):
        xi = rng.complex_normal(spec.rng_seed, _THERMAL + comp, ix, iz, 1.0)
        out.psi[comp] += math.sqrt(eps) * f.psi[1] * xi
    return out


def apply_single_mode(f: SpinField, spec: SeedSpec, kin=RB87_KIN) -> SpinField:
    """Plane wave of amplitude ``amp_single`` in m = +1 at k, partner in m = -1 at -k.

    The partner amplitude follows the growing eigenvector when
    ``single_mode_q`` and ``q0`` are set, otherwise it equals the m = +1 one.
    The wavevector is snapped to the nearest grid mode.
    """
    out = f.copy()
    if spec.amp_single == 0:
        return out
    g = f.grid
    jx = round(spec.k_single[0] * g.lx / (2 * math.pi))
    jz = round(spec.k_single[1] * g.lz / (2 * math.pi))
    kx, kz = 2 * math.pi * jx / g.lx, 2 * math.pi * jz / g.lz
    ratio = 1.0
    if spec.single_mode_q is not None and spec.q0 is not None:
        ratio = unstable_pair(math.hypot(kx, kz), spec.single_mode_q, spec.q0, kin)
    x, z = g.mesh()
    wave = np.exp(1j * (kx * x + kz * z)) / math.sqrt(g.area)
    out.psi[0] += spec.amp_single * wave
    out.psi[2] += np.conj(ratio * spec.amp_single) * np.conj(wave)
    return out


def seed_field(f: SpinField, spec: SeedSpec, kin=RB87_KIN) -> SpinField:
    """Dispatch on ``spec.mode``."""
    if spec.mode == "vacuum":
        return apply_vacuum_seed(f, spec, kin)
    if spec.mode == "thermal":
        return apply_thermal_seed(f, spec)
    if spec.mode == "single_mode":
        return apply_single_mode(f, spec, kin)
    return f.copy()
