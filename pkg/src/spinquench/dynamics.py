"""Split-step spectral integration of the spin-1 mean-field equations in 2D.

    i hbar d psi/dt = [ -hbar^2 lap / 2m + V + g0 n + q Fz^2 + g2 f.F ] psi

with n the column density and f = psi^dagger F psi the spin density.  The
linear Zeeman term is dropped (rotating frame).  Energies are in Hz, the
time step in ms.

One step is the symmetric composition

    K(dt/2)  L(dt)  K(dt/2),    L = Q(dt/2) S(dt) Q(dt/2) P(dt)

K is the exact kinetic propagator in k-space; P the common phase from
V + g0 n; Q the quadratic Zeeman phase on m = +-1; S the spin rotation
exp(-i theta f.F/|f|) with theta = 2 pi g2 |f| dt.  P, Q, S all conserve n
and S conserves f, so every local factor is solved exactly and is unitary.
Adjacent kinetic half steps are merged between records, which costs one FFT
pair per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft

from .field import Grid2D, SpinField, atom_number, observables, zeeman_population
from .params import H, UM, DerivedScales, PhysicalParams

TWO_PI = 2.0 * math.pi
SQRT2 = math.sqrt(2.0)


class NumericalAbort(RuntimeError):
    """Non-finite values appeared in the field."""


@dataclass(frozen=True)
class Couplings:
    """Coefficients of the 2D energy functional in internal units."""

    kin: float  # Hz um^2
    g0: float  # Hz um^2
    g2: float  # Hz um^2

    @classmethod
    def from_scales(cls, s: DerivedScales) -> "Couplings":
        return cls(kin=s.kinetic_coeff, g0=s.g0_2d, g2=s.g2_2d)


def trap_potential(grid: Grid2D, p: PhysicalParams) -> np.ndarray:
    """Harmonic potential (Hz) in the x-z plane."""
    wx, _, wz = p.trap_frequencies
    x, z = grid.mesh()
    return 0.5 * p.atomic_mass * ((wx * x) ** 2 + (wz * z) ** 2) * UM**2 / H


# --------------------------------------------------------------------------
# quench protocol


@dataclass(frozen=True)
class QuenchProtocol:
    """q(t): ramp from ``q_initial`` to ``q_final`` then hold.

    ``shape='linear'`` ramps q linearly.  ``shape='field'`` ramps the static
    field B linearly with q = q_offset + coeff B^2, where q_offset is the
    (constant) microwave contribution set before the ramp.
    """

    q_initial: float
    q_final: float
    ramp_duration: float = 5.0  # ms
    hold_duration: float = 0.0  # ms
    shape: str = "linear"
    q_offset: float = 0.0

    def __post_init__(self):
        if self.ramp_duration < 0 or self.hold_duration < 0:
            raise ValueError("durations must be non-negative")
        if self.shape not in ("linear", "field"):
            raise ValueError(f"unknown ramp shape {self.shape!r}")
        if self.shape == "field" and min(self.q_initial, self.q_final) < self.q_offset:
            raise ValueError("field ramp needs q - q_offset >= 0 at both ends")

    @property
    def duration(self):
        return self.ramp_duration + self.hold_duration

    def q(self, t):
        """q at protocol time t (ms); t = 0 is the start of the ramp."""
        if self.ramp_duration == 0 or t >= self.ramp_duration:
            return self.q_final
        if t <= 0:
            return self.q_initial
        s = t / self.ramp_duration
        if self.shape == "linear":
            return self.q_initial + (self.q_final - self.q_initial) * s
        bi = math.sqrt(self.q_initial - self.q_offset)
        bf = math.sqrt(self.q_final - self.q_offset)
        b = bi + (bf - bi) * s
        return self.q_offset + b * b


# --------------------------------------------------------------------------
# integrator


@dataclass
class EvolutionConfig:
    dt: float = 0.01  # ms
    record_times: Sequence[float] = ()  # ms after the end of the ramp
    kinetic: bool = True
    trap: bool = True
    quadratic_zeeman: bool = True
    c0_density: bool = True
    c2_spin: bool = True
    frozen_density: bool = False
    check_every: int = 500

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        rt = list(self.record_times)
        if any(b < a for a, b in zip(rt, rt[1:])):
            raise ValueError("record_times must be sorted ascending")


def stability_bound(grid: Grid2D, c: Couplings, q0: float) -> float:
    """Documented time-step bound 0.1 min(hbar/eps_kmax, hbar/q0) in ms."""
    eps_max = c.kin * float(grid.k_squared().max())
    return 0.1 * min(1.0 / (TWO_PI * eps_max), 1.0 / (TWO_PI * q0)) * 1e3


def spin_rotation(psi: np.ndarray, theta_per_f: float) -> None:
    """In place psi <- exp(-i theta n.F) psi with theta = theta_per_f * |f|."""
    p, z, m = psi
    a = np.conj(p) * z
    b = np.conj(z) * m
    fp = SQRT2 * (a + b)  # fx + i fy
    fz = (p.real**2 + p.imag**2) - (m.real**2 + m.imag**2)
    fabs = np.sqrt(fp.real**2 + fp.imag**2 + fz**2)
    theta = theta_per_f * fabs
    inv = np.divide(1.0, fabs, out=np.zeros_like(fabs), where=fabs > 0)
    nplus = fp * inv  # nx + i ny
    nminus = np.conj(nplus)
    nz = fz * inv

    # u = (n.F) psi
    u0 = (nplus * p + nminus * m) / SQRT2
    up = nz * p + nminus * z / SQRT2
    um = nplus * z / SQRT2 - nz * m
    # w = (n.F) u
    w0 = (nplus * up + nminus * um) / SQRT2
    wp = nz * up + nminus * u0 / SQRT2
    wm = nplus * u0 / SQRT2 - nz * um

    s = -1j * np.sin(theta)
    c = np.cos(theta) - 1.0
    p += s * up + c * wp
    z += s * u0 + c * w0
    m += s * um + c * wm


try:
    from numba import njit
except ImportError:  # pragma: no cover
    njit = None

if njit is not None:

    @njit(cache=True, fastmath=True)
    def _local_kernel(psi, pot, use_pot, g0, use_c0, frozen, use_frozen, dt_s, q, use_q,
                      g2, use_spin):
        two_pi = 2.0 * np.pi
        ir2 = 1.0 / np.sqrt(2.0)
        r2 = np.sqrt(2.0)
        qa = -two_pi * q * dt_s / 2
        qh = complex(np.cos(qa), np.sin(qa))
        spin_k = two_pi * g2 * dt_s
        ph_k = -two_pi * dt_s
        for i in range(psi.shape[1]):
            for j in range(psi.shape[2]):
                p = psi[0, i, j]
                z = psi[1, i, j]
                m = psi[2, i, j]
                np_ = p.real * p.real + p.imag * p.imag
                nm = m.real * m.real + m.imag * m.imag
                ph = 0.0
                if use_c0:
                    if use_frozen:
                        ph += g0 * frozen[i, j]
                    else:
                        ph += g0 * (np_ + nm + z.real * z.real + z.imag * z.imag)
                if use_pot:
                    ph += pot[i, j]
                if use_q:
                    # P(dt) Q(dt/2) merged on the m = +-1 components
                    e = complex(np.cos(ph_k * ph), np.sin(ph_k * ph))
                    eq = e * qh
                    p *= eq
                    z *= e
                    m *= eq
                elif ph != 0.0:
                    e = complex(np.cos(ph_k * ph), np.sin(ph_k * ph))
                    p *= e
                    z *= e
                    m *= e
                if use_spin:
                    fp = r2 * (p.conjugate() * z + z.conjugate() * m)
                    fz = np_ - nm
                    fabs = np.sqrt(fp.real * fp.real + fp.imag * fp.imag + fz * fz)
                    if fabs > 0.0:
                        inv = 1.0 / fabs
                        npl = fp * inv
                        nmi = npl.conjugate()
                        nz = fz * inv
                        u0 = (npl * p + nmi * m) * ir2
                        up = nz * p + nmi * z * ir2
                        um = npl * z * ir2 - nz * m
                        w0 = (npl * up + nmi * um) * ir2
                        wp = nz * up + nmi * u0 * ir2
                        wm = npl * u0 * ir2 - nz * um
                        th = spin_k * fabs
                        sn = complex(0.0, -np.sin(th))
                        cs = np.cos(th) - 1.0
                        p = p + sn * up + cs * wp
                        z = z + sn * u0 + cs * w0
                        m = m + sn * um + cs * wm
                if use_q:
                    p *= qh
                    m *= qh
                psi[0, i, j] = p
                psi[1, i, j] = z
                psi[2, i, j] = m


class SplitStep:
    """Second-order split-step integrator for one trajectory."""

    def __init__(self, grid: Grid2D, couplings: Couplings, cfg: EvolutionConfig,
                 potential: np.ndarray | None = None, frozen_density=None, backend=None):
        if backend is None:
            backend = "numba" if njit is not None else "numpy"
        if backend == "numba" and njit is None:
            raise ValueError("numba backend requested but numba is not installed")
        self.backend = backend
        self._dummy = np.zeros((1, 1))
        self.grid = grid
        self.c = couplings
        self.cfg = cfg
        self.potential = None
        if cfg.trap and potential is not None:
            self.potential = np.ascontiguousarray(potential, dtype=np.float64)
        self.frozen_density = frozen_density
        self._k2 = grid.k_squared()
        self._kin_cache: dict = {}

    def kinetic_phase(self, dt_ms: float) -> np.ndarray:
        key = round(dt_ms, 15)
        ph = self._kin_cache.get(key)
        if ph is None:
            ph = np.exp(-1j * TWO_PI * self.c.kin * self._k2 * dt_ms * 1e-3)
            self._kin_cache[key] = ph
        return ph

    def _kinetic(self, psi, dt_ms):
        if not self.cfg.kinetic or dt_ms == 0:
            return psi
        psik = sfft.fft2(psi, axes=(1, 2), overwrite_x=True)
        psik *= self.kinetic_phase(dt_ms)
        return sfft.ifft2(psik, axes=(1, 2), overwrite_x=True)

    def local(self, psi, dt_ms, q):
        """Exact local propagator over dt (in place)."""
        if self.backend == "numba":
            cfg = self.cfg
            use_frozen = cfg.frozen_density and self.frozen_density is not None
            _local_kernel(
                psi,
                self.potential if self.potential is not None else self._dummy,
                self.potential is not None,
                self.c.g0,
                cfg.c0_density,
                self.frozen_density if use_frozen else self._dummy,
                use_frozen,
                dt_ms * 1e-3,
                float(q),
                cfg.quadratic_zeeman and q != 0,
                self.c.g2,
                cfg.c2_spin and self.c.g2 != 0,
            )
            return psi
        return self.local_numpy(psi, dt_ms, q)

    def local_numpy(self, psi, dt_ms, q):
        dt_s = dt_ms * 1e-3
        cfg = self.cfg
        pot = None
        if cfg.c0_density:
            if cfg.frozen_density and self.frozen_density is not None:
                n = self.frozen_density
            else:
                n = np.sum(psi.real**2 + psi.imag**2, axis=0)
            pot = self.c.g0 * n
        if self.potential is not None:
            pot = self.potential if pot is None else pot + self.potential
        if pot is not None:
            psi *= np.exp(-1j * TWO_PI * dt_s * pot)
        if cfg.quadratic_zeeman and q != 0:
            qh = np.exp(-1j * TWO_PI * q * dt_s / 2)
            psi[0] *= qh
            psi[2] *= qh
        if cfg.c2_spin and self.c.g2 != 0:
            spin_rotation(psi, TWO_PI * self.c.g2 * dt_s)
        if cfg.quadratic_zeeman and q != 0:
            psi[0] *= qh
            psi[2] *= qh
        return psi

    def step(self, psi, dt_ms, q):
        psi = self._kinetic(psi, dt_ms / 2)
        psi = self.local(psi, dt_ms, q)
        return self._kinetic(psi, dt_ms / 2)

    def advance(self, psi, t0, duration, q_of_t: Callable[[float], float], dt_ms=None):
        """Integrate from protocol time t0 over ``duration`` (ms).

        The step is shortened uniformly so an integer number of steps lands
        exactly on t0 + duration.
        """
        if duration <= 0:
            return psi
        dt_nom = dt_ms or self.cfg.dt
        nsteps = max(1, math.ceil(duration / dt_nom - 1e-9))
        dt = duration / nsteps
        psi = self._kinetic(psi, dt / 2)
        for i in range(nsteps):
            psi = self.local(psi, dt, q_of_t(t0 + (i + 0.5) * dt))
            psi = self._kinetic(psi, dt if i < nsteps - 1 else dt / 2)
            if self.cfg.check_every and (i + 1) % self.cfg.check_every == 0:
                _check_finite(psi, t0 + (i + 1) * dt)
        _check_finite(psi, t0 + duration)
        return psi


def _check_finite(psi, t):
    if not np.isfinite(psi).all():
        bad = int(np.count_nonzero(~np.isfinite(psi)))
        raise NumericalAbort(f"non-finite field at t = {t:.4f} ms ({bad} bad values); "
                             "reduce dt")


def step(f: SpinField, dt: float, q_now: float, cfg: EvolutionConfig, couplings: Couplings,
         potential=None) -> SpinField:
    """One symmetric split step of ``f`` (returns a new field)."""
    integ = SplitStep(f.grid, couplings, cfg, potential)
    psi = integ.step(f.psi.copy(), dt, q_now)
    _check_finite(psi, dt)
    return SpinField(f.grid, psi)


# --------------------------------------------------------------------------
# trajectories


@dataclass
class TrajectoryRecord:
    times: list = field(default_factory=list)  # ms after the end of the ramp
    snapshots: list = field(default_factory=list)
    populations: list = field(default_factory=list)  # (N+, N0, N-)
    final: SpinField | None = None

    def populations_array(self):
        return np.asarray(self.populations, dtype=float).reshape(-1, 3)


def default_recorder(t_ms: float, f: SpinField):
    return observables(f, time_ms=t_ms)


def evolve(f: SpinField, protocol: QuenchProtocol, cfg: EvolutionConfig, couplings: Couplings,
           potential=None, recorder=default_recorder) -> TrajectoryRecord:
    """Integrate ``f`` through the quench and record snapshots.

    Record times are measured from the end of the ramp, i.e. they are
    amplification times; negative values down to ``-ramp_duration`` fall
    inside the ramp.  The run ends at the last record time, or at the end of
    the hold, whichever is later.
    """
    ramp = protocol.ramp_duration
    rec = sorted(cfg.record_times)
    if rec and rec[0] < -ramp - 1e-12:
        raise ValueError("record time before the start of the ramp")
    frozen = np.sum(np.abs(f.psi) ** 2, axis=0) if cfg.frozen_density else None
    integ = SplitStep(f.grid, couplings, cfg, potential, frozen)
    psi = f.psi.copy()
    t = 0.0
    out = TrajectoryRecord()
    for tr in rec:
        target = tr + ramp
        psi = integ.advance(psi, t, target - t, protocol.q)
        t = max(t, target)
        snap = SpinField(f.grid, psi)
        out.times.append(tr)
        out.populations.append(zeeman_population(snap))
        out.snapshots.append(recorder(tr, snap) if recorder else None)
    end = max(protocol.duration, t)
    psi = integ.advance(psi, t, end - t, protocol.q)
    out.final = SpinField(f.grid, psi)
    return out


# --------------------------------------------------------------------------
# diagnostics


def energy_terms(f: SpinField, q: float, couplings: Couplings, potential=None,
                 cfg: EvolutionConfig | None = None) -> dict:
    """Energy functional split into its terms (h*Hz, summed over atoms)."""
    cfg = cfg or EvolutionConfig()
    g = f.grid
    dA = g.cell_area
    psi = f.psi
    dens = np.abs(psi) ** 2
    n = dens.sum(axis=0)
    terms = {}
    if cfg.kinetic:
        psik = sfft.fft2(psi, axes=(1, 2))
        terms["kinetic"] = float(
            couplings.kin * np.sum(g.k_squared() * np.abs(psik) ** 2) * dA / psi[0].size
        )
    if cfg.trap and potential is not None:
        terms["trap"] = float(np.sum(potential * n) * dA)
    if cfg.quadratic_zeeman:
        terms["zeeman"] = float(q * np.sum(dens[0] + dens[2]) * dA)
    if cfg.c0_density:
        terms["density"] = float(0.5 * couplings.g0 * np.sum(n**2) * dA)
    if cfg.c2_spin:
        m = observables(f)
        terms["spin"] = float(
            0.5 * couplings.g2 * np.sum(np.abs(m.f_perp) ** 2 + m.fz**2) * dA
        )
    return terms


def total_energy(f: SpinField, q: float, couplings: Couplings, potential=None,
                 cfg: EvolutionConfig | None = None) -> float:
    return sum(energy_terms(f, q, couplings, potential, cfg).values())


def norm_drift(f0: SpinField, f1: SpinField) -> float:
    n0 = atom_number(f0)
    return abs(atom_number(f1) - n0) / n0
