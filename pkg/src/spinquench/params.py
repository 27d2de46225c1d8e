"""Physical constants, experiment configuration and derived energy scales.

Internal unit system used throughout the package:

* energies in h*Hz (i.e. frequencies in Hz),
* lengths in micrometres,
* times in milliseconds (the integrator converts to seconds for phases).

The SI values live on the dataclasses; everything downstream works from the
:class:`DerivedScales` numbers expressed in the internal units.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

from scipy import constants as sc

HBAR = sc.hbar
H = sc.h
AMU = sc.atomic_mass
BOHR = sc.physical_constants["Bohr radius"][0]
MU_B = sc.physical_constants["Bohr magneton"][0]

RB87_MASS = 86.909180527 * AMU
# a0 = 101.8 a_B, a2 = 100.4 a_B  ->  (a0 + 2 a2) / 3
RB87_ABAR_BOHR = 100.87
# |g_F| = 1/2 for the F=1 manifold of 87Rb
RB87_MOMENT = 0.5 * MU_B

UM = 1e-6


class DensityConvention(str, enum.Enum):
    """Which density sets the critical point q0 = 2|c2|<n>.

    PEAK_COLUMN
        the 3D peak density.
    MEAN_COLUMN
        the density averaged along the imaging (y) axis through the peak
        column, weighting by density: int n^2 dy / int n dy.  For an inverted
        parabola this is 4/5 of the peak density.
    USER
        q0 is supplied directly in Hz (``PhysicalParams.q0_user_hz``).
    """

    PEAK_COLUMN = "peak-column"
    MEAN_COLUMN = "mean-column"
    USER = "user"


@dataclass(frozen=True)
class PhysicalParams:
    """Atomic constants and condensate geometry, SI units."""

    atomic_mass: float = RB87_MASS
    delta_a: float = -1.4 * BOHR
    abar: float = RB87_ABAR_BOHR * BOHR
    peak_density_3d: float = 2.6e14 * 1e6
    # None -> Thomas-Fermi estimate (4/3) n_peak R_y
    column_density_2d_peak: float | None = None
    atom_number: float = 2.0e6
    magnetic_moment: float = RB87_MOMENT
    trap_frequencies: tuple[float, float, float] = field(
        default=(2 * math.pi * 39.0, 2 * math.pi * 440.0, 2 * math.pi * 4.2)
    )
    q0_user_hz: float = 15.0

    def __post_init__(self):
        if self.atomic_mass <= 0:
            raise ValueError("atomic_mass must be positive")
        if self.peak_density_3d <= 0:
            raise ValueError("peak_density_3d must be positive")
        if self.atom_number <= 0:
            raise ValueError("atom_number must be positive")
        if len(self.trap_frequencies) != 3 or any(w < 0 for w in self.trap_frequencies):
            raise ValueError("trap_frequencies must be three non-negative rates")
        if self.delta_a >= 0:
            warnings.warn(
                f"delta_a = {self.delta_a:g} m is not negative; the spin interaction "
                "is not ferromagnetic",
                stacklevel=2,
            )

    @classmethod
    def rb87(cls, **overrides) -> "PhysicalParams":
        return cls(**overrides)


@dataclass(frozen=True)
class ZeemanConfig:
    """Static field plus microwave dressing that together set q."""

    static_field: float = 0.0  # G
    rabi_frequency: float = 0.0  # rad/s
    microwave_detuning: float = 2 * math.pi * 35e3  # rad/s, signed
    static_coefficient: float = 70.0  # Hz/G^2

    def __post_init__(self):
        if self.rabi_frequency != 0 and self.microwave_detuning == 0:
            raise ValueError("microwave_detuning must be non-zero when driving")

    @property
    def q_hz(self) -> float:
        q = q_static(self.static_field, self.static_coefficient)
        if self.rabi_frequency != 0:
            q += q_microwave(self.rabi_frequency, self.microwave_detuning)
        return q


@dataclass(frozen=True)
class DerivedScales:
    """Energy and length scales derived from :class:`PhysicalParams`.

    SI fields follow the names used in the analysis (``c2`` in J m^3, ``q0``
    in J, ...). The ``*_hz`` / ``*_um`` fields repeat them in internal units,
    together with the 2D couplings used by the field integrator:

    ``g2_2d`` and ``g0_2d`` (Hz um^2) are chosen so that a uniform column
    density ``effective_2d_density`` reproduces exactly ``q0`` and the
    matching density interaction energy.
    """

    c2: float
    c0: float
    q0: float
    spin_healing_length: float
    tau_max: float
    effective_2d_density: float
    effective_3d_density: float
    kinetic_coeff: float  # Hz um^2, eps_k / h = kinetic_coeff * k^2
    degenerate: bool = False

    @property
    def q0_hz(self) -> float:
        return self.q0 / H

    @property
    def tau_max_ms(self) -> float:
        return self.tau_max * 1e3

    @property
    def spin_healing_length_um(self) -> float:
        return self.spin_healing_length / UM

    @property
    def n2d_um2(self) -> float:
        return self.effective_2d_density * UM**2

    @property
    def g2_2d(self) -> float:
        if self.degenerate:
            return 0.0
        return -self.q0_hz / (2.0 * self.n2d_um2)

    @property
    def g0_2d(self) -> float:
        if self.degenerate:
            return self.c0 * self.effective_3d_density / H / self.n2d_um2
        return abs(self.g2_2d) * self.c0 / abs(self.c2)


def q_static(B: float, coeff: float = 70.0) -> float:
    """Quadratic Zeeman shift of a static field, in h*Hz (``B`` in gauss)."""
    if B < 0:
        raise ValueError("field magnitude must be non-negative")
    return coeff * B * B


def q_microwave(rabi: float, detuning: float) -> float:
    """AC quadratic Zeeman shift -hbar Omega^2 / (4 delta), in h*Hz.

    Both arguments are angular frequencies (rad/s).
    """
    if detuning == 0:
        raise ValueError("microwave detuning must be non-zero")
    return -(rabi * rabi) / (8.0 * math.pi * detuning)


def kinetic_coefficient(mass: float = RB87_MASS) -> float:
    """hbar / (4 pi m) in Hz um^2, so that eps_k / h = coeff * k^2 (k in 1/um)."""
    return HBAR / (4.0 * math.pi * mass) / UM**2


def spin_interaction(delta_a: float, mass: float = RB87_MASS) -> float:
    """c2 = 4 pi hbar^2 delta_a / (3 m), J m^3."""
    return 4.0 * math.pi * HBAR**2 * delta_a / (3.0 * mass)


def density_interaction(abar: float, mass: float = RB87_MASS) -> float:
    """c0 = 4 pi hbar^2 abar / m, J m^3."""
    return 4.0 * math.pi * HBAR**2 * abar / mass


def thomas_fermi_column_density(p: PhysicalParams) -> float:
    """Peak column density (m^-2) of a Thomas-Fermi cloud along the tight axis."""
    mu = density_interaction(p.abar, p.atomic_mass) * p.peak_density_3d
    wy = p.trap_frequencies[1]
    if wy == 0:
        raise ValueError("need a non-zero y trap frequency to estimate the column density")
    r_y = math.sqrt(2.0 * mu / p.atomic_mass) / wy
    return 4.0 / 3.0 * p.peak_density_3d * r_y


def derive_scales(
    p: PhysicalParams,
    density_2d_convention: DensityConvention | str = DensityConvention.USER,
) -> DerivedScales:
    """Compute c2, q0, spin healing length and the growth time tau_max = hbar/q0.

    q0 is stored as the positive magnitude 2|c2|<n>.  The spin healing length
    is hbar / sqrt(2 m |c2| n) evaluated at the peak density.
    """
    conv = DensityConvention(density_2d_convention)
    c2 = spin_interaction(p.delta_a, p.atomic_mass)
    c0 = density_interaction(p.abar, p.atomic_mass)
    n2d = p.column_density_2d_peak
    if n2d is None:
        n2d = thomas_fermi_column_density(p)

    if conv is DensityConvention.PEAK_COLUMN:
        n_eff = p.peak_density_3d
        q0 = 2.0 * abs(c2) * n_eff
    elif conv is DensityConvention.MEAN_COLUMN:
        n_eff = 0.8 * p.peak_density_3d
        q0 = 2.0 * abs(c2) * n_eff
    else:
        q0 = H * p.q0_user_hz
        n_eff = q0 / (2.0 * abs(c2)) if c2 != 0 else p.peak_density_3d

    degenerate = c2 == 0 or q0 == 0
    if degenerate:
        warnings.warn("vanishing spin interaction: q0 = 0, spin healing length infinite",
                      stacklevel=2)
        q0 = 0.0
        xi = math.inf
        tau = math.inf
    else:
        xi = HBAR / math.sqrt(2.0 * p.atomic_mass * abs(c2) * p.peak_density_3d)
        tau = HBAR / q0
    return DerivedScales(
        c2=c2,
        c0=c0,
        q0=q0,
        spin_healing_length=xi,
        tau_max=tau,
        effective_2d_density=n2d,
        effective_3d_density=n_eff,
        kinetic_coeff=kinetic_coefficient(p.atomic_mass),
        degenerate=degenerate,
    )


def printed_healing_length(p: PhysicalParams) -> float:
    """(8 pi n |delta_a|)^(-1/2) at the peak density, in metres.

    Equal to the healing length of :func:`derive_scales` divided by sqrt(3);
    kept for comparison with the quoted 2.5 um.
    """
    return (8.0 * math.pi * p.peak_density_3d * abs(p.delta_a)) ** -0.5
