"""Three-component spin-1 order parameter on a periodic 2D grid.

Array layout is ``psi[m, ix, iz]`` with m = 0, 1, 2 for m_z = +1, 0, -1;
x is the short (radial) axis and z the long axis of the condensate.
|psi|^2 is a column density in um^-2.

Spin-1 matrices in the (+1, 0, -1) basis::

    Fx = 1/sqrt2 [[0,1,0],[1,0,1],[0,1,0]]
    Fy = 1/sqrt2 [[0,-i,0],[i,0,-i],[0,i,0]]
    Fz = diag(1, 0, -1)

Observables are expectation densities psi^dagger A psi.  The quadrupole
components are the symmetrised products N_ij = <(F_i F_j + F_j F_i)/2>,
which for the transverse-longitudinal pairs reduce to

    N_xz = Re(psi_+^* psi_0 - psi_0^* psi_-) / sqrt2
    N_yz = Im(psi_+^* psi_0 - psi_0^* psi_-) / sqrt2
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .params import RB87_MOMENT

SQRT2 = np.sqrt(2.0)


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid2D:
    nx: int
    nz: int
    dx: float  # um
    dz: float  # um

    def __post_init__(self):
        if not (_is_pow2(self.nx) and _is_pow2(self.nz)):
            raise ValueError(f"grid sizes must be powers of two, got {self.nx}x{self.nz}")
        if self.dx <= 0 or self.dz <= 0:
            raise ValueError("grid spacings must be positive")

    @property
    def shape(self):
        return (self.nx, self.nz)

    @property
    def lx(self):
        return self.nx * self.dx

    @property
    def lz(self):
        return self.nz * self.dz

    @property
    def cell_area(self):
        return self.dx * self.dz

    @property
    def area(self):
        return self.lx * self.lz

    @property
    def x(self):
        return (np.arange(self.nx) - self.nx // 2) * self.dx

    @property
    def z(self):
        return (np.arange(self.nz) - self.nz // 2) * self.dz

    @property
    def kx(self):
        return 2 * np.pi * np.fft.fftfreq(self.nx, self.dx)

    @property
    def kz(self):
        return 2 * np.pi * np.fft.fftfreq(self.nz, self.dz)

    @property
    def mode_indices(self):
        """Signed integer wavenumbers (jx, jz) in FFT order, k = 2 pi j / L."""
        jx = np.fft.fftfreq(self.nx, 1.0 / self.nx).astype(np.int64)
        jz = np.fft.fftfreq(self.nz, 1.0 / self.nz).astype(np.int64)
        return np.meshgrid(jx, jz, indexing="ij")

    def k_squared(self):
        kx, kz = np.meshgrid(self.kx, self.kz, indexing="ij")
        return kx**2 + kz**2

    def mesh(self):
        return np.meshgrid(self.x, self.z, indexing="ij")


@dataclass
class SpinField:
    grid: Grid2D
    psi: np.ndarray = None

    def __post_init__(self):
        if self.psi is None:
            self.psi = np.zeros((3, *self.grid.shape), dtype=np.complex128)
        else:
            self.psi = np.ascontiguousarray(self.psi, dtype=np.complex128)
        if self.psi.shape != (3, *self.grid.shape):
            raise ValueError(f"psi has shape {self.psi.shape}, grid wants {(3, *self.grid.shape)}")

    @property
    def psi_plus(self):
        return self.psi[0]

    @property
    def psi_zero(self):
        return self.psi[1]

    @property
    def psi_minus(self):
        return self.psi[2]

    def copy(self) -> "SpinField":
        return SpinField(self.grid, self.psi.copy())

    @classmethod
    def polar(cls, grid: Grid2D, amplitude) -> "SpinField":
        f = cls(grid)
        f.psi[1] = amplitude
        return f


@dataclass
class ObservableMaps:
    """Column densities of spin observables (um^-2) on the field grid."""

    grid: Grid2D
    density: np.ndarray
    fz: np.ndarray
    f_perp: np.ndarray  # Fx + i Fy
    nxz: np.ndarray
    nyz: np.ndarray
    moment: float = RB87_MOMENT  # g_F mu_B in J/T
    time_ms: float | None = None

    @property
    def m_perp(self):
        return self.moment * self.f_perp

    @property
    def fx(self):
        return self.f_perp.real

    @property
    def fy(self):
        return self.f_perp.imag

    def imaged(self, resolution_um: float | None) -> "ObservableMaps":
        """Maps seen through a Gaussian point-spread function of rms width ``resolution_um``."""
        if not resolution_um:
            return self
        k2 = self.grid.k_squared()
        h = np.exp(-0.5 * k2 * resolution_um**2)

        def blur(a):
            out = np.fft.ifft2(np.fft.fft2(a) * h)
            return out if np.iscomplexobj(a) else out.real

        return ObservableMaps(
            self.grid,
            blur(self.density),
            blur(self.fz),
            blur(self.f_perp),
            blur(self.nxz),
            blur(self.nyz),
            self.moment,
            self.time_ms,
        )


def observables(f: SpinField, moment: float = RB87_MOMENT, time_ms=None) -> ObservableMaps:
    p, z, m = f.psi
    np_ = p.real**2 + p.imag**2
    nm = m.real**2 + m.imag**2
    density = np_ + nm + z.real**2 + z.imag**2
    a = np.conj(p) * z
    b = np.conj(z) * m
    f_perp = SQRT2 * (a + b)
    quad = (a - b) / SQRT2
    return ObservableMaps(
        f.grid, density, np_ - nm, f_perp, quad.real, quad.imag, moment, time_ms
    )


def atom_number(f: SpinField) -> float:
    return float(np.sum(np.abs(f.psi) ** 2) * f.grid.cell_area)


def zeeman_population(f: SpinField) -> tuple[float, float, float]:
    n = np.sum(np.abs(f.psi) ** 2, axis=(1, 2)) * f.grid.cell_area
    return float(n[0]), float(n[1]), float(n[2])


# --------------------------------------------------------------------------
# map dumps: <stem>.bin (little-endian float64, complex as interleaved re,im)
# plus <stem>.json sidecar

MAP_FIELDS = ("density", "fz", "f_perp", "nxz", "nyz")
PSI_FIELDS = ("psi_plus", "psi_zero", "psi_minus")


def _arrays_to_dump(stem, grid, arrays: dict, time_ms, seed, extra=None):
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    names, complex_names, chunks = [], [], []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        names.append(name)
        if np.iscomplexobj(arr):
            complex_names.append(name)
            chunks.append(arr.astype("<c16").view("<f8").ravel())
        else:
            chunks.append(arr.astype("<f8").ravel())
    bin_path = stem.with_suffix(".bin")
    np.concatenate(chunks).astype("<f8").tofile(bin_path)
    meta = {
        "nx": grid.nx,
        "nz": grid.nz,
        "dx_um": grid.dx,
        "dz_um": grid.dz,
        "field_names": names,
        "complex_fields": complex_names,
        "time_ms": time_ms,
        "seed": seed,
    }
    if extra:
        meta.update(extra)
    json_path = stem.with_suffix(".json")
    json_path.write_text(json.dumps(meta, indent=1, sort_keys=True))
    return bin_path, json_path


def write_maps(stem, maps: ObservableMaps, seed=None):
    arrays = {name: getattr(maps, name) for name in MAP_FIELDS}
    return _arrays_to_dump(stem, maps.grid, arrays, maps.time_ms, seed,
                           {"moment_J_per_T": maps.moment})


def write_field(stem, f: SpinField, time_ms=None, seed=None):
    arrays = dict(zip(PSI_FIELDS, f.psi))
    return _arrays_to_dump(stem, f.grid, arrays, time_ms, seed)


def read_dump(path) -> tuple[dict, dict]:
    """Read a dump given either the .bin or .json path; returns (meta, arrays)."""
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    raw = np.fromfile(path.with_suffix(".bin"), dtype="<f8")
    nx, nz = meta["nx"], meta["nz"]
    npts = nx * nz
    arrays, pos = {}, 0
    for name in meta["field_names"]:
        if name in meta["complex_fields"]:
            chunk = raw[pos : pos + 2 * npts]
            arrays[name] = chunk.view("<c16").reshape(nx, nz).astype(np.complex128)
            pos += 2 * npts
        else:
            arrays[name] = raw[pos : pos + npts].reshape(nx, nz).astype(np.float64)
            pos += npts
    if pos != raw.size:
        raise ValueError(f"{path}: sidecar describes {pos} values, binary holds {raw.size}")
    return meta, arrays


def read_maps(path) -> ObservableMaps:
    meta, arr = read_dump(path)
    grid = Grid2D(meta["nx"], meta["nz"], meta["dx_um"], meta["dz_um"])
    if "f_perp" in arr:
        return ObservableMaps(grid, arr["density"], arr["fz"], arr["f_perp"], arr["nxz"],
                              arr["nyz"], meta.get("moment_J_per_T", RB87_MOMENT),
                              meta.get("time_ms"))
    f = SpinField(grid, np.stack([arr[n] for n in PSI_FIELDS]))
    return observables(f, time_ms=meta.get("time_ms"))


def read_field(path) -> SpinField:
    meta, arr = read_dump(path)
    grid = Grid2D(meta["nx"], meta["nz"], meta["dx_um"], meta["dz_um"])
    return SpinField(grid, np.stack([arr[n] for n in PSI_FIELDS]))
