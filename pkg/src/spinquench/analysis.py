"""Estimators applied to magnetization maps and G(0) time series."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .field import Grid2D, ObservableMaps

# two-parameter confidence levels (68.27%, 95.45%, 99.73%)
DELTA_CHI2 = {1: 2.2957, 2: 6.1801, 3: 11.8290}
DEFAULT_REGION = (16.0, 124.0)  # um, (x, z) extent about the grid centre
LINEAR_REGIME_MAX_MS = 90.0
T_M = 77.0


class AnalysisError(ValueError):
    pass


# --------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class Region:
    """Index rectangle [ix0, ix1) x [iz0, iz1) on a grid."""

    ix0: int
    ix1: int
    iz0: int
    iz1: int

    @classmethod
    def central(cls, grid: Grid2D, size_um=DEFAULT_REGION) -> "Region":
        wx = min(grid.nx, max(1, int(round(size_um[0] / grid.dx))))
        wz = min(grid.nz, max(1, int(round(size_um[1] / grid.dz))))
        ix0 = (grid.nx - wx) // 2
        iz0 = (grid.nz - wz) // 2
        return cls(ix0, ix0 + wx, iz0, iz0 + wz)

    @classmethod
    def full(cls, grid: Grid2D) -> "Region":
        return cls(0, grid.nx, 0, grid.nz)

    def check(self, grid: Grid2D):
        if not (0 <= self.ix0 < self.ix1 <= grid.nx and 0 <= self.iz0 < self.iz1 <= grid.nz):
            raise AnalysisError(f"region {self} does not fit a {grid.nx}x{grid.nz} grid")

    def slices(self):
        return slice(self.ix0, self.ix1), slice(self.iz0, self.iz1)

    def size_um(self, grid: Grid2D):
        return ((self.ix1 - self.ix0) * grid.dx, (self.iz1 - self.iz0) * grid.dz)


# --------------------------------------------------------------------------
# correlation function


@dataclass
class CorrelationResult:
    lag_x: np.ndarray  # um, shape (2wx-1,)
    lag_z: np.ndarray  # um, shape (2wz-1,)
    G: np.ndarray  # shape (2wx-1, 2wz-1), zero lag at the centre
    region: Region
    grid: Grid2D

    @property
    def g0(self) -> float:
        return float(self.G[len(self.lag_x) // 2, len(self.lag_z) // 2])

    def long_axis_profile(self):
        """G(dx=0, dz) for dz >= 0."""
        ix, iz = len(self.lag_x) // 2, len(self.lag_z) // 2
        return self.lag_z[iz:], self.G[ix, iz:]

    def radial_profile(self, dr=None):
        """Azimuthal average of G in annuli of width ``dr`` (default max(dx, dz))."""
        dr = dr or max(self.grid.dx, self.grid.dz)
        LX, LZ = np.meshgrid(self.lag_x, self.lag_z, indexing="ij")
        r = np.hypot(LX, LZ)
        rmax = min(self.lag_x.max(), self.lag_z.max())
        bins = np.arange(0.0, rmax + dr, dr)
        idx = np.digitize(r.ravel(), bins) - 1
        ok = (idx >= 0) & (idx < len(bins) - 1)
        sums = np.bincount(idx[ok], weights=self.G.ravel()[ok], minlength=len(bins) - 1)
        counts = np.bincount(idx[ok], minlength=len(bins) - 1)
        rc = np.bincount(idx[ok], weights=r.ravel()[ok], minlength=len(bins) - 1)
        keep = counts > 0
        return rc[keep] / counts[keep], sums[keep] / counts[keep]


def _autocorr(a: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    """Linear (non-circular) sum_r conj(a(r)) b(r + d) over all lags d, zero lag centred."""
    b = a if b is None else b
    wx, wz = a.shape
    shape = (2 * wx, 2 * wz)
    fa = np.fft.fft2(a, shape)
    fb = fa if b is a else np.fft.fft2(b, shape)
    c = np.fft.ifft2(np.conj(fa) * fb)
    c = np.fft.fftshift(c)
    # fftshift puts lag 0 at index (wx, wz); drop the unused -w row/column
    return c[1:, 1:]


def correlation(maps: ObservableMaps, region: Region | None = None, imaging_noise: float = 0.0
                ) -> CorrelationResult:
    """Density-normalised transverse magnetization correlation.

    G(d) = sum_r M(r+d).M(r) / [(g_F mu_B)^2 sum_r n(r+d) n(r)], both sums
    running over r with r and r+d inside ``region``.  ``imaging_noise`` is
    subtracted from the zero-lag value.
    """
    grid = maps.grid
    region = region or Region.central(grid)
    region.check(grid)
    sx, sz = region.slices()
    m = maps.m_perp[sx, sz] / maps.moment
    n = maps.density[sx, sz]
    if not np.any(n):
        raise AnalysisError("density vanishes on the analysis region")
    num = _autocorr(m).real
    den = _autocorr(n.astype(complex)).real
    floor = 1e-12 * den.max()
    with np.errstate(divide="ignore", invalid="ignore"):
        G = np.where(den > floor, num / den, np.nan)
    wx, wz = m.shape
    if imaging_noise:
        G[wx - 1, wz - 1] -= imaging_noise
    lag_x = (np.arange(2 * wx - 1) - (wx - 1)) * grid.dx
    lag_z = (np.arange(2 * wz - 1) - (wz - 1)) * grid.dz
    return CorrelationResult(lag_x, lag_z, G, region, grid)


def g0(maps: ObservableMaps, region: Region | None = None, imaging_noise: float = 0.0) -> float:
    """Zero-lag value of :func:`correlation` without computing the other lags."""
    grid = maps.grid
    region = region or Region.central(grid)
    region.check(grid)
    sx, sz = region.slices()
    f = maps.f_perp[sx, sz]
    n = maps.density[sx, sz]
    den = float(np.sum(n * n))
    if den == 0:
        raise AnalysisError("density vanishes on the analysis region")
    return float(np.sum(f.real**2 + f.imag**2)) / den - imaging_noise


# --------------------------------------------------------------------------
# domain size


def first_minimum(lags, values) -> float:
    """Lag of the first local minimum of a sampled profile.

    The minimum is placed where the linearly interpolated forward difference
    changes sign.
    """
    lags = np.asarray(lags, float)
    v = np.asarray(values, float)
    d = np.diff(v)
    mid = 0.5 * (lags[1:] + lags[:-1])
    for i in range(1, len(d)):
        if not (np.isfinite(d[i - 1]) and np.isfinite(d[i])):
            break
        if d[i - 1] < 0 <= d[i]:
            return float(mid[i - 1] + (mid[i] - mid[i - 1]) * (-d[i - 1]) / (d[i] - d[i - 1]))
    raise AnalysisError("no minimum within the lag window (long-range correlations)")


def domain_size(c: CorrelationResult, profile: str = "long-axis") -> float:
    """l_d: distance from zero lag to the first minimum of G (um)."""
    if profile == "long-axis":
        r, g = c.long_axis_profile()
    elif profile == "radial":
        r, g = c.radial_profile()
    else:
        raise ValueError(f"unknown profile {profile!r}")
    return first_minimum(r, g)


# --------------------------------------------------------------------------
# growth fit


def growth_model(t, g0_tm, tau, t_m=T_M):
    t = np.asarray(t, float)
    return g0_tm * np.sqrt(t / t_m) * np.exp((t - t_m) / tau)


@dataclass
class GrowthFit:
    g0_tm: float
    tau: float  # ms
    t_m: float
    chi2_min: float
    g0_axis: np.ndarray
    tau_axis: np.ndarray
    chi2_surface: np.ndarray  # shape (len(g0_axis), len(tau_axis))
    covariance: np.ndarray
    weighted: bool
    n_points: int
    sigma_contours: dict = field(default_factory=dict)  # level -> list of (g0, tau) polylines

    def delta_chi2(self, g0_tm, tau) -> float:
        return float(self._chi2(g0_tm, tau) - self.chi2_min)

    def contains(self, g0_tm, tau, level: int) -> bool:
        """Whether (g0_tm, tau) lies inside the ``level``-sigma confidence region."""
        return self.delta_chi2(g0_tm, tau) <= DELTA_CHI2[level]

    def region_mask(self, level: int) -> np.ndarray:
        return self.chi2_surface - self.chi2_min <= DELTA_CHI2[level]

    def to_dict(self):
        return {
            "g0_tm": self.g0_tm,
            "tau_ms": self.tau,
            "t_m_ms": self.t_m,
            "chi2_min": self.chi2_min,
            "weighted": self.weighted,
            "n_points": self.n_points,
            "sigma_g0_tm": float(math.sqrt(self.covariance[0, 0])),
            "sigma_tau_ms": float(math.sqrt(self.covariance[1, 1])),
            "delta_chi2": {f"{k}sigma": v for k, v in DELTA_CHI2.items()},
            "contours": {
                f"{k}sigma": [np.asarray(line).tolist() for line in lines]
                for k, lines in self.sigma_contours.items()
            },
        }

    # set by fit_growth
    _chi2: object = field(default=None, repr=False)


def _log_linear(t, y, t_m):
    """Closed-form fit of ln G - ln sqrt(t/t_m) = ln g0 + (t - t_m)/tau."""
    Y = np.log(y) - 0.5 * np.log(t / t_m)
    X = np.column_stack([np.ones_like(t), t - t_m])
    coef, *_ = np.linalg.lstsq(X, Y, rcond=None)
    return X, Y, coef


def fit_growth(t, g0_series, t_m: float = T_M, sigma=None, t_max: float = LINEAR_REGIME_MAX_MS,
               t_min: float = 0.0, grid_points: int = 121, span_sigma: float = 6.0) -> GrowthFit:
    """Fit G(0)|_t = G(0)|_{t_m} sqrt(t/t_m) exp((t - t_m)/tau).

    With ``sigma`` (standard errors of G) the fit minimises the weighted chi^2
    in linear space.  Without it the fit is ordinary least squares of ln G,
    and chi^2 is the residual sum of squares divided by its unbiased variance
    estimate, so the Delta chi^2 levels keep their meaning.

    Points outside [t_min, t_max] are dropped.
    """
    t = np.asarray(t, float)
    y = np.asarray(g0_series, float)
    s = None if sigma is None else np.asarray(sigma, float)
    keep = (t > 0) & (t >= t_min) & (t <= t_max)
    t, y = t[keep], y[keep]
    if s is not None:
        s = s[keep]
        if np.any(s <= 0):
            s = None
    if len(t) < 3:
        raise AnalysisError(f"need at least 3 points in the fit window, got {len(t)}")
    if np.any(y <= 0):
        raise AnalysisError("G(0) values must be positive")
    if np.ptp(t) == 0:
        raise AnalysisError("all points at the same time")

    X, Y, coef = _log_linear(t, y, t_m)
    if coef[1] <= 0 and s is None:
        raise AnalysisError("series does not grow; tau undefined")

    if s is None:
        resid = Y - X @ coef
        dof = len(t) - 2
        var = float(resid @ resid) / dof if dof > 0 else 0.0
        if var <= 1e-300:
            var = 1e-300  # noiseless data
        g0_tm, tau = math.exp(coef[0]), 1.0 / coef[1]

        def chi2(g, ta):
            g = np.asarray(g, float)
            ta = np.asarray(ta, float)
            r = Y[:, None] - (np.log(g).ravel()[None, :] + (t - t_m)[:, None] / ta.ravel()[None, :])
            return (np.sum(r * r, axis=0) / var).reshape(np.broadcast(g, ta).shape)

        cov_lin = var * np.linalg.inv(X.T @ X)
        # (ln g, 1/tau) -> (g, tau)
        J = np.diag([g0_tm, -tau * tau])
        cov = J @ cov_lin @ J.T
    else:
        def resid(p):
            return (growth_model(t, p[0], p[1], t_m) - y) / s

        p0 = [math.exp(coef[0]), 1.0 / coef[1] if coef[1] > 0 else 10.0]
        sol = optimize.least_squares(resid, p0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
        g0_tm, tau = map(float, sol.x)
        if tau <= 0:
            raise AnalysisError("fitted tau is not positive")
        cov = np.linalg.inv(sol.jac.T @ sol.jac)

        def chi2(g, ta):
            g = np.asarray(g, float)
            ta = np.asarray(ta, float)
            shape = np.broadcast(g, ta).shape
            gb = np.broadcast_to(g, shape).ravel()
            tb = np.broadcast_to(ta, shape).ravel()
            model = gb[None, :] * np.sqrt(t / t_m)[:, None] * np.exp((t - t_m)[:, None] / tb[None, :])
            r = (model - y[:, None]) / s[:, None]
            return np.sum(r * r, axis=0).reshape(shape)

    chi2_min = float(chi2(g0_tm, tau))
    sg = math.sqrt(max(cov[0, 0], 0.0)) or abs(g0_tm) * 1e-6
    st = math.sqrt(max(cov[1, 1], 0.0)) or abs(tau) * 1e-6
    half = grid_points // 2
    offs = np.linspace(-1.0, 1.0, 2 * half + 1) * span_sigma
    g_axis = g0_tm + offs * sg
    t_axis = tau + offs * st
    g_axis = g_axis[g_axis > 0]
    t_axis = t_axis[t_axis > 0]
    G, T = np.meshgrid(g_axis, t_axis, indexing="ij")
    surface = chi2(G, T)

    fit = GrowthFit(g0_tm, tau, t_m, chi2_min, g_axis, t_axis, surface, cov,
                    weighted=s is not None, n_points=len(t))
    fit._chi2 = chi2
    fit.sigma_contours = _contours(g_axis, t_axis, surface - chi2_min)
    return fit


def _contours(g_axis, t_axis, dchi2):
    import contourpy

    gen = contourpy.contour_generator(x=t_axis, y=g_axis, z=dchi2)
    out = {}
    for k, level in DELTA_CHI2.items():
        # contourpy returns (x, y) = (tau, g0); store as (g0, tau)
        out[k] = [np.column_stack([line[:, 1], line[:, 0]]) for line in gen.lines(level)]
    return out


# --------------------------------------------------------------------------
# gain, ensembles, longitudinal magnetization


def gain_db(g0_initial: float, g0_final: float) -> float:
    if g0_initial <= 0 or g0_final <= 0:
        raise AnalysisError("gain needs positive G(0) values")
    return 10.0 * math.log10(g0_final / g0_initial)


@dataclass
class EnsembleSeries:
    t: np.ndarray
    mean: np.ndarray
    sem: np.ndarray
    n_runs: int


def ensemble_average(runs) -> EnsembleSeries:
    """Pointwise mean and standard error over runs given as (t, G0) pairs."""
    runs = list(runs)
    if not runs:
        raise AnalysisError("no runs to average")
    t0 = np.asarray(runs[0][0], float)
    vals = []
    for t, g in runs:
        t = np.asarray(t, float)
        if t.shape != t0.shape or not np.allclose(t, t0, rtol=0, atol=1e-9):
            raise AnalysisError("runs are sampled on different time grids")
        vals.append(np.asarray(g, float))
    v = np.vstack(vals)
    n = v.shape[0]
    sem = v.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(v.shape[1])
    return EnsembleSeries(t0, v.mean(axis=0), sem, n)


def longitudinal_fraction(maps: ObservableMaps, region: Region | None = None) -> float:
    """max |Fz| over the region relative to the saturated magnetization max n."""
    region = region or Region.central(maps.grid)
    sx, sz = region.slices()
    nmax = float(np.max(maps.density[sx, sz]))
    if nmax == 0:
        return 0.0
    return float(np.max(np.abs(maps.fz[sx, sz]))) / nmax


def saturation_time(t, g0_series, fraction: float = 0.5) -> float:
    """First time G(0) reaches ``fraction`` of its maximum over the series."""
    t = np.asarray(t, float)
    g = np.asarray(g0_series, float)
    target = fraction * g.max()
    i = int(np.argmax(g >= target))
    if i == 0:
        return float(t[0])
    # log-linear interpolation between the bracketing samples
    lo, hi = math.log(g[i - 1]), math.log(g[i])
    return float(t[i - 1] + (t[i] - t[i - 1]) * (math.log(target) - lo) / (hi - lo))
