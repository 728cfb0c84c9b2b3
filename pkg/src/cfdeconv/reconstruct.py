"""Density reconstruction from an estimated CF by truncated Fourier inversion.

The estimate is f(x) = (2 pi)^{-d} * integral over [-omega, omega]^d of
e^{-i t.x} times the truncated series.  Because the integrand is a polynomial
times a separable exponential, the integral factors into per-axis moment
integrals

    I_k(x) = integral_{-omega}^{omega} t^k e^{-itx} dt,

computed in closed form (no quadrature in t).  I_k is real for even k and
purely imaginary for odd k; combined with the coefficient parity the
reconstruction is exactly real up to float roundoff, and the leftover
imaginary residue is tracked as a diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._util import ConfigError, NumericalError
from .multiindex_taylor import TaylorPoly, index_table

# switch between the small-argument series and the boundary recurrence for
# I_k; series cancellation stays below ~e^8 * eps, recurrence amplification
# (k / (omega x))^k stays harmless for k <= 16 once omega*x >= 8
_SERIES_CUTOFF = 8.0
_SERIES_MAX_TERMS = 80


@dataclass(frozen=True)
class TuningRules:
    """Truncation/window tuning constants for a given model scale.

    c_kappa defaults to its largest admissible value
    min(nu_est, 2 kappa e^{-(3d+5)/2}); larger values are rejected.
    """

    kappa: float
    S: float
    nu_est: float
    d: int
    c_kappa: Optional[float] = None

    def __post_init__(self):
        if not (0 < self.kappa <= 1) or self.S <= 0 or self.nu_est <= 0 or self.d < 1:
            raise ConfigError("invalid tuning parameters")
        cap = self.c_kappa_cap()
        if self.c_kappa is None:
            object.__setattr__(self, "c_kappa", cap)
        elif self.c_kappa > cap * (1 + 1e-12) or self.c_kappa <= 0:
            raise ConfigError(
                f"c_kappa={self.c_kappa} outside (0, {cap}] "
                f"(cap = min(nu_est, 2 kappa e^(-(3d+5)/2)))"
            )

    def c_kappa_cap(self) -> float:
        return min(self.nu_est, 2.0 * self.kappa * math.exp(-(3 * self.d + 5) / 2.0))


def m_rule(n: int, kappa: float) -> int:
    """Theoretical truncation degree floor(log n / (8 kappa log log(n/4))).

    Requires n >= 12 so the inner logarithm is positive.  Note the rule is 0
    for every desk-scale n; experiment configs may override the degree and
    record that they did.
    """
    if n < 12:
        raise ConfigError(f"n must be >= 12, got {n}")
    if not (0 < kappa <= 1):
        raise ConfigError(f"kappa must lie in (0, 1], got {kappa}")
    return int(math.floor(math.log(n) / (8.0 * kappa * math.log(math.log(n / 4.0)))))


def omega_rule(m: int, rules: TuningRules) -> float:
    """Inversion window c_kappa m^kappa / S for truncation degree m >= 1."""
    if m < 1:
        raise ConfigError(f"truncation degree must be >= 1, got {m}")
    return float(rules.c_kappa * m**rules.kappa / rules.S)


@dataclass(frozen=True)
class LatticeSpec:
    """Uniform evaluation lattice: per-axis [min, max] with point counts."""

    mins: tuple
    maxs: tuple
    counts: tuple

    def __post_init__(self):
        if not (len(self.mins) == len(self.maxs) == len(self.counts)):
            raise ConfigError("lattice mins/maxs/counts must have equal length")
        for lo, hi, c in zip(self.mins, self.maxs, self.counts):
            if not (hi > lo) or c < 2:
                raise ConfigError("each axis needs max > min and >= 2 points")
        object.__setattr__(self, "mins", tuple(float(v) for v in self.mins))
        object.__setattr__(self, "maxs", tuple(float(v) for v in self.maxs))
        object.__setattr__(self, "counts", tuple(int(v) for v in self.counts))

    @property
    def d(self) -> int:
        return len(self.mins)

    @property
    def steps(self) -> tuple:
        return tuple(
            (hi - lo) / (c - 1) for lo, hi, c in zip(self.mins, self.maxs, self.counts)
        )

    def axes(self):
        return [
            np.linspace(lo, hi, c)
            for lo, hi, c in zip(self.mins, self.maxs, self.counts)
        ]

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.steps))


@dataclass
class DensityGrid:
    """Real density values on a lattice, with inversion metadata.

    spectrum, when present, is the (poly, omega) pair that produced the
    values; it enables exact Plancherel distances between reconstructions.
    imag_residue records the largest imaginary part discarded by inversion.
    """

    lattice: LatticeSpec
    values: np.ndarray
    imag_residue: float = 0.0
    spectrum: Optional[tuple] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != tuple(self.lattice.counts):
            raise ConfigError(
                f"values shape {values.shape} != lattice counts {self.lattice.counts}"
            )
        self.values = values


def _axis_moments(x: np.ndarray, omega: float, kmax: int) -> np.ndarray:
    """Matrix of I_k(x) for k = 0..kmax, shape (len(x), kmax+1), complex."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((x.shape[0], kmax + 1), dtype=np.complex128)
    small = np.abs(omega * x) < _SERIES_CUTOFF
    if np.any(small):
        xs = x[small]
        block = np.zeros((xs.shape[0], kmax + 1), dtype=np.complex128)
        for k in range(kmax + 1):
            acc = np.zeros(xs.shape[0], dtype=np.complex128)
            term_pow = (-1j * xs) ** (k % 2)
            j = k % 2
            while j <= _SERIES_MAX_TERMS:
                coeff = 2.0 * omega ** (k + j + 1) / (math.factorial(j) * (k + j + 1))
                term = coeff * term_pow
                acc += term
                if np.max(np.abs(term)) < 1e-18 * max(np.max(np.abs(acc)), 1e-300):
                    break
                term_pow = term_pow * (-1j * xs) ** 2
                j += 2
            block[:, k] = acc
        out[small] = block
    large = ~small
    if np.any(large):
        xl = x[large]
        block = np.empty((xl.shape[0], kmax + 1), dtype=np.complex128)
        sin_wx = np.sin(omega * xl)
        cos_wx = np.cos(omega * xl)
        block[:, 0] = 2.0 * sin_wx / xl
        for k in range(1, kmax + 1):
            if k % 2 == 0:
                boundary = 2.0 * omega**k * sin_wx / xl
            else:
                boundary = 2.0j * omega**k * cos_wx / xl
            block[:, k] = boundary - (1j * k / xl) * block[:, k - 1]
        out[large] = block
    return out


def invert(poly: TaylorPoly, omega: float, lattice: LatticeSpec) -> DensityGrid:
    """Truncated Fourier inversion of a candidate CF on a lattice.

    Raises NumericalError if the imaginary residue exceeds 1e-9 (the parity
    structure makes the exact result real); residues above 1e-12 are kept in
    the grid's check field either way.
    """
    if omega <= 0:
        raise ConfigError(f"omega must be positive, got {omega}")
    d = poly.d
    if lattice.d != d:
        raise ConfigError(f"lattice dimension {lattice.d} != candidate dimension {d}")
    entries, _, _ = index_table(d, poly.max_degree)
    kmax = poly.max_degree
    shape = tuple([kmax + 1] * d)
    coeff_tensor = np.zeros(shape, dtype=np.complex128)
    coeff_tensor[tuple(entries.T)] = poly.coeffs
    vals = coeff_tensor
    for axis_pts in lattice.axes():
        moments = _axis_moments(axis_pts, omega, kmax)
        # contract the leading degree axis; evaluated axes cycle to the back,
        # so after d contractions the axes are back in x-order
        vals = np.tensordot(vals, moments, axes=([0], [1]))
    vals = vals / (2.0 * math.pi) ** d
    residue = float(np.max(np.abs(vals.imag))) if vals.size else 0.0
    if residue > 1e-9:
        raise NumericalError(
            f"inversion imaginary residue {residue:.3e} exceeds 1e-9; "
            "coefficients or window are numerically unusable"
        )
    return DensityGrid(
        lattice=lattice,
        values=np.ascontiguousarray(vals.real),
        imag_residue=residue if residue > 1e-12 else 0.0,
        spectrum=(poly.copy(), float(omega)),
    )


def _box_pair_integral(pa: TaylorPoly, pb: TaylorPoly, omega: float) -> complex:
    """Integral over [-omega, omega]^d of pa(t) * conj(pb(t))."""
    ea, _, _ = index_table(pa.d, pa.max_degree)
    eb, _, _ = index_table(pb.d, pb.max_degree)
    kmax = pa.max_degree + pb.max_degree
    mom = np.zeros(kmax + 1)
    ks = np.arange(0, kmax + 1, 2)
    mom[ks] = 2.0 * omega ** (ks + 1) / (ks + 1)
    total_deg = ea[:, None, :] + eb[None, :, :]
    prod = np.prod(mom[total_deg], axis=-1)
    ca, cb = pa.coeffs, pb.coeffs
    return complex(ca @ prod @ np.conj(cb))


def l2_distance(a: DensityGrid, b: DensityGrid, method: str = "auto") -> float:
    """L2 distance between two reconstructions.

    "spectral" uses the Plancherel identity on the truncated spectra (exact
    polynomial moments over the two inversion boxes, intersection handled by
    the smaller box); "lattice" is the Riemann sum on a shared lattice;
    "auto" prefers spectral when both spectra are available.
    """
    if method not in ("auto", "spectral", "lattice"):
        raise ConfigError(f"unknown method {method!r}")
    spectral_ok = a.spectrum is not None and b.spectrum is not None
    if method == "auto":
        method = "spectral" if spectral_ok else "lattice"
    if method == "spectral":
        if not spectral_ok:
            raise ConfigError("spectral distance requires inversion metadata on both grids")
        pa, wa = a.spectrum
        pb, wb = b.spectrum
        if pa.d != pb.d:
            raise ConfigError("spectra have different dimensions")
        w_min = min(wa, wb)
        sq = (
            _box_pair_integral(pa, pa, wa).real
            + _box_pair_integral(pb, pb, wb).real
            - 2.0 * _box_pair_integral(pa, pb, w_min).real
        ) / (2.0 * math.pi) ** pa.d
        return float(math.sqrt(max(sq, 0.0)))
    if a.lattice != b.lattice:
        raise ConfigError("lattice distance requires identical lattices")
    diff = a.values - b.values
    return float(np.sqrt(np.sum(diff * diff) * a.lattice.cell_volume))


def l2_norm(a: DensityGrid, method: str = "auto") -> float:
    """L2 norm of a reconstruction (spectral when metadata is available)."""
    if method not in ("auto", "spectral", "lattice"):
        raise ConfigError(f"unknown method {method!r}")
    if method == "auto":
        method = "spectral" if a.spectrum is not None else "lattice"
    if method == "spectral":
        if a.spectrum is None:
            raise ConfigError("spectral norm requires inversion metadata")
        poly, omega = a.spectrum
        sq = _box_pair_integral(poly, poly, omega).real / (2.0 * math.pi) ** poly.d
        return float(math.sqrt(max(sq, 0.0)))
    return float(np.sqrt(np.sum(a.values**2) * a.lattice.cell_volume))


@dataclass(frozen=True)
class SmoothnessReport:
    value: float
    tail_share: float
    tail_flagged: bool


def smoothness_integral(candidate, beta: float, nu: float, d: int,
                        nodes_per_axis: int = 64) -> SmoothnessReport:
    """Sobolev-type integral of |phi|^2 (1 + |t|^2)^beta over [-nu, nu]^d.

    The outermost 10 percent band of the box (sup-norm radius above 0.9 nu)
    is flagged when it contributes more than 1 percent of the total,
    indicating that the box truncates a non-negligible tail.
    """
    if nu <= 0 or d < 1:
        raise ConfigError("need nu > 0 and d >= 1")
    if nodes_per_axis**d > 2**22:
        raise ConfigError("quadrature grid too large; reduce nodes_per_axis")
    x, w = np.polynomial.legendre.leggauss(nodes_per_axis)
    nodes, weights = nu * x, nu * w
    grids = np.meshgrid(*([nodes] * d), indexing="ij")
    pts = np.stack(grids, axis=-1).reshape(-1, d)
    wt = np.ones(1)
    for _ in range(d):
        wt = np.outer(wt, weights).reshape(-1)
    if isinstance(candidate, TaylorPoly):
        from .multiindex_taylor import evaluate as _eval

        phi = _eval(candidate, pts)
    else:
        phi = np.asarray(candidate(pts), dtype=np.complex128)
    integrand = np.abs(phi) ** 2 * (1.0 + np.sum(pts * pts, axis=1)) ** beta
    contrib = wt * integrand
    total = float(np.sum(contrib))
    shell = np.max(np.abs(pts), axis=1) > 0.9 * nu
    share = float(np.sum(contrib[shell]) / total) if total > 0 else 0.0
    return SmoothnessReport(value=total, tail_share=share, tail_flagged=share > 0.01)
