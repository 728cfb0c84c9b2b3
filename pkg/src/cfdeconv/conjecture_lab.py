"""Numerical laboratory for the weighted-polynomial lower-bound machinery.

This module builds the even weight family h_kappa, the polynomials that are
orthonormal for the h_kappa^2 inner product, the scaled profile statistics
and interval census behind the oscillation conjecture, the mollified
two-point construction, and the final testing-risk lower bound value.

Everything downstream of the basis lives on one dyadic master grid (step
2^-9).  Mollification is a discrete convolution with exactly normalized
taps, so unit mass survives smoothing to float precision and the discrete
Young inequality makes the norm chain an exact inequality of two sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad

from ._util import ConfigError, NumericalError

_STEP = 2.0**-9
_EXP_CUTOFF = 45.0  # weight treated as zero once the exponent exceeds this
_K_STABLE = 16


# ---------------------------------------------------------------------------
# weight family


@dataclass(frozen=True)
class WeightSpec:
    """Even weight h(x) = c_h exp(-[(1+(x/x0)^2)/2]^(1/(2(1-kappa)))).

    c_h normalizes h to unit integral and is computed on construction.  The
    kappa = 1 member is the flat limit: the uniform density on [-x0, x0].
    """

    kappa: float
    x0: float = 1.0
    c_h: float = field(init=False, default=0.0)
    limit_note: str = field(
        init=False, default="kappa=1 is the uniform density on [-x0, x0]"
    )

    def __post_init__(self):
        if not (0 < self.kappa <= 1) or self.x0 <= 0:
            raise ConfigError("need kappa in (0, 1] and x0 > 0")
        if self.kappa == 1.0:
            object.__setattr__(self, "c_h", 1.0 / (2.0 * self.x0))
            return
        cut = self.cutoff()
        raw = quad(lambda x: self._raw(np.asarray([x]))[0], -cut, cut, limit=200)[0]
        object.__setattr__(self, "c_h", 1.0 / raw)

    def _raw(self, x: np.ndarray) -> np.ndarray:
        power = 1.0 / (2.0 * (1.0 - self.kappa))
        expo = ((1.0 + (x / self.x0) ** 2) / 2.0) ** power
        return np.where(expo < _EXP_CUTOFF, np.exp(-np.minimum(expo, _EXP_CUTOFF)), 0.0)

    def cutoff(self) -> float:
        """|x| beyond which h is numerically zero (exponent above 45)."""
        if self.kappa == 1.0:
            return self.x0
        return self.x0 * math.sqrt(2.0 * _EXP_CUTOFF ** (2.0 * (1.0 - self.kappa)) - 1.0)


def h_kappa_eval(spec: WeightSpec, x) -> np.ndarray:
    """Weight density value; even in x, zero outside the numerical support."""
    x = np.asarray(x, dtype=np.float64)
    if spec.kappa == 1.0:
        return np.where(np.abs(x) <= spec.x0, spec.c_h, 0.0)
    return spec.c_h * spec._raw(x)


# ---------------------------------------------------------------------------
# weighted orthonormal basis (Stieltjes recurrence on panel quadrature)


def _panel_rule(lo: float, hi: float, panels: int, nodes: int):
    base_x, base_w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(lo, hi, panels + 1)
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        xs.append(0.5 * (a + b) + half * base_x)
        ws.append(half * base_w)
    return np.concatenate(xs), np.concatenate(ws)


@dataclass
class WeightedBasis:
    """Polynomials orthonormal for integral f g h^2, degrees 0..K_max.

    alpha/beta are the three-term recurrence coefficients
    beta[k+1] P_{k+1}(x) = (x - alpha[k]) P_k(x) - beta[k] P_{k-1}(x),
    with P_0 = 1/beta[0]; coeff_table[K] holds the monomial coefficients.
    cert records the independent-quadrature orthonormality check.
    """

    weight: WeightSpec
    K_max: int
    alpha: np.ndarray
    beta: np.ndarray
    coeff_table: np.ndarray
    cert: dict

    def eval_poly(self, K: int, x) -> np.ndarray:
        """P_K by the recurrence (stable far beyond the coefficient form)."""
        if not (0 <= K <= self.K_max):
            raise ConfigError(f"K={K} outside 0..{self.K_max}")
        x = np.asarray(x, dtype=np.float64)
        prev = np.zeros_like(x)
        cur = np.full_like(x, 1.0 / self.beta[0])
        for k in range(K):
            prev, cur = cur, ((x - self.alpha[k]) * cur - self.beta[k] * prev) / self.beta[k + 1]
        return cur

    def eval_ph(self, K: int, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return self.eval_poly(K, x) * h_kappa_eval(self.weight, x)


def build_weighted_basis(spec: WeightSpec, K_max: int, panels: int = 24,
                         nodes: int = 40, cert_tol: float = 1e-6) -> WeightedBasis:
    """Stieltjes construction of the h^2-orthonormal polynomials.

    Recurrence coefficients come from inner products of the running
    polynomial values on a panel Gauss rule over the weight's numerical
    support; orthonormality is then certified on an independent rule
    (different panel and node counts).  Degrees above 16 are refused: the
    weighted recurrence loses orthogonality around there.
    """
    if not (0 <= K_max <= _K_STABLE):
        raise ConfigError(f"K_max must lie in 0..{_K_STABLE}")
    cut = spec.cutoff()
    x, w = _panel_rule(-cut, cut, panels, nodes)
    wgt = w * h_kappa_eval(spec, x) ** 2
    alpha = np.zeros(max(K_max, 1))
    beta = np.zeros(K_max + 2)
    beta[0] = math.sqrt(float(np.sum(wgt)))
    vals = np.zeros((K_max + 1, x.shape[0]))
    vals[0] = 1.0 / beta[0]
    prev = np.zeros_like(x)
    for k in range(K_max + 1):
        cur = vals[k]
        if k == K_max:
            break
        alpha[k] = float(np.sum(wgt * x * cur * cur))
        q = (x - alpha[k]) * cur - beta[k] * prev
        beta[k + 1] = math.sqrt(float(np.sum(wgt * q * q)))
        if beta[k + 1] <= 0:
            raise NumericalError(f"degenerate recurrence at K={k + 1}")
        vals[k + 1] = q / beta[k + 1]
        prev = cur
    # monomial coefficient table through the same recurrence
    coeff = np.zeros((K_max + 1, K_max + 2))
    coeff[0, 0] = 1.0 / beta[0]
    for k in range(K_max):
        shifted = np.roll(coeff[k], 1)
        shifted[0] = 0.0
        nxt = shifted - alpha[k] * coeff[k]
        if k > 0:
            nxt = nxt - beta[k] * coeff[k - 1]
        coeff[k + 1] = nxt / beta[k + 1]
    basis = WeightedBasis(
        weight=spec,
        K_max=K_max,
        alpha=alpha[:max(K_max, 1)],
        beta=beta[: K_max + 1],
        coeff_table=coeff[:, : K_max + 1],
        cert={},
    )
    cx, cw = _panel_rule(-cut, cut, panels + 13, nodes + 17)
    cwgt = cw * h_kappa_eval(spec, cx) ** 2
    table = np.stack([basis.eval_poly(k, cx) for k in range(K_max + 1)])
    gram = (table * cwgt) @ table.T
    dev = np.abs(gram - np.eye(K_max + 1))
    worst = float(dev.max())
    if worst > cert_tol:
        bad = int(np.max(np.nonzero(dev > cert_tol)[0]))
        raise NumericalError(
            f"orthonormality lost at K={bad}: deviation {worst:.3e} > {cert_tol}"
        )
    basis.cert = {
        "gram_error": worst,
        "rule": f"panels={panels + 13} nodes={nodes + 17} on [-{cut:.6g}, {cut:.6g}]",
    }
    return basis


def hermite_function(k: int, x) -> np.ndarray:
    """L2-normalized Hermite function, the kappa=1/2 comparison oracle."""
    x = np.asarray(x, dtype=np.float64)
    cur = math.pi**-0.25 * np.exp(-0.5 * x * x)
    if k == 0:
        return cur
    prev = np.zeros_like(x)
    for j in range(k):
        prev, cur = cur, math.sqrt(2.0 / (j + 1)) * x * cur - math.sqrt(j / (j + 1.0)) * prev
    return cur


# ---------------------------------------------------------------------------
# profiles and interval census


def scaled_profile(basis: WeightedBasis, K: int, scaling: str, x_grid) -> np.ndarray:
    """Rescaled polynomial-times-weight profile on a figure grid.

    stretch evaluates K^((1-kappa)/2) (P_K h)(K^(1-kappa) x); squeeze uses
    argument scale K^-kappa instead.  At K=1 both reduce to P_1 h on a
    rescaled axis.
    """
    if scaling not in ("stretch", "squeeze"):
        raise ConfigError(f"unknown scaling {scaling!r}")
    kappa = basis.weight.kappa
    s = K ** (1.0 - kappa) if scaling == "stretch" else K ** (-kappa)
    x = np.asarray(x_grid, dtype=np.float64)
    return K ** ((1.0 - kappa) / 2.0) * basis.eval_ph(K, s * x)


@dataclass(frozen=True)
class CensusResult:
    count: int
    intervals: tuple
    threshold: float
    min_length: float


def interval_census(basis: WeightedBasis, K: int, c1: float, c2: float) -> CensusResult:
    """Count sub-intervals of [-1, 1] where |P_K h| clears the scaled bar.

    Scans with step c1 K^-kappa / 20, keeps maximal runs with
    |P_K h| >= c2 K^((kappa-1)/2) and reports those of length at least
    c1 K^-kappa.
    """
    if c1 <= 0 or c2 <= 0:
        raise ConfigError("c1 and c2 must be positive")
    kappa = basis.weight.kappa
    min_len = c1 * K**-kappa
    step = min_len / 20.0
    xs = np.arange(-1.0, 1.0 + step / 2.0, step)
    vals = np.abs(basis.eval_ph(K, xs))
    mask = vals >= c2 * K ** ((kappa - 1.0) / 2.0)
    intervals = []
    start = None
    for idx, flag in enumerate(np.append(mask, False)):
        if flag and start is None:
            start = idx
        elif not flag and start is not None:
            if (idx - 1 - start) * step >= min_len:
                intervals.append((float(xs[start]), float(xs[idx - 1])))
            start = None
    return CensusResult(
        count=len(intervals),
        intervals=tuple(intervals),
        threshold=float(c2 * K ** ((kappa - 1.0) / 2.0)),
        min_length=float(min_len),
    )


def census_protocol(basis: WeightedBasis, c1: float, c2: float,
                    fit_K: Sequence[int] = tuple(range(4, 11)),
                    holdout_K: Sequence[int] = tuple(range(11, 17))):
    """Fit the count constant on small K, test it on held-out larger K.

    c0 is the largest constant consistent with every fit-range count
    (min over K of count / K^kappa); the holdout passes when each count
    reaches ceil(c0 K^kappa).  Returns (c0, rows, holdout_ok) with rows of
    (K, count, required) for the holdout range.
    """
    kappa = basis.weight.kappa
    counts_fit = {K: interval_census(basis, K, c1, c2).count for K in fit_K}
    if min(counts_fit.values()) == 0:
        return 0.0, tuple((K, interval_census(basis, K, c1, c2).count, 0) for K in holdout_K), False
    c0 = min(cnt / K**kappa for K, cnt in counts_fit.items())
    rows = []
    ok = True
    for K in holdout_K:
        cnt = interval_census(basis, K, c1, c2).count
        need = math.ceil(c0 * K**kappa)
        rows.append((K, cnt, need))
        ok = ok and cnt >= need
    return float(c0), tuple(rows), ok


# ---------------------------------------------------------------------------
# mollifier and master-grid helpers


@lru_cache(maxsize=1)
def mollifier_constant() -> float:
    """c_u with integral of c_u exp(-1/(1-x^2)) over [-1, 1] equal to 1."""
    raw = quad(lambda x: math.exp(-1.0 / (1.0 - x * x)), -1.0, 1.0, limit=200)[0]
    return 1.0 / raw


def _bump(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    inside = np.abs(y) < 1.0
    out = np.zeros_like(y)
    with np.errstate(divide="ignore"):
        out[inside] = np.exp(1.0 / (y[inside] ** 2 - 1.0))
    return out


def mollifier_eval(b: float, x) -> np.ndarray:
    """Scaled bump u_b(x) = b c_u exp(-1/(1-(bx)^2)) on [-1/b, 1/b]."""
    if b <= 0:
        raise ConfigError("b must be positive")
    x = np.asarray(x, dtype=np.float64)
    return b * mollifier_constant() * _bump(b * x)


def mollify(f: Callable, b: float, nodes: int = 64) -> Callable:
    """Quadrature convolution x -> integral f(x - u) u_b(u) du.

    The node weights are renormalized to unit total so constants are exact
    fixed points of the smoothing.
    """
    if b <= 0:
        raise ConfigError("b must be positive")
    base_x, base_w = np.polynomial.legendre.leggauss(nodes)
    u = base_x / b
    w = base_w / b * mollifier_eval(b, u)
    w = w / float(np.sum(w))

    def smoothed(x):
        x = np.asarray(x, dtype=np.float64)
        pts = x[..., None] - u
        return np.asarray(f(pts.reshape(-1)), dtype=np.float64).reshape(pts.shape) @ w

    return smoothed


@dataclass(frozen=True)
class GridFunction:
    """Values on a uniform grid with linear interpolation, zero outside."""

    xs: np.ndarray
    values: np.ndarray

    @property
    def step(self) -> float:
        return float(self.xs[1] - self.xs[0])

    def __call__(self, x) -> np.ndarray:
        return np.interp(np.asarray(x, dtype=np.float64), self.xs, self.values,
                         left=0.0, right=0.0)

    def mass(self) -> float:
        return float(np.sum(self.values) * self.step)

    def l2_sq(self) -> float:
        return float(np.sum(self.values**2) * self.step)


def master_grid(spec: WeightSpec, b: float, pad: float = 1.0,
                step: float = _STEP) -> np.ndarray:
    """Dyadic symmetric grid covering the weight support plus 1/b plus pad."""
    half = int(math.ceil((spec.cutoff() + 1.0 / b + pad) / step))
    return np.arange(-half, half + 1) * step


def _mollifier_taps(b: float, step: float) -> np.ndarray:
    """Discrete u_b taps renormalized so step * sum == 1 exactly."""
    m = int(math.floor(1.0 / (b * step)))
    offsets = np.arange(-m, m + 1) * step
    raw = mollifier_eval(b, offsets)
    total = float(np.sum(raw) * step)
    if total <= 0:
        raise NumericalError("empty mollifier taps")
    return raw / total


def grid_convolve(values: np.ndarray, taps: np.ndarray, step: float) -> np.ndarray:
    if taps.shape[0] > values.shape[0]:
        raise ConfigError("mollifier support wider than the grid")
    return np.convolve(values, taps, mode="same") * step


def norm_chain(basis: WeightedBasis, K: int, b: float,
               step: float = _STEP) -> tuple:
    """Squared L2 norms of P_K h^2 before and after u_b smoothing.

    Both sums run on the same master grid, so smoothed <= plain is the
    discrete Young inequality verbatim; b -> infinity degenerates the taps
    to an identity and the ratio to exactly 1.
    """
    xs = master_grid(basis.weight, b, step=step)
    vals = basis.eval_poly(K, xs) * h_kappa_eval(basis.weight, xs) ** 2
    plain = float(np.sum(vals**2) * step)
    smoothed = grid_convolve(vals, _mollifier_taps(b, step), step)
    return plain, float(np.sum(smoothed**2) * step)


def envelope_values(basis: WeightedBasis, xs: np.ndarray, window: int = 5) -> np.ndarray:
    """Empirical envelope max_K K^((1-kappa)/2) |P_K h| with a running max."""
    kappa = basis.weight.kappa
    h = h_kappa_eval(basis.weight, xs)
    env = np.zeros_like(xs)
    for K in range(1, basis.K_max + 1):
        np.maximum(env, K ** ((1.0 - kappa) / 2.0) * np.abs(basis.eval_poly(K, xs)) * h, out=env)
    if window > 0:
        padded = np.pad(env, window, mode="edge")
        stacked = np.stack([padded[i:i + env.shape[0]] for i in range(2 * window + 1)])
        env = stacked.max(axis=0)
    return env


# ---------------------------------------------------------------------------
# two-point construction


@dataclass(frozen=True)
class LowerBoundInstance:
    """Frozen parameters of one two-point experiment at sample size n."""

    n: int
    d1: int
    d2: int
    a: float
    c: float
    beta: float
    K_n: int
    b_n: float
    alpha_n: float
    c_K: float
    c_b: float
    c_mass: float

    @property
    def d(self) -> int:
        return self.d1 + self.d2

    def matrix(self) -> np.ndarray:
        A = np.eye(self.d)
        A[0, self.d1:] = self.a
        A[self.d1, : self.d1] = self.a
        return A


def make_instance(basis: WeightedBasis, n: int, *, d1: int = 1, d2: int = 1,
                  a: float = 0.4, c: float = 2.0, beta: float = 1.0,
                  c_K: float = 1.0, c_b: float = 4.0,
                  c_mass: float = 1e-8) -> LowerBoundInstance:
    """Resolve the (K_n, b_n, alpha_n) schedule for one sample size.

    K_n = ceil((c_K/kappa) log n / log log n) clipped to [2, K_max];
    b_n = c_b K_n^kappa; alpha_n is the smaller of the sup-norm cap
    1/||P_K h||_inf and the smoothing-mass cap sqrt(c_mass) b_n^-beta /
    ||P_K h^2||.
    """
    if n < 3:
        raise ConfigError("n must be >= 3")
    if not (0 < a < 1):
        raise ConfigError("a must lie in (0, 1)")
    if d1 < 1 or d2 < 1:
        raise ConfigError("d1 and d2 must be >= 1")
    kappa = basis.weight.kappa
    raw = (c_K / kappa) * math.log(n) / math.log(math.log(n))
    K_n = int(min(max(math.ceil(raw), 2), basis.K_max))
    b_n = c_b * K_n**kappa
    xs = master_grid(basis.weight, b_n)
    ph = basis.eval_ph(K_n, xs)
    ph2 = ph * h_kappa_eval(basis.weight, xs)
    sup_cap = 1.0 / float(np.max(np.abs(ph)))
    norm_ph2 = math.sqrt(float(np.sum(ph2**2) * (xs[1] - xs[0])))
    mass_cap = math.sqrt(c_mass) * b_n**-beta / norm_ph2
    return LowerBoundInstance(
        n=int(n), d1=d1, d2=d2, a=float(a), c=float(c), beta=float(beta),
        K_n=K_n, b_n=float(b_n), alpha_n=float(min(sup_cap, mass_cap)),
        c_K=float(c_K), c_b=float(c_b), c_mass=float(c_mass),
    )


@dataclass
class TwoPoint:
    """The pair of multivariate densities separated by one perturbation."""

    instance: LowerBoundInstance
    basis: WeightedBasis
    zeta0: GridFunction
    zeta_n: GridFunction
    pert: GridFunction
    f0: Callable
    fn: Callable
    l2_sq: float
    zeta_mass: float
    zeta_min: float


def build_two_point(instance: LowerBoundInstance, basis: WeightedBasis) -> TwoPoint:
    """Assemble zeta_0, zeta_n and the mixed densities f_0, f_n.

    zeta_0 smooths the normalized envelope-times-weight density; zeta_n adds
    alpha_n (P_K h^2) * u_b.  The perturbation has exactly zero grid mass
    (orthogonality of P_K to constants survives the trapezoid sum to float
    precision), so zeta_n keeps unit mass; nonnegativity is checked densely
    and a violation means alpha_n was too large.
    """
    step = _STEP
    xs = master_grid(basis.weight, instance.b_n, step=step)
    taps = _mollifier_taps(instance.b_n, step)
    env_density = envelope_values(basis, xs) * h_kappa_eval(basis.weight, xs)
    total = float(np.sum(env_density) * step)
    if total <= 0:
        raise NumericalError("degenerate envelope density")
    env_density /= total
    zeta0_vals = grid_convolve(env_density, taps, step)
    ph2 = basis.eval_ph(instance.K_n, xs) * h_kappa_eval(basis.weight, xs)
    pert_vals = grid_convolve(ph2, taps, step)
    zeta_n_vals = zeta0_vals + instance.alpha_n * pert_vals
    zmin = float(zeta_n_vals.min())
    if zmin < -1e-12:
        raise NumericalError(
            f"zeta_n dips to {zmin:.3e}: alpha_n={instance.alpha_n:.3e} too large"
        )
    zeta0 = GridFunction(xs=xs, values=zeta0_vals)
    zeta_n = GridFunction(xs=xs, values=zeta_n_vals)
    pert = GridFunction(xs=xs, values=pert_vals)
    mass = zeta_n.mass()
    if abs(mass - 1.0) > 1e-8:
        raise NumericalError(f"zeta_n mass {mass} deviates from 1 beyond 1e-8")
    A = instance.matrix()
    A_inv = np.linalg.inv(A)
    det = abs(float(np.linalg.det(A)))

    def _product(u: np.ndarray, first: GridFunction) -> np.ndarray:
        u = np.atleast_2d(np.asarray(u, dtype=np.float64))
        v = u @ A_inv.T
        out = first(v[:, 0]) / det
        for j in range(1, instance.d):
            out = out * zeta0(v[:, j])
        return out

    f0 = lambda u: _product(u, zeta0)
    fn = lambda u: _product(u, zeta_n)
    l2_sq = (instance.alpha_n**2 / det) * pert.l2_sq() * zeta0.l2_sq() ** (instance.d - 1)
    return TwoPoint(
        instance=instance, basis=basis, zeta0=zeta0, zeta_n=zeta_n, pert=pert,
        f0=f0, fn=fn, l2_sq=l2_sq, zeta_mass=mass, zeta_min=zmin,
    )


# ---------------------------------------------------------------------------
# compactly supported CF noise


@dataclass(frozen=True)
class NoisePack:
    c: float
    density: Callable
    cf: Callable
    sampler: Callable


def noise_g(c: float) -> NoisePack:
    """Noise with density 2 pi c (1 + cos(cx)) / (pi^2 - (cx)^2)^2.

    The normalizer is exact: the CF below is the Fourier transform of the
    density, and value-at-zero matching forces c_g = 2 pi c.  The CF is
    (1 - |t|/c) cos(pi t/c) + sin(pi |t|/c)/pi on [-c, c] and vanishes
    outside, so the noise has compactly supported spectrum.  The density's
    removable singularities at |x| = pi/c are evaluated by a stable
    half-angle form.
    """
    if c <= 0:
        raise ConfigError("c must be positive")
    c_g = 2.0 * math.pi * c

    def density(x):
        y = np.abs(np.asarray(x, dtype=np.float64)) * c
        eps = y - math.pi
        near = np.abs(eps) < 0.5
        out = np.empty_like(y)
        ys = y[~near]
        out[~near] = (1.0 + np.cos(ys)) / (math.pi**2 - ys**2) ** 2
        es = eps[near]
        # 1 + cos(pi + e) = 2 sin^2(e/2); (pi^2 - y^2)^2 = e^2 (2pi + e)^2
        half = np.sinc(es / (2.0 * math.pi)) / 2.0
        out[near] = half**2 / (2.0 * math.pi + es) ** 2 * 2.0
        return c_g * out

    def cf(t):
        s = np.abs(np.asarray(t, dtype=np.float64)) / c
        inside = s <= 1.0
        vals = (1.0 - s) * np.cos(math.pi * s) + np.sin(math.pi * s) / math.pi
        return np.where(inside, vals, 0.0)

    # inverse-CDF table; cx out to 2000 keeps the two-sided tail below 1e-9
    xs = np.linspace(-2000.0 / c, 2000.0 / c, 2**16 + 1)
    dens = density(xs)
    cdf = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) * 0.5 * np.diff(xs))])
    cdf /= cdf[-1]

    def sampler(size, rng):
        return np.interp(rng.random(size), cdf, xs)

    return NoisePack(c=float(c), density=density, cf=cf, sampler=sampler)


# ---------------------------------------------------------------------------
# Le Cam two-point value


@dataclass(frozen=True)
class LeCamReport:
    value: float
    l2_sq: float
    l1_single: float
    n: int
    K_n: int
    alpha_n: float


def lecam_value(two_point: TwoPoint, noise: NoisePack, n: int, *,
                v_half: float = 40.0, v_step: float = 0.1,
                w_half: float = 60.0, w_step: float = 0.05,
                l2_method: str = "exact") -> LeCamReport:
    """Testing-risk lower bound 0.25 ||f0 - fn||^2 (1 - L1/2)_+^n.

    L1 is the single-observation total variation distance between the two
    noise-convolved models, computed by factoring the convolution through
    the mixing matrix: with Delta(v) = alpha G(v_1) zeta0(v_2) ... the
    integrand is G-row times noise-kernel times zeta0-column, three dense
    matrix products on tensor grids.  n = 0 turns the bracket into 1 and is
    only a formula check.
    """
    inst = two_point.instance
    if inst.d != 2:
        raise ConfigError("the L1 reduction is implemented for d = 2")
    if n < 0:
        raise ConfigError("n must be >= 0")
    if l2_method not in ("exact", "quadrature"):
        raise ConfigError(f"unknown l2_method {l2_method!r}")
    if l2_method == "exact":
        l2_sq = two_point.l2_sq
    else:
        grid = np.arange(-v_half, v_half + v_step / 2, v_step)
        mesh = np.stack(np.meshgrid(grid, grid, indexing="ij"), axis=-1).reshape(-1, 2)
        diff = two_point.f0(mesh) - two_point.fn(mesh)
        l2_sq = float(np.sum(diff**2) * v_step**2)
    v = np.arange(-v_half, v_half + v_step / 2, v_step)
    w = np.arange(-w_half, w_half + w_step / 2, w_step)
    a, det = inst.a, abs(float(np.linalg.det(inst.matrix())))
    g = noise.density
    # pushforward of the product noise through A, a density in w
    QA = det * g(w[:, None] + a * w[None, :]) * g(a * w[:, None] + w[None, :])
    Gmat = two_point.pert(v[:, None] - w[None, :])
    Zmat = two_point.zeta0(v[:, None] - w[None, :])
    C2 = (Gmat @ QA) @ Zmat.T
    l1 = float(inst.alpha_n * np.sum(np.abs(C2)) * w_step**2 * v_step**2)
    if not np.isfinite(l1):
        raise NumericalError("L1 quadrature diverged")
    if n == 0:
        bracket = 1.0
    elif l1 >= 2.0:
        bracket = 0.0
    else:
        bracket = math.exp(n * math.log1p(-l1 / 2.0))
    return LeCamReport(
        value=0.25 * l2_sq * bracket,
        l2_sq=float(l2_sq),
        l1_single=l1,
        n=int(n),
        K_n=inst.K_n,
        alpha_n=inst.alpha_n,
    )
