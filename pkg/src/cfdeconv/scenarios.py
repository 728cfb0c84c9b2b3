"""Synthetic scenario generators with closed-form oracle CFs.

Three observation schemes over a latent signal: repeated measurements
(Y = (X + e1, X + e2)), nonlinear errors-in-variables (Y = (X + e1,
g(X) + e2)), and noisy linear mixtures (Y = A S + e).  Each scenario knows
how to sample itself reproducibly, expose the true joint CF of its signal
part together with the per-block noise CFs, and (when one exists) the true
signal density for L2 scoring.

Construction-time diagnostics reject degenerate scenarios: the joint CF
must pass a probe-grid non-nullity check on every first-block slice, and
each noise block's CF modulus must clear a floor on the working box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from ._util import ConfigError
from .conjecture_lab import (
    GridFunction,
    NoisePack,
    TwoPoint,
    h_kappa_eval,
    mollifier_eval,
    noise_g,
    WeightSpec,
)
from .ecf import SampleSet
from .reconstruct import DensityGrid

_PROBE_AXIS = np.array([-1.0, -0.7, -0.3, 0.0, 0.3, 0.7, 1.0])


def cubic_plus_x(x: np.ndarray) -> np.ndarray:
    """Default errors-in-variables link, one-to-one on all of R."""
    return x**3 + x


_LINKS = {"cubic_plus_x": cubic_plus_x, "identity": lambda x: x}


# ---------------------------------------------------------------------------
# 1-D building blocks


@dataclass(frozen=True)
class SignalSpec:
    """One-dimensional signal law with sampler, CF, and optional density.

    kind: uniform(half_width), point_mass(location), compact_bump
    (half_width, b), h_kappa(kappa, x0), or custom (callables supplied).
    Class membership parameters (kappa, S) may be recorded for reporting.
    """

    kind: str
    params: tuple = ()
    upsilon: Optional[tuple] = None
    custom: Optional[dict] = None

    def __post_init__(self):
        if self.kind not in ("uniform", "point_mass", "compact_bump", "h_kappa", "custom"):
            raise ConfigError(f"unknown signal kind {self.kind!r}")
        if self.kind == "custom" and not self.custom:
            raise ConfigError("custom signal needs sampler/cf callables")

    def sampler(self) -> Callable:
        if self.kind == "uniform":
            (w,) = self.params
            return lambda n, rng: rng.uniform(-w, w, size=n)
        if self.kind == "point_mass":
            (x0,) = self.params
            return lambda n, rng: np.full(n, float(x0))
        if self.kind == "compact_bump":
            w, b = self.params
            table = _bump_cdf_table(float(b))
            return lambda n, rng: rng.uniform(-w, w, size=n) + np.interp(
                rng.random(n), table[0], table[1]
            )
        if self.kind == "h_kappa":
            kappa, x0 = self.params
            table = _h_kappa_cdf_table(float(kappa), float(x0))
            return lambda n, rng: np.interp(rng.random(n), table[0], table[1])
        return self.custom["sampler"]

    def cf(self) -> Callable:
        if self.kind == "uniform":
            (w,) = self.params
            return lambda t: np.sinc(w * np.asarray(t, dtype=np.float64) / math.pi).astype(
                np.complex128
            )
        if self.kind == "point_mass":
            (x0,) = self.params
            return lambda t: np.exp(1j * float(x0) * np.asarray(t, dtype=np.float64))
        if self.kind == "compact_bump":
            w, b = self.params
            bump_cf = _bump_cf(float(b))
            return lambda t: (
                np.sinc(w * np.asarray(t, dtype=np.float64) / math.pi) * bump_cf(t)
            ).astype(np.complex128)
        if self.kind == "h_kappa":
            kappa, x0 = self.params
            return _grid_cf(*_h_kappa_grid(float(kappa), float(x0)))
        return self.custom["cf"]

    def density(self) -> Optional[Callable]:
        if self.kind == "uniform":
            (w,) = self.params
            return lambda x: np.where(np.abs(np.asarray(x, dtype=np.float64)) <= w, 0.5 / w, 0.0)
        if self.kind == "h_kappa":
            kappa, x0 = self.params
            spec = WeightSpec(kappa=float(kappa), x0=float(x0))
            return lambda x: h_kappa_eval(spec, x)
        if self.kind == "compact_bump":
            w, b = self.params
            xs, dens = _bump_uniform_density(float(w), float(b))
            return lambda x: np.interp(np.asarray(x, dtype=np.float64), xs, dens, left=0.0, right=0.0)
        if self.kind == "custom":
            return self.custom.get("density")
        return None  # point mass has no density

    def support_halfwidth(self) -> float:
        if self.kind == "uniform":
            return float(self.params[0])
        if self.kind == "point_mass":
            return abs(float(self.params[0])) + 1e-9
        if self.kind == "compact_bump":
            return float(self.params[0]) + 1.0 / float(self.params[1])
        if self.kind == "h_kappa":
            kappa, x0 = self.params
            return WeightSpec(kappa=float(kappa), x0=float(x0)).cutoff()
        return float(self.custom.get("support", 10.0))


@lru_cache(maxsize=8)
def _bump_cdf_table(b: float):
    xs = np.linspace(-1.0 / b, 1.0 / b, 4097)
    dens = mollifier_eval(b, xs)
    cdf = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) * 0.5 * np.diff(xs))])
    cdf /= cdf[-1]
    return cdf, xs


@lru_cache(maxsize=8)
def _bump_cf(b: float) -> Callable:
    base_x, base_w = np.polynomial.legendre.leggauss(64)
    u = base_x / b
    w = base_w / b * mollifier_eval(b, u)
    w = w / float(np.sum(w))

    def cf(t):
        t = np.asarray(t, dtype=np.float64)
        return np.exp(1j * t[..., None] * u) @ w.astype(np.complex128)

    return cf


@lru_cache(maxsize=8)
def _h_kappa_grid(kappa: float, x0: float):
    spec = WeightSpec(kappa=kappa, x0=x0)
    cut = spec.cutoff()
    xs = np.linspace(-cut, cut, 8193)
    return xs, h_kappa_eval(spec, xs)


@lru_cache(maxsize=8)
def _h_kappa_cdf_table(kappa: float, x0: float):
    xs, dens = _h_kappa_grid(kappa, x0)
    cdf = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) * 0.5 * np.diff(xs))])
    cdf /= cdf[-1]
    return cdf, xs


def _grid_cf(xs: np.ndarray, dens: np.ndarray) -> Callable:
    step = xs[1] - xs[0]
    mass = float(np.sum(dens) * step)

    def cf(t):
        t = np.asarray(t, dtype=np.float64)
        phases = np.exp(1j * t[..., None] * xs)
        return phases @ (dens * step / mass).astype(np.complex128)

    return cf


@lru_cache(maxsize=8)
def _bump_uniform_density(w: float, b: float):
    # density of Uniform(-w, w) * u_b by grid convolution
    step = min(w, 1.0 / b) / 256.0
    half = int(math.ceil((w + 1.0 / b + step) / step))
    xs = np.arange(-half, half + 1) * step
    uni = np.where(np.abs(xs) <= w, 0.5 / w, 0.0)
    taps = mollifier_eval(b, np.arange(-int(1.0 / (b * step)), int(1.0 / (b * step)) + 1) * step)
    taps = taps / (np.sum(taps) * step)
    return xs, np.convolve(uni, taps, mode="same") * step


@dataclass(frozen=True)
class AxisNoise:
    """One noise coordinate: kind in {g_density, uniform, laplace,
    point_mass, gaussian}, with its scalar parameter.  All kinds are
    symmetric so the block is mean-zero by construction; `centered` is
    recorded for the model contract."""

    kind: str
    param: float = 1.0
    centered: bool = True

    def __post_init__(self):
        if self.kind not in ("g_density", "uniform", "laplace", "point_mass", "gaussian"):
            raise ConfigError(f"unknown noise kind {self.kind!r}")
        if self.kind != "point_mass" and self.param <= 0:
            raise ConfigError("noise parameter must be positive")

    def cf(self) -> Callable:
        if self.kind == "g_density":
            return _g_pack(self.param).cf
        if self.kind == "uniform":
            w = self.param
            return lambda t: np.sinc(w * np.asarray(t, dtype=np.float64) / math.pi)
        if self.kind == "laplace":
            s = self.param
            return lambda t: 1.0 / (1.0 + (s * np.asarray(t, dtype=np.float64)) ** 2)
        if self.kind == "gaussian":
            s = self.param
            return lambda t: np.exp(-0.5 * (s * np.asarray(t, dtype=np.float64)) ** 2)
        return lambda t: np.ones_like(np.asarray(t, dtype=np.float64))

    def draw(self, n: int, rng) -> np.ndarray:
        if self.kind == "g_density":
            return _g_pack(self.param).sampler(n, rng)
        if self.kind == "uniform":
            return rng.uniform(-self.param, self.param, size=n)
        if self.kind == "laplace":
            return rng.laplace(0.0, self.param, size=n)
        if self.kind == "gaussian":
            return rng.normal(0.0, self.param, size=n)
        return np.zeros(n)


@lru_cache(maxsize=8)
def _g_pack(c: float) -> NoisePack:
    return noise_g(c)


def _block_cf(axes: tuple) -> Callable:
    def cf(t):
        t = np.atleast_2d(np.asarray(t, dtype=np.float64))
        out = np.ones(t.shape[0], dtype=np.complex128)
        for a, axis in enumerate(axes):
            out = out * axis.cf()(t[:, a])
        return out

    return cf


def _block_draw(axes: tuple, n: int, rng) -> np.ndarray:
    return np.column_stack([axis.draw(n, rng) for axis in axes])


# ---------------------------------------------------------------------------
# scenarios


@dataclass
class ScenarioSpec:
    """A fully specified observation scheme with oracle evaluators.

    Built through the make_* factories, which run the construction
    diagnostics (probe-grid CF non-nullity per first-block slice, noise CF
    floor on the working box) and reject failing configurations.
    """

    variant: str
    d1: int
    d2: int
    signal: Optional[SignalSpec]
    noise1: tuple
    noise2: tuple
    link_name: Optional[str] = None
    sources: Optional[tuple] = None
    mixing: Optional[np.ndarray] = None
    two_point: Optional[TwoPoint] = None
    perturbed: bool = False
    diagnostics: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.d1 + self.d2

    def sample(self, n: int, seed: int) -> SampleSet:
        """Reproducible draw: the master seed splits into one stream for the
        signal and one per noise block."""
        if n < 1:
            raise ConfigError("n must be >= 1")
        sig_ss, n1_ss, n2_ss = np.random.SeedSequence(seed).spawn(3)
        rng_sig = np.random.default_rng(sig_ss)
        e1 = _block_draw(self.noise1, n, np.random.default_rng(n1_ss))
        e2 = _block_draw(self.noise2, n, np.random.default_rng(n2_ss))
        if self.variant == "repeated":
            draw = self.signal.sampler()
            x = np.column_stack([draw(n, rng_sig) for _ in range(self.d1)])
            data = np.hstack([x + e1, x + e2])
        elif self.variant == "eiv":
            x = self.signal.sampler()(n, rng_sig)
            link = _LINKS[self.link_name]
            data = np.column_stack([x + e1[:, 0], link(x) + e2[:, 0]])
        elif self.variant == "ica":
            streams = sig_ss.spawn(len(self.sources))
            s = np.column_stack([
                src.sampler()(n, np.random.default_rng(ss))
                for src, ss in zip(self.sources, streams)
            ])
            data = s @ self.mixing.T + np.hstack([e1, e2])
        elif self.variant == "two_point":
            zeta = self.two_point.zeta_n if self.perturbed else self.two_point.zeta0
            grids = [zeta] + [self.two_point.zeta0] * (self.d - 1)
            s = np.column_stack([_grid_draw(g, n, rng_sig) for g in grids])
            data = s @ self.two_point.instance.matrix().T + np.hstack([e1, e2])
        else:
            raise ConfigError(f"unknown variant {self.variant!r}")
        return SampleSet(d1=self.d1, d2=self.d2, data=data)

    def signal_cf(self) -> Callable:
        """Joint CF of the signal part R on points of shape (n, d)."""
        if self.variant == "repeated":
            psi = self.signal.cf()

            def phi(t):
                t = np.atleast_2d(np.asarray(t, dtype=np.float64))
                out = np.ones(t.shape[0], dtype=np.complex128)
                for a in range(self.d1):
                    out = out * psi(t[:, a] + t[:, self.d1 + a])
                return out

            return phi
        if self.variant == "eiv":
            return _eiv_cf(self.signal, _LINKS[self.link_name])
        if self.variant == "ica":
            cfs = [src.cf() for src in self.sources]
            A = self.mixing

            def phi(t):
                t = np.atleast_2d(np.asarray(t, dtype=np.float64))
                args = t @ A
                out = np.ones(t.shape[0], dtype=np.complex128)
                for j, cf in enumerate(cfs):
                    out = out * cf(args[:, j])
                return out

            return phi
        zeta = self.two_point.zeta_n if self.perturbed else self.two_point.zeta0
        grids = [zeta] + [self.two_point.zeta0] * (self.d - 1)
        cfs = [_grid_cf(g.xs, g.values) for g in grids]
        A = self.two_point.instance.matrix()

        def phi(t):
            t = np.atleast_2d(np.asarray(t, dtype=np.float64))
            args = t @ A
            out = np.ones(t.shape[0], dtype=np.complex128)
            for j, cf in enumerate(cfs):
                out = out * cf(args[:, j])
            return out

        return phi

    def oracle(self):
        from .contrast import OracleModel

        return OracleModel(
            phi_R=self.signal_cf(),
            phi_Q1=_block_cf(self.noise1),
            phi_Q2=_block_cf(self.noise2),
        )

    def true_density(self) -> Optional[Callable]:
        """Joint density of R when it exists (ica, two_point); None for the
        degenerate repeated/eiv signals, whose joint law is singular."""
        if self.variant == "ica":
            dens = [src.density() for src in self.sources]
            if any(f is None for f in dens):
                return None
            A_inv = np.linalg.inv(self.mixing)
            det = abs(float(np.linalg.det(self.mixing)))

            def f(x):
                x = np.atleast_2d(np.asarray(x, dtype=np.float64))
                s = x @ A_inv.T
                out = np.full(x.shape[0], 1.0 / det)
                for j, fj in enumerate(dens):
                    out = out * fj(s[:, j])
                return out

            return f
        if self.variant == "two_point":
            return self.two_point.fn if self.perturbed else self.two_point.f0
        return None


def _grid_draw(g: GridFunction, n: int, rng) -> np.ndarray:
    dens = np.clip(g.values, 0.0, None)
    cdf = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) * 0.5) * g.step])
    cdf /= cdf[-1]
    return np.interp(rng.random(n), cdf, g.xs)


def _eiv_cf(signal: SignalSpec, link: Callable) -> Callable:
    dens = signal.density()
    if dens is None:
        if signal.kind == "point_mass":
            (x0,) = signal.params
            return lambda t: np.exp(
                1j
                * (
                    np.atleast_2d(t)[:, 0] * x0
                    + np.atleast_2d(t)[:, 1] * float(link(np.asarray([x0]))[0])
                )
            )
        raise ConfigError("errors-in-variables oracle CF needs a signal density")
    half = signal.support_halfwidth()
    base_x, base_w = np.polynomial.legendre.leggauss(160)
    xs = half * base_x
    ws = half * base_w * dens(xs)
    gxs = link(xs)

    def phi(t):
        t = np.atleast_2d(np.asarray(t, dtype=np.float64))
        phase = np.exp(1j * (t[:, :1] * xs + t[:, 1:2] * gxs))
        return phase @ ws.astype(np.complex128)

    return phi


# ---------------------------------------------------------------------------
# construction diagnostics and factories


def _h2_probe(phi: Callable, d1: int, d2: int) -> float:
    """min over probe z1 of max over probe z2 of |Phi_R(z1, z2)|."""
    g1 = np.stack(np.meshgrid(*([_PROBE_AXIS] * d1), indexing="ij"), axis=-1).reshape(-1, d1)
    g2 = np.stack(np.meshgrid(*([_PROBE_AXIS] * d2), indexing="ij"), axis=-1).reshape(-1, d2)
    worst = math.inf
    for z1 in g1:
        pts = np.hstack([np.tile(z1, (g2.shape[0], 1)), g2])
        worst = min(worst, float(np.max(np.abs(phi(pts)))))
    return worst


def _noise_floor(axes: tuple, nu: float) -> float:
    """min over the box of |block CF| = product of per-axis minima."""
    grid = np.linspace(-nu, nu, 81)
    out = 1.0
    for axis in axes:
        out *= float(np.min(np.abs(axis.cf()(grid))))
    return out


def _validate(spec: ScenarioSpec, nu: float, c_nu: float) -> ScenarioSpec:
    h2 = _h2_probe(spec.signal_cf(), spec.d1, spec.d2)
    if not (h2 > 1e-12):
        raise ConfigError("scenario rejected: joint CF vanishes on a probe slice")
    floors = (_noise_floor(spec.noise1, nu), _noise_floor(spec.noise2, nu))
    if min(floors) < c_nu:
        raise ConfigError(
            f"scenario rejected: noise CF floor {min(floors):.3e} below c_nu={c_nu}"
        )
    spec.diagnostics = {
        "h2_probe_min": h2,
        "noise_cf_floor_1": floors[0],
        "noise_cf_floor_2": floors[1],
        "nu": nu,
        "c_nu": c_nu,
    }
    return spec


def _as_axes(noise, d: int) -> tuple:
    if isinstance(noise, AxisNoise):
        return tuple([noise] * d)
    noise = tuple(noise)
    if len(noise) != d:
        raise ConfigError(f"need {d} per-axis noise entries, got {len(noise)}")
    return noise


def make_repeated(signal: SignalSpec, noise1, noise2, d1: int = 1,
                  nu: float = 1.0, c_nu: float = 1e-3) -> ScenarioSpec:
    """Two noisy copies of the same d1-dimensional signal (iid coordinates)."""
    spec = ScenarioSpec(
        variant="repeated", d1=d1, d2=d1, signal=signal,
        noise1=_as_axes(noise1, d1), noise2=_as_axes(noise2, d1),
    )
    return _validate(spec, nu, c_nu)


def make_eiv(signal: SignalSpec, noise1, noise2, link: str = "cubic_plus_x",
             nu: float = 1.0, c_nu: float = 1e-3) -> ScenarioSpec:
    """Noisy (X, g(X)) pair; the link must be one-to-one where the signal lives."""
    if link not in _LINKS:
        raise ConfigError(f"unknown link {link!r}; register it in scenarios._LINKS")
    spec = ScenarioSpec(
        variant="eiv", d1=1, d2=1, signal=signal,
        noise1=_as_axes(noise1, 1), noise2=_as_axes(noise2, 1),
        link_name=link,
    )
    return _validate(spec, nu, c_nu)


def make_ica(sources: Sequence[SignalSpec], mixing: np.ndarray, noise1, noise2,
             d1: int, nu: float = 1.0, c_nu: float = 1e-3) -> ScenarioSpec:
    """Noisy linear mixture Y = A S + e with independent 1-D sources."""
    A = np.asarray(mixing, dtype=np.float64)
    d = len(sources)
    if A.shape != (d, d):
        raise ConfigError(f"mixing matrix must be {d}x{d}")
    if not (1 <= d1 < d):
        raise ConfigError("need 1 <= d1 < d")
    d2 = d - d1
    if np.any(np.all(A[:d1] == 0, axis=0)) or np.any(np.all(A[d1:] == 0, axis=0)):
        raise ConfigError("every source must load on both observation blocks")
    if abs(np.linalg.det(A)) < 1e-12:
        raise ConfigError("mixing matrix is singular")
    spec = ScenarioSpec(
        variant="ica", d1=d1, d2=d2, signal=None,
        noise1=_as_axes(noise1, d1), noise2=_as_axes(noise2, d2),
        sources=tuple(sources), mixing=A,
    )
    return _validate(spec, nu, c_nu)


def make_two_point(two_point: TwoPoint, noise1, noise2, perturbed: bool = False,
                   nu: float = 1.0, c_nu: float = 1e-3) -> ScenarioSpec:
    """Observation scheme whose signal is one of the two-point densities."""
    inst = two_point.instance
    spec = ScenarioSpec(
        variant="two_point", d1=inst.d1, d2=inst.d2, signal=None,
        noise1=_as_axes(noise1, inst.d1), noise2=_as_axes(noise2, inst.d2),
        two_point=two_point, perturbed=perturbed,
    )
    return _validate(spec, nu, c_nu)


# ---------------------------------------------------------------------------
# translation alignment


def translation_align(estimate: DensityGrid, truth: Callable,
                      shift_window: float, step: float):
    """Grid-search the per-axis shift minimizing the lattice L2 error.

    Returns (best_shift, aligned_error); the zero shift is always in the
    search set, so the aligned error never exceeds the raw one.
    """
    if shift_window < step or step <= 0:
        raise ConfigError("need shift_window >= step > 0")
    lat = estimate.lattice
    axes = lat.axes()
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, lat.d)
    n_steps = int(math.floor(shift_window / step + 1e-9))
    shifts_1d = np.arange(-n_steps, n_steps + 1) * step
    vol = lat.cell_volume
    best = (math.inf, None)
    for shift in np.stack(
        np.meshgrid(*([shifts_1d] * lat.d), indexing="ij"), axis=-1
    ).reshape(-1, lat.d):
        truth_vals = np.asarray(truth(mesh - shift), dtype=np.float64)
        err = math.sqrt(float(np.sum((estimate.values.reshape(-1) - truth_vals) ** 2) * vol))
        if err < best[0] - 1e-15:
            best = (err, shift)
    return tuple(float(s) for s in best[1]), float(best[0])
