"""Monte Carlo orchestration: replicated estimation cells and rate fits.

A cell is one (sample size, kappa, replicate) pipeline pass: sample, ECF
tables, contrast minimization, truncated inversion, error scoring against
the scenario's oracle CF and (when one exists) its true density.  Cells are
deterministic given the plan seed; failures are recorded per cell and never
abort the run.  Reports carry no timing information so reruns are
byte-identical.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._util import ConfigError, NumericalError
from .adaptive import pilot_c_sigma, select_kappa, sigma_rule
from .contrast import OracleModel, QuadratureGrid, ecf_table_for_grid, make_grid, poly_tables
from .ecf import SampleSet
from .minimize import MinimizeConfig, minimize_contrast
from .multiindex_taylor import TaylorPoly, UpsilonParams, truncate
from .reconstruct import (
    DensityGrid,
    LatticeSpec,
    TuningRules,
    invert,
    l2_distance,
    m_rule,
    omega_rule,
)
from .scenarios import ScenarioSpec, translation_align


def default_lattice(d: int, half: float = 4.0, count: int = 33) -> LatticeSpec:
    return LatticeSpec(mins=(-half,) * d, maxs=(half,) * d, counts=(count,) * d)


@dataclass
class ExperimentPlan:
    """Declarative description of a replicated estimation experiment."""

    scenario: ScenarioSpec
    n_list: tuple
    replicates: int
    kappa_grid: tuple
    S: float
    beta: float = 1.0
    nu: float = 1.0
    nodes_per_axis: int = 48
    tuning_mode: str = "theoretical"
    m_opt: Optional[int] = None
    c_kappa: Optional[float] = None
    lattice: Optional[LatticeSpec] = None
    align_window: float = 0.5
    align_step: float = 0.05
    seed: int = 0
    restarts: int = 4
    workers: int = 1
    cell_budget_s: Optional[float] = None

    def __post_init__(self):
        self.n_list = tuple(int(n) for n in self.n_list)
        self.kappa_grid = tuple(float(k) for k in self.kappa_grid)
        if not self.n_list or any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise ConfigError("n_list must be nonempty and strictly increasing")
        if min(self.n_list) < 12:
            raise ConfigError("sample sizes below 12 have no truncation rule")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if not self.kappa_grid or any(not (0 < k <= 1) for k in self.kappa_grid):
            raise ConfigError("kappa grid must be nonempty within (0, 1]")
        if self.S <= 0 or self.nu <= 0:
            raise ConfigError("S and nu must be positive")
        if self.tuning_mode not in ("theoretical", "override"):
            raise ConfigError(f"unknown tuning mode {self.tuning_mode!r}")
        if self.tuning_mode == "override" and (self.m_opt is None or self.m_opt < 2):
            raise ConfigError("override tuning needs m_opt >= 2")
        if self.lattice is None:
            self.lattice = default_lattice(self.scenario.d)


@dataclass(frozen=True)
class CellResult:
    n: int
    kappa: float
    replicate: int
    seed: int
    status: str
    contrast_value: float
    cf_box_error: float
    l2_raw: float
    l2_aligned: float
    shift: tuple
    m_trunc: int
    m_opt: int
    omega: float
    no_density_truth: bool
    converged: bool
    message: str = ""


@dataclass
class ExperimentReport:
    plan_summary: dict
    rows: tuple
    aggregates: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.aggregates:
            self.aggregates = compute_aggregates(self.rows)


def cell_seed(master: int, n_index: int, kappa_index: int, replicate: int) -> int:
    ss = np.random.SeedSequence(entropy=master, spawn_key=(n_index, kappa_index, replicate))
    return int(ss.generate_state(1)[0])


def resolve_degrees(plan: ExperimentPlan, n: int, kappa: float) -> tuple:
    """(m_trunc, m_opt) for a cell.

    Theoretical mode follows the log-ratio rule but never truncates below
    degree 1 (the rule is 0 at any desk-scale n); the optimization degree is
    twice the truncation degree so the mass beyond the kept block is
    estimated rather than aliased.
    """
    if plan.tuning_mode == "override":
        m_opt = int(plan.m_opt)
        return max(m_opt // 2, 1), m_opt
    m_trunc = max(m_rule(n, kappa), 1)
    return m_trunc, 2 * m_trunc


def cf_box_error(poly: TaylorPoly, model: OracleModel, grid: QuadratureGrid) -> float:
    """L2 distance between candidate and oracle CF over the working box."""
    full_c = poly_tables(poly, grid)[0]
    full_r = model.tables(grid)[0]
    diff = np.abs(full_c - full_r) ** 2
    return float(math.sqrt(max(float(grid.w1 @ diff @ grid.w2), 0.0)))


def _truth_on_lattice(scenario: ScenarioSpec, lattice: LatticeSpec):
    truth = scenario.true_density()
    if truth is None:
        return None, None
    mesh = np.stack(np.meshgrid(*lattice.axes(), indexing="ij"), axis=-1)
    vals = np.asarray(truth(mesh.reshape(-1, lattice.d)), dtype=np.float64)
    return truth, DensityGrid(lattice=lattice, values=vals.reshape(lattice.counts))


@dataclass(frozen=True)
class EstimateOutcome:
    result: object
    density: DensityGrid
    m_trunc: int
    m_opt: int
    omega: float


def estimate_once(samples, grid: QuadratureGrid, lattice: LatticeSpec, *,
                  kappa: float, S: float, nu: float, m_opt: Optional[int] = None,
                  c_kappa: Optional[float] = None, restarts: int = 4,
                  seed: int = 0, table=None) -> EstimateOutcome:
    """One full estimation pass on a fixed sample.

    When m_opt is not given, both degrees follow the theoretical rule for
    the sample size (truncation clamped to at least 1, optimization at
    twice the truncation).  A precomputed ECF table for the same grid can
    be passed to avoid recomputing it across kappa values.
    """
    if m_opt is None:
        m_trunc = max(m_rule(samples.n, kappa), 1)
        m_opt = 2 * m_trunc
    else:
        m_opt = int(m_opt)
        m_trunc = max(m_opt // 2, 1)
    if table is None:
        table = ecf_table_for_grid(samples, grid)
    config = MinimizeConfig(
        params=UpsilonParams(kappa=kappa, S=S),
        m_opt=m_opt,
        tol=1e-12,
        restarts=restarts,
        seed=seed,
    )
    result = minimize_contrast(table, grid, config)
    rules = TuningRules(kappa=kappa, S=S, nu_est=nu, d=samples.d,
                        c_kappa=c_kappa)
    omega = omega_rule(m_trunc, rules)
    density = invert(truncate(result.estimate, m_trunc), omega, lattice)
    return EstimateOutcome(result=result, density=density, m_trunc=m_trunc,
                           m_opt=m_opt, omega=omega)


def _run_cell(plan, model, grid, truth, truth_grid, n_idx, k_idx, rep) -> CellResult:
    n, kappa = plan.n_list[n_idx], plan.kappa_grid[k_idx]
    seed = cell_seed(plan.seed, n_idx, k_idx, rep)
    start = time.monotonic()
    try:
        samples = plan.scenario.sample(n, seed)
        out = estimate_once(
            samples, grid, plan.lattice, kappa=kappa, S=plan.S, nu=plan.nu,
            m_opt=plan.m_opt if plan.tuning_mode == "override" else None,
            c_kappa=plan.c_kappa, restarts=plan.restarts, seed=seed,
        )
        result, density = out.result, out.density
        m_trunc, m_opt, omega = out.m_trunc, out.m_opt, out.omega
        cf_err = cf_box_error(result.estimate, model, grid)
        if truth is None:
            l2_raw, l2_aligned = float("nan"), float("nan")
            shift = (0.0,) * plan.scenario.d
        else:
            l2_raw = l2_distance(density, truth_grid, method="lattice")
            shift, l2_aligned = translation_align(
                density, truth, plan.align_window, plan.align_step
            )
        status = "ok"
        if plan.cell_budget_s is not None and time.monotonic() - start > plan.cell_budget_s:
            status = "timeout"
        return CellResult(
            n=n, kappa=kappa, replicate=rep, seed=seed, status=status,
            contrast_value=result.value, cf_box_error=cf_err,
            l2_raw=l2_raw, l2_aligned=l2_aligned, shift=tuple(shift),
            m_trunc=m_trunc, m_opt=m_opt, omega=omega,
            no_density_truth=truth is None, converged=result.converged,
        )
    except (ConfigError, NumericalError) as exc:
        m_trunc, m_opt = resolve_degrees(plan, n, kappa)
        return CellResult(
            n=n, kappa=kappa, replicate=rep, seed=seed,
            status="error", contrast_value=float("nan"),
            cf_box_error=float("nan"), l2_raw=float("nan"),
            l2_aligned=float("nan"), shift=(0.0,) * plan.scenario.d,
            m_trunc=m_trunc, m_opt=m_opt, omega=float("nan"),
            no_density_truth=truth is None, converged=False,
            message=f"{type(exc).__name__}: {exc}",
        )


def run(plan: ExperimentPlan) -> ExperimentReport:
    """Execute every (n, kappa, replicate) cell of the plan."""
    scenario = plan.scenario
    grid = make_grid(plan.nu, (scenario.d1, scenario.d2), plan.nodes_per_axis)
    model = scenario.oracle()
    truth, truth_grid = _truth_on_lattice(scenario, plan.lattice)
    keys = [
        (ni, ki, rep)
        for ni in range(len(plan.n_list))
        for ki in range(len(plan.kappa_grid))
        for rep in range(plan.replicates)
    ]
    if plan.workers > 1:
        with ThreadPoolExecutor(max_workers=plan.workers) as pool:
            rows = list(pool.map(
                lambda key: _run_cell(plan, model, grid, truth, truth_grid, *key), keys
            ))
    else:
        rows = [_run_cell(plan, model, grid, truth, truth_grid, *key) for key in keys]
    rows.sort(key=lambda r: (r.n, r.kappa, r.replicate))
    summary = {
        "variant": scenario.variant,
        "n_list": list(plan.n_list),
        "replicates": plan.replicates,
        "kappa_grid": list(plan.kappa_grid),
        "S": plan.S,
        "beta": plan.beta,
        "nu": plan.nu,
        "nodes_per_axis": plan.nodes_per_axis,
        "tuning_mode": plan.tuning_mode,
        "m_opt": plan.m_opt,
        "seed": plan.seed,
    }
    return ExperimentReport(plan_summary=summary, rows=tuple(rows))


_METRICS = ("contrast_value", "cf_box_error", "l2_raw", "l2_aligned")


def compute_aggregates(rows) -> dict:
    """Median and IQR per (n, kappa) over successful replicates."""
    out = {}
    cells = sorted({(r.n, r.kappa) for r in rows})
    for n, kappa in cells:
        ok = [r for r in rows if r.n == n and r.kappa == kappa and r.status == "ok"]
        entry = {
            "n_ok": len(ok),
            "n_error": sum(1 for r in rows if r.n == n and r.kappa == kappa and r.status == "error"),
            "n_timeout": sum(1 for r in rows if r.n == n and r.kappa == kappa and r.status == "timeout"),
        }
        for metric in _METRICS:
            vals = np.asarray([getattr(r, metric) for r in ok], dtype=np.float64)
            finite = vals[np.isfinite(vals)]
            if finite.size:
                entry[metric + "_median"] = float(np.median(finite))
                entry[metric + "_iqr"] = float(
                    np.percentile(finite, 75) - np.percentile(finite, 25)
                )
            else:
                entry[metric + "_median"] = float("nan")
                entry[metric + "_iqr"] = float("nan")
        out[f"n={n} kappa={kappa:.17g}"] = entry
    return out


@dataclass(frozen=True)
class RateFit:
    slope: float
    ci_low: float
    ci_high: float
    n_points: int


def fit_rate(report: ExperimentReport, quantity: str = "cf_box_error",
             kappa: Optional[float] = None, bootstrap: int = 200,
             seed: int = 0) -> RateFit:
    """Log-log slope of the median error against n, with a bootstrap CI.

    Needs at least three sample sizes; exact-zero medians mean the quantity
    is degenerate and there is no rate to fit.
    """
    if quantity not in _METRICS:
        raise ConfigError(f"unknown quantity {quantity!r}")
    rows = [r for r in report.rows if r.status == "ok"]
    if kappa is not None:
        rows = [r for r in rows if r.kappa == kappa]
    ns = sorted({r.n for r in rows})
    if len(ns) < 3:
        raise ConfigError("rate fitting needs at least three sample sizes")
    groups = []
    for n in ns:
        vals = np.asarray(
            [getattr(r, quantity) for r in rows if r.n == n], dtype=np.float64
        )
        vals = vals[np.isfinite(vals)]
        if vals.size == 0:
            raise ConfigError(f"no finite values at n={n}")
        groups.append(vals)
    medians = np.array([np.median(g) for g in groups])
    if np.any(medians <= 0):
        raise ConfigError("degenerate zero errors; no rate to fit")
    log_n = np.log(np.asarray(ns, dtype=np.float64))
    slope = float(np.polyfit(log_n, np.log(medians), 1)[0])
    rng = np.random.default_rng(seed)
    boot = np.empty(bootstrap)
    for b in range(bootstrap):
        med = np.array([
            np.median(rng.choice(g, size=g.size, replace=True)) for g in groups
        ])
        med = np.maximum(med, 1e-300)
        boot[b] = np.polyfit(log_n, np.log(med), 1)[0]
    return RateFit(
        slope=slope,
        ci_low=float(np.percentile(boot, 2.5)),
        ci_high=float(np.percentile(boot, 97.5)),
        n_points=len(ns),
    )


# ---------------------------------------------------------------------------
# adaptive pipeline (sample splitting pilot, then full-sample selection)


@dataclass(frozen=True)
class AdaptiveOutcome:
    kappa_hat: float
    c_sigma: float
    sigma_at: dict
    selection: object
    chosen: DensityGrid
    full: dict


def adapt_from_samples(samples, grid: QuadratureGrid, lattice: LatticeSpec, *,
                       kappa_grid, S: float, beta: float, nu: float,
                       c_kappa: Optional[float] = None, restarts: int = 4,
                       seed: int = 0) -> AdaptiveOutcome:
    """Data-driven kappa selection on a fixed sample.

    The penalty scale comes from a split pilot: each half of the sample
    yields a reconstruction per candidate kappa, and the largest rescaled
    half-vs-half distance calibrates c_sigma.  Full-sample reconstructions
    then feed the pairwise-comparison selector.
    """
    kappa_grid = tuple(float(k) for k in kappa_grid)
    if not kappa_grid:
        raise ConfigError("kappa grid must be nonempty")
    n = samples.n
    half = n // 2
    half1 = SampleSet(d1=samples.d1, d2=samples.d2, data=samples.data[:half])
    half2 = SampleSet(d1=samples.d1, d2=samples.d2, data=samples.data[half:])
    table1 = ecf_table_for_grid(half1, grid)
    table2 = ecf_table_for_grid(half2, grid)
    table_full = ecf_table_for_grid(samples, grid)
    pilot_rows = []
    full_grids = {}
    for kappa in kappa_grid:
        opts = dict(kappa=kappa, S=S, nu=nu, c_kappa=c_kappa,
                    restarts=restarts, seed=seed)
        g1 = estimate_once(half1, grid, lattice, table=table1, **opts).density
        g2 = estimate_once(half2, grid, lattice, table=table2, **opts).density
        pilot_rows.append((kappa, g1, g2))
        full_grids[kappa] = estimate_once(
            samples, grid, lattice, table=table_full, **opts
        ).density
    c_sigma = pilot_c_sigma(pilot_rows, n, beta)
    report = select_kappa(full_grids, n, beta, c_sigma)
    sigma_at = {k: sigma_rule(n, k, beta, c_sigma) for k in kappa_grid}
    return AdaptiveOutcome(
        kappa_hat=report.kappa_hat, c_sigma=c_sigma, sigma_at=sigma_at,
        selection=report, chosen=full_grids[report.kappa_hat], full=full_grids,
    )


@dataclass(frozen=True)
class AdaptiveCell:
    n: int
    seed: int
    kappa_hat: float
    c_sigma: float
    sigma_at: dict
    aligned_error: float
    shift: tuple
    rows: tuple


def adaptive_run(plan: ExperimentPlan, n: int, seed: int) -> AdaptiveCell:
    """One adaptive selection pass at sample size n, scored against truth."""
    scenario = plan.scenario
    grid = make_grid(plan.nu, (scenario.d1, scenario.d2), plan.nodes_per_axis)
    truth, _ = _truth_on_lattice(scenario, plan.lattice)
    samples = scenario.sample(n, seed)
    outcome = adapt_from_samples(
        samples, grid, plan.lattice, kappa_grid=plan.kappa_grid, S=plan.S,
        beta=plan.beta, nu=plan.nu, c_kappa=plan.c_kappa,
        restarts=plan.restarts, seed=seed,
    )
    if truth is None:
        aligned, shift = float("nan"), (0.0,) * scenario.d
    else:
        shift, aligned = translation_align(
            outcome.chosen, truth, plan.align_window, plan.align_step
        )
    return AdaptiveCell(
        n=n, seed=seed, kappa_hat=outcome.kappa_hat, c_sigma=outcome.c_sigma,
        sigma_at=outcome.sigma_at, aligned_error=aligned, shift=tuple(shift),
        rows=outcome.selection.rows,
    )
