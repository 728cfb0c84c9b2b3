"""Projected multi-start minimization of the empirical contrast.

The decision variable is the real parity-reduced coefficient vector of a
TaylorPoly; feasibility (pinned unit value at zero, per-order modulus caps)
is restored by projection after every accepted step.  The gradient is exact:
the contrast is a quadratic form of the candidate's grid tables, which factor
through the pattern matrices, so each partial derivative reduces to entries
of three small matrix products.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._util import ConfigError, NumericalError
from .contrast import QuadratureGrid, _GridTables, contrast_empirical, poly_tables
from .ecf import EcfTable
from .multiindex_taylor import (
    TaylorPoly,
    UpsilonParams,
    _bound_vector,
    index_table,
    project_upsilon,
)


@dataclass
class MinimizeConfig:
    """Knobs for the projected-gradient search.

    tol is the absolute improvement below which the run is considered
    stalled (checked over a 25-iteration window); callers typically set it
    to 1/n for a sample of size n.
    """

    params: UpsilonParams
    m_opt: int
    tol: float
    restarts: int = 4
    max_iters: int = 400
    step_init: float = 1.0
    armijo: float = 1e-4
    grad_tol: float = 1e-9
    stall_window: int = 25
    seed: int = 0
    extra_constraint: callable = None

    def __post_init__(self):
        if self.m_opt < 1:
            raise ConfigError(f"m_opt must be >= 1, got {self.m_opt}")
        if self.restarts < 1:
            raise ConfigError(f"restarts must be >= 1, got {self.restarts}")
        if self.tol <= 0 or self.max_iters < 1:
            raise ConfigError("tol must be positive and max_iters >= 1")


@dataclass
class MinimizeResult:
    estimate: TaylorPoly
    value: float
    trace: np.ndarray
    restarts_used: int
    converged: bool
    grad_norm: float


def contrast_gradient(poly: TaylorPoly, table: EcfTable, grid: QuadratureGrid) -> np.ndarray:
    """Exact gradient of the empirical contrast in the theta coordinates.

    Pinned coordinates (the unit value at the zero index) get gradient 0.
    """
    if poly.dims != grid.dims:
        raise ConfigError(f"poly dims {poly.dims} != grid dims {grid.dims}")
    if table.grid_id and table.grid_id != grid.grid_id:
        raise ConfigError("ECF table was computed on a different grid")
    gt = _GridTables.get(grid, poly.max_degree)
    full_p, first_p, second_p = poly_tables(poly, grid)
    A = full_p * (table.first[:, None] * table.second[None, :]) - table.full * (
        first_p[:, None] * second_p[None, :]
    )
    B = (grid.w1[:, None] * grid.w2[None, :]) * np.conj(A)
    T1 = gt.U.T @ (B * (table.first[:, None] * table.second[None, :])) @ gt.W
    S1 = gt.U.T @ ((B * table.full) @ second_p)
    S2 = gt.W.T @ ((B * table.full).T @ first_p)
    orders = poly.orders
    phase = np.where(orders % 2 == 0, 1.0 + 0.0j, 1.0j)
    inner = T1[gt.p1, gt.p2]
    inner = inner - np.where(gt.p2 == 0, S1[gt.p1], 0.0)
    inner = inner - np.where(gt.p1 == 0, S2[gt.p2], 0.0)
    grad = 2.0 * np.real(phase * inner)
    if poly.cf_candidate:
        grad[0] = 0.0
    if not np.all(np.isfinite(grad)):
        raise NumericalError("non-finite contrast gradient")
    return grad


def _ls_init(table: EcfTable, grid: QuadratureGrid, m_opt: int) -> TaylorPoly:
    """Weighted least-squares fit of the ECF on the full grid, then projection.

    The real/imaginary parts are stacked so the parity-reduced coordinates
    stay real; the pinned zero coefficient is moved to the right-hand side.
    """
    d = grid.d
    gt = _GridTables.get(grid, m_opt)
    _, orders, _ = index_table(d, m_opt)
    n_idx = orders.shape[0]
    phase = np.where(orders % 2 == 0, 1.0 + 0.0j, 1.0j)
    design = (
        gt.U[:, gt.p1].reshape(gt.U.shape[0], 1, n_idx)
        * gt.W[:, gt.p2].reshape(1, gt.W.shape[0], n_idx)
    ).reshape(-1, n_idx) * phase
    sqw = np.sqrt(np.outer(grid.w1, grid.w2)).reshape(-1)
    target = table.full.reshape(-1) - design[:, 0]
    lhs = design[:, 1:] * sqw[:, None]
    rhs = target * sqw
    stacked = np.concatenate([lhs.real, lhs.imag], axis=0)
    stacked_rhs = np.concatenate([rhs.real, rhs.imag])
    theta_rest, *_ = np.linalg.lstsq(stacked, stacked_rhs, rcond=None)
    theta = np.concatenate([[1.0], theta_rest])
    return TaylorPoly(grid.dims, m_opt, theta, cf_candidate=True)


def _feasible(poly: TaylorPoly, config: MinimizeConfig) -> bool:
    if config.extra_constraint is None:
        return True
    return bool(config.extra_constraint(poly))


def minimize_contrast(table: EcfTable, grid: QuadratureGrid, config: MinimizeConfig) -> MinimizeResult:
    """Multi-start projected gradient descent on the empirical contrast.

    Start 0 is the projected least-squares fit to the ECF; the remaining
    starts draw coefficients uniformly inside their modulus boxes.  Each
    accepted iterate is the projection of a backtracked gradient step
    (halving from step_init with an Armijo condition).  Ties across restarts
    resolve to the earliest restart index.
    """
    d1, d2 = grid.dims
    _, orders, _ = index_table(d1 + d2, config.m_opt)
    bounds = _bound_vector(orders, config.params)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))

    starts = [project_upsilon(_ls_init(table, grid, config.m_opt), config.params)]
    for _ in range(config.restarts - 1):
        theta = rng.uniform(-1.0, 1.0, size=orders.shape[0])
        theta *= np.where(np.isfinite(bounds), bounds, 1.0)
        cand = TaylorPoly(grid.dims, config.m_opt, theta, cf_candidate=True)
        starts.append(project_upsilon(cand, config.params))

    best = None
    for r_idx, start in enumerate(starts):
        if not _feasible(start, config):
            continue
        poly = start
        value = contrast_empirical(poly, table, grid)
        trace = [value]
        grad = contrast_gradient(poly, table, grid)
        converged = False
        for it in range(config.max_iters):
            gnorm = float(np.linalg.norm(grad))
            if gnorm < config.grad_tol:
                converged = True
                break
            step = config.step_init
            accepted = None
            while step > 1e-14:
                cand = TaylorPoly(
                    grid.dims,
                    config.m_opt,
                    poly.theta - step * grad,
                    cf_candidate=poly.cf_candidate,
                )
                cand = project_upsilon(cand, config.params)
                if _feasible(cand, config):
                    cand_val = contrast_empirical(cand, table, grid)
                    if cand_val <= value - config.armijo * step * gnorm**2:
                        accepted = (cand, cand_val)
                        break
                step *= 0.5
            if accepted is None:
                converged = True
                break
            poly, value = accepted
            trace.append(value)
            grad = contrast_gradient(poly, table, grid)
            window = config.stall_window
            if len(trace) > window and trace[-window - 1] - value < config.tol:
                converged = True
                break
        entry = (value, r_idx, poly, np.array(trace), converged, float(np.linalg.norm(grad)))
        if best is None or entry[0] < best[0]:
            best = entry
    if best is None:
        raise NumericalError("no feasible start satisfied the extra constraint")
    value, r_idx, poly, trace, converged, gnorm = best
    return MinimizeResult(
        estimate=poly,
        value=value,
        trace=trace,
        restarts_used=len(starts),
        converged=converged,
        grad_norm=gnorm,
    )
