"""Multi-index bookkeeping and truncated Taylor candidates for CF estimation.

A candidate characteristic function is represented by its Taylor coefficients
c_i over multi-indices i with total order at most `max_degree`.  Candidates
satisfy two structural constraints that this module enforces by construction
rather than by validation:

* c_0 = 1 (a characteristic function equals 1 at the origin), and
* the Hermitian parity c_i real for even ``|i|_1`` and purely imaginary for
  odd ``|i|_1``, which encodes conj(phi(t)) = phi(-t).

Each coefficient is therefore stored as a single real number `theta[k]`; the
complex coefficient is theta[k] or 1j*theta[k] depending on order parity.

The admissible class with decay parameters (kappa, S) constrains coefficient
moduli by S^k k^(-kappa k) at order k; see `upsilon_bound`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._util import ConfigError, content_hash


@dataclass(frozen=True)
class MultiIndex:
    """A tuple of nonnegative integer exponents, one per coordinate."""

    entries: tuple

    def __post_init__(self):
        if not all(isinstance(e, (int, np.integer)) and e >= 0 for e in self.entries):
            raise ConfigError(f"multi-index entries must be nonnegative integers: {self.entries}")
        object.__setattr__(self, "entries", tuple(int(e) for e in self.entries))

    @property
    def order(self) -> int:
        return sum(self.entries)

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class UpsilonParams:
    """Decay parameters (kappa, S) of the admissible coefficient class."""

    kappa: float
    S: float

    def __post_init__(self):
        if not (0.0 < self.kappa <= 1.0):
            raise ConfigError(f"kappa must lie in (0, 1], got {self.kappa}")
        if not (self.S > 0.0):
            raise ConfigError(f"S must be positive, got {self.S}")


def _compositions(total, parts):
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def index_table(d: int, max_degree: int):
    """All multi-indices in d coordinates with total order <= max_degree.

    Returns (entries, orders, position): an (N, d) int array in
    total-degree-then-lexicographic order, the (N,) total orders, and a dict
    mapping each index tuple to its row.  The zero index is always row 0.
    """
    if d < 0 or max_degree < 0:
        raise ConfigError("dimension and degree must be nonnegative")
    rows = []
    for total in range(max_degree + 1):
        rows.extend(_compositions(total, d))
    entries = np.array(rows, dtype=np.int64).reshape(len(rows), d)
    orders = entries.sum(axis=1)
    position = {tuple(int(v) for v in row): k for k, row in enumerate(entries)}
    entries.setflags(write=False)
    orders.setflags(write=False)
    return entries, orders, position


@lru_cache(maxsize=None)
def block_split(dims: tuple, max_degree: int):
    """Per-block pattern tables for indices split as (first d1, last d2) axes.

    Returns (p1, p2, n1, n2): for each full index row, the row of its first-
    block pattern in index_table(d1, max_degree) and of its second-block
    pattern in index_table(d2, max_degree), plus the two pattern counts.
    """
    d1, d2 = dims
    entries, _, _ = index_table(d1 + d2, max_degree)
    _, _, pos1 = index_table(d1, max_degree)
    _, _, pos2 = index_table(d2, max_degree)
    p1 = np.array([pos1[tuple(row[:d1])] for row in entries], dtype=np.int64)
    p2 = np.array([pos2[tuple(row[d1:])] for row in entries], dtype=np.int64)
    p1.setflags(write=False)
    p2.setflags(write=False)
    return p1, p2, len(pos1), len(pos2)


@dataclass
class TaylorPoly:
    """Truncated Taylor candidate with structural parity.

    Parameters
    ----------
    dims : tuple
        (d1, d2) coordinate split; the total dimension is d1 + d2.  A second
        block of size 0 is allowed (used for single-block slices).
    max_degree : int
        Total-order truncation degree, >= 0.
    theta : ndarray
        One real number per index in ``index_table(d, max_degree)`` order;
        the complex coefficient is theta (even order) or 1j*theta (odd).
    cf_candidate : bool
        When True (default) the zero-index coefficient is pinned to 1.
    """

    dims: tuple
    max_degree: int
    theta: np.ndarray
    cf_candidate: bool = True

    def __post_init__(self):
        d1, d2 = self.dims
        if d1 < 0 or d2 < 0 or d1 + d2 < 1:
            raise ConfigError(f"invalid dims {self.dims}")
        if self.max_degree < 0:
            raise ConfigError("max_degree must be >= 0")
        entries, _, _ = index_table(self.d, self.max_degree)
        theta = np.array(self.theta, dtype=np.float64).reshape(-1)
        if theta.shape[0] != entries.shape[0]:
            raise ConfigError(
                f"theta has {theta.shape[0]} entries, expected {entries.shape[0]} "
                f"for d={self.d}, max_degree={self.max_degree}"
            )
        if self.cf_candidate:
            theta[0] = 1.0
        self.theta = theta

    @property
    def d(self) -> int:
        return self.dims[0] + self.dims[1]

    @property
    def orders(self) -> np.ndarray:
        return index_table(self.d, self.max_degree)[1]

    @property
    def coeffs(self) -> np.ndarray:
        """Complex coefficient vector in index_table order."""
        phase = np.where(self.orders % 2 == 0, 1.0 + 0.0j, 1.0j)
        return self.theta * phase

    def coeff(self, index) -> complex:
        entries = tuple(index.entries if isinstance(index, MultiIndex) else index)
        pos = index_table(self.d, self.max_degree)[2][entries]
        return complex(self.coeffs[pos])

    def content_hash(self) -> str:
        return content_hash("poly", self.dims, self.max_degree, self.cf_candidate, self.theta)

    def copy(self) -> "TaylorPoly":
        return TaylorPoly(self.dims, self.max_degree, self.theta.copy(), self.cf_candidate)


def monomial_matrix(pts: np.ndarray, d: int, max_degree: int) -> np.ndarray:
    """Monomial values t^i for every index_table(d, max_degree) entry.

    pts has shape (N, d); the result has one column per multi-index, so a
    batch of polynomials sharing (d, max_degree) evaluates as one matrix
    product against their stacked coefficient vectors.
    """
    if pts.shape[-1] != d:
        raise ConfigError(f"points have dimension {pts.shape[-1]}, expected {d}")
    entries, _, _ = index_table(d, max_degree)
    vals = np.ones((pts.shape[0], entries.shape[0]))
    for a in range(d):
        powers = pts[:, a, None] ** np.arange(max_degree + 1)
        vals *= powers[:, entries[:, a]]
    return vals


def evaluate(poly: TaylorPoly, t) -> np.ndarray:
    """Evaluate the truncated series at points t of shape (..., d).

    Returns a complex array of the batch shape (a scalar for a single point).
    """
    t = np.asarray(t, dtype=np.float64)
    if t.shape[-1] != poly.d:
        raise ConfigError(f"points have dimension {t.shape[-1]}, expected {poly.d}")
    scalar = t.ndim == 1
    pts = t.reshape(-1, poly.d)
    out = monomial_matrix(pts, poly.d, poly.max_degree) @ poly.coeffs
    if scalar:
        return complex(out[0])
    return out.reshape(t.shape[:-1])


def upsilon_bound(index, params: UpsilonParams) -> float:
    """Admissible modulus S^k k^(-kappa k) at total order k = |index|_1.

    The zero index carries the pinned coefficient 1 and has no decay bound;
    asking for it is an error.
    """
    if isinstance(index, MultiIndex):
        k = index.order
    elif isinstance(index, (int, np.integer)):
        k = int(index)
    else:
        k = int(sum(index))
    if k == 0:
        raise ConfigError("the zero index is pinned to 1 and has no modulus bound")
    return float(params.S**k * float(k) ** (-params.kappa * k))


def _bound_vector(orders: np.ndarray, params: UpsilonParams) -> np.ndarray:
    k = orders.astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        b = params.S**k * np.where(k > 0, k, 1.0) ** (-params.kappa * k)
    b[orders == 0] = np.inf
    return b


def project_upsilon(poly: TaylorPoly, params: UpsilonParams) -> TaylorPoly:
    """Project onto the admissible class: pin c_0 = 1, clamp coefficient
    moduli to their order bound preserving sign.  Idempotent."""
    bounds = _bound_vector(poly.orders, params)
    theta = np.clip(poly.theta, -bounds, bounds)
    theta[0] = 1.0
    return TaylorPoly(poly.dims, poly.max_degree, theta, cf_candidate=True)


def truncate(poly: TaylorPoly, m: int) -> TaylorPoly:
    """Drop all coefficients of total order above m."""
    if m < 0:
        raise ConfigError("truncation degree must be >= 0")
    if m >= poly.max_degree:
        return poly.copy()
    n_keep = index_table(poly.d, m)[0].shape[0]
    return TaylorPoly(poly.dims, m, poly.theta[:n_keep].copy(), poly.cf_candidate)


def slice_block(poly: TaylorPoly, block: int) -> TaylorPoly:
    """Restriction to one block: block 1 gives t -> poly(t, 0), block 2 gives
    t -> poly(0, t).  The result is a single-block candidate of the same
    degree in d_block coordinates."""
    if block not in (1, 2):
        raise ConfigError("block must be 1 or 2")
    d1, d2 = poly.dims
    d_keep = d1 if block == 1 else d2
    if d_keep == 0:
        raise ConfigError(f"block {block} has dimension 0")
    entries, _, _ = index_table(poly.d, poly.max_degree)
    other = entries[:, d1:] if block == 1 else entries[:, :d1]
    keep = other.sum(axis=1) == 0
    kept_entries = (entries[:, :d1] if block == 1 else entries[:, d1:])[keep]
    _, _, pos = index_table(d_keep, poly.max_degree)
    theta = np.zeros(len(pos))
    rows = np.array([pos[tuple(r)] for r in kept_entries], dtype=np.int64)
    theta[rows] = poly.theta[keep]
    return TaylorPoly((d_keep, 0), poly.max_degree, theta, poly.cf_candidate)


def random_member(params: UpsilonParams, dims: tuple, max_degree: int, rng) -> TaylorPoly:
    """Draw an admissible candidate with each coefficient uniform on its
    modulus interval [-bound, bound]."""
    d = dims[0] + dims[1]
    _, orders, _ = index_table(d, max_degree)
    bounds = _bound_vector(orders, params)
    theta = rng.uniform(-1.0, 1.0, size=orders.shape[0]) * np.where(np.isfinite(bounds), bounds, 1.0)
    return TaylorPoly(dims, max_degree, theta, cf_candidate=True)


def to_json_record(poly: TaylorPoly) -> dict:
    """JSON-safe record: dims, degree, and a [i_1..i_d, re, im] coefficient list.

    Zero coefficients are omitted except for the pinned zero index.
    """
    entries, _, _ = index_table(poly.d, poly.max_degree)
    coeffs = poly.coeffs
    rows = []
    for k in range(entries.shape[0]):
        c = coeffs[k]
        if k > 0 and c == 0:
            continue
        rows.append([int(v) for v in entries[k]] + [float(c.real), float(c.imag)])
    return {
        "dims": [int(poly.dims[0]), int(poly.dims[1])],
        "max_degree": int(poly.max_degree),
        "cf_candidate": bool(poly.cf_candidate),
        "coeffs": rows,
    }


def from_json_record(record: dict) -> TaylorPoly:
    """Inverse of to_json_record; validates the parity structure."""
    dims = tuple(record["dims"])
    max_degree = int(record["max_degree"])
    cf_candidate = bool(record.get("cf_candidate", True))
    d = dims[0] + dims[1]
    _, orders, pos = index_table(d, max_degree)
    theta = np.zeros(orders.shape[0])
    for row in record["coeffs"]:
        entries = tuple(int(v) for v in row[:d])
        re, im = float(row[d]), float(row[d + 1])
        k = pos.get(entries)
        if k is None:
            raise ConfigError(f"index {entries} outside degree {max_degree}")
        if orders[k] % 2 == 0:
            if im != 0.0:
                raise ConfigError(f"even-order index {entries} must have a real coefficient")
            theta[k] = re
        else:
            if re != 0.0:
                raise ConfigError(f"odd-order index {entries} must have an imaginary coefficient")
            theta[k] = im
    return TaylorPoly(dims, max_degree, theta, cf_candidate)
