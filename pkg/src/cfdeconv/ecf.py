"""Empirical characteristic function of two-block samples.

Observations are rows Y = (Y1, Y2) with block dimensions (d1, d2); the
empirical CF at t is the sample mean of exp(i t . Y).  Evaluation streams
over fixed-size sample chunks with tree-merged partial sums, so results are
bit-reproducible regardless of platform memory heuristics.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ._util import CHUNK, ConfigError, PairwiseAccumulator, fmt17


@dataclass(frozen=True)
class SampleSet:
    """An (n, d1+d2) array of observations split into two blocks."""

    d1: int
    d2: int
    data: np.ndarray

    def __post_init__(self):
        if self.d1 < 1 or self.d2 < 1:
            raise ConfigError(f"block dimensions must be >= 1, got ({self.d1}, {self.d2})")
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[1] != self.d1 + self.d2:
            raise ConfigError(
                f"data must have shape (n, {self.d1 + self.d2}), got {data.shape}"
            )
        if data.shape[0] < 1:
            raise ConfigError("need at least one observation")
        if not np.all(np.isfinite(data)):
            raise ConfigError("sample contains non-finite values")
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.d1 + self.d2


@dataclass(frozen=True)
class EcfTable:
    """Empirical CF tabulated on a tensor grid and its two embedded axes.

    `full` holds values at (t1, t2) pairs, flattened C-order over the block-1
    then block-2 lattice; `first` and `second` hold the values at (t1, 0) and
    (0, t2).  `grid_id` ties the table to the grid that produced it.
    """

    grid_id: str
    n: int
    shape1: tuple
    shape2: tuple
    first: np.ndarray
    second: np.ndarray
    full: np.ndarray


def ecf_eval(samples: SampleSet, t) -> np.ndarray:
    """Empirical CF at points t of shape (..., d) (or a single point (d,))."""
    t = np.asarray(t, dtype=np.float64)
    scalar = t.ndim == 1
    pts = t.reshape(-1, samples.d)
    if pts.shape[-1] != samples.d:
        raise ConfigError(f"points have dimension {pts.shape[-1]}, expected {samples.d}")
    acc = PairwiseAccumulator()
    data = samples.data
    for start in range(0, samples.n, CHUNK):
        block = data[start : start + CHUNK]
        acc.add(np.exp(1j * (block @ pts.T)).sum(axis=0))
    out = acc.total() / samples.n
    if scalar:
        return complex(out[0])
    return out.reshape(t.shape[:-1])


def _block_phases(block_data, axis_nodes):
    """exp(i y.t) over the tensor lattice of the given per-axis node arrays,
    flattened C-order (first axis slowest)."""
    vals = np.ones((block_data.shape[0], 1), dtype=np.complex128)
    for a, nodes in enumerate(axis_nodes):
        e = np.exp(1j * np.outer(block_data[:, a], nodes))
        vals = (vals[:, :, None] * e[:, None, :]).reshape(block_data.shape[0], -1)
    return vals


def ecf_on_grid(samples: SampleSet, axis_nodes, grid_id: str = "") -> EcfTable:
    """Tabulate the empirical CF on a tensor grid.

    Parameters
    ----------
    axis_nodes : sequence of d arrays
        Node list per coordinate; the first d1 belong to block 1.
    grid_id : str
        Identifier copied into the table for downstream consistency checks.

    The per-axis complex exponentials are formed once per sample chunk and
    tensored, which is the only O(n * grid) work.
    """
    if len(axis_nodes) != samples.d:
        raise ConfigError(f"expected {samples.d} axis node arrays, got {len(axis_nodes)}")
    nodes = [np.asarray(a, dtype=np.float64).reshape(-1) for a in axis_nodes]
    nodes1, nodes2 = nodes[: samples.d1], nodes[samples.d1 :]
    acc_full, acc_1, acc_2 = PairwiseAccumulator(), PairwiseAccumulator(), PairwiseAccumulator()
    data = samples.data
    for start in range(0, samples.n, CHUNK):
        block = data[start : start + CHUNK]
        b1 = _block_phases(block[:, : samples.d1], nodes1)
        b2 = _block_phases(block[:, samples.d1 :], nodes2)
        acc_full.add(b1.T @ b2)
        acc_1.add(b1.sum(axis=0))
        acc_2.add(b2.sum(axis=0))
    n = samples.n
    return EcfTable(
        grid_id=grid_id,
        n=n,
        shape1=tuple(len(a) for a in nodes1),
        shape2=tuple(len(a) for a in nodes2),
        first=acc_1.total() / n,
        second=acc_2.total() / n,
        full=acc_full.total() / n,
    )


def second_moment(samples: SampleSet) -> float:
    """Mean squared Euclidean norm of the observations."""
    acc = PairwiseAccumulator()
    for start in range(0, samples.n, CHUNK):
        block = samples.data[start : start + CHUNK]
        acc.add((block * block).sum())
    return float(acc.total() / samples.n)


def export_csv(samples: SampleSet, path) -> None:
    """Write observations as CSV with header y1..yd, 17 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"y{k + 1}" for k in range(samples.d)])
        for row in samples.data:
            writer.writerow([fmt17(v) for v in row])


def load_csv(path, d1: int, d2: int) -> SampleSet:
    """Read a CSV written by export_csv back into a SampleSet."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        expected = [f"y{k + 1}" for k in range(d1 + d2)]
        if header != expected:
            raise ConfigError(f"unexpected CSV header {header}, expected {expected}")
        rows = [[float(v) for v in row] for row in reader if row]
    return SampleSet(d1=d1, d2=d2, data=np.array(rows, dtype=np.float64))
