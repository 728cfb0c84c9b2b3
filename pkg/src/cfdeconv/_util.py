"""Small shared helpers: error types, deterministic reduction, hashing."""

from __future__ import annotations

import hashlib

import numpy as np

# chunk length for streaming passes over samples; fixed so that reduction
# order (and therefore output bytes) never depends on memory pressure
CHUNK = 1024


class ConfigError(ValueError):
    """A configuration value is missing, unknown, or out of range."""


class NumericalError(RuntimeError):
    """A computation produced non-finite or otherwise unusable values."""


class PairwiseAccumulator:
    """Streaming pairwise (tree) summation of equal-shaped arrays.

    Partial sums are merged only between equal tree levels, so the float
    rounding pattern is a function of the number of blocks alone.
    """

    def __init__(self):
        self._stack = []  # (level, array)

    def add(self, block):
        level = 0
        cur = np.asarray(block)
        while self._stack and self._stack[-1][0] == level:
            _, other = self._stack.pop()
            cur = cur + other
            level += 1
        self._stack.append((level, cur))

    def total(self):
        if not self._stack:
            raise ValueError("no blocks accumulated")
        acc = None
        for _, arr in self._stack:
            acc = arr if acc is None else acc + arr
        return acc


def content_hash(*parts) -> str:
    """Stable sha256 over arrays, strings, numbers, and nested tuples."""
    h = hashlib.sha256()
    for part in _flatten(parts):
        if isinstance(part, np.ndarray):
            arr = np.ascontiguousarray(part)
            h.update(str(arr.dtype).encode())
            h.update(str(arr.shape).encode())
            h.update(arr.tobytes())
        elif isinstance(part, (bytes, bytearray)):
            h.update(bytes(part))
        else:
            h.update(repr(part).encode())
        h.update(b"|")
    return h.hexdigest()


def _flatten(obj):
    if isinstance(obj, (tuple, list)):
        for item in obj:
            yield from _flatten(item)
    else:
        yield obj


def fmt17(x) -> str:
    """Float to text with 17 significant digits (round-trip exact)."""
    return format(float(x), ".17g")
