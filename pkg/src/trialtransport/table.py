"""Observed-data contingency table over (S, X, A, Y)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np


class TableError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ContingencyTable:
    """Integer counts indexed ``counts[s, x, a, y]``.

    ``s`` and ``y`` are binary; the covariate and treatment cardinalities are
    the sizes of the middle axes and may exceed the largest observed level.
    """

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 4 or c.shape[0] != 2 or c.shape[3] != 2:
            raise TableError(f"counts must have shape (2, n_x, n_a, 2), got {c.shape}")
        if not np.issubdtype(c.dtype, np.integer):
            if not np.all(np.equal(np.mod(c, 1), 0)):
                raise TableError("counts must be integers")
        c = c.astype(np.int64)
        if (c < 0).any():
            raise TableError("counts must be nonnegative")
        if c.sum() <= 0:
            raise TableError("table is empty")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @classmethod
    def from_cells(cls, cells: Mapping[tuple[int, int, int, int], int],
                   n_x: int | None = None, n_a: int | None = None) -> ContingencyTable:
        """Build from ``{(s, x, a, y): count}``; missing cells are zero."""
        if not cells:
            raise TableError("table is empty")
        for key in cells:
            if len(key) != 4 or min(key) < 0:
                raise TableError(f"bad cell key {key!r}")
            if key[0] > 1 or key[3] > 1:
                raise TableError(f"s and y must be 0 or 1, got {key!r}")
        max_x = max(k[1] for k in cells) + 1
        max_a = max(k[2] for k in cells) + 1
        n_x = max_x if n_x is None else n_x
        n_a = max_a if n_a is None else n_a
        if n_x < max_x or n_a < max_a:
            raise TableError("declared cardinality smaller than an observed level")
        counts = np.zeros((2, n_x, n_a, 2), dtype=np.int64)
        for (s, x, a, y), n in cells.items():
            counts[s, x, a, y] += n
        return cls(counts)

    @property
    def n_x(self) -> int:
        return self.counts.shape[1]

    @property
    def n_a(self) -> int:
        return self.counts.shape[2]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def cells(self, nonempty: bool = True) -> Iterator[tuple[tuple[int, int, int, int], int]]:
        for key in np.ndindex(self.counts.shape):
            n = int(self.counts[key])
            if n or not nonempty:
                yield tuple(int(k) for k in key), n

    def relabel_x(self, perm) -> ContingencyTable:
        """Covariate level ``x`` becomes ``perm[x]``."""
        perm = np.asarray(perm)
        out = np.empty_like(self.counts)
        out[:, perm] = self.counts
        return ContingencyTable(out)

    def __eq__(self, other):
        if not isinstance(other, ContingencyTable):
            return NotImplemented
        return self.counts.shape == other.counts.shape and bool(np.array_equal(self.counts, other.counts))

    def __repr__(self):
        return f"ContingencyTable(n_x={self.n_x}, n_a={self.n_a}, total={self.total})"
