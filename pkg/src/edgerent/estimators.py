"""Context partitioning and per-hypercube demand estimation."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class Partition:
    """Uniform grid of ``h**dim`` hypercubes over [0, 1]^dim."""

    h: int
    dim: int

    def __post_init__(self):
        if self.h < 1 or self.dim < 1:
            raise ValueError("partition needs h >= 1 and dim >= 1")

    @property
    def n_cells(self) -> int:
        return self.h ** self.dim


def partition_point(x: Sequence[float], part: Partition) -> tuple[int, ...]:
    """Cell coordinates of context ``x``; x_d = 1.0 falls in the last cell."""
    if len(x) != part.dim:
        raise ValueError(f"context has {len(x)} coordinates, partition expects {part.dim}")
    coords = []
    for v in x:
        v = float(v)
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"context out of range: {v}")
        coords.append(min(int(math.floor(v * part.h)), part.h - 1))
    return tuple(coords)


@dataclass
class CellStats:
    count: int = 0
    total: float = 0.0
    total_sq: float = 0.0

    @property
    def estimate(self) -> Optional[float]:
        return self.total / self.count if self.count else None

    @property
    def variance(self) -> Optional[float]:
        if self.count < 2:
            return None
        mean = self.total / self.count
        return max(self.total_sq / self.count - mean * mean, 0.0) * self.count / (self.count - 1)


def mle_estimate(cell: CellStats) -> float:
    """Sample mean of the cell's observed demands."""
    if cell.count == 0:
        raise ValueError("no experience")
    return cell.total / cell.count


def hoeffding_tail(eps: float, count: int, lam_max: float) -> float:
    """Tail bound exp(-2 C eps^2 / lam_max^2) for a mean of C samples in [0, lam_max]."""
    if eps <= 0 or count < 1 or lam_max <= 0:
        raise ValueError("hoeffding_tail needs eps > 0, count >= 1, lam_max > 0")
    return math.exp(-2.0 * count * eps * eps / (lam_max * lam_max))


class EstimatorBank:
    """Sparse per-SBS map from cell coordinates to running statistics.

    Cells are only created when a demand is recorded for them.
    """

    def __init__(self, n_sbs: int):
        self.cells: list[dict[tuple[int, ...], CellStats]] = [{} for _ in range(n_sbs)]

    def get(self, n: int, cell: tuple[int, ...]) -> Optional[CellStats]:
        return self.cells[n].get(cell)

    def count(self, n: int, cell: tuple[int, ...]) -> int:
        st = self.cells[n].get(cell)
        return st.count if st else 0

    def estimate(self, n: int, cell: tuple[int, ...]) -> Optional[float]:
        st = self.cells[n].get(cell)
        return st.estimate if st else None

    @property
    def n_materialized(self) -> int:
        return sum(len(c) for c in self.cells)

    def rows(self) -> Iterator[tuple]:
        for n, cells in enumerate(self.cells):
            for cell in sorted(cells):
                st = cells[cell]
                yield (n, *cell, st.count, st.estimate)

    def to_csv(self, path, comment: str = "") -> None:
        dim = next((len(c) for cells in self.cells for c in cells), 0)
        with open(path, "w", newline="") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            w = csv.writer(fh)
            w.writerow(["sbs", *[f"cell_{d}" for d in range(dim)], "count", "estimate"])
            for row in self.rows():
                w.writerow([*row[:-1], repr(row[-1])])


def record(bank: EstimatorBank, n: int, cell: tuple[int, ...], lam_obs: float) -> EstimatorBank:
    """Fold one observed demand into the (SBS, cell) statistics."""
    if lam_obs < 0:
        raise ValueError(f"observed demand must be >= 0, got {lam_obs}")
    st = bank.cells[n].get(cell)
    if st is None:
        st = bank.cells[n][cell] = CellStats()
    st.count += 1
    st.total += lam_obs
    st.total_sq += lam_obs * lam_obs
    return bank


def cell_means(demand: np.ndarray, contexts: np.ndarray, part: Partition) -> list[dict]:
    """Full-series empirical mean demand per (SBS, cell), for hindsight oracles."""
    T, N = demand.shape
    sums: list[dict] = [{} for _ in range(N)]
    for t in range(T):
        for n in range(N):
            c = partition_point(contexts[t, n], part)
            s = sums[n].setdefault(c, [0, 0.0])
            s[0] += 1
            s[1] += float(demand[t, n])
    return [{c: tot / cnt for c, (cnt, tot) in d.items()} for d in sums]
