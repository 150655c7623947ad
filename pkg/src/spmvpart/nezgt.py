"""Three-phase line partitioning heuristic (sort, list scheduling, refinement).

Partitions the rows or columns of a sparse matrix into f fragments so that
the per-fragment nonzero loads are as equal as possible. Phase 0 sorts the
lines by nonzero count, phase 1 runs greedy list scheduling, phase 2 moves
or swaps lines between the most and least loaded fragments while doing so
strictly reduces the load spread.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .sparse import CooMatrix, col_nnz_counts, row_nnz_counts

__all__ = [
    "Axis",
    "LinePartition",
    "RefineConfig",
    "phase0_sort",
    "phase1_ls",
    "fd",
    "phase2_refine",
    "nezgt_partition",
]


class Axis(Enum):
    ROW = "row"
    COLUMN = "column"

    @classmethod
    def from_name(cls, name: str) -> "Axis":
        key = name.strip().lower()
        for axis in cls:
            if axis.value == key:
                return axis
        raise ValueError(f"unknown axis {name!r}")


@dataclass(frozen=True)
class LinePartition:
    """Assignment of matrix lines (rows or columns) to f fragments."""

    axis: Axis
    f: int
    assignment: tuple[int, ...]
    loads: tuple[int, ...]

    def lines(self, k: int) -> list[int]:
        """Lines assigned to fragment k, ascending."""
        return [i for i, frag in enumerate(self.assignment) if frag == k]


@dataclass(frozen=True)
class RefineConfig:
    max_iterations: int = 100
    strategy: str = "best"  # "best" (BestImproving) or "first" (FirstImproving)


def phase0_sort(counts, order: str = "descending") -> list[int]:
    """Line indices sorted by nonzero count; ties keep ascending index order."""
    counts = [int(c) for c in counts]
    if order == "descending":
        return sorted(range(len(counts)), key=lambda i: (-counts[i], i))
    if order == "ascending":
        return sorted(range(len(counts)), key=lambda i: (counts[i], i))
    raise ValueError(f"unknown sort order {order!r}")


def phase1_ls(sorted_lines, counts, f: int, axis: Axis = Axis.ROW) -> LinePartition:
    """Greedy list scheduling of lines onto f fragments.

    The first f lines seed fragments 0..f-1 in order; every following line
    goes to the least loaded fragment, lowest index on ties. f larger than
    the number of lines leaves the surplus fragments empty.
    """
    if f <= 0:
        raise ValueError(f"fragment count must be positive, got {f}")
    counts = [int(c) for c in counts]
    n = len(counts)
    sorted_lines = list(sorted_lines)
    if sorted(sorted_lines) != list(range(n)):
        raise ValueError("sorted_lines must be a permutation of all line indices")
    assignment = [0] * n
    loads = [0] * f
    for k, line in enumerate(sorted_lines[:f]):
        assignment[line] = k
        loads[k] = counts[line]
    for line in sorted_lines[f:]:
        k = min(range(f), key=loads.__getitem__)
        assignment[line] = k
        loads[k] += counts[line]
    return LinePartition(axis, f, tuple(assignment), tuple(loads))


def fd(p: LinePartition) -> int:
    """Load spread: max fragment load minus min fragment load."""
    return max(p.loads) - min(p.loads)


def _candidate_moves(loads, lines_x, lines_n, counts, cmx, cmn, diff):
    """Admissible moves that strictly reduce the global load spread.

    Each candidate is (score, kind, xr, yr, x, y) where kind 0 is a transfer
    of line x from the max fragment, kind 1 an exchange of x against line y
    of the min fragment. Lower tuples are preferred.
    """
    cands = []

    def new_fd(delta: int) -> int:
        trial = list(loads)
        trial[cmx] -= delta
        trial[cmn] += delta
        return max(trial) - min(trial)

    for xr, x in enumerate(lines_x):
        nzx = counts[x]
        if nzx < diff and new_fd(nzx) < diff:
            cands.append((abs(diff / 2 - nzx), 0, xr, 0, x, -1))
    for xr, x in enumerate(lines_x):
        nzx = counts[x]
        for yr, y in enumerate(lines_n):
            d = nzx - counts[y]
            if d < diff and new_fd(d) < diff:
                cands.append((abs(diff / 2 - d), 1, xr, yr, x, y))
    return cands


def phase2_refine(p: LinePartition, counts, cfg: RefineConfig | None = None) -> LinePartition:
    """Iterative transfer/exchange refinement between the extreme fragments.

    Only moves that strictly reduce the load spread are accepted, so the
    spread never increases. Stops when no admissible improving move exists
    or after cfg.max_iterations accepted moves.
    """
    if cfg is None:
        cfg = RefineConfig()
    if cfg.strategy not in ("best", "first"):
        raise ValueError(f"unknown refinement strategy {cfg.strategy!r}")
    counts = [int(c) for c in counts]
    f = p.f
    if f < 2:
        return p
    assignment = list(p.assignment)
    loads = list(p.loads)

    for _ in range(cfg.max_iterations):
        diff = max(loads) - min(loads)
        if diff == 0:
            break
        cmx = min(range(f), key=lambda k: (-loads[k], k))
        cmn = min(range(f), key=lambda k: (loads[k], k))
        key_desc = lambda i: (-counts[i], i)
        lines_x = sorted((i for i in range(len(counts)) if assignment[i] == cmx), key=key_desc)
        lines_n = sorted((i for i in range(len(counts)) if assignment[i] == cmn), key=key_desc)
        cands = _candidate_moves(loads, lines_x, lines_n, counts, cmx, cmn, diff)
        if not cands:
            break
        if cfg.strategy == "best":
            move = min(cands)
        else:
            move = min(cands, key=lambda c: (c[1], c[2], c[3]))
        _, kind, _, _, x, y = move
        assignment[x] = cmn
        loads[cmx] -= counts[x]
        loads[cmn] += counts[x]
        if kind == 1:
            assignment[y] = cmx
            loads[cmn] -= counts[y]
            loads[cmx] += counts[y]
    return LinePartition(p.axis, f, tuple(assignment), tuple(loads))


def nezgt_partition(
    matrix: CooMatrix,
    axis: Axis,
    f: int,
    cfg: RefineConfig | None = None,
) -> LinePartition:
    """Full three-phase partition of the matrix lines on the given axis."""
    counts = row_nnz_counts(matrix) if axis is Axis.ROW else col_nnz_counts(matrix)
    counts = [int(c) for c in counts]
    order = phase0_sort(counts, "descending")
    p = phase1_ls(order, counts, f, axis)
    return phase2_refine(p, counts, cfg)
