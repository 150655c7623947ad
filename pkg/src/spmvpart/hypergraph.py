"""Hypergraph models of sparse matrices and a multilevel k-way partitioner.

The 1D row-net model has one vertex per row and one net per nonempty column
(the column-net model is the transpose). The fine-grain 2D model has one
vertex per nonzero. Partition quality is measured by the hyperedge cut and
the connectivity (lambda - 1) cut; the partitioner minimizes the latter
under a relative balance tolerance epsilon.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .nezgt import Axis
from .sparse import CooMatrix, col_nnz_counts, row_nnz_counts

__all__ = [
    "Hypergraph",
    "HgPartition",
    "BalanceInfeasibleError",
    "build_1d",
    "build_2d_finegrain",
    "cut_hyperedge",
    "cut_connectivity",
    "part_weights",
    "refine_fm",
    "partition_multilevel",
]

DEFAULT_EPSILON = 0.05


class BalanceInfeasibleError(ValueError):
    """Raised when no partition can satisfy the balance constraint."""


@dataclass(frozen=True)
class Hypergraph:
    n_vertices: int
    vertex_weights: tuple[int, ...]
    nets: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.vertex_weights) != self.n_vertices:
            raise ValueError("vertex_weights length must equal n_vertices")
        for net in self.nets:
            if not net:
                raise ValueError("empty net")
            if any(v < 0 or v >= self.n_vertices for v in net):
                raise ValueError("net pin out of range")
            if len(set(net)) != len(net):
                raise ValueError("duplicate pin in net")

    @property
    def total_weight(self) -> int:
        return sum(self.vertex_weights)


@dataclass(frozen=True)
class HgPartition:
    k: int
    assignment: tuple[int, ...]
    epsilon: float


def build_1d(matrix: CooMatrix, vertex_axis: Axis) -> Hypergraph:
    """1D hypergraph model with one vertex per line on vertex_axis.

    Row vertices give the row-net model: every nonempty column becomes a net
    spanning the rows with a nonzero in it. Column vertices give the
    transposed column-net model. A vertex's weight is its line's nonzero
    count, which equals the number of nets containing it.
    """
    if vertex_axis is Axis.ROW:
        n = matrix.n_rows
        weights = row_nnz_counts(matrix)
        vert, cross = matrix.row, matrix.col
        n_cross = matrix.n_cols
    else:
        n = matrix.n_cols
        weights = col_nnz_counts(matrix)
        vert, cross = matrix.col, matrix.row
        n_cross = matrix.n_rows
    pins: dict[int, set[int]] = {}
    for v, c in zip(vert, cross):
        pins.setdefault(int(c), set()).add(int(v))
    nets = tuple(
        tuple(sorted(pins[c])) for c in range(n_cross) if c in pins
    )
    return Hypergraph(n, tuple(int(w) for w in weights), nets)


def build_2d_finegrain(matrix: CooMatrix) -> Hypergraph:
    """Fine-grain 2D model: one vertex of weight 2 per nonzero.

    Every nonempty row and every nonempty column becomes a net spanning the
    vertices (nonzeros) it contains. Row nets come first, ascending, then
    column nets. Construction only; the partitioner operates on any
    Hypergraph, this model included.
    """
    row_pins: dict[int, list[int]] = {}
    col_pins: dict[int, list[int]] = {}
    for idx, (i, j) in enumerate(zip(matrix.row, matrix.col)):
        row_pins.setdefault(int(i), []).append(idx)
        col_pins.setdefault(int(j), []).append(idx)
    nets = [tuple(row_pins[i]) for i in sorted(row_pins)]
    nets += [tuple(sorted(col_pins[j])) for j in sorted(col_pins)]
    return Hypergraph(matrix.nnz, (2,) * matrix.nnz, tuple(nets))


def _check_partition(h: Hypergraph, p: HgPartition) -> None:
    if len(p.assignment) != h.n_vertices:
        raise ValueError("assignment length must equal n_vertices")
    if p.assignment and (min(p.assignment) < 0 or max(p.assignment) >= p.k):
        raise ValueError("part index out of range")


def cut_hyperedge(h: Hypergraph, p: HgPartition) -> int:
    """Number of nets spanning at least two parts."""
    _check_partition(h, p)
    a = p.assignment
    return sum(1 for net in h.nets if len({a[v] for v in net}) >= 2)


def cut_connectivity(h: Hypergraph, p: HgPartition) -> int:
    """Sum over nets of (number of parts spanned - 1)."""
    _check_partition(h, p)
    a = p.assignment
    return sum(len({a[v] for v in net}) - 1 for net in h.nets)


def part_weights(h: Hypergraph, p: HgPartition) -> list[int]:
    _check_partition(h, p)
    loads = [0] * p.k
    for v, part in enumerate(p.assignment):
        loads[part] += h.vertex_weights[v]
    return loads


def _capacity(total: float, k: int, epsilon: float) -> float:
    # Tiny relative slack so integer loads sitting exactly on the cap pass.
    return (1.0 + epsilon) * total / k + 1e-9 * max(1.0, total)


def _vertex_nets(h: Hypergraph) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in range(h.n_vertices)]
    for e, net in enumerate(h.nets):
        for v in net:
            adj[v].append(e)
    return adj


def refine_fm(h: Hypergraph, p: HgPartition, passes: int = 2) -> HgPartition:
    """Greedy move-based refinement of the connectivity cut.

    Sweeps the vertices in index order, moving a vertex to the part with the
    best strictly positive cut gain among the parts with spare capacity.
    The connectivity cut never increases and balance is never violated by an
    accepted move. passes=0 returns the partition unchanged.
    """
    _check_partition(h, p)
    if passes <= 0 or h.n_vertices == 0 or p.k < 2:
        return p
    k = p.k
    w = h.vertex_weights
    cap = _capacity(h.total_weight, k, p.epsilon)
    assignment = list(p.assignment)
    loads = part_weights(h, p)
    adj = _vertex_nets(h)
    counts = [[0] * k for _ in h.nets]
    for e, net in enumerate(h.nets):
        for v in net:
            counts[e][assignment[v]] += 1

    for _ in range(passes):
        moved = False
        for v in range(h.n_vertices):
            a = assignment[v]
            best_gain = 0
            best_b = -1
            for b in range(k):
                if b == a or loads[b] + w[v] > cap:
                    continue
                delta = 0
                for e in adj[v]:
                    if counts[e][a] == 1:
                        delta -= 1
                    if counts[e][b] == 0:
                        delta += 1
                if -delta > best_gain:
                    best_gain = -delta
                    best_b = b
            if best_b >= 0:
                for e in adj[v]:
                    counts[e][a] -= 1
                    counts[e][best_b] += 1
                loads[a] -= w[v]
                loads[best_b] += w[v]
                assignment[v] = best_b
                moved = True
        if not moved:
            break
    return HgPartition(k, tuple(assignment), p.epsilon)


def _greedy_assign(h: Hypergraph, k: int, cap: float, order: list[int], use_gain: bool):
    """Place vertices in the given order; best gain first, then least load."""
    assignment = [0] * h.n_vertices
    loads = [0] * k
    adj = _vertex_nets(h)
    counts = [[0] * k for _ in h.nets]
    for v in order:
        wv = h.vertex_weights[v]
        eligible = [b for b in range(k) if loads[b] + wv <= cap]
        pool = eligible if eligible else list(range(k))
        if use_gain:
            gains = [0] * k
            for e in adj[v]:
                for b in range(k):
                    if counts[e][b] > 0:
                        gains[b] += 1
            b = min(pool, key=lambda b: (-gains[b], loads[b], b))
        else:
            b = min(pool, key=lambda b: (loads[b], b))
        assignment[v] = b
        loads[b] += wv
        for e in adj[v]:
            counts[e][b] += 1
    return assignment, loads


def _candidate_orders(h: Hypergraph, rng: random.Random):
    """Placement orders for the multi-start initial partition."""
    by_weight = sorted(range(h.n_vertices), key=lambda v: (-h.vertex_weights[v], v))
    yield by_weight, True
    yield by_weight, False
    for i in range(8):
        order = list(range(h.n_vertices))
        rng.shuffle(order)
        # stable sort keeps the shuffle as a random tie-break among weights
        order.sort(key=lambda v: -h.vertex_weights[v])
        yield order, i % 2 == 0
    for i in range(6):
        order = list(range(h.n_vertices))
        rng.shuffle(order)
        yield order, i % 2 == 0


def _initial_partition(h: Hypergraph, k: int, cap: float, epsilon: float,
                       rng: random.Random) -> HgPartition:
    """Best refined partition over several greedy starts.

    A single greedy placement followed by local moves gets stuck easily on
    small coarse graphs, so each candidate is refined and the feasible one
    with the lowest connectivity wins. Infeasible candidates only win when
    nothing fits, ranked by how far they overshoot the capacity.
    """
    best_key = None
    best = None
    for order, use_gain in _candidate_orders(h, rng):
        assignment, _ = _greedy_assign(h, k, cap, order, use_gain)
        cand = refine_fm(h, HgPartition(k, tuple(assignment), epsilon))
        over = max(0.0, max(part_weights(h, cand)) - cap)
        key = (over > 0, over, cut_connectivity(h, cand))
        if best_key is None or key < best_key:
            best_key = key
            best = cand
    return best


def _coarsen(h: Hypergraph, cap: float, rng: random.Random):
    """One level of heavy-connectivity greedy matching.

    Returns (coarse hypergraph, mapping fine vertex -> coarse vertex) or
    None when no pair can be merged.
    """
    n = h.n_vertices
    adj = _vertex_nets(h)
    order = list(range(n))
    rng.shuffle(order)
    mate = [-1] * n
    matched_pairs = 0
    for v in order:
        if mate[v] != -1:
            continue
        scores: dict[int, int] = {}
        for e in adj[v]:
            for u in h.nets[e]:
                if u != v and mate[u] == -1 and h.vertex_weights[v] + h.vertex_weights[u] <= cap:
                    scores[u] = scores.get(u, 0) + 1
        if scores:
            u = min(scores, key=lambda u: (-scores[u], u))
            mate[v] = u
            mate[u] = v
            matched_pairs += 1
    if matched_pairs == 0:
        return None
    mapping = [-1] * n
    weights = []
    nxt = 0
    for v in range(n):
        if mapping[v] != -1:
            continue
        u = mate[v]
        mapping[v] = nxt
        wv = h.vertex_weights[v]
        if u != -1 and mapping[u] == -1:
            mapping[u] = nxt
            wv += h.vertex_weights[u]
        weights.append(wv)
        nxt += 1
    coarse_nets = []
    for net in h.nets:
        pins = tuple(sorted({mapping[v] for v in net}))
        if len(pins) >= 2:
            coarse_nets.append(pins)
    coarse = Hypergraph(nxt, tuple(weights), tuple(coarse_nets))
    return coarse, mapping


def partition_multilevel(
    h: Hypergraph,
    k: int,
    epsilon: float = DEFAULT_EPSILON,
    seed: int = 0,
) -> HgPartition:
    """Direct k-way multilevel partition minimizing the connectivity cut.

    Coarsens by greedy matching down to max(4k, 40) vertices, builds a
    balanced greedy initial partition and refines at every level while
    projecting back. Deterministic for a fixed seed. Raises
    BalanceInfeasibleError when the balance constraint
    W_p <= (1 + epsilon) * W / k cannot be met.
    """
    if k <= 0:
        raise ValueError(f"part count must be positive, got {k}")
    if epsilon < 0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon}")
    n = h.n_vertices
    total = h.total_weight
    cap = _capacity(total, k, epsilon)
    for v, wv in enumerate(h.vertex_weights):
        if wv > cap:
            raise BalanceInfeasibleError(
                f"vertex {v} weight {wv} exceeds part capacity {cap:.6g}"
            )
    if n == 0:
        return HgPartition(k, (), epsilon)
    if k == 1:
        return HgPartition(1, (0,) * n, epsilon)

    rng = random.Random(seed)
    target = max(4 * k, 40)
    levels: list[tuple[Hypergraph, list[int]]] = []
    cur = h
    while cur.n_vertices > target:
        step = _coarsen(cur, cap, rng)
        if step is None:
            break
        coarse, mapping = step
        levels.append((cur, mapping))
        cur = coarse

    p = _initial_partition(cur, k, cap, epsilon, rng)
    for fine, mapping in reversed(levels):
        projected = tuple(p.assignment[mapping[v]] for v in range(fine.n_vertices))
        p = refine_fm(fine, HgPartition(k, projected, epsilon))

    loads = part_weights(h, p)
    if max(loads) > cap:
        raise BalanceInfeasibleError(
            f"no balanced partition found: max load {max(loads)} exceeds capacity {cap:.6g}"
        )
    return p
