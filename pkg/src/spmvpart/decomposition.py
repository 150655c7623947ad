"""Two-level decomposition of a sparse matrix for a cluster of multicore nodes.

The inter level splits matrix lines across nodes with the three-phase
heuristic; the intra level splits each node fragment across its cores with
the 1D hypergraph partitioner applied to the fragment's local pattern. The
four combinations pair the inter axis (column or row) with the intra vertex
axis (column or row).
"""
from __future__ import annotations

import dataclasses
from collections import Counter
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .hypergraph import (
    DEFAULT_EPSILON,
    BalanceInfeasibleError,
    Hypergraph,
    HgPartition,
    partition_multilevel,
)
from .nezgt import Axis, RefineConfig, nezgt_partition
from .sparse import CooMatrix

__all__ = [
    "Combination",
    "Fragment",
    "TwoLevelPlan",
    "HgConfig",
    "decompose",
    "extract_fragment",
    "plan_from_line_sets",
    "validate_plan",
    "serialize_plan",
]


class Combination(Enum):
    """Inter-level axis paired with intra-level vertex axis.

    The first letter pair names the inter split (NC: columns across nodes,
    NL: rows across nodes), the second the intra split (HC: column vertices,
    HL: row vertices).
    """

    NC_HC = ("NC-HC", Axis.COLUMN, Axis.COLUMN)
    NC_HL = ("NC-HL", Axis.COLUMN, Axis.ROW)
    NL_HC = ("NL-HC", Axis.ROW, Axis.COLUMN)
    NL_HL = ("NL-HL", Axis.ROW, Axis.ROW)

    def __init__(self, label: str, inter_axis: Axis, intra_axis: Axis):
        self.label = label
        self.inter_axis = inter_axis
        self.intra_axis = intra_axis

    @classmethod
    def from_label(cls, label: str) -> "Combination":
        key = label.strip().upper()
        for combo in cls:
            if combo.label == key:
                return combo
        raise ValueError(f"unknown combination {label!r}")


@dataclass(frozen=True)
class Fragment:
    """A set of lines of the original matrix together with their nonzeros.

    The sub-matrix keeps the original dimensions and coordinates, so
    fragment SpMV results line up with the full vectors without remapping.
    Node-level fragments carry their core fragments.
    """

    level: str  # "node" or "core"
    axis: Axis
    line_indices: tuple[int, ...]
    sub: CooMatrix
    core_fragments: tuple["Fragment", ...] = ()

    @property
    def nnz(self) -> int:
        return self.sub.nnz


@dataclass(frozen=True)
class HgConfig:
    epsilon: float = DEFAULT_EPSILON
    seed: int = 0


@dataclass(frozen=True)
class TwoLevelPlan:
    combination: Combination
    n_nodes: int
    cores_per_node: int
    node_fragments: tuple[Fragment, ...]
    line_owner: dict[int, int]
    matrix: CooMatrix
    intra_epsilons: tuple[float, ...] = ()

    @property
    def row_owner(self) -> dict[int, int] | None:
        return self.line_owner if self.combination.inter_axis is Axis.ROW else None

    @property
    def col_owner(self) -> dict[int, int] | None:
        return self.line_owner if self.combination.inter_axis is Axis.COLUMN else None

    def core_fragments_flat(self) -> list[Fragment]:
        return [cf for nf in self.node_fragments for cf in nf.core_fragments]


def extract_fragment(
    matrix: CooMatrix,
    line_indices,
    axis: Axis,
    level: str = "node",
) -> Fragment:
    """Fragment holding the entries whose axis coordinate is in line_indices."""
    idx = [int(i) for i in line_indices]
    if len(set(idx)) != len(idx):
        raise ValueError("duplicate line index")
    n_lines = matrix.n_rows if axis is Axis.ROW else matrix.n_cols
    if any(i < 0 or i >= n_lines for i in idx):
        raise ValueError("line index out of range")
    coords = matrix.row if axis is Axis.ROW else matrix.col
    sel = np.isin(coords, np.asarray(idx, dtype=np.int64))
    sub = CooMatrix._from_arrays(
        matrix.n_rows, matrix.n_cols, matrix.row[sel], matrix.col[sel], matrix.val[sel]
    )
    return Fragment(level, axis, tuple(sorted(idx)), sub)


def _intra_split(node_sub: CooMatrix, owned, inter_axis: Axis, intra_axis: Axis,
                 fc: int, hg_cfg: HgConfig, node_seed: int):
    """Split one node fragment across fc cores; returns (core fragments, epsilon)."""
    if intra_axis is Axis.ROW:
        line_arr, cross_arr = node_sub.row, node_sub.col
    else:
        line_arr, cross_arr = node_sub.col, node_sub.row
    lines = line_arr.tolist()
    if intra_axis is inter_axis:
        universe = list(owned)
    else:
        universe = sorted(set(lines))
    cnt = Counter(lines)
    nonempty = [l for l in universe if cnt[l] > 0]
    empty = [l for l in universe if cnt[l] == 0]

    parts_lines: list[list[int]] = [[] for _ in range(fc)]
    loads = [0] * fc
    eps_used = hg_cfg.epsilon
    if nonempty:
        pos = {l: i for i, l in enumerate(nonempty)}
        netmap: dict[int, set[int]] = {}
        for l, c in zip(lines, cross_arr.tolist()):
            netmap.setdefault(c, set()).add(pos[l])
        nets = tuple(tuple(sorted(s)) for _, s in sorted(netmap.items()))
        hg = Hypergraph(len(nonempty), tuple(cnt[l] for l in nonempty), nets)
        if fc == 1:
            hp = HgPartition(1, (0,) * len(nonempty), eps_used)
        else:
            eps = hg_cfg.epsilon
            while True:
                try:
                    hp = partition_multilevel(hg, fc, eps, node_seed)
                    break
                except BalanceInfeasibleError:
                    # The local weights can be too lumpy for the requested
                    # tolerance; widen it deterministically until feasible.
                    eps = eps * 2 + 0.01
            eps_used = eps
        for i, l in enumerate(nonempty):
            b = hp.assignment[i]
            parts_lines[b].append(l)
            loads[b] += cnt[l]
    for l in empty:
        b = min(range(fc), key=lambda b: (loads[b], b))
        parts_lines[b].append(l)
    return [sorted(ls) for ls in parts_lines], eps_used


def decompose(
    matrix: CooMatrix,
    combination: Combination,
    f: int,
    fc: int,
    nezgt_cfg: RefineConfig | None = None,
    hg_cfg: HgConfig | None = None,
) -> TwoLevelPlan:
    """Build the two-level plan: f node fragments, fc core fragments each.

    Inter split by the three-phase line heuristic on the combination's inter
    axis; intra split of each node fragment by the multilevel hypergraph
    partitioner on the combination's intra axis, applied to the fragment's
    local pattern. When the intra axis differs from the inter axis the intra
    line universe is the fragment's nonempty lines on that axis; lines that
    are empty inside the fragment are attached, weightless, to the least
    loaded core. Deterministic for fixed configs.
    """
    if fc <= 0:
        raise ValueError(f"cores per node must be positive, got {fc}")
    if hg_cfg is None:
        hg_cfg = HgConfig()
    inter_axis = combination.inter_axis
    intra_axis = combination.intra_axis
    inter = nezgt_partition(matrix, inter_axis, f, nezgt_cfg)

    node_frags = []
    epsilons = []
    for k in range(f):
        owned = inter.lines(k)
        node = extract_fragment(matrix, owned, inter_axis, level="node")
        core_lines, eps_used = _intra_split(
            node.sub, owned, inter_axis, intra_axis, fc, hg_cfg,
            node_seed=hg_cfg.seed + k,
        )
        cores = tuple(
            extract_fragment(node.sub, ls, intra_axis, level="core")
            for ls in core_lines
        )
        node_frags.append(dataclasses.replace(node, core_fragments=cores))
        epsilons.append(eps_used)

    owner = {line: frag for line, frag in enumerate(inter.assignment)}
    return TwoLevelPlan(
        combination=combination,
        n_nodes=f,
        cores_per_node=fc,
        node_fragments=tuple(node_frags),
        line_owner=owner,
        matrix=matrix,
        intra_epsilons=tuple(epsilons),
    )


def plan_from_line_sets(
    matrix: CooMatrix,
    combination: Combination,
    node_lines,
    core_lines,
) -> TwoLevelPlan:
    """Build a plan directly from explicit node and core line sets.

    node_lines[k] are the inter-axis lines of node k; core_lines[k][c] the
    intra-axis lines of core c of node k. No validity checks beyond index
    range; use validate_plan to audit the result.
    """
    inter_axis = combination.inter_axis
    intra_axis = combination.intra_axis
    if len(core_lines) != len(node_lines):
        raise ValueError("core_lines must have one entry per node")
    fcs = {len(cs) for cs in core_lines}
    if len(fcs) > 1:
        raise ValueError("all nodes must declare the same number of cores")
    fc = fcs.pop() if fcs else 1
    node_frags = []
    owner: dict[int, int] = {}
    for k, lines in enumerate(node_lines):
        node = extract_fragment(matrix, lines, inter_axis, level="node")
        cores = tuple(
            extract_fragment(node.sub, ls, intra_axis, level="core")
            for ls in core_lines[k]
        )
        node_frags.append(dataclasses.replace(node, core_fragments=cores))
        for line in lines:
            owner[int(line)] = k
    return TwoLevelPlan(
        combination=combination,
        n_nodes=len(node_lines),
        cores_per_node=fc,
        node_fragments=tuple(node_frags),
        line_owner=owner,
        matrix=matrix,
    )


def _decode(key: int, n_cols: int) -> tuple[int, int]:
    return int(key) // n_cols, int(key) % n_cols


def validate_plan(plan: TwoLevelPlan, matrix: CooMatrix) -> list[str]:
    """Audit a plan against the matrix; returns diagnostics, empty when valid.

    Checks fragment counts and axes, line ownership, containment of entries
    in their fragments' line sets and the exact cover of the matrix nonzeros
    by the core fragments (no duplicates, nothing uncovered, values intact).
    """
    diags: list[str] = []
    f, fc = plan.n_nodes, plan.cores_per_node
    inter_axis = plan.combination.inter_axis
    intra_axis = plan.combination.intra_axis
    if len(plan.node_fragments) != f:
        diags.append(f"expected {f} node fragments, found {len(plan.node_fragments)}")

    owned_seen: dict[int, int] = {}
    for k, nf in enumerate(plan.node_fragments):
        if nf.axis is not inter_axis:
            diags.append(f"node {k}: axis {nf.axis.value}, expected {inter_axis.value}")
        if len(nf.core_fragments) != fc:
            diags.append(
                f"node {k}: expected {fc} core fragments, found {len(nf.core_fragments)}"
            )
        for line in nf.line_indices:
            if line in owned_seen:
                diags.append(f"line {line} owned by nodes {owned_seen[line]} and {k}")
            else:
                owned_seen[line] = k
        node_lines = np.asarray(nf.line_indices, dtype=np.int64)
        inter_coords = nf.sub.row if inter_axis is Axis.ROW else nf.sub.col
        bad = inter_coords[~np.isin(inter_coords, node_lines)]
        if bad.size:
            diags.append(f"node {k}: entry on line {int(bad[0])} outside owned lines")
        for c, cf in enumerate(nf.core_fragments):
            if cf.axis is not intra_axis:
                diags.append(
                    f"node {k} core {c}: axis {cf.axis.value}, expected {intra_axis.value}"
                )
            core_lines = np.asarray(cf.line_indices, dtype=np.int64)
            intra_coords = cf.sub.row if intra_axis is Axis.ROW else cf.sub.col
            bad = intra_coords[~np.isin(intra_coords, core_lines)]
            if bad.size:
                diags.append(
                    f"node {k} core {c}: entry on line {int(bad[0])} outside core lines"
                )
            core_inter = cf.sub.row if inter_axis is Axis.ROW else cf.sub.col
            bad = core_inter[~np.isin(core_inter, node_lines)]
            if bad.size:
                diags.append(
                    f"node {k} core {c}: entry on line {int(bad[0])} outside node lines"
                )

    # Exact cover of the nonzeros by the core fragments.
    ncols = max(matrix.n_cols, 1)
    subs = [cf.sub for nf in plan.node_fragments for cf in nf.core_fragments]
    if subs:
        keys = np.concatenate([s.row * ncols + s.col for s in subs])
        vals = np.concatenate([s.val for s in subs])
    else:
        keys = np.empty(0, dtype=np.int64)
        vals = np.empty(0, dtype=np.float64)
    order = np.argsort(keys, kind="stable")
    keys, vals = keys[order], vals[order]
    mat_keys = matrix.row * ncols + matrix.col
    dup = np.nonzero(np.diff(keys) == 0)[0]
    for d in dup[:10]:
        i, j = _decode(keys[d], ncols)
        diags.append(f"duplicate nonzero ({i}, {j})")
    if not dup.size and keys.size == mat_keys.size and np.array_equal(keys, mat_keys):
        wrong = np.nonzero(vals != matrix.val)[0]
        for w in wrong[:10]:
            i, j = _decode(keys[w], ncols)
            diags.append(f"value mismatch at ({i}, {j})")
    else:
        for key in np.setdiff1d(mat_keys, keys)[:10]:
            i, j = _decode(key, ncols)
            diags.append(f"uncovered nonzero ({i}, {j})")
        for key in np.setdiff1d(keys, mat_keys)[:10]:
            i, j = _decode(key, ncols)
            diags.append(f"unknown nonzero ({i}, {j})")
    return diags


def serialize_plan(plan: TwoLevelPlan) -> str:
    """One line per core fragment: node index, core index, axis, line indices."""
    out = []
    for k, nf in enumerate(plan.node_fragments):
        for c, cf in enumerate(nf.core_fragments):
            toks = [str(k), str(c), cf.axis.value]
            toks.extend(str(line) for line in cf.line_indices)
            out.append(" ".join(toks))
    return "\n".join(out) + "\n"
