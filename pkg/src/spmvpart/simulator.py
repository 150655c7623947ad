"""Distributed SpMV simulation over a two-level plan.

Follows the scatter, compute, construct, gather phase structure of a
master/worker cluster. The abstract cost mode charges unit costs per matrix
or vector element touched; the wall mode executes the same phases on a
thread pool and measures elapsed seconds. Both modes produce bit-identical
result vectors because the reduction order is fixed.
"""
from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .decomposition import Fragment, TwoLevelPlan, validate_plan
from .nezgt import Axis
from .sparse import coo_to_csr, spmv_csr

__all__ = [
    "PlanError",
    "CommStats",
    "ExecutionReport",
    "needed_x_indices",
    "produced_y_indices",
    "load_balance",
    "compute_comm_stats",
    "run_distributed_spmv",
    "max_rel_deviation",
    "non_owned_fanout_volume",
]


class PlanError(ValueError):
    """Raised when a plan fails validation before simulation."""


def needed_x_indices(fragment: Fragment) -> list[int]:
    """Distinct column indices of the fragment's nonzeros, ascending."""
    return sorted(set(fragment.sub.col.tolist()))


def produced_y_indices(fragment: Fragment) -> list[int]:
    """Distinct row indices of the fragment's nonzeros, ascending."""
    return sorted(set(fragment.sub.row.tolist()))


def load_balance(loads) -> float:
    """Max load over mean load, counting every declared unit, empty included."""
    loads = [float(v) for v in loads]
    if not loads:
        raise ValueError("no load units")
    total = sum(loads)
    if total == 0.0:
        raise ValueError("all loads are zero")
    return max(loads) / (total / len(loads))


@dataclass(frozen=True)
class CommStats:
    """Per-node communication quantities.

    c_x: distinct x entries needed; fr_x: reuse factor N / c_x as an exact
    rational (None for empty fragments); dr: data received, nnz + c_x;
    de: data emitted, distinct y entries produced.
    """

    c_x: tuple[int, ...]
    fr_x: tuple[Fraction | None, ...]
    dr: tuple[int, ...]
    de: tuple[int, ...]

    @property
    def sum_dr(self) -> int:
        return sum(self.dr)

    @property
    def sum_de(self) -> int:
        return sum(self.de)


def compute_comm_stats(plan: TwoLevelPlan) -> CommStats:
    n = plan.matrix.n_cols
    c_x, fr_x, dr, de = [], [], [], []
    for nf in plan.node_fragments:
        cx = len(needed_x_indices(nf))
        c_x.append(cx)
        fr_x.append(Fraction(n, cx) if cx else None)
        dr.append(nf.nnz + cx)
        de.append(len(produced_y_indices(nf)))
    return CommStats(tuple(c_x), tuple(fr_x), tuple(dr), tuple(de))


@dataclass
class ExecutionReport:
    mode: str
    lb_nodes: float
    lb_cores: float
    t_compute: float
    t_scatter: float
    t_gather: float
    t_construct_y: float
    y: np.ndarray
    comm: CommStats

    @property
    def t_gather_plus_construct(self) -> float:
        return self.t_gather + self.t_construct_y

    @property
    def t_total(self) -> float:
        return self.t_compute + self.t_gather + self.t_construct_y


def _combine(n_rows: int, partials) -> np.ndarray:
    """Fixed-order elementwise accumulation of full-length partial vectors."""
    acc = np.zeros(n_rows, dtype=np.float64)
    for p in partials:
        acc += p
    return acc


def _validate_for_run(plan: TwoLevelPlan) -> None:
    diags = validate_plan(plan, plan.matrix)
    if diags:
        head = "; ".join(diags[:3])
        more = f" (+{len(diags) - 3} more)" if len(diags) > 3 else ""
        raise PlanError(f"invalid plan: {head}{more}")


def run_distributed_spmv(
    plan: TwoLevelPlan,
    x,
    mode: str = "cost",
    workers: int | None = None,
) -> ExecutionReport:
    """Simulate one distributed SpMV and report result, balance and costs.

    Phases: the master scatters x restricted to each node's needed entries,
    every core computes its partial vector, each node constructs its partial
    result from its cores (summing when the intra axis is Column,
    concatenating row blocks otherwise), and the master gathers the node
    partials (summing when the inter axis is Column). The reduction order is
    ascending fragment index at both levels, so y is deterministic and
    identical across modes.
    """
    if mode not in ("cost", "wall"):
        raise ValueError(f"unknown mode {mode!r}")
    _validate_for_run(plan)
    a = plan.matrix
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size != a.n_cols:
        raise ValueError(f"x has shape {x.shape}, expected ({a.n_cols},)")

    comm = compute_comm_stats(plan)
    node_frags = plan.node_fragments
    core_frags = [nf.core_fragments for nf in node_frags]
    lb_nodes = load_balance([nf.nnz for nf in node_frags])
    lb_cores = load_balance([cf.nnz for cfs in core_frags for cf in cfs])
    csrs = [[coo_to_csr(cf.sub) for cf in cfs] for cfs in core_frags]

    intra_sum = plan.combination.intra_axis is Axis.COLUMN
    inter_sum = plan.combination.inter_axis is Axis.COLUMN
    construct_cost = 0
    for cfs in core_frags:
        if intra_sum:
            construct_cost += sum(len(produced_y_indices(cf)) for cf in cfs)
    if inter_sum:
        construct_cost += comm.sum_de

    if mode == "cost":
        partials = [[spmv_csr(m, x) for m in row] for row in csrs]
        node_partials = [_combine(a.n_rows, row) for row in partials]
        y = _combine(a.n_rows, node_partials)
        t_compute = max(2 * cf.nnz for cfs in core_frags for cf in cfs)
        return ExecutionReport(
            mode="cost",
            lb_nodes=lb_nodes,
            lb_cores=lb_cores,
            t_compute=t_compute,
            t_scatter=comm.sum_dr,
            t_gather=comm.sum_de,
            t_construct_y=construct_cost,
            y=y,
            comm=comm,
        )

    n_workers = workers if workers else min(32, os.cpu_count() or 1)
    needed = [np.asarray(needed_x_indices(nf), dtype=np.int64) for nf in node_frags]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        t0 = time.perf_counter()
        list(pool.map(lambda idx: x[idx], needed))
        t1 = time.perf_counter()
        futures = [pool.submit(spmv_csr, m, x) for row in csrs for m in row]
        flat = [f.result() for f in futures]
        t2 = time.perf_counter()
        fc = plan.cores_per_node
        rows = [flat[i * fc:(i + 1) * fc] for i in range(len(node_frags))]
        node_partials = list(pool.map(lambda row: _combine(a.n_rows, row), rows))
        t3 = time.perf_counter()
        y = _combine(a.n_rows, node_partials)
        t4 = time.perf_counter()
    return ExecutionReport(
        mode="wall",
        lb_nodes=lb_nodes,
        lb_cores=lb_cores,
        t_compute=t2 - t1,
        t_scatter=t1 - t0,
        t_gather=t4 - t3,
        t_construct_y=t3 - t2,
        y=y,
        comm=comm,
    )


def max_rel_deviation(y, ref) -> float:
    """max_i |y_i - ref_i| / max(1, |ref_i|)."""
    y = np.asarray(y, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if y.shape != ref.shape:
        raise ValueError("shape mismatch")
    if y.size == 0:
        return 0.0
    denom = np.maximum(1.0, np.abs(ref))
    return float(np.max(np.abs(y - ref) / denom))


def non_owned_fanout_volume(plan: TwoLevelPlan) -> int:
    """Total x entries each node needs but does not own under the row-owner map.

    Defined for plans whose inter axis is Row: x entry j belongs to the node
    owning row j. Counting the foreign needs over all nodes gives the exact
    expansion communication volume of the row partition.
    """
    if plan.combination.inter_axis is not Axis.ROW:
        raise ValueError("fan-out volume is defined for row-partitioned plans")
    owner = plan.line_owner
    vol = 0
    for k, nf in enumerate(plan.node_fragments):
        for j in needed_x_indices(nf):
            if owner.get(j) != k:
                vol += 1
    return vol
