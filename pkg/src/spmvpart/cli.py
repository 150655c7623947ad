"""Command line interface.

Subcommands: run (metric sweep as CSV), verify (distributed result against
the sequential kernel), partition (inspect a single-level partition) and
report (run plus rendered figures).
"""
from __future__ import annotations

import argparse
import dataclasses
import statistics
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .decomposition import Combination, HgConfig, TwoLevelPlan, decompose
from .hypergraph import (
    BalanceInfeasibleError,
    build_1d,
    cut_connectivity,
    cut_hyperedge,
    part_weights,
    partition_multilevel,
)
from .nezgt import Axis, RefineConfig, fd, nezgt_partition
from .simulator import PlanError, max_rel_deviation, run_distributed_spmv
from .sparse import (
    CooMatrix,
    coo_to_csr,
    generate_random_sparse,
    load_matrix_market,
    spmv_csr,
)

CSV_COLUMNS = [
    "matrix", "combination", "nodes", "cores_per_node", "lb_nodes", "lb_cores",
    "t_compute", "t_scatter", "t_gather", "t_construct_y",
    "t_gather_plus_construct", "t_total", "sum_dr", "sum_de",
]
ALL_COMBOS = tuple(Combination)
VERIFY_TOL = 1e-12


@dataclass
class ExperimentConfig:
    matrix_path: str | None = None
    random_shape: tuple[int, float] | None = None
    combos: tuple[Combination, ...] = ALL_COMBOS
    nodes: tuple[int, ...] = (2, 4, 8)
    cores: int = 4
    mode: str = "cost"
    seed: int = 0
    epsilon: float = 0.05
    refine_iters: int = 100
    workers: int | None = None
    out: str | None = None
    render_figures: bool = False


def _parse_random(text: str) -> tuple[int, float]:
    try:
        n_s, d_s = text.split(",")
        n, d = int(n_s), float(d_s)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected N,DENSITY (e.g. 500,0.01), got {text!r}"
        )
    return n, d


def _parse_nodes(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated int list, got {text!r}")
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError(f"node counts must be positive: {text!r}")
    return vals


def _parse_combos(text: str) -> tuple[Combination, ...]:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            out.append(Combination.from_label(tok))
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc))
    if not out:
        raise argparse.ArgumentTypeError("no combinations given")
    return tuple(out)


def _load_input(matrix_path, random_shape, seed) -> tuple[str, CooMatrix]:
    if matrix_path is not None:
        return Path(matrix_path).stem, load_matrix_market(matrix_path)
    n, d = random_shape
    name = f"random-{n}-{d:g}"
    return name, generate_random_sparse(n, n, d, seed, integer_values=True)


def _fmt_cost(v) -> str:
    return str(int(v))


def _fmt_seconds(v: float) -> str:
    return f"{v:.9f}"


def _median_report(reports):
    """Component-wise median of the phase times; y is identical across runs."""
    rep = reports[len(reports) // 2]
    rep = dataclasses.replace(
        rep,
        t_compute=statistics.median(r.t_compute for r in reports),
        t_scatter=statistics.median(r.t_scatter for r in reports),
        t_gather=statistics.median(r.t_gather for r in reports),
        t_construct_y=statistics.median(r.t_construct_y for r in reports),
    )
    return rep


def cmd_run(config: ExperimentConfig) -> int:
    try:
        name, a = _load_input(config.matrix_path, config.random_shape, config.seed)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    x = np.ones(a.n_cols)
    try:
        y_ref = spmv_csr(coo_to_csr(a), x)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    lines = [",".join(CSV_COLUMNS)]
    for combo in config.combos:
        for f in config.nodes:
            try:
                plan = decompose(
                    a, combo, f, config.cores,
                    RefineConfig(max_iterations=config.refine_iters),
                    HgConfig(config.epsilon, config.seed),
                )
                if config.mode == "cost":
                    rep = run_distributed_spmv(plan, x, "cost")
                    fmt = _fmt_cost
                else:
                    reps = [
                        run_distributed_spmv(plan, x, "wall", config.workers)
                        for _ in range(5)
                    ]
                    rep = _median_report(reps)
                    fmt = _fmt_seconds
            except (PlanError, ValueError) as exc:
                print(f"error: {combo.label} f={f}: {exc}", file=sys.stderr)
                return 1
            dev = max_rel_deviation(rep.y, y_ref)
            if dev > VERIFY_TOL:
                print(
                    f"error: {combo.label} f={f}: distributed result deviates "
                    f"from sequential by {dev:.3e}",
                    file=sys.stderr,
                )
                return 1
            lines.append(",".join([
                name,
                combo.label,
                str(f),
                str(config.cores),
                f"{rep.lb_nodes:.6f}",
                f"{rep.lb_cores:.6f}",
                fmt(rep.t_compute),
                fmt(rep.t_scatter),
                fmt(rep.t_gather),
                fmt(rep.t_construct_y),
                fmt(rep.t_gather_plus_construct),
                fmt(rep.t_total),
                str(rep.comm.sum_dr),
                str(rep.comm.sum_de),
            ]))

    text = "\n".join(lines) + "\n"
    if config.out:
        with open(config.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)

    if config.render_figures:
        from .report import render_report

        for path in render_report(config.out):
            print(f"figure: {path}")
    return 0


def _drop_one_entry(plan: TwoLevelPlan) -> TwoLevelPlan:
    """Remove one nonzero from the first non-empty core fragment (test hook)."""
    node_frags = list(plan.node_fragments)
    for k, nf in enumerate(node_frags):
        cores = list(nf.core_fragments)
        for c, cf in enumerate(cores):
            if cf.nnz == 0:
                continue
            sub = cf.sub
            damaged = CooMatrix._from_arrays(
                sub.n_rows, sub.n_cols, sub.row[:-1], sub.col[:-1], sub.val[:-1]
            )
            cores[c] = dataclasses.replace(cf, sub=damaged)
            node_frags[k] = dataclasses.replace(nf, core_fragments=tuple(cores))
            return dataclasses.replace(plan, node_fragments=tuple(node_frags))
    return plan


def cmd_verify(config: ExperimentConfig, f: int, corrupt: bool = False) -> int:
    try:
        name, a = _load_input(config.matrix_path, config.random_shape, config.seed)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    csr = coo_to_csr(a)
    rng = np.random.default_rng(config.seed)
    tests = [("ones", np.ones(a.n_cols)), ("random", rng.uniform(-1.0, 1.0, a.n_cols))]
    print(f"verify {name}: f={f}, cores={config.cores}, seed={config.seed}")
    ok = True
    for combo in ALL_COMBOS:
        try:
            plan = decompose(
                a, combo, f, config.cores,
                RefineConfig(max_iterations=config.refine_iters),
                HgConfig(config.epsilon, config.seed),
            )
            if corrupt:
                plan = _drop_one_entry(plan)
            worst = 0.0
            for _, x in tests:
                rep = run_distributed_spmv(plan, x, "cost")
                worst = max(worst, max_rel_deviation(rep.y, spmv_csr(csr, x)))
        except (PlanError, ValueError) as exc:
            print(f"{combo.label}: FAIL ({exc})")
            ok = False
            continue
        good = worst <= VERIFY_TOL
        print(f"{combo.label}: max deviation {worst:.3e} {'ok' if good else 'FAIL'}")
        ok = ok and good
    print(f"verify: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_partition(config: ExperimentConfig, method: str, k: int) -> int:
    try:
        name, a = _load_input(config.matrix_path, config.random_shape, config.seed)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    axis = Axis.ROW if method.endswith("row") else Axis.COLUMN
    print(f"partition {name}: method={method}, parts={k}")
    if method.startswith("nezgt"):
        try:
            p = nezgt_partition(a, axis, k, RefineConfig(max_iterations=config.refine_iters))
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        for i in range(k):
            lines = p.lines(i)
            print(f"fragment {i}: load {p.loads[i]}, lines {' '.join(map(str, lines))}")
        print(f"fd: {max(p.loads) - min(p.loads)}")
    else:
        h = build_1d(a, axis)
        try:
            hp = partition_multilevel(h, k, config.epsilon, config.seed)
        except (BalanceInfeasibleError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        weights = part_weights(h, hp)
        for i in range(k):
            lines = [v for v, part in enumerate(hp.assignment) if part == i]
            print(f"part {i}: weight {weights[i]}, lines {' '.join(map(str, lines))}")
        print(f"cut_hyperedge: {cut_hyperedge(h, hp)}")
        print(f"cut_connectivity: {cut_connectivity(h, hp)}")
    return 0


def _add_input_args(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--matrix", metavar="PATH", help="Matrix Market file")
    g.add_argument(
        "--random", metavar="N,DENSITY", type=_parse_random,
        help="seeded random N x N integer matrix with the given density",
    )


def _add_common_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="seed for generation and partitioning")
    p.add_argument("--epsilon", type=float, default=0.05, help="balance tolerance")
    p.add_argument("--refine-iters", type=int, default=100,
                   help="max refinement iterations of the line heuristic")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spmvpart",
        description="Two-level sparse matrix partitioning and distributed SpMV simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="sweep combinations and node counts, emit CSV")
    _add_input_args(run_p)
    run_p.add_argument("--combos", type=_parse_combos, default=ALL_COMBOS,
                       help="comma-separated combination labels (default: all four)")
    run_p.add_argument("--nodes", type=_parse_nodes, default=(2, 4, 8),
                       help="comma-separated node counts (default: 2,4,8)")
    run_p.add_argument("--cores", type=int, default=4, help="cores per node (default: 4)")
    run_p.add_argument("--mode", choices=("cost", "wall"), default="cost")
    run_p.add_argument("--workers", type=int, default=None,
                       help="thread pool size for wall mode")
    run_p.add_argument("--out", metavar="PATH", help="CSV output path (default: stdout)")
    _add_common_args(run_p)

    rep_p = sub.add_parser("report", help="run the sweep and render figures next to the CSV")
    _add_input_args(rep_p)
    rep_p.add_argument("--combos", type=_parse_combos, default=ALL_COMBOS)
    rep_p.add_argument("--nodes", type=_parse_nodes, default=(2, 4, 8))
    rep_p.add_argument("--cores", type=int, default=4)
    rep_p.add_argument("--mode", choices=("cost", "wall"), default="cost")
    rep_p.add_argument("--workers", type=int, default=None)
    rep_p.add_argument("--out", metavar="PATH", required=True,
                       help="CSV output path; figures are written alongside it")
    _add_common_args(rep_p)

    ver_p = sub.add_parser("verify", help="check the distributed result against the sequential kernel")
    _add_input_args(ver_p)
    ver_p.add_argument("--nodes", type=int, default=2, help="node count f (default: 2)")
    ver_p.add_argument("--cores", type=int, default=4, help="cores per node (default: 4)")
    ver_p.add_argument("--corrupt-plan", action="store_true",
                       help="damage the plan first to exercise failure reporting")
    _add_common_args(ver_p)

    part_p = sub.add_parser("partition", help="inspect a single-level partition")
    _add_input_args(part_p)
    part_p.add_argument("--method", required=True,
                        choices=("nezgt-row", "nezgt-col", "hyper-row", "hyper-col"))
    part_p.add_argument("--parts", type=int, default=2, help="number of parts (default: 2)")
    _add_common_args(part_p)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    base = dict(
        matrix_path=args.matrix,
        random_shape=args.random,
        seed=args.seed,
        epsilon=args.epsilon,
        refine_iters=args.refine_iters,
    )
    if args.command in ("run", "report"):
        cfg = ExperimentConfig(
            combos=args.combos,
            nodes=args.nodes,
            cores=args.cores,
            mode=args.mode,
            workers=args.workers,
            out=args.out,
            render_figures=args.command == "report",
            **base,
        )
        return cmd_run(cfg)
    if args.command == "verify":
        cfg = ExperimentConfig(cores=args.cores, **base)
        return cmd_verify(cfg, args.nodes, corrupt=args.corrupt_plan)
    cfg = ExperimentConfig(**base)
    return cmd_partition(cfg, args.method, args.parts)


if __name__ == "__main__":
    raise SystemExit(main())
