"""Two-level sparse matrix partitioning and distributed SpMV simulation."""

from .decomposition import (
    Combination,
    Fragment,
    HgConfig,
    TwoLevelPlan,
    decompose,
    extract_fragment,
    plan_from_line_sets,
    serialize_plan,
    validate_plan,
)
from .hypergraph import (
    BalanceInfeasibleError,
    HgPartition,
    Hypergraph,
    build_1d,
    build_2d_finegrain,
    cut_connectivity,
    cut_hyperedge,
    part_weights,
    partition_multilevel,
    refine_fm,
)
from .nezgt import (
    Axis,
    LinePartition,
    RefineConfig,
    fd,
    nezgt_partition,
    phase0_sort,
    phase1_ls,
    phase2_refine,
)
from .simulator import (
    CommStats,
    ExecutionReport,
    PlanError,
    compute_comm_stats,
    load_balance,
    max_rel_deviation,
    needed_x_indices,
    non_owned_fanout_volume,
    produced_y_indices,
    run_distributed_spmv,
)
from .sparse import (
    CooMatrix,
    CscMatrix,
    CsrMatrix,
    MatrixMarketError,
    col_nnz_counts,
    coo_to_csc,
    coo_to_csr,
    csc_to_coo,
    csr_to_coo,
    generate_random_sparse,
    load_matrix_market,
    parse_matrix_market,
    row_nnz_counts,
    spmv_csc,
    spmv_csr,
)

__version__ = "0.1.0"
