"""SpeakEasy label-propagation community detection with consensus clustering,
multi-community nodes, partition/cover metrics, planted benchmarks and a
cohort permutation test."""

__version__ = "0.1.0"

from .graph import (
    Cover,
    Graph,
    GraphFormatError,
    Partition,
    from_dense_matrix,
    graph_from_array,
    induced_subgraph,
    load_edge_list,
    read_cover,
    read_dense_matrix,
    read_partition,
    write_cover,
    write_dense_matrix,
    write_partition,
)
from .labelprop import EngineParams, EngineState, run, run_labels, run_many
from .consensus import (
    CoOccurrenceMatrix,
    PartitionEnsemble,
    co_occurrence,
    multi_community_nodes,
    replicate,
    representative_partition,
    subcluster,
)
from .metrics import (
    NodeSetMismatch,
    ari,
    cover_report,
    f_measure,
    f_multi,
    jaccard_index,
    modularity_density_qds,
    modularity_q,
    nmi,
    nvd,
    omega_index,
    overlapping_nmi,
    partition_report,
    rand_index,
)
from .benchgen import BenchmarkSpec, InfeasibleSpecError, generate
from .difftest import CohortData, DiffReport, load_manifest, permutation_test
