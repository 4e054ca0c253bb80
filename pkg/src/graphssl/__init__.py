"""Graph Laplacians for semi-supervised clustering.

The unsupervised graph Laplacian, the weighted nonlocal Laplacian (WNLL) and
a label-aware SSL Laplacian, with spectral-clustering and Dirichlet
interpolation pipelines and the metrics used to compare them.
"""

from .data import LabelBudget, MoonsSpec, generate_moons, load_idx, sample_labeled_set, write_idx
from .errors import ConfigError, FormatError, GraphSSLError, InputError, InvariantError, SolverError
from .evaluation import ClusteringResult, MetricReport, acc, evaluate, hungarian_match, kmeans, nmi
from .graph import (
    Dataset,
    GraphConfig,
    Laplacian,
    apply,
    build_affinity,
    build_laplacian,
    connected_components,
    degree_vector,
    dirichlet_energy,
    median_knn_sigma,
)
from .laplacians import (
    LAPLACIANS,
    LabeledSet,
    SSLConfig,
    build_ablation_affinity,
    build_ssl_laplacian,
    build_w_ssl,
    build_w_wnll,
    laplacian_for,
    ssl_labeled_affinity,
    wnll_labeled_affinity,
)
from .solvers import (
    DirichletSolution,
    SpectralEmbedding,
    smallest_eigenpairs,
    solve_dirichlet,
    solve_multiclass_dirichlet,
    solve_pm1_dirichlet,
)

__version__ = "0.1.0"
