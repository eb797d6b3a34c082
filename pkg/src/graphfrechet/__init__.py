"""Fréchet means and Fréchet regression of graphs under spectral distances."""

from .graph import (
    Graph,
    GraphError,
    d_A,
    d_Ac,
    density,
    is_sparse,
    sparsity_threshold,
    spectral_distance,
    spectrum,
    truncated_spectral_distance,
    truncated_spectrum,
)
from .io import GraphFormatError, parse_graph, read_graph, write_graph
from .models import (
    ModelError,
    SbmParams,
    expected_adjacency,
    sample_barabasi_albert,
    sample_erdos_renyi,
    sample_sbm,
    sample_small_world,
    sbm_kernel_eval,
)
from .spectral import (
    RootFindConfig,
    RootFindError,
    expected_adjacency_spectrum,
    expected_sample_spectrum,
    monte_carlo_mean_spectrum,
    operator_spectrum,
)
from .communities import estimate_c, order_statistic_moments, semicircle_pdf

__version__ = "0.1.0"
