"""Geometric entropy of networks from the volume of a deformed Gaussian manifold."""
from .graph import (
    Constant,
    DegreeSequence,
    GenerationError,
    Graph,
    GraphError,
    Jittered,
    assign_weights,
    degree_sequence,
    gen_configuration_model,
    gen_powerlaw_sequence,
    gen_uniform_random_graph,
    gibbs_rg_entropy,
    heterogeneity,
    is_graphical,
    randomize_preserving_nk,
)
from .geometry import Box, DegenerateMetricError, deformed_metric, log_volume_element, null_log_volume, psi
from .entropy import (
    EntropyResult,
    McConfig,
    NumericalFailure,
    VolumeEstimate,
    degree_sequence_entropy,
    estimate_log_volume,
    fixed_graph_entropy,
    geometric_entropy,
    normalized_entropy,
    sweep_er,
    sweep_powerlaw,
)
from .ingest import ParseError, parse_edge_list, parse_gml, read_graph, write_edge_list

__version__ = "0.1.0"
