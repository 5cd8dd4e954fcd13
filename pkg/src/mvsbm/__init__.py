"""Multi-view stochastic block model: sampling, estimate fusion, diagnostics."""

from mvsbm.graph_core import (
    BelowThresholdError,
    DegenerateStatisticsError,
    Graph,
    InsufficientDataError,
    InvalidParameterError,
    LabelVector,
    MVInstance,
    MvsbmError,
    ParseError,
    RngHandle,
    SignMapping,
    SignVector,
    View,
    ViewParams,
    is_balanced,
    load_graph,
    load_instance,
    sample_label_vector,
    sample_mv_instance,
    sample_sbm2_conditional,
    sample_sbm_k,
    sample_sign_mapping,
    save_graph,
    save_instance,
    union_graph,
    union_of_graphs,
)

__all__ = [
    "BelowThresholdError",
    "DegenerateStatisticsError",
    "Graph",
    "InsufficientDataError",
    "InvalidParameterError",
    "LabelVector",
    "MVInstance",
    "MvsbmError",
    "ParseError",
    "RngHandle",
    "SignMapping",
    "SignVector",
    "View",
    "ViewParams",
    "is_balanced",
    "load_graph",
    "load_instance",
    "sample_label_vector",
    "sample_mv_instance",
    "sample_sbm2_conditional",
    "sample_sbm_k",
    "sample_sign_mapping",
    "save_graph",
    "save_instance",
    "union_graph",
    "union_of_graphs",
]

__version__ = "0.1.0"
