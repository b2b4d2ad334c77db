"""Entropic fused Gromov-Wasserstein toolkit for molecular conformer ensembles."""

from .barycenter import BarycenterResult, barycenter, feature_update, structure_update
from .encoders import (
    Conformer,
    EncoderWeights,
    Molecule2D,
    apply_rigid_motion,
    conformer_to_graph,
    gat_forward,
    parse_xyz,
    perturb_conformer,
    random_rigid_motion,
    rbf_expand,
    schnet_lite_forward,
    schnet_readout,
    ssp,
)
from .fgw import (
    FgwResult,
    LossDecomposition,
    apply_cost_tensor,
    entropic_fgw,
    fgw_objective,
    loss_decomposition,
    tensor_product,
)
from .graphs import (
    AttributedGraph,
    FgwParams,
    Loss,
    feature_distance_matrix,
    permute_nodes,
    validate_graph,
)
from .oracles import (
    convergence_experiment,
    exact_fgw_two_node,
    exact_ot_cost,
    runtime_scaling,
    wasserstein_bound_check,
)
from .pipeline import ConanForwardResult, conan_forward
from .sinkhorn import entropy, marginal_error, round_to_feasible, sinkhorn_lse

__version__ = "0.1.0"

__all__ = [
    "AttributedGraph",
    "BarycenterResult",
    "ConanForwardResult",
    "Conformer",
    "EncoderWeights",
    "FgwParams",
    "FgwResult",
    "Loss",
    "LossDecomposition",
    "Molecule2D",
    "apply_cost_tensor",
    "apply_rigid_motion",
    "barycenter",
    "conan_forward",
    "conformer_to_graph",
    "convergence_experiment",
    "entropic_fgw",
    "entropy",
    "exact_fgw_two_node",
    "exact_ot_cost",
    "feature_distance_matrix",
    "feature_update",
    "fgw_objective",
    "gat_forward",
    "loss_decomposition",
    "marginal_error",
    "parse_xyz",
    "permute_nodes",
    "perturb_conformer",
    "random_rigid_motion",
    "rbf_expand",
    "round_to_feasible",
    "runtime_scaling",
    "schnet_lite_forward",
    "schnet_readout",
    "sinkhorn_lse",
    "ssp",
    "structure_update",
    "tensor_product",
    "validate_graph",
    "wasserstein_bound_check",
]
