"""End-to-end invariant forward pass over a molecule's conformer ensemble.

Combines the 2D bond-graph embedding, per-conformer 3D embeddings, and
the barycenter embedding into a scalar prediction. The whole map depends
on conformer geometry only through interatomic distances, so it is
invariant to rigid motions of each conformer and to conformer order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .barycenter import BarycenterResult, barycenter
from .encoders import (
    Conformer,
    EncoderWeights,
    Molecule2D,
    conformer_to_graph,
    gat_forward,
    schnet_readout,
)
from .graphs import AttributedGraph, FgwParams


@dataclass(frozen=True)
class ConanForwardResult:
    y_hat: float
    h2d: np.ndarray
    h3d_per_conf: np.ndarray  # d x K
    h_bc: np.ndarray
    barycenter: BarycenterResult


def barycenter_readout(bary_graph: AttributedGraph, enc: EncoderWeights) -> np.ndarray:
    """Sum_v (A_bar h_v + a_bar) over barycenter node features."""
    H = bary_graph.H
    if H.shape[1] != enc.d:
        raise ValueError("embedding width mismatch")
    return (H @ enc["readout_bc_w"].T).sum(axis=0) + H.shape[0] * enc["readout_bc_b"]


def combine(h2d, h3d_per_conf, h_bc, enc: EncoderWeights) -> np.ndarray:
    """W2D H2D + W3D H3D + WBC HBC with h2d/h_bc duplicated across the K columns."""
    h3d_per_conf = np.asarray(h3d_per_conf, dtype=float)
    if h3d_per_conf.ndim != 2:
        raise ValueError("h3d_per_conf must be a d x K matrix")
    K = h3d_per_conf.shape[1]
    if K < 1:
        raise ValueError("need at least one conformer column")
    h2d_col = (enc["w_2d"] @ h2d)[:, None]
    hbc_col = (enc["w_bc"] @ h_bc)[:, None]
    return h2d_col + enc["w_3d"] @ h3d_per_conf + hbc_col


def predict(h_comb, enc: EncoderWeights) -> float:
    """Linear head on the column mean: W_G mean_k(Hcomb[:,k]) + b_G."""
    h_comb = np.asarray(h_comb, dtype=float)
    return float(enc["pred_w"] @ h_comb.mean(axis=1) + enc["pred_b"])


def conan_forward(
    mol2d: Molecule2D,
    conformers,
    enc: EncoderWeights,
    fgw_params: FgwParams | None = None,
    threads: int | None = None,
) -> ConanForwardResult:
    """Full forward pass: 2D embedding, K conformer graphs, barycenter, prediction."""
    conformers = list(conformers)
    if not conformers:
        raise ValueError("need at least one conformer")
    first = conformers[0].Z
    if any(c.Z != first for c in conformers):
        raise ValueError("conformers must share the same atom sequence")
    if fgw_params is None:
        fgw_params = FgwParams()
    h2d = gat_forward(mol2d, enc)
    graphs = [conformer_to_graph(c, enc) for c in conformers]
    h3d = np.stack([schnet_readout(g.H, enc) for g in graphs], axis=1)
    bary = barycenter(graphs, fgw_params, threads=threads)
    h_bc = barycenter_readout(bary.graph, enc)
    y_hat = predict(combine(h2d, h3d, h_bc, enc), enc)
    return ConanForwardResult(
        y_hat=y_hat, h2d=h2d, h3d_per_conf=h3d, h_bc=h_bc, barycenter=bary
    )
