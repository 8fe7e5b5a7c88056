"""
Backbone extraction: turn weighted proximity networks and directed survey
networks into comparable undirected binary networks.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Tuple, Union

import networkx as nx
import numpy as np

from common.model import BinaryNetwork, DirectedSurveyNetwork, WeightedNetwork
from common.utils.errors import StatisticsError, ValidationError

logger = logging.getLogger("proxnet")


@dataclass(frozen=True)
class EdgeSignificance:
    """Disparity-filter significance of one positive-weight edge."""
    i: int
    j: int
    weight: float
    alpha_from_i: float
    alpha_from_j: float

    @property
    def alpha(self) -> float:
        return min(self.alpha_from_i, self.alpha_from_j)

    @property
    def edge(self) -> Tuple[int, int]:
        return self.i, self.j


def symmetrize(survey: DirectedSurveyNetwork) -> BinaryNetwork:
    """Collapse directed nominations into undirected edges (edge iff i->j or j->i)."""
    adjacency = survey.adjacency | survey.adjacency.T
    return BinaryNetwork(survey.roster, adjacency)


def _alpha_from(weight: float, strength: float, degree: int) -> float:
    if degree <= 1:
        return 1.0
    p = weight / strength
    return float((1.0 - p) ** (degree - 1))


def edge_alphas(network: WeightedNetwork) -> List[EdgeSignificance]:
    """
    Disparity-filter alpha of every positive-weight edge.

    For node i with degree k_i >= 2 and strength s_i, the edge share is
    p_ij = w_ij / s_i and alpha_from_i = (1 - p_ij)^(k_i - 1); nodes with a
    single edge give alpha_from_i = 1. An edge's alpha is the smaller of its
    two endpoint values.
    """
    weights = np.asarray(network.weights, dtype=float)
    positive = weights > 0
    degree = positive.sum(axis=1)
    strength = weights.sum(axis=1)

    significance = []
    rows, cols = np.nonzero(np.triu(positive, k=1))
    for i, j in zip(rows.tolist(), cols.tolist()):
        w = float(weights[i, j])
        significance.append(EdgeSignificance(
            i=i,
            j=j,
            weight=w,
            alpha_from_i=_alpha_from(w, strength[i], int(degree[i])),
            alpha_from_j=_alpha_from(w, strength[j], int(degree[j])),
        ))
    return significance


def _from_edges(roster, edges) -> BinaryNetwork:
    adjacency = np.zeros((len(roster), len(roster)), dtype=np.int8)
    for i, j in edges:
        adjacency[i, j] = adjacency[j, i] = 1
    return BinaryNetwork(roster, adjacency)


def backbone_extract(network: WeightedNetwork, alpha_threshold: float) -> BinaryNetwork:
    """Keep every edge whose alpha is strictly below the threshold."""
    if not 0.0 <= alpha_threshold <= 1.0:
        raise ValidationError(f"alpha_threshold must lie in [0, 1], got {alpha_threshold}")
    kept = [s.edge for s in edge_alphas(network) if s.alpha < alpha_threshold]
    logger.info(f"Backbone at alpha < {alpha_threshold}: kept {len(kept)} edges")
    return _from_edges(network.roster, kept)


def ranked_edges(network: WeightedNetwork) -> List[EdgeSignificance]:
    """Edges by alpha ascending, then weight descending, then node pair."""
    return sorted(edge_alphas(network), key=lambda s: (s.alpha, -s.weight, s.i, s.j))


def target_edge_count(n: int, target_density: float) -> int:
    """round(density * n(n-1)/2), halves rounded up."""
    return int(math.floor(target_density * n * (n - 1) / 2 + 0.5))


def density_matched_backbone(network: WeightedNetwork, target_density: float) -> Tuple[BinaryNetwork, float]:
    """
    Backbone with exactly the edge count implied by a target density.

    Edges are ranked by ranked_edges and the first m* are kept.

    Returns:
        Tuple of (BinaryNetwork, alpha of the last kept edge; 0.0 when m* = 0)
    """
    if not 0.0 < target_density <= 1.0:
        raise ValidationError(f"target_density must lie in (0, 1], got {target_density}")
    ranked = ranked_edges(network)
    wanted = target_edge_count(network.n, target_density)
    if wanted > len(ranked):
        raise StatisticsError(
            f"Target density {target_density:.4f} needs {wanted} edges but only {len(ranked)} "
            f"have positive weight (maximum achievable density "
            f"{len(ranked) / max(network.n * (network.n - 1) / 2, 1):.4f})"
        )
    kept = ranked[:wanted]
    threshold = kept[-1].alpha if kept else 0.0
    logger.info(f"Density-matched backbone: {wanted} edges, alpha threshold {threshold:.6g}")
    return _from_edges(network.roster, [s.edge for s in kept]), threshold


def density(network: Union[BinaryNetwork, WeightedNetwork]) -> float:
    """Binary: edges / (n(n-1)/2). Weighted: mean upper-triangle weight."""
    if network.n < 2:
        raise ValidationError("Density needs at least two nodes")
    return float(np.mean(network.upper_triangle()))


def survey_density(survey: DirectedSurveyNetwork) -> float:
    return density(symmetrize(survey))


def to_graph(network: BinaryNetwork, weights: WeightedNetwork = None) -> nx.Graph:
    """networkx graph of a binary network; edges carry alpha/weight when the source network is given."""
    graph = nx.Graph()
    graph.add_nodes_from(network.roster)
    alphas = {s.edge: s for s in edge_alphas(weights)} if weights is not None else {}
    for i, j in network.edges():
        attrs = {}
        if (i, j) in alphas:
            attrs = {"alpha": alphas[(i, j)].alpha, "weight": alphas[(i, j)].weight}
        graph.add_edge(network.roster[i], network.roster[j], **attrs)
    return graph
