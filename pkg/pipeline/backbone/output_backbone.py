"""
Output files of the backbone command: edge list, GraphML and adjacency matrix.
"""
import io
import logging
from pathlib import Path
from typing import Dict, Optional

import networkx as nx
import numpy as np
import pandas as pd

from common.model import BinaryNetwork, WeightedNetwork
from common.utils.file_utils import atomic_write_bytes, write_frame, write_json, write_matrix
from pipeline.backbone.backbone import edge_alphas, to_graph

logger = logging.getLogger("proxnet")

EDGES_FILE = "backbone_edges.csv"
GRAPHML_FILE = "backbone.graphml"
MATRIX_FILE = "backbone_matrix.csv"
SUMMARY_FILE = "backbone.json"


def edge_frame(network: BinaryNetwork, weights: Optional[WeightedNetwork] = None) -> pd.DataFrame:
    """Edge list i,j,alpha,weight in lexicographic order; alpha/weight are blank without the source network."""
    alphas = {s.edge: s for s in edge_alphas(weights)} if weights is not None else {}
    records = []
    for i, j in network.edges():
        significance = alphas.get((i, j))
        records.append({
            "i": network.roster[i],
            "j": network.roster[j],
            "alpha": significance.alpha if significance else np.nan,
            "weight": significance.weight if significance else np.nan,
        })
    return pd.DataFrame(records, columns=["i", "j", "alpha", "weight"])


def export_graphml(network: BinaryNetwork, path, weights: Optional[WeightedNetwork] = None):
    buffer = io.BytesIO()
    nx.write_graphml(to_graph(network, weights), buffer)
    atomic_write_bytes(path, buffer.getvalue())


def write_backbone(out_dir, network: BinaryNetwork, weights: WeightedNetwork, summary: Dict):
    out_dir = Path(out_dir)
    write_frame(out_dir / EDGES_FILE, edge_frame(network, weights), float_format="%.6g")
    export_graphml(network, out_dir / GRAPHML_FILE, weights)
    write_matrix(out_dir / MATRIX_FILE, WeightedNetwork(network.roster, network.adjacency.astype(float)))
    write_json(out_dir / SUMMARY_FILE, summary)
    logger.info(f"Wrote backbone with {network.edge_count} edges to {out_dir}")
