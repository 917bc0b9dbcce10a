"""Object graph construction, node masking and the GLGR container."""
from .builder import (
    FAMILIES, N_KEYPOINTS, TYPES, NodeMaskPlan, OsmGraph, build_graph, empty_graph,
    keypoint_rng, mask_nodes, no_mask,
)
from .io import deserialize_graph, graph_to_json, load_graph, save_graph, serialize_graph

__all__ = [
    "FAMILIES", "N_KEYPOINTS", "TYPES", "NodeMaskPlan", "OsmGraph", "build_graph",
    "deserialize_graph", "empty_graph", "graph_to_json", "keypoint_rng", "load_graph",
    "mask_nodes", "no_mask", "save_graph", "serialize_graph",
]
