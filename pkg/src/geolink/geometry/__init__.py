"""Computational-geometry kernel for vector features in image-frame coordinates."""
from .delaunay import circumcircle_violations, delaunay_edges, triangulate
from .relate import ADMISSIBLE, CONVERSE, de9im, relate, relation_from_matrix, to_shapely
from .sampling import centroid, is_simple_ring, locate, point_in_polygon, sample_keypoints
from .shapes import (
    N_RELATIONS,
    Geometry,
    GeometryError,
    NodeType,
    Point,
    Polygon,
    Polyline,
    Relation,
    bounds,
    signed_area,
)
from .transform import SampleTransform, apply_transform, clip_geometry, clip_segment

__all__ = [
    "ADMISSIBLE", "CONVERSE", "N_RELATIONS", "Geometry", "GeometryError", "NodeType",
    "Point", "Polygon", "Polyline", "Relation", "SampleTransform", "apply_transform",
    "bounds", "centroid", "clip_geometry", "circumcircle_violations", "clip_segment", "de9im",
    "delaunay_edges", "is_simple_ring", "locate", "point_in_polygon", "relate",
    "relation_from_matrix", "sample_keypoints", "signed_area", "to_shapely", "triangulate",
]
