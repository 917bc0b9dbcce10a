"""Image encoder, object-graph encoder, region readout and fusion encoder."""
from .aggregate import aggregate_region, set2set
from .config import ConfigError, ModelConfig
from .fusion import fuse
from .geolink import EncodingBundle, forward, init_params, object_pe, patch_pe, project_pair
from .image import (
    ImageMaskPlan, decode_masked, encode_image, full_plan, mask_patches, patchify, pool_image,
    unpatchify,
)
from .osm_encoder import GraphBatch, batch_graphs, encode_osm, input_features
from .posenc import frequencies, grid_embedding, patch_centers, position_embed, sincos_2d

__all__ = [
    "ConfigError", "EncodingBundle", "GraphBatch", "ImageMaskPlan", "ModelConfig",
    "aggregate_region", "batch_graphs", "decode_masked", "encode_image", "encode_osm",
    "forward", "frequencies", "full_plan", "fuse", "grid_embedding", "init_params",
    "input_features", "mask_patches", "object_pe", "patch_centers", "patch_pe", "patchify",
    "pool_image", "position_embed", "project_pair", "set2set", "sincos_2d", "unpatchify",
]
