"""OSM ingest: Overpass parsing, cleaning, tag statistics and node features."""
from .clean import CleanStats, clean, repair_polygon
from .parse import FRAME_WINDOW, OverpassParseError, ParseStats, Window, parse_overpass, to_overpass
from .providers import HashedNgramProvider, LookupTableProvider, read_glem, write_glem
from .tags import EmbeddingError, GeoObject, TagStats, compute_tag_stats, embed_object, tag_string

__all__ = [
    "CleanStats", "EmbeddingError", "FRAME_WINDOW", "GeoObject", "HashedNgramProvider",
    "LookupTableProvider", "OverpassParseError", "ParseStats", "TagStats", "Window", "clean",
    "compute_tag_stats", "embed_object", "parse_overpass", "read_glem", "repair_polygon",
    "tag_string", "to_overpass", "write_glem",
]
