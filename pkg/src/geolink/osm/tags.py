"""Tag-value pairs as text, corpus tag statistics, and the weighted-average node feature."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np

from ..geometry import Geometry


@dataclass(frozen=True, eq=False)
class GeoObject:
    """One OSM feature: geometry, ordered ``(key, value)`` tags and an optional feature vector."""

    id: str
    geom: Geometry
    tags: tuple
    sigma: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "tags", tuple((str(k), str(v)) for k, v in self.tags))

    @property
    def kind(self):
        return self.geom.kind

    def tag_dict(self) -> dict:
        return dict(self.tags)

    def with_geom(self, geom) -> "GeoObject":
        return replace(self, geom=geom)

    def with_sigma(self, sigma) -> "GeoObject":
        return replace(self, sigma=np.asarray(sigma, dtype=np.float64))

    def __eq__(self, other):
        if not isinstance(other, GeoObject):
            return NotImplemented
        if (self.sigma is None) != (other.sigma is None):
            return False
        same_sigma = self.sigma is None or np.array_equal(self.sigma, other.sigma)
        return self.id == other.id and self.geom == other.geom and self.tags == other.tags and same_sigma

    __hash__ = None


def tag_string(key: str, value: str) -> str:
    """``key + ":" + value`` with no escaping."""
    if not key:
        raise ValueError("tag key must be non-empty")
    return f"{key}:{value}"


@dataclass
class TagStats:
    """Corpus-wide count of objects carrying each tag key."""

    counts: dict = field(default_factory=dict)

    def weight(self, key: str) -> int:
        return self.counts.get(key, 1)

    def __add__(self, other: "TagStats") -> "TagStats":
        merged = Counter(self.counts)
        merged.update(other.counts)
        return TagStats(dict(merged))

    def total(self) -> int:
        return sum(self.counts.values())

    def top(self, k: int = 10) -> list:
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]


def compute_tag_stats(corpus) -> TagStats:
    counts = Counter()
    for obj in corpus:
        counts.update({k for k, _ in obj.tags})
    return TagStats(dict(counts))


class EmbeddingError(RuntimeError):
    def __init__(self, text: str, cause: Exception | None = None):
        super().__init__(f"embedding provider failed on {text!r}" + (f": {cause}" if cause else ""))
        self.text = text


def embed_object(obj: GeoObject, provider, stats: TagStats) -> np.ndarray:
    """Occurrence-weighted mean of the tag-string embeddings; unseen keys weigh 1."""
    if not obj.tags:
        raise ValueError(f"object {obj.id} has no tags")
    total = np.zeros(provider.dim)
    wsum = 0.0
    for key, value in obj.tags:
        text = tag_string(key, value)
        try:
            h = np.asarray(provider.embed(text), dtype=np.float64)
        except EmbeddingError:
            raise
        except Exception as exc:
            raise EmbeddingError(text, exc) from exc
        w = float(stats.weight(key))
        total += w * h
        wsum += w
    return total / wsum
