"""Model hyperparameters."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field (e.g. ``model.d_pe``)."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class ModelConfig:
    image_size: int = 32
    patch_size: int = 4
    channels: int = 3
    d_patch: int = 32
    enc_depth: int = 2
    enc_heads: int = 4
    dec_dim: int = 32
    dec_depth: int = 2
    dec_heads: int = 4
    d_text: int = 64
    d_node: int = 32
    gat_rounds: int = 2
    set2set_steps: int = 3
    d_fusion: int = 32
    fusion_heads: int = 4
    d_proj: int = 32
    d_pe: int = 32
    pe_base: float = 10000.0
    pe_coord_scale: float = 1.0
    mlp_ratio: int = 2
    mask_ratio_image: float = 0.75
    mask_ratio_node: float = 0.20
    norm_pix_target: bool = False
    fusion_pe: bool = True
    init_std: float = 0.02

    @property
    def grid(self) -> int:
        return self.image_size // self.patch_size

    @property
    def num_patches(self) -> int:
        return self.grid * self.grid

    @property
    def patch_dim(self) -> int:
        return self.channels * self.patch_size ** 2

    def validate(self, prefix: str = "model") -> "ModelConfig":
        ints = ("image_size", "patch_size", "channels", "d_patch", "dec_dim", "d_text", "d_node",
                "d_fusion", "d_proj", "d_pe", "enc_heads", "dec_heads", "fusion_heads", "mlp_ratio",
                "set2set_steps")
        for name in ints:
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v <= 0:
                raise ConfigError(f"{prefix}.{name}", f"must be a positive integer, got {v!r}")
        for name in ("enc_depth", "dec_depth", "gat_rounds"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise ConfigError(f"{prefix}.{name}", f"must be a non-negative integer, got {v!r}")
        if self.image_size % self.patch_size:
            raise ConfigError(f"{prefix}.image_size", "must be divisible by patch_size")
        # the sin/cos embedders split dims in half per axis, then in sin/cos pairs
        for name in ("d_pe", "d_patch", "dec_dim"):
            if getattr(self, name) % 4:
                raise ConfigError(f"{prefix}.{name}", "must be a multiple of 4")
        for dim, heads in (("d_patch", "enc_heads"), ("dec_dim", "dec_heads"), ("d_fusion", "fusion_heads")):
            if getattr(self, dim) % getattr(self, heads):
                raise ConfigError(f"{prefix}.{heads}", f"must divide {dim}")
        for name in ("mask_ratio_image", "mask_ratio_node"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not 0.0 <= v < 1.0:
                raise ConfigError(f"{prefix}.{name}", f"must lie in [0, 1), got {v!r}")
        if int(self.mask_ratio_image * self.num_patches) >= self.num_patches:
            raise ConfigError(f"{prefix}.mask_ratio_image", "leaves no visible patch")
        if int(self.mask_ratio_image * self.num_patches) == 0 and self.mask_ratio_image > 0:
            raise ConfigError(f"{prefix}.mask_ratio_image", "masks no patch at this image size")
        for name in ("pe_base", "pe_coord_scale", "init_std"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or v <= 0:
                raise ConfigError(f"{prefix}.{name}", f"must be positive, got {v!r}")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict, prefix: str = "model") -> "ModelConfig":
        known = {f.name: f for f in fields(cls)}
        for k in d:
            if k not in known:
                raise ConfigError(f"{prefix}.{k}", "unknown key")
        return cls(**d).validate(prefix)
