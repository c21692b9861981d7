"""Generator configuration, presets, and config files.

:class:`VlConfig` bundles every knob of the generator with the standard
defaults: 1024 canvas downscaled 2x, coverages (1, 1/2, 1/4), power-law
radii on [10, 512] with exponent 3, the documented shape/texture mixes, and
depth-of-field blur drawn from density ~ sigma^0.5 on [0, 10].

Eight built-in presets toggle pipeline stages for ablation studies:

    vl               everything on
    no-depth         depth-of-field and perspective off
    disks-only       complex shapes off (disks only)
    no-micro         micro-textures off (periodic only)
    no-periodic      periodic textures off (micro only)
    no-textures      textures off (flat leaf colors)
    no-tex-no-depth  textures, depth and perspective off
    dead-leaves      disks, flat colors, no depth (the classic model)

Config files are TOML (JSON accepted as a mirror); any key overrides its
default. Scalar keys sit at top level, the three parameter groups in
``[size_law]``, ``[shape]``, ``[texture]`` tables.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import sys
from dataclasses import dataclass

from .color import PowerLawParams
from .geometry import ShapeParams
from .textures import TextureParams

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

PRESETS: dict[str, dict[str, bool]] = {
    "vl": {},
    "no-depth": {"depth": False, "perspective": False},
    "disks-only": {"shapes": False},
    "no-micro": {"micro": False},
    "no-periodic": {"periodic": False},
    "no-textures": {"textures": False},
    "no-tex-no-depth": {"textures": False, "depth": False, "perspective": False},
    "dead-leaves": {"shapes": False, "textures": False, "depth": False, "perspective": False},
}

_TOGGLES = ("shapes", "periodic", "micro", "textures", "depth", "perspective")


@dataclass(frozen=True)
class VlConfig:
    """Full generator configuration; defaults are the standard model."""

    width: int = 1024
    coverage: tuple[float, float, float] = (1.0, 0.5, 0.25)
    downscale: int = 2
    sigma_down: float = 0.7
    sigma_max: float = 10.0
    sigma_exponent: float = 0.5
    pool_size: int = 4096
    color_dir: str = ""
    preset: str = "vl"
    shapes: bool = True
    periodic: bool = True
    micro: bool = True
    textures: bool = True
    depth: bool = True
    perspective: bool = True
    size_law: PowerLawParams = PowerLawParams()
    shape: ShapeParams = ShapeParams()
    texture: TextureParams = TextureParams()

    def __post_init__(self) -> None:
        if self.width < 2:
            raise ValueError(f"width must be >= 2, got {self.width}")
        if self.downscale < 1 or self.downscale & (self.downscale - 1):
            raise ValueError(f"downscale must be a power of two >= 1, got {self.downscale}")
        if self.width % self.downscale:
            raise ValueError(f"width {self.width} not divisible by downscale {self.downscale}")
        if len(self.coverage) != 3 or any(not 0.0 <= p <= 1.0 for p in self.coverage):
            raise ValueError(f"coverage must be three fractions in [0, 1], got {self.coverage}")
        if self.pool_size < 1:
            raise ValueError(f"pool_size must be >= 1, got {self.pool_size}")
        if self.sigma_max < 0 or self.sigma_exponent <= -1:
            raise ValueError("need sigma_max >= 0 and sigma_exponent > -1")
        if not self.micro and not self.periodic and self.textures:
            raise ValueError("textures enabled but both texture families disabled; use textures=false")
        object.__setattr__(self, "coverage", tuple(float(p) for p in self.coverage))

    def effective_shape_params(self) -> ShapeParams:
        """Shape mix after the ``shapes`` toggle (off = disks only)."""
        if self.shapes:
            return self.shape
        return dataclasses.replace(self.shape, p_polygon=0.0, p_rectangle=0.0, p_disk=1.0)

    def effective_texture_params(self) -> TextureParams:
        """Texture mix after the family and perspective toggles."""
        tp = self.texture
        if not self.micro:
            tp = dataclasses.replace(tp, p_periodic=1.0, p_micro=0.0, p_two_scale=0.0)
        elif not self.periodic:
            tp = dataclasses.replace(tp, p_periodic=0.0, p_micro=1.0, p_two_scale=0.0)
        if not self.perspective:
            tp = dataclasses.replace(tp, p_perspective=0.0)
        return tp


def apply_preset(cfg: VlConfig, name: str) -> VlConfig:
    """Return ``cfg`` with the named preset's toggles applied."""
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    base = {t: True for t in _TOGGLES}
    base.update(PRESETS[name])
    return dataclasses.replace(cfg, preset=name, **base)


def config_to_dict(cfg: VlConfig) -> dict:
    """Nested plain-dict form of a config (JSON/TOML compatible)."""
    d = dataclasses.asdict(cfg)
    d["coverage"] = list(cfg.coverage)
    return d


def config_hash(cfg: VlConfig) -> str:
    """Stable hash of the generation parameters.

    Filesystem paths are excluded so the hash is identical across machines
    for the same generation settings; per-image color-source identities are
    recorded in the manifest instead.
    """
    d = config_to_dict(cfg)
    d.pop("color_dir", None)
    blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _build_group(cls, defaults, data: dict, name: str):
    merged = {**dataclasses.asdict(defaults), **data}
    try:
        return cls(**merged)
    except TypeError as exc:
        raise ValueError(f"bad key in [{name}]: {exc}") from exc


def load_config(path: str | None = None, preset: str | None = None, **overrides) -> VlConfig:
    """Build a config from defaults, an optional file, and direct overrides.

    Precedence, lowest to highest: defaults; toggles of the preset named in
    the file (key ``preset``); explicit file keys; the ``preset`` argument's
    toggles (the command-line preset wins); keyword overrides (used by the
    CLI for paths).
    """
    data: dict = {}
    if path is not None:
        if path.endswith(".json"):
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        else:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        if not isinstance(data, dict):
            raise ValueError(f"config root must be a table/object: {path}")
    file_preset = data.get("preset", "vl")
    if file_preset not in PRESETS:
        raise ValueError(f"unknown preset {file_preset!r} in {path}")
    merged: dict = {"preset": file_preset}
    merged.update(PRESETS[file_preset])
    for key, value in data.items():
        if key in ("size_law", "shape", "texture"):
            continue
        if key == "coverage":
            value = tuple(value)
        merged[key] = value
    size_law = _build_group(PowerLawParams, VlConfig.size_law, data.get("size_law", {}), "size_law")
    shape = _build_group(ShapeParams, VlConfig.shape, data.get("shape", {}), "shape")
    texture = _build_group(TextureParams, VlConfig.texture, data.get("texture", {}), "texture")
    merged.update(size_law=size_law, shape=shape, texture=texture)
    merged.update(overrides)
    try:
        cfg = VlConfig(**merged)
    except TypeError as exc:
        raise ValueError(f"bad config key: {exc}") from exc
    if preset is not None:
        cfg = apply_preset(cfg, preset)
    return cfg
