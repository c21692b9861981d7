"""leafgen: deterministic dead-leaves-style image synthesis and statistics.

The generator composes occlusion stacks of textured random shapes into
scenes with depth of field, colored from single natural images; the stats
toolkit measures how closely a corpus matches natural-image second-order
statistics (gradient histogram KL, power-spectrum slope).
"""

__version__ = "0.1.0"

from .color import (
    ColorSource,
    PowerLawParams,
    draw_color,
    lab_to_srgb_u8,
    lab_to_srgb_unit,
    load_color_source,
    sample_power_law,
    srgb_to_lab,
)
from .compositing import (
    DofParams,
    SceneLayer,
    dof_compose,
    downscale2,
    fuse_three_planes,
    generate_vl,
    leaves_stack,
    sample_dof_sigma,
)
from .config import PRESETS, VlConfig, apply_preset, config_hash, load_config
from .geometry import (
    ShapeMask,
    ShapeParams,
    Triangulation,
    concave_hull,
    delaunay,
    rasterize,
    sample_points_in_disk,
    sample_shape,
    smooth_mask,
)
from .seeds import derive_seed
from .stats import (
    GradHistogram,
    RadialSpectrum,
    SlopeFit,
    fit_slope,
    gradient_hist,
    kl_divergence,
    radial_spectrum,
)
from .textures import (
    HomographyCorners,
    MicroParams,
    PeriodicParams,
    TextureParams,
    WarpParams,
    micro_texture,
    periodic_field,
    perspective_warp,
    sample_texture,
    solve_homography,
    two_scale_texture,
    warp_field,
)

__all__ = [name for name in dir() if not name.startswith("_")]
