"""Scene assembly: leaf stacks, depth-of-field fusion, downscaling.

A scene is three independent leaf stacks (background fully covered, middle
half, foreground quarter). Each stack paints leaves *under* the existing
ones: a new leaf colors only pixels not yet covered, which realizes the
visible-parts occlusion model without any z-sorting.

Depth of field fuses the planes with the smooth-extinction operator

    (B, g_B) (+) (F, g_F, M)  =  (B * g_B) x (1 - M * g_B * g_F) + (F * g_F)

where ``*`` is Gaussian convolution and the mask term softly extinguishes
the background behind the blurred foreground. The three-plane stack is the
nested application with the middle plane in focus; foreground and
background share one blur std per image. The fused canvas is pre-blurred
and bilinearly decimated 2x (sample points sit at 2x2 block centers, so
decimation is an exact 2x2 mean).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .color import (
    ColorSource,
    PowerLawParams,
    draw_color,
    lab_to_srgb_u8,
    list_color_images,
    load_color_source,
    sample_power_law,
)
from .config import VlConfig
from .filters import gaussian_blur
from .geometry import ShapeParams, sample_shape
from .textures import TextureParams, sample_texture

MAX_LEAVES = 100_000


@dataclass(frozen=True)
class SceneLayer:
    """One depth plane: painted Lab stack, coverage mask, leaf count."""

    stack: np.ndarray
    mask: np.ndarray
    coverage: float
    n_leaves: int


@dataclass(frozen=True)
class DofParams:
    """Blur stds for the outer planes; the middle plane is in focus.

    Both stds are drawn equal in practice (see :func:`sample_dof_sigma`).
    """

    sigma1: float
    sigma3: float

    def __post_init__(self) -> None:
        for name in ("sigma1", "sigma3"):
            v = getattr(self, name)
            if not 0.0 <= v <= 10.0:
                raise ValueError(f"{name} must lie in [0, 10], got {v}")


def sample_dof_sigma(rng: np.random.Generator, sigma_max: float = 10.0, exponent: float = 0.5) -> float:
    """Draw a blur std from density ~ sigma**exponent on [0, sigma_max].

    Inverse CDF: sigma = sigma_max * u**(1 / (exponent + 1)); the default
    exponent 0.5 makes large blurs scarcer than small ones.
    """
    u = rng.random()
    return sigma_max * u ** (1.0 / (exponent + 1.0))


def leaves_stack(
    p: float,
    w: int,
    src: ColorSource,
    rng: np.random.Generator,
    size_law: PowerLawParams = PowerLawParams(),
    shape_params: ShapeParams = ShapeParams(),
    texture_params: TextureParams = TextureParams(),
    textured: bool = True,
    record: list | None = None,
) -> SceneLayer:
    """Paint leaves until the covered fraction reaches ``p``.

    Per leaf the layer rng draws exactly four values — position (x, then y)
    uniform in [0, w]^2, the radius variate, and a 64-bit child seed — and
    shape plus texture then draw from a child generator built on that seed.
    A leaf whose whole support window (center +/- ceil(radius)+2, a provable
    bound on the pasted mask) is already covered cannot change the canvas,
    the layer mask, or coverage, so its synthesis is skipped entirely; the
    fixed four-draw layout keeps every later leaf bit-identical either way.
    The texture lands only on still-uncovered pixels (the new leaf slides
    under the existing ones) and is sized to the bounding box of those
    pixels; a leaf that adds no new pixel skips texture synthesis. With
    ``textured=False`` every leaf is one flat pool color.

    ``record``, if given, receives one ``(slice_rows, slice_cols, painted)``
    triple per painting leaf (debug/testing aid).

    Raises RuntimeError when ``MAX_LEAVES`` leaves fail to reach coverage
    ``p`` (configuration error, e.g. degenerate size law).
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if w < 1:
        raise ValueError(f"w must be >= 1, got {w}")
    stack = np.zeros((w, w, 3), dtype=np.float64)
    mask = np.zeros((w, w), dtype=bool)
    target = p * w * w
    covered = 0
    n_leaves = 0
    while covered < target:
        if n_leaves >= MAX_LEAVES:
            raise RuntimeError(f"coverage {covered / (w * w):.4f} < {p} after {MAX_LEAVES} leaves; check the size law")
        x = rng.uniform(0.0, w)
        y = rng.uniform(0.0, w)
        radius = sample_power_law(size_law, rng.random())
        child_seed = int(rng.integers(0, 2**64 - 1, dtype=np.uint64, endpoint=True))
        n_leaves += 1
        ay = int(round(y - 0.5))
        ax = int(round(x - 0.5))
        half = math.ceil(radius) + 2
        wr0, wr1 = max(ay - half, 0), min(ay + half + 1, w)
        wc0, wc1 = max(ax - half, 0), min(ax + half + 1, w)
        if wr1 <= wr0 or wc1 <= wc0 or mask[wr0:wr1, wc0:wc1].all():
            continue
        child = np.random.default_rng(child_seed)
        shape = sample_shape(shape_params, radius, child)
        sh, sw = shape.mask.shape
        r0 = ay - int(round(shape.center[0]))
        c0 = ax - int(round(shape.center[1]))
        rr0, rr1 = max(r0, 0), min(r0 + sh, w)
        cc0, cc1 = max(c0, 0), min(c0 + sw, w)
        if rr1 <= rr0 or cc1 <= cc0:
            continue
        sub = shape.mask[rr0 - r0 : rr1 - r0, cc0 - c0 : cc1 - c0]
        mview = mask[rr0:rr1, cc0:cc1]
        new = sub & ~mview
        n_new = int(np.count_nonzero(new))
        if n_new == 0:
            continue
        nrows = np.flatnonzero(new.any(axis=1))
        ncols = np.flatnonzero(new.any(axis=0))
        tr0, tr1 = int(nrows[0]), int(nrows[-1]) + 1
        tc0, tc1 = int(ncols[0]), int(ncols[-1]) + 1
        new_t = new[tr0:tr1, tc0:tc1]
        if textured:
            tex = sample_texture(src, (tr1 - tr0, tc1 - tc0), child, texture_params)
        else:
            tex = np.broadcast_to(draw_color(src, child), (tr1 - tr0, tc1 - tc0, 3))
        stack[rr0 + tr0 : rr0 + tr1, cc0 + tc0 : cc0 + tc1][new_t] = tex[new_t]
        mview |= sub
        covered += n_new
        if record is not None:
            record.append((slice(rr0, rr1), slice(cc0, cc1), new.copy()))
    return SceneLayer(stack=stack, mask=mask, coverage=covered / (w * w), n_leaves=n_leaves)


def dof_compose(bg: np.ndarray, sigma_bg: float, fg: np.ndarray, sigma_fg: float, mask: np.ndarray) -> np.ndarray:
    """Fuse a blurred foreground over a blurred background.

    Implements ``(B * g_B) x (1 - M * g_B * g_F) + (F * g_F)`` with
    truncated renormalized Gaussians; a zero sigma is the identity kernel,
    so all-delta kernels reduce to hard painter compositing bit-exactly.

    ``fg`` must be zero outside ``mask`` (leaf stacks are by construction).
    """
    if bg.shape != fg.shape:
        raise ValueError(f"layer shapes differ: {bg.shape} vs {fg.shape}")
    if mask.shape != bg.shape[:2]:
        raise ValueError(f"mask shape {mask.shape} does not match layers {bg.shape[:2]}")
    bb = gaussian_blur(bg, sigma_bg)
    ff = gaussian_blur(fg, sigma_fg)
    mm = gaussian_blur(gaussian_blur(mask.astype(np.float64), sigma_bg), sigma_fg)
    extinction = 1.0 - mm
    if bb.ndim == 3:
        extinction = extinction[..., None]
    return bb * extinction + ff


def fuse_three_planes(bg: SceneLayer, mid: SceneLayer, fg: SceneLayer, d: DofParams) -> np.ndarray:
    """Nested depth fusion: background and foreground blurred, middle in focus.

    Evaluates ``[(I3, G_s3) (+) (I2, delta, M2), delta] (+) (I1, G_s1, M1)``
    with I3 = background, I2 = middle, I1 = foreground.
    """
    inner = dof_compose(bg.stack, d.sigma3, mid.stack, 0.0, mid.mask)
    return dof_compose(inner, 0.0, fg.stack, d.sigma1, fg.mask)


def downscale2(img: np.ndarray, sigma_down: float = 0.7) -> np.ndarray:
    """Anti-aliased 2x downscale: Gaussian pre-blur, then 2x2 mean.

    Bilinear decimation by 2 samples at the centers of 2x2 blocks, which is
    exactly the block mean. Dimensions must be even.
    """
    h, w = img.shape[:2]
    if h % 2 or w % 2:
        raise ValueError(f"dimensions must be even, got {img.shape[:2]}")
    b = gaussian_blur(img, sigma_down)
    return (b[0::2, 0::2] + b[0::2, 1::2] + b[1::2, 0::2] + b[1::2, 1::2]) / 4.0


def generate_vl(cfg: VlConfig, seed: int) -> tuple[np.ndarray, dict]:
    """Generate one complete image; returns (uint8 sRGB array, info dict).

    Fully deterministic given (cfg, seed). The rng stream order is: color
    source choice, source pool subsample, depth sigma (skipped when depth is
    off), then the three leaf stacks, background first.

    The info dict records the derived per-image quantities needed for the
    run manifest: blur sigma, color-source id, per-plane leaf counts, and
    the fraction of color components clipped at sRGB export. Textures are
    in-gamut by construction, so that fraction is dominated by the smooth
    extinction overshoot at blurred plane boundaries: near zero for small
    sigma, a few percent at sigma near the maximum.
    """
    files = list_color_images(cfg.color_dir)
    rng = np.random.default_rng(seed)
    src = load_color_source(files[rng.integers(0, len(files))], rng, cfg.pool_size)
    sigma = sample_dof_sigma(rng, cfg.sigma_max, cfg.sigma_exponent) if cfg.depth else 0.0
    sp = cfg.effective_shape_params()
    tp = cfg.effective_texture_params()
    layers = [
        leaves_stack(p, cfg.width, src, rng, cfg.size_law, sp, tp, textured=cfg.textures)
        for p in cfg.coverage
    ]
    fused = fuse_three_planes(layers[0], layers[1], layers[2], DofParams(sigma1=sigma, sigma3=sigma))
    factor = cfg.downscale
    while factor > 1:
        fused = downscale2(fused, cfg.sigma_down)
        factor //= 2
    u8, clipped = lab_to_srgb_u8(fused)
    info = {
        "sigma": sigma,
        "color_source": src.source_id,
        "n_leaves": [layer.n_leaves for layer in layers],
        "clipped_fraction": clipped,
    }
    return u8, info
