"""Color spaces, natural color sourcing, and the leaf size law.

Colors travel through the generator as CIELAB triples (D65/2 degree white)
and are converted to 8-bit sRGB exactly once, at export. ``LabColor`` is a
plain float64 array whose last axis has length 3 and holds ``(L, a, b)`` with
``L`` in [0, 100]; all conversion functions are vectorized over leading axes.

A :class:`ColorSource` is a pool of Lab colors subsampled from one natural
image; drawing leaf and texture colors from a single image per generated
scene keeps each scene's palette coherent.

The leaf radius law is a bounded power law ``f(r) ~ r**-gamma`` on
``[r_min, r_max]``, sampled by inverse CDF.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image

#: Type alias for CIELAB data: float64 ndarray, last axis = (L, a, b).
LabColor = np.ndarray

# sRGB -> XYZ linear matrix (D65, IEC 61966-2-1). The white point is taken as
# the exact row sums so that RGB (1, 1, 1) maps to (L, a, b) = (100, 0, 0) at
# float precision.
_M_RGB2XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_M_XYZ2RGB = np.linalg.inv(_M_RGB2XYZ)
_WHITE = _M_RGB2XYZ.sum(axis=1)

_DELTA = 6.0 / 29.0
_DELTA3 = _DELTA**3


def srgb_to_linear(c: np.ndarray) -> np.ndarray:
    """Undo the sRGB transfer function; input and output in [0, 1]."""
    c = np.asarray(c, dtype=np.float64)
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def linear_to_srgb(c: np.ndarray) -> np.ndarray:
    """Apply the sRGB transfer function; input and output in [0, 1]."""
    c = np.asarray(c, dtype=np.float64)
    # Clip negatives before the fractional power; out-of-gamut handling is
    # the caller's job (lab_to_srgb_u8 reports the clipped fraction).
    safe = np.maximum(c, 0.0)
    return np.where(c <= 0.0031308, 12.92 * c, 1.055 * safe ** (1.0 / 2.4) - 0.055)


def _lab_f(t: np.ndarray) -> np.ndarray:
    return np.where(t > _DELTA3, np.cbrt(t), t / (3.0 * _DELTA * _DELTA) + 4.0 / 29.0)


def _lab_finv(t: np.ndarray) -> np.ndarray:
    return np.where(t > _DELTA, t**3, 3.0 * _DELTA * _DELTA * (t - 4.0 / 29.0))


def srgb_to_lab(rgb: np.ndarray) -> LabColor:
    """Convert 8-bit sRGB to CIELAB (D65/2 degree).

    Parameters
    ----------
    rgb : ndarray
        Integer array, last axis length 3, values in [0, 255].

    Returns
    -------
    ndarray
        Float64 Lab array of the same shape.
    """
    return srgb_unit_to_lab(np.asarray(rgb).astype(np.float64) / 255.0)


def srgb_unit_to_lab(rgb: np.ndarray) -> LabColor:
    """Convert sRGB in [0, 1] to CIELAB (D65/2 degree)."""
    arr = np.asarray(rgb, dtype=np.float64)
    if arr.shape[-1] != 3:
        raise ValueError(f"last axis must have length 3, got shape {arr.shape}")
    return linear_rgb_to_lab(srgb_to_linear(arr))


def linear_rgb_to_lab(lin: np.ndarray) -> LabColor:
    """Convert linear RGB (sRGB primaries, D65) to CIELAB."""
    xyz = lin @ _M_RGB2XYZ.T
    f = _lab_f(xyz / _WHITE)
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * fy - 16.0
    lab[..., 1] = 500.0 * (fx - fy)
    lab[..., 2] = 200.0 * (fy - fz)
    return lab


def lab_to_srgb_unit(lab: LabColor) -> np.ndarray:
    """Convert CIELAB to sRGB in [0, 1] without clipping.

    Out-of-gamut Lab values yield components outside [0, 1]; see
    :func:`lab_to_srgb_u8` for clipped 8-bit export.
    """
    arr = np.asarray(lab, dtype=np.float64)
    if arr.shape[-1] != 3:
        raise ValueError(f"last axis must have length 3, got shape {arr.shape}")
    fy = (arr[..., 0] + 16.0) / 116.0
    fx = fy + arr[..., 1] / 500.0
    fz = fy - arr[..., 2] / 200.0
    xyz = np.stack([_lab_finv(fx), _lab_finv(fy), _lab_finv(fz)], axis=-1) * _WHITE
    lin = xyz @ _M_XYZ2RGB.T
    return linear_to_srgb(lin)


def srgb_to_gray_y(rgb: np.ndarray) -> np.ndarray:
    """Relative luminance (CIE Y, D65) of sRGB data, in [0, 1].

    Accepts uint8 in [0, 255] or float already in [0, 1]; the transfer
    function is undone before the luminance weights are applied.
    """
    arr = np.asarray(rgb)
    if arr.shape[-1] != 3:
        raise ValueError(f"last axis must have length 3, got shape {arr.shape}")
    unit = arr.astype(np.float64) / 255.0 if arr.dtype.kind in "ui" else arr.astype(np.float64)
    return srgb_to_linear(unit) @ _M_RGB2XYZ[1]


def lab_to_srgb_u8(lab: LabColor) -> tuple[np.ndarray, float]:
    """Convert CIELAB to 8-bit sRGB, clipping out-of-gamut values.

    Returns
    -------
    (ndarray, float)
        The uint8 array and the fraction of components that needed clipping.
        A component counts as clipped only when the excursion beyond [0, 1]
        exceeds half a quantization step, i.e. when clipping changes the
        8-bit value; round-off at the gamut boundary does not count.
    """
    unit = lab_to_srgb_unit(lab)
    half = 0.5 / 255.0
    clipped = float(np.mean((unit < -half) | (unit > 1.0 + half)))
    u8 = np.clip(np.rint(np.clip(unit, 0.0, 1.0) * 255.0), 0, 255).astype(np.uint8)
    return u8, clipped


@dataclass(frozen=True)
class ColorSource:
    """Pool of colors drawn from one source image.

    Attributes
    ----------
    pixels : ndarray
        Float64 array of shape (n, 3), Lab colors, n >= 1.
    pixels_srgb : ndarray
        The same pool as sRGB unit floats in [0, 1], shape (n, 3),
        row-aligned with ``pixels``.
    source_id : str
        Identifier of the originating image (file basename).
    """

    pixels: np.ndarray
    pixels_srgb: np.ndarray
    source_id: str

    def __post_init__(self) -> None:
        if self.pixels.ndim != 2 or self.pixels.shape[1] != 3:
            raise ValueError(f"pixels must have shape (n, 3), got {self.pixels.shape}")
        if len(self.pixels) == 0:
            raise ValueError("color pool must not be empty")


def load_color_source(path: str, rng: np.random.Generator, pool_size: int = 4096) -> ColorSource:
    """Build a :class:`ColorSource` by subsampling an image on disk.

    ``pool_size`` pixels are drawn uniformly with replacement from the image
    (so small images still yield a full pool) and converted to Lab.
    """
    if pool_size < 1:
        raise ValueError(f"pool_size must be >= 1, got {pool_size}")
    with Image.open(path) as im:
        rgb = np.asarray(im.convert("RGB"))
    flat = rgb.reshape(-1, 3)
    if len(flat) == 0:
        raise ValueError(f"image has no pixels: {path}")
    idx = rng.integers(0, len(flat), size=pool_size)
    unit = flat[idx].astype(np.float64) / 255.0
    return ColorSource(
        pixels=srgb_unit_to_lab(unit),
        pixels_srgb=unit,
        source_id=os.path.basename(path),
    )


def draw_color(source: ColorSource, rng: np.random.Generator) -> LabColor:
    """Draw one Lab color uniformly from the pool."""
    return source.pixels[rng.integers(0, len(source.pixels))].copy()


IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")


def list_color_images(directory: str) -> list[str]:
    """Sorted paths of the images in a directory (non-recursive).

    Sorting by name makes the source chosen for a given rng draw
    reproducible across machines.
    """
    if not os.path.isdir(directory):
        raise ValueError(f"not a directory: {directory}")
    names = sorted(n for n in os.listdir(directory) if n.lower().endswith(IMAGE_EXTENSIONS))
    if not names:
        raise ValueError(f"no images found in {directory}")
    return [os.path.join(directory, n) for n in names]


@dataclass(frozen=True)
class PowerLawParams:
    """Bounded power-law radius distribution ``f(r) ~ r**-gamma``.

    Defaults give mostly small leaves with occasional large occluders.
    """

    r_min: float = 10.0
    r_max: float = 512.0
    gamma: float = 3.0

    def __post_init__(self) -> None:
        if self.r_min <= 0:
            raise ValueError(f"r_min must be > 0, got {self.r_min}")
        if self.r_max <= self.r_min:
            raise ValueError(f"r_max must exceed r_min, got [{self.r_min}, {self.r_max}]")
        if self.gamma <= 1:
            raise ValueError(f"gamma must be > 1, got {self.gamma}")


def sample_power_law(params: PowerLawParams, u):
    """Map uniform variates ``u`` in [0, 1] to radii by inverse CDF.

    ``u`` may be a scalar or array; ``u=0`` maps to ``r_min`` and ``u=1``
    to ``r_max``.

    The CDF of the bounded power law is
    ``F(r) = (r_min**(1-g) - r**(1-g)) / (r_min**(1-g) - r_max**(1-g))``,
    so ``r = (a - u * (a - b)) ** (1 / (1-g))`` with ``a = r_min**(1-g)``,
    ``b = r_max**(1-g)``.
    """
    u_arr = np.asarray(u, dtype=np.float64)
    if np.any((u_arr < 0) | (u_arr > 1)):
        raise ValueError("u must lie in [0, 1]")
    e = 1.0 - params.gamma
    a = params.r_min**e
    b = params.r_max**e
    r = (a - u_arr * (a - b)) ** (1.0 / e)
    return float(r) if np.isscalar(u) else r
