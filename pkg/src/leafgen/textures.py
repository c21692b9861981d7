"""Exemplar-free parametric textures.

Three texture families, all colored from a :class:`~leafgen.color.ColorSource`
pool so every texture in a scene shares the palette of one natural image:

* **Pseudo-periodic**: a piecewise sinusoid whose period changes from cycle
  to cycle, clipped at a level ``tau`` and passed through a rescaled logistic
  sigmoid, evaluated along a rotated axis (optionally as a product of two
  independent 1-D fields for 2-D patterns). The field interpolates between
  two pool colors. Optional turbulence warping displaces the sampling
  coordinates; optional perspective warping resamples the rendered map
  through a random homography.
* **Micro**: white noise drawn from the pool, spectrally shaped so the power
  spectrum decays as ``|freq|**-gamma``, then rank-remapped per channel back
  onto the exact multiset of input values. The shaping and remap run on the
  sRGB pool values, so every output pixel is a valid in-gamut color; the
  map is converted to Lab afterwards.
* **Two-scale**: two micro-textures blended through a pseudo-periodic
  interpolation mask.

All fields map into [0, 1]; rendered textures are CIELAB arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import fft2, ifft2

from .color import ColorSource, LabColor, draw_color, linear_rgb_to_lab, srgb_to_linear
from .filters import gaussian_blur


@dataclass(frozen=True)
class WarpParams:
    """Turbulence displacement field: blur std ``s``, magnitude ``t_scale``."""

    s: float
    t_scale: float

    def __post_init__(self) -> None:
        if self.s <= 0:
            raise ValueError(f"s must be > 0, got {self.s}")
        if self.t_scale < 0:
            raise ValueError(f"t_scale must be >= 0, got {self.t_scale}")


@dataclass(frozen=True)
class PeriodicParams:
    """Pseudo-periodic field parameters.

    ``periods`` lists the cycle lengths of one repeating pattern along the
    (rotated) x axis; ``periods_y`` is the independent list for the second
    axis when ``dims == 2``. ``tau`` clips the raw sinusoid from below,
    ``lam`` is the sigmoid growth rate, ``theta`` the axis rotation.
    """

    periods: np.ndarray
    lam: float
    theta: float
    tau: float
    dims: int = 1
    periods_y: np.ndarray | None = None
    warp: WarpParams | None = None

    def __post_init__(self) -> None:
        p = np.asarray(self.periods, dtype=np.float64)
        object.__setattr__(self, "periods", p)
        if p.ndim != 1 or len(p) == 0 or np.any(p <= 0):
            raise ValueError("periods must be a non-empty 1-D array of positive lengths")
        if self.dims not in (1, 2):
            raise ValueError(f"dims must be 1 or 2, got {self.dims}")
        if self.dims == 2:
            if self.periods_y is None:
                raise ValueError("dims=2 requires periods_y")
            py = np.asarray(self.periods_y, dtype=np.float64)
            object.__setattr__(self, "periods_y", py)
            if py.ndim != 1 or len(py) == 0 or np.any(py <= 0):
                raise ValueError("periods_y must be a non-empty 1-D array of positive lengths")
        if self.lam <= 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        if not -1.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must lie in [-1, 1], got {self.tau}")


@dataclass(frozen=True)
class MicroParams:
    """Colored-noise micro-texture: power spectrum decays as |freq|**-gamma."""

    gamma: float

    def __post_init__(self) -> None:
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")


@dataclass(frozen=True)
class HomographyCorners:
    """Four source corners ``src`` mapped to destination corners ``dst``."""

    src: np.ndarray
    dst: np.ndarray

    def __post_init__(self) -> None:
        for name in ("src", "dst"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            object.__setattr__(self, name, arr)
            if arr.shape != (4, 2):
                raise ValueError(f"{name} must have shape (4, 2), got {arr.shape}")


def _sigmoid(x: np.ndarray, lam: float) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-lam * x))


def _axis_profile(coord: np.ndarray, periods: np.ndarray, tau: float, lam: float) -> np.ndarray:
    """Clipped, sigmoid-slanted piecewise sinusoid along one axis.

    The pattern is one full sine cycle per listed period, concatenated and
    tiled; continuity holds at every cycle boundary since sin vanishes
    there. Raw values are clipped from below at ``tau``, linearly rescaled
    back to [-1, 1], then mapped through the logistic sigmoid rescaled so
    its range over [-1, 1] is exactly [0, 1].
    """
    cum = np.cumsum(periods)
    total = cum[-1]
    starts = cum - periods
    xt = np.mod(coord, total)
    idx = np.searchsorted(starts, xt, side="right") - 1
    raw = np.sin((2.0 * np.pi) * (xt - starts[idx]) / periods[idx])
    clipped = np.maximum(raw, tau)
    rescaled = 2.0 * (clipped - tau) / max(1.0 - tau, 1e-9) - 1.0
    lo = 1.0 / (1.0 + math.exp(lam))
    hi = 1.0 / (1.0 + math.exp(-lam))
    return (_sigmoid(rescaled, lam) - lo) / (hi - lo)


def periodic_field_at(pp: PeriodicParams, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Evaluate the (unwarped) periodic field at arbitrary coordinates.

    The field is analytic: rotation enters by evaluating the 1-D profiles
    along the axes rotated by ``theta``, so ``field(R_theta @ x) ==
    field_0(x)`` exactly.
    """
    c, s = math.cos(pp.theta), math.sin(pp.theta)
    u = c * xs + s * ys
    f = _axis_profile(u, pp.periods, pp.tau, pp.lam)
    if pp.dims == 2:
        v = -s * xs + c * ys
        f = f * _axis_profile(v, pp.periods_y, pp.tau, pp.lam)
    return f


def periodic_field(pp: PeriodicParams, size: tuple[int, int], rng: np.random.Generator | None = None) -> np.ndarray:
    """Render the periodic field on an (H, W) grid; values in [0, 1].

    If ``pp.warp`` is set, a turbulence displacement field (drawn from
    ``rng``) perturbs the sampling coordinates before evaluation.
    """
    h, w = size
    if h < 1 or w < 1:
        raise ValueError(f"size must be positive, got {size}")
    yy, xx = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    if pp.warp is not None:
        if rng is None:
            raise ValueError("warped field needs an rng")
        disp = warp_field(size, pp.warp, rng)
        xx = xx + disp[0]
        yy = yy + disp[1]
    return periodic_field_at(pp, xx, yy)


def render_periodic(
    pp: PeriodicParams,
    c1: LabColor,
    c2: LabColor,
    size: tuple[int, int],
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Interpolate between two Lab colors through the periodic field."""
    f = periodic_field(pp, size, rng)[..., None]
    return f * np.asarray(c1, dtype=np.float64) + (1.0 - f) * np.asarray(c2, dtype=np.float64)


_rho_cache: dict[tuple[int, int], np.ndarray] = {}


def _radial_rho(h: int, w: int) -> np.ndarray:
    key = (h, w)
    rho = _rho_cache.get(key)
    if rho is None:
        fy = np.fft.fftfreq(h)
        fx = np.fft.fftfreq(w)
        rho = np.sqrt(fy[:, None] ** 2 + fx[None, :] ** 2).astype(np.float32)
        rho[0, 0] = 1.0  # DC handled separately
        if len(_rho_cache) < 64:
            _rho_cache[key] = rho
    return rho


def micro_texture(mp: MicroParams, src: ColorSource, size: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    """Colored-noise texture with power spectrum ~ |freq|**-gamma.

    Each channel starts as white noise of pool pixels, is shaped in Fourier
    magnitude by ``rho**(-gamma/2)`` (DC untouched), and is rank-remapped so
    its value multiset is exactly the drawn pool sample. Shaping and
    remapping run on the gamma-encoded sRGB pool values: every remapped
    channel value then lies in [0, 1], so each output pixel is a valid sRGB
    color no matter how the remap pairs up channels (the same remap in Lab
    routinely combines a dark L with saturated chroma and escapes the
    gamut). The result is converted to Lab at the end. Both dimensions must
    be powers of two. The spectral shaping runs in single precision (it
    only determines ranks); the remapped values are the float64 pool pixels
    themselves.
    """
    h, w = size
    if h < 1 or w < 1 or (h & (h - 1)) or (w & (w - 1)):
        raise ValueError(f"size must be positive powers of two, got {size}")
    idx = rng.integers(0, len(src.pixels), size=h * w)
    noise = src.pixels_srgb[idx].reshape(h, w, 3)
    # Linearizing the 4096-entry pool once is far cheaper than linearizing
    # the full map; the sort permutation carries over (monotone transfer).
    lin_noise = srgb_to_linear(src.pixels_srgb)[idx].reshape(h, w, 3)
    filt = _radial_rho(h, w) ** np.float32(-mp.gamma / 2.0)
    filt[0, 0] = 1.0
    out = np.empty_like(noise)
    for ch in range(3):
        plane = noise[..., ch]
        centered = (plane - plane.mean()).astype(np.float32)
        shaped = ifft2(fft2(centered) * filt).real
        order = np.argsort(shaped.ravel(), kind="stable")
        perm = np.argsort(plane.ravel(), kind="stable")
        remapped = np.empty(h * w, dtype=np.float64)
        remapped[order] = lin_noise[..., ch].ravel()[perm]
        out[..., ch] = remapped.reshape(h, w)
    return linear_rgb_to_lab(out)


def two_scale_texture(t1: np.ndarray, t2: np.ndarray, mask_field: np.ndarray) -> np.ndarray:
    """Blend two textures through an interpolation field in [0, 1]."""
    if t1.shape != t2.shape:
        raise ValueError(f"texture shapes differ: {t1.shape} vs {t2.shape}")
    if mask_field.shape != t1.shape[:2]:
        raise ValueError(f"mask shape {mask_field.shape} does not match texture {t1.shape[:2]}")
    f = np.asarray(mask_field, dtype=np.float64)[..., None]
    return f * t1 + (1.0 - f) * t2


def warp_field(size: tuple[int, int], wp: WarpParams, rng: np.random.Generator) -> np.ndarray:
    """Turbulence displacement field, shape (2, H, W): (dx, dy).

    Standard Gaussian noise per channel, blurred with a Gaussian of std
    ``wp.s`` for spatial coherence, scaled by ``wp.t_scale``. Computed in
    float32; displacements only steer texture sampling.
    """
    h, w = size
    noise = rng.standard_normal((2, h, w), dtype=np.float32)
    return wp.t_scale * np.stack([gaussian_blur(noise[0], wp.s), gaussian_blur(noise[1], wp.s)])


def solve_homography(c: HomographyCorners) -> np.ndarray:
    """Least-squares homography mapping ``src`` corners onto ``dst``.

    Returns the 3x3 matrix with H[2,2] = 1. Raises ValueError when the
    corner configuration is (near-)degenerate.
    """
    a = np.zeros((8, 8))
    b = np.zeros(8)
    for i, ((x, y), (xd, yd)) in enumerate(zip(c.src, c.dst)):
        a[2 * i] = [x, y, 1.0, 0.0, 0.0, 0.0, -x * xd, -y * xd]
        a[2 * i + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -x * yd, -y * yd]
        b[2 * i] = xd
        b[2 * i + 1] = yd
    sv = np.linalg.svd(a, compute_uv=False)
    if sv[-1] <= 1e-10 * sv[0]:
        raise ValueError("degenerate corner configuration (collinear corners?)")
    h, *_ = np.linalg.lstsq(a, b, rcond=None)
    return np.append(h, 1.0).reshape(3, 3)


def perspective_warp(img: np.ndarray, c: HomographyCorners) -> np.ndarray:
    """Resample ``img`` through the homography defined by ``c``.

    Inverse-map warp with bilinear sampling; source coordinates are clamped
    to the image so out-of-domain pixels take the nearest boundary value.
    Coordinates within 1e-6 of an integer are snapped, so an identity
    homography reproduces the input bit-for-bit.
    """
    arr = np.asarray(img, dtype=np.float64)
    h, w = arr.shape[:2]
    hinv = np.linalg.inv(solve_homography(c))
    yy, xx = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    den = hinv[2, 0] * xx + hinv[2, 1] * yy + hinv[2, 2]
    den = np.where(np.abs(den) < 1e-12, 1e-12, den)
    sx = (hinv[0, 0] * xx + hinv[0, 1] * yy + hinv[0, 2]) / den
    sy = (hinv[1, 0] * xx + hinv[1, 1] * yy + hinv[1, 2]) / den
    rx = np.rint(sx)
    sx = np.where(np.abs(sx - rx) < 1e-6, rx, sx)
    ry = np.rint(sy)
    sy = np.where(np.abs(sy - ry) < 1e-6, ry, sy)
    sx = np.clip(sx, 0.0, w - 1.0)
    sy = np.clip(sy, 0.0, h - 1.0)
    x0 = np.clip(np.floor(sx).astype(np.intp), 0, max(w - 2, 0))
    y0 = np.clip(np.floor(sy).astype(np.intp), 0, max(h - 2, 0))
    fx = sx - x0
    fy = sy - y0
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    if arr.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    return (
        arr[y0, x0] * (1.0 - fx) * (1.0 - fy)
        + arr[y0, x1] * fx * (1.0 - fy)
        + arr[y1, x0] * (1.0 - fx) * fy
        + arr[y1, x1] * fx * fy
    )


def random_perspective_corners(size: tuple[int, int], shift: float, rng: np.random.Generator) -> HomographyCorners:
    """Perturb the image corners for a random perspective transform.

    Each destination corner moves by U[-shift, shift] of the image extent
    per axis; degenerate (non-convex or collinear) configurations are
    resampled.
    """
    h, w = size
    src = np.array([[0.0, 0.0], [w - 1.0, 0.0], [w - 1.0, h - 1.0], [0.0, h - 1.0]])
    scale = np.array([w, h], dtype=np.float64)
    for _ in range(1000):
        dst = src + rng.uniform(-shift, shift, size=(4, 2)) * scale
        if _is_convex_quad(dst):
            return HomographyCorners(src=src, dst=dst)
    raise RuntimeError("failed to draw non-degenerate perspective corners")


def _is_convex_quad(q: np.ndarray) -> bool:
    cross = []
    for i in range(4):
        a = q[(i + 1) % 4] - q[i]
        b = q[(i + 2) % 4] - q[(i + 1) % 4]
        cross.append(a[0] * b[1] - a[1] * b[0])
    cross_arr = np.array(cross)
    return bool(np.all(cross_arr > 1e-9) or np.all(cross_arr < -1e-9))


@dataclass(frozen=True)
class TextureParams:
    """Branch mix and parameter ranges for :func:`sample_texture`."""

    p_periodic: float = 1.0 / 6.0
    p_micro: float = 2.0 / 3.0
    p_two_scale: float = 1.0 / 6.0
    t_min: float = 5.0
    t_max: float = 100.0
    lam_min: float = 1.0
    lam_max: float = 10.0
    tau_min: float = -1.0
    tau_max: float = 1.0
    gamma_min: float = 0.5
    gamma_max: float = 2.5
    k_min: int = 1
    k_max: int = 4
    p_two_dim: float = 0.5
    p_warp: float = 0.5
    p_perspective: float = 0.5
    warp_s_min: float = 4.0
    warp_s_max: float = 16.0
    warp_t_min: float = 2.0
    warp_t_max: float = 10.0
    perspective_shift: float = 0.25

    def __post_init__(self) -> None:
        probs = (self.p_periodic, self.p_micro, self.p_two_scale)
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError(f"branch probabilities must be >= 0 and sum to 1, got {probs}")
        if not 0 < self.t_min <= self.t_max:
            raise ValueError("period range must satisfy 0 < t_min <= t_max")
        if not 1 <= self.k_min <= self.k_max:
            raise ValueError("need 1 <= k_min <= k_max")
        for name in ("p_two_dim", "p_warp", "p_perspective"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


def draw_texture_kind(rng: np.random.Generator, tp: TextureParams) -> str:
    """Draw the branch label with the configured proportions."""
    u = rng.random()
    if u < tp.p_periodic:
        return "periodic"
    if u < tp.p_periodic + tp.p_micro:
        return "micro"
    return "two_scale"


def _draw_periodic_params(rng: np.random.Generator, tp: TextureParams, allow_warp: bool = True) -> PeriodicParams:
    """Sample pseudo-periodic parameters; draw order is fixed.

    Order: k, periods, theta, lam, tau, two-dim coin (+ y periods), warp
    coin (+ warp params).
    """
    k = int(rng.integers(tp.k_min, tp.k_max + 1))
    periods = rng.uniform(tp.t_min, tp.t_max, size=k)
    theta = rng.uniform(0.0, math.pi / 4.0)
    lam = rng.uniform(tp.lam_min, tp.lam_max)
    tau = rng.uniform(tp.tau_min, tp.tau_max)
    two_dim = rng.random() < tp.p_two_dim
    periods_y = rng.uniform(tp.t_min, tp.t_max, size=k) if two_dim else None
    warp = None
    if allow_warp and rng.random() < tp.p_warp:
        warp = WarpParams(s=rng.uniform(tp.warp_s_min, tp.warp_s_max), t_scale=rng.uniform(tp.warp_t_min, tp.warp_t_max))
    return PeriodicParams(
        periods=periods,
        lam=lam,
        theta=theta,
        tau=tau,
        dims=2 if two_dim else 1,
        periods_y=periods_y,
        warp=warp,
    )


def _pow2_ceil(n: int) -> int:
    return 1 << (n - 1).bit_length()


def sample_texture(
    src: ColorSource,
    size: tuple[int, int],
    rng: np.random.Generator,
    tp: TextureParams = TextureParams(),
) -> np.ndarray:
    """Draw one texture map of exactly ``size`` (H, W), colors in Lab.

    Dispatches periodic / micro / two-scale with the configured
    probabilities. Micro textures are synthesized at the per-axis
    next-power-of-two and cropped. Periodic textures get turbulence warping
    and perspective with their configured coin probabilities; the two-scale
    interpolation mask gets the warp coin but no perspective.
    """
    h, w = size
    if h < 1 or w < 1:
        raise ValueError(f"size must be positive, got {size}")
    kind = draw_texture_kind(rng, tp)
    if kind == "periodic":
        pp = _draw_periodic_params(rng, tp, allow_warp=True)
        c1 = draw_color(src, rng)
        c2 = draw_color(src, rng)
        apply_perspective = rng.random() < tp.p_perspective
        img = render_periodic(pp, c1, c2, size, rng)
        # single-row/column maps have collinear corners; no perspective there
        if apply_perspective and h >= 2 and w >= 2:
            corners = random_perspective_corners(size, tp.perspective_shift, rng)
            img = perspective_warp(img, corners)
        return img
    p2 = (_pow2_ceil(h), _pow2_ceil(w))
    if kind == "micro":
        mp = MicroParams(gamma=rng.uniform(tp.gamma_min, tp.gamma_max))
        return micro_texture(mp, src, p2, rng)[:h, :w]
    mp1 = MicroParams(gamma=rng.uniform(tp.gamma_min, tp.gamma_max))
    t1 = micro_texture(mp1, src, p2, rng)[:h, :w]
    mp2 = MicroParams(gamma=rng.uniform(tp.gamma_min, tp.gamma_max))
    t2 = micro_texture(mp2, src, p2, rng)[:h, :w]
    mask_pp = _draw_periodic_params(rng, tp, allow_warp=True)
    mask = periodic_field(mask_pp, size, rng)
    return two_scale_texture(t1, t2, mask)
