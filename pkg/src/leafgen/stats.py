"""Second-order naturalness statistics.

Two classic measurements compare a synthetic corpus against natural images:

* the histogram of gradient magnitudes (natural images have heavy-tailed,
  non-spiky gradient distributions), scored by KL divergence, and
* the radially averaged power spectrum, whose log-log decay slope gamma is
  ~1.4 for natural images.

Grayscale is CIE Y computed from linearized sRGB. Gradients are forward
differences on the common (H-1, W-1) grid, histogrammed over 256 uniform
bins on [0, 1.5] (a unit-range image cannot exceed sqrt(2), so no mass is
ever dropped). Spectra are accumulated into integer-radius annuli; the
slope is an ordinary least-squares fit of log power against log frequency
over [0.01, 0.35] cycles/pixel, away from DC leakage and rasterization
artifacts near Nyquist.

Functions accept in-memory arrays; ``*_from_files`` variants stream a folder
of images (center-cropping to a common square for the spectrum).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .color import srgb_to_gray_y

logger = logging.getLogger(__name__)

GRAD_BINS = 256
GRAD_MAX = 1.5
KL_EPS = 1e-10
FIT_LO = 0.01
FIT_HI = 0.35


@dataclass(frozen=True)
class GradHistogram:
    """Pooled gradient-magnitude histogram."""

    bin_edges: np.ndarray
    counts: np.ndarray

    @property
    def densities(self) -> np.ndarray:
        total = self.counts.sum()
        if total == 0:
            raise ValueError("empty histogram")
        return self.counts / total


@dataclass(frozen=True)
class RadialSpectrum:
    """Radially averaged power spectrum.

    ``freqs`` are annulus centers k/N in cycles/pixel for k = 1, 2, ...;
    annuli beyond Nyquist (grid corners) are retained so that the total
    spectral energy is preserved, but reporting and fitting use the
    (0, 0.5] band. ``counts`` are accumulated sample counts per annulus
    across the corpus.
    """

    freqs: np.ndarray
    power: np.ndarray
    counts: np.ndarray


@dataclass(frozen=True)
class SlopeFit:
    """Log-log OLS fit of the spectrum decay: power ~ freq**-gamma."""

    gamma: float
    r2: float
    freq_range: tuple[float, float]


def as_gray(img: np.ndarray) -> np.ndarray:
    """Normalize an image array to float64 grayscale in [0, 1].

    3-channel input is treated as sRGB (uint8 or unit floats) and reduced
    to CIE Y; 2-D input is assumed grayscale already.
    """
    arr = np.asarray(img)
    if arr.ndim == 3 and arr.shape[-1] == 3:
        return srgb_to_gray_y(arr)
    if arr.ndim == 2:
        return arr.astype(np.float64)
    raise ValueError(f"expected (H, W) or (H, W, 3) image, got shape {arr.shape}")


def gradient_magnitude(gray: np.ndarray) -> np.ndarray:
    """Forward-difference gradient L2 norm on the common (H-1, W-1) grid."""
    gx = np.diff(gray, axis=1)
    gy = np.diff(gray, axis=0)
    return np.sqrt(gx[:-1, :] ** 2 + gy[:, :-1] ** 2)


def gradient_hist(
    images,
    patch_size: int = 500,
    n_patches: int = 1000,
    rng: np.random.Generator | None = None,
) -> GradHistogram:
    """Pool gradient magnitudes over random patches of a corpus.

    ``images`` is a sequence of arrays or of loader callables returning
    arrays (so corpora can stay on disk). Each patch picks a random image,
    then a random ``patch_size`` square window; images smaller than the
    patch contribute whole (logged once).
    """
    if rng is None:
        rng = np.random.default_rng(0)
    items = list(images)
    if not items:
        raise ValueError("no images given")
    edges = np.linspace(0.0, GRAD_MAX, GRAD_BINS + 1)
    counts = np.zeros(GRAD_BINS, dtype=np.int64)
    cache: dict[int, np.ndarray] = {}
    warned_small = False
    for _ in range(n_patches):
        idx = int(rng.integers(0, len(items)))
        gray = cache.get(idx)
        if gray is None:
            item = items[idx]
            gray = as_gray(item() if callable(item) else item)
            if len(cache) >= 256:
                cache.pop(next(iter(cache)))
            cache[idx] = gray
        h, w = gray.shape
        if h < patch_size or w < patch_size:
            if not warned_small:
                logger.info("image %d x %d smaller than patch %d; using whole image", h, w, patch_size)
                warned_small = True
            window = gray
        else:
            r = int(rng.integers(0, h - patch_size + 1))
            c = int(rng.integers(0, w - patch_size + 1))
            window = gray[r : r + patch_size, c : c + patch_size]
        hist, _ = np.histogram(gradient_magnitude(window), bins=edges)
        counts += hist
    return GradHistogram(bin_edges=edges, counts=counts)


def kl_divergence(p: GradHistogram, q: GradHistogram) -> float:
    """KL(p || q) in nats with epsilon smoothing on both densities.

    Asymmetric by design: p is the corpus under test, q the reference.
    """
    if not np.array_equal(p.bin_edges, q.bin_edges):
        raise ValueError("histograms use different binning")
    dp = p.densities + KL_EPS
    dq = q.densities + KL_EPS
    dp /= dp.sum()
    dq /= dq.sum()
    return float(np.sum(dp * np.log(dp / dq)))


_annulus_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _annuli(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Integer-radius annulus index grid and per-annulus pixel counts."""
    cached = _annulus_cache.get(n)
    if cached is None:
        k = np.fft.fftfreq(n) * n
        ridx = np.rint(np.sqrt(k[:, None] ** 2 + k[None, :] ** 2)).astype(np.intp)
        counts = np.bincount(ridx.ravel())
        cached = (ridx, counts)
        if len(_annulus_cache) < 16:
            _annulus_cache[n] = cached
    return cached


def radial_spectrum(images) -> RadialSpectrum:
    """Average the power spectrum of square same-size images into annuli.

    Per image: grayscale, mean removal, 2-D FFT, squared magnitude, then
    accumulation into integer-radius annuli. The DC annulus is dropped
    (mean-removed images carry no information there).
    """
    n = None
    total: np.ndarray | None = None
    n_images = 0
    for item in images:
        gray = as_gray(item() if callable(item) else item)
        h, w = gray.shape
        if h != w:
            raise ValueError(f"images must be square, got {gray.shape}")
        if n is None:
            n = h
            ridx, annulus_counts = _annuli(n)
            total = np.zeros(len(annulus_counts), dtype=np.float64)
        elif h != n:
            raise ValueError(f"image sizes differ: {h} vs {n}")
        g = gray - gray.mean()
        power = np.abs(np.fft.fft2(g)) ** 2
        total += np.bincount(ridx.ravel(), weights=power.ravel(), minlength=len(total))
        n_images += 1
    if n is None or n_images == 0:
        raise ValueError("no images given")
    freqs = np.arange(1, len(total)) / n
    mean_power = total[1:] / (annulus_counts[1:] * n_images)
    return RadialSpectrum(freqs=freqs, power=mean_power, counts=annulus_counts[1:] * n_images)


def fit_slope(rs: RadialSpectrum, f_lo: float = FIT_LO, f_hi: float = FIT_HI) -> SlopeFit:
    """OLS fit of log power against log frequency; gamma is -slope."""
    sel = (rs.freqs >= f_lo) & (rs.freqs <= f_hi) & (rs.power > 0)
    if int(sel.sum()) < 10:
        raise ValueError(f"only {int(sel.sum())} usable bins in [{f_lo}, {f_hi}]; need >= 10")
    x = np.log(rs.freqs[sel])
    y = np.log(rs.power[sel])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 0.0
    return SlopeFit(gamma=float(-slope), r2=r2, freq_range=(f_lo, f_hi))


def _load_rgb(path: str) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def scan_image_files(directory: str) -> tuple[list[str], int]:
    """Decodable image paths in a directory plus a skipped-file count.

    Non-image and undecodable files are skipped with a warning.
    """
    d = Path(directory)
    if not d.is_dir():
        raise ValueError(f"not a directory: {directory}")
    good: list[str] = []
    skipped = 0
    for p in sorted(d.iterdir()):
        if not p.is_file():
            continue
        try:
            with Image.open(p) as im:
                im.verify()
            good.append(str(p))
        except Exception:
            logger.warning("skipping undecodable file: %s", p)
            skipped += 1
    if not good:
        raise ValueError(f"no decodable images in {directory}")
    return good, skipped


def gradient_hist_from_files(
    paths: list[str],
    patch_size: int = 500,
    n_patches: int = 1000,
    rng: np.random.Generator | None = None,
) -> GradHistogram:
    """Gradient histogram of a corpus on disk (lazy loading)."""
    loaders = [lambda p=p: _load_rgb(p) for p in paths]
    return gradient_hist(loaders, patch_size=patch_size, n_patches=n_patches, rng=rng)


def radial_spectrum_from_files(paths: list[str]) -> RadialSpectrum:
    """Radial spectrum of a corpus on disk.

    Images are center-cropped to the largest common even square so corpora
    of mixed sizes are still comparable.
    """
    if not paths:
        raise ValueError("no images given")
    side = None
    for p in paths:
        with Image.open(p) as im:
            w, h = im.size
        side = min(w, h) if side is None else min(side, w, h)
    side -= side % 2
    if side < 16:
        raise ValueError(f"images too small for spectral analysis: {side}")

    def crops():
        for p in paths:
            rgb = _load_rgb(p)
            h, w = rgb.shape[:2]
            r0 = (h - side) // 2
            c0 = (w - side) // 2
            yield rgb[r0 : r0 + side, c0 : c0 + side]

    return radial_spectrum(crops())
