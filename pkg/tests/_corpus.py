"""Shared corpus fixtures for the test suite.

Builds and caches, under ``tests/data/cache``:

* a natural-reference folder of 256x256 crops (plus horizontal flips) of the
  bundled photographs, and
* generated image corpora (vl / dead-leaves) at the standard 1024 -> 512
  scale, keyed by config hash, global seed and count.

Generation resumes per image: every image's seed derives only from the run's
global seed and its index, so a partially filled cache directory is completed
rather than regenerated. Runnable directly to warm the cache:

    python3 tests/_corpus.py --count 16
"""

from __future__ import annotations

import argparse
import dataclasses
import json
from pathlib import Path

import numpy as np
from PIL import Image

from leafgen.cli import render_one, save_png
from leafgen.config import VlConfig, apply_preset, config_hash
from leafgen.manifest import MANIFEST_NAME, write_manifest
from leafgen.seeds import derive_seed

TESTS_DIR = Path(__file__).resolve().parent
PHOTOS_DIR = TESTS_DIR / "data" / "photos"
CACHE_DIR = TESTS_DIR / "data" / "cache"

VL_SEED = 1000
DL_SEED = 2000
REF_CROP = 256


def base_config(preset: str) -> VlConfig:
    return apply_preset(VlConfig(color_dir=str(PHOTOS_DIR)), preset)


def corpus_dir(preset: str, global_seed: int) -> Path:
    cfg = base_config(preset)
    return CACHE_DIR / f"{preset}-{config_hash(cfg)}-s{global_seed}"


def build_corpus(preset: str, global_seed: int, count: int, progress: bool = False) -> Path:
    """Generate (or complete) a cached corpus of at least ``count`` images.

    Image i depends only on (global_seed, i), so a cache built for a smaller
    count is extended in place rather than regenerated.
    """
    cfg = base_config(preset)
    out = corpus_dir(preset, global_seed)
    manifest = out / MANIFEST_NAME
    if manifest.exists() and json.loads(manifest.read_text().splitlines()[0])["count"] >= count:
        return out
    out.mkdir(parents=True, exist_ok=True)
    records = []
    for i in range(count):
        name = f"{cfg.preset}_{i:05d}.png"
        png = out / name
        meta = out / f"{name}.json"
        if png.exists() and meta.exists():
            records.append(json.loads(meta.read_text()))
            continue
        rec = render_one(cfg, i, derive_seed(global_seed, i), str(out))
        meta.write_text(json.dumps(rec, sort_keys=True))
        records.append(rec)
        if progress:
            print(f"{preset} {i + 1}/{count}", flush=True)
    header = {
        "version": "test-cache",
        "global_seed": global_seed,
        "preset": cfg.preset,
        "config_hash": config_hash(cfg),
        "count": count,
        "width": cfg.width,
        "downscale": cfg.downscale,
    }
    write_manifest(str(manifest), header, records)
    return out


def corpus_paths(preset: str, global_seed: int, count: int) -> list[Path]:
    """The first ``count`` image paths of a built corpus."""
    cfg = base_config(preset)
    out = corpus_dir(preset, global_seed)
    return [out / f"{cfg.preset}_{i:05d}.png" for i in range(count)]


def build_reference(progress: bool = False) -> Path:
    """Cut the bundled photos into 256x256 crops plus horizontal flips.

    Five crops per photo (four corner-anchored, one centered) mirrored
    horizontally give 90 reference images, balanced across the photos so no
    single image dominates the pooled statistics. The retina photograph is
    cropped from its central half only, to stay inside the circular fundus
    instead of its black surround.
    """
    out = CACHE_DIR / f"natref-{REF_CROP}"
    done = out / ".complete"
    if done.exists():
        return out
    out.mkdir(parents=True, exist_ok=True)
    n = 0
    for path in sorted(PHOTOS_DIR.glob("*.png")):
        with Image.open(path) as im:
            rgb = np.asarray(im.convert("RGB"))
        h, w = rgb.shape[:2]
        if path.stem == "retina":
            r0, r1 = h // 4, 3 * h // 4 - REF_CROP
            c0, c1 = w // 4, 3 * w // 4 - REF_CROP
        else:
            r0, r1 = 0, h - REF_CROP
            c0, c1 = 0, w - REF_CROP
        anchors = [(r0, c0), (r0, c1), (r1, c0), (r1, c1), ((r0 + r1) // 2, (c0 + c1) // 2)]
        for k, (r, c) in enumerate(anchors):
            tile = rgb[r : r + REF_CROP, c : c + REF_CROP]
            save_png(tile, str(out / f"{path.stem}_{k}.png"))
            save_png(tile[:, ::-1].copy(), str(out / f"{path.stem}_{k}f.png"))
            n += 2
    if progress:
        print(f"reference: {n} crops in {out}", flush=True)
    done.touch()
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", default="vl")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--count", type=int, required=True)
    args = ap.parse_args()
    seed = args.seed if args.seed is not None else (VL_SEED if args.preset == "vl" else DL_SEED)
    build_reference(progress=True)
    out = build_corpus(args.preset, seed, args.count, progress=True)
    print(f"corpus ready: {out}")


if __name__ == "__main__":
    main()
