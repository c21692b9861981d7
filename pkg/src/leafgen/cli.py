"""Command-line interface.

Three subcommands:

* ``generate`` renders a deterministic image set plus a JSON-lines manifest,
* ``stats`` audits a corpus against a reference folder (JSON report, CSV
  spectra, and figure PNGs side by side),
* ``preset`` lists or shows the built-in ablation presets.

Generation parallelizes over images with a process pool; every image's seed
derives only from (global seed, index), so outputs are byte-identical for
any worker count.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from PIL import Image
from PIL.PngImagePlugin import PngInfo

from . import __version__
from .color import list_color_images
from .compositing import generate_vl
from .config import PRESETS, VlConfig, apply_preset, config_hash, config_to_dict, load_config
from .manifest import MANIFEST_NAME, write_manifest
from .seeds import derive_seed
from .stats import (
    fit_slope,
    gradient_hist_from_files,
    kl_divergence,
    radial_spectrum_from_files,
    scan_image_files,
)

logger = logging.getLogger(__name__)


def save_png(u8: np.ndarray, path: str) -> None:
    """Atomically write an 8-bit RGB PNG with an sRGB chunk.

    The image lands under a temporary name first and is renamed into place,
    so an interrupted run never leaves truncated PNGs.
    """
    target = Path(path)
    tmp = target.with_name(f".{target.name}.tmp{os.getpid()}")
    info = PngInfo()
    info.add(b"sRGB", b"\x00")
    try:
        Image.fromarray(u8, mode="RGB").save(tmp, format="PNG", pnginfo=info)
        os.replace(tmp, target)
    finally:
        if tmp.exists():
            tmp.unlink()


def render_one(cfg: VlConfig, index: int, seed: int, out_dir: str) -> dict:
    """Render image ``index`` with its derived seed and write its PNG."""
    u8, info = generate_vl(cfg, seed)
    name = f"{cfg.preset}_{index:05d}.png"
    save_png(u8, str(Path(out_dir) / name))
    if info["clipped_fraction"] > 0.01:
        logger.warning("image %d: %.2f%% of components clipped at export", index, 100 * info["clipped_fraction"])
    return {
        "index": index,
        "seed": seed,
        "preset": cfg.preset,
        "sigma": info["sigma"],
        "color_source": info["color_source"],
        "path": name,
        "n_leaves": info["n_leaves"],
        "clipped_fraction": info["clipped_fraction"],
    }


def _worker(payload: tuple[VlConfig, int, int, str]) -> dict:
    cfg, index, seed, out_dir = payload
    return render_one(cfg, index, seed, out_dir)


def cmd_generate(args: argparse.Namespace) -> int:
    overrides = {}
    if args.color_dir is not None:
        overrides["color_dir"] = args.color_dir
    cfg = load_config(args.config, preset=args.preset, **overrides)
    if args.count > 0:
        list_color_images(cfg.color_dir)  # fail early with a clear message
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [(cfg, i, derive_seed(args.seed, i), str(out_dir)) for i in range(args.count)]
    if args.threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            records = list(pool.map(_worker, tasks))
    else:
        records = [_worker(t) for t in tasks]
    records.sort(key=lambda r: r["index"])
    header = {
        "version": __version__,
        "global_seed": args.seed,
        "preset": cfg.preset,
        "config_hash": config_hash(cfg),
        "count": args.count,
        "width": cfg.width,
        "downscale": cfg.downscale,
    }
    write_manifest(str(out_dir / MANIFEST_NAME), header, records)
    print(f"wrote {len(records)} images + {MANIFEST_NAME} to {out_dir} (preset {cfg.preset}, seed {args.seed})")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    from .report import write_stats_outputs

    in_paths, in_skipped = scan_image_files(args.input)
    ref_paths, ref_skipped = scan_image_files(args.ref)
    rng_in = np.random.default_rng(args.seed)
    rng_ref = np.random.default_rng(args.seed + 1)
    hist_in = gradient_hist_from_files(in_paths, args.patch_size, args.patches, rng_in)
    hist_ref = gradient_hist_from_files(ref_paths, args.patch_size, args.patches, rng_ref)
    kl = kl_divergence(hist_in, hist_ref)
    spec_in = radial_spectrum_from_files(in_paths)
    spec_ref = radial_spectrum_from_files(ref_paths)
    fit_in = fit_slope(spec_in)
    fit_ref = fit_slope(spec_ref)
    report = {
        "input_dir": str(args.input),
        "reference_dir": str(args.ref),
        "n_input_images": len(in_paths),
        "n_reference_images": len(ref_paths),
        "skipped_files": {"input": in_skipped, "reference": ref_skipped},
        "gradient_kl_nats": kl,
        "input_spectrum": {"gamma": fit_in.gamma, "r2": fit_in.r2},
        "reference_spectrum": {"gamma": fit_ref.gamma, "r2": fit_ref.r2},
        "settings": {
            "grad_bins": 256,
            "grad_range": [0.0, 1.5],
            "patch_size": args.patch_size,
            "n_patches": args.patches,
            "kl_epsilon": 1e-10,
            "fit_band": list(fit_in.freq_range),
            "seed": args.seed,
        },
    }
    hists = {"input": hist_in, "reference": hist_ref}
    spectra = {"input": spec_in, "reference": spec_ref}
    fits = {"input": fit_in, "reference": fit_ref}
    written = write_stats_outputs(args.out, report, hists, spectra, fits)
    print(f"KL(input || reference) = {kl:.4f} nats")
    print(f"spectrum slope: input gamma={fit_in.gamma:.3f} (R2={fit_in.r2:.4f}), reference gamma={fit_ref.gamma:.3f} (R2={fit_ref.r2:.4f})")
    for p in written:
        print(f"wrote {p}")
    return 0


def cmd_preset(args: argparse.Namespace) -> int:
    if args.action == "list":
        for name in PRESETS:
            print(name)
        return 0
    if not args.name:
        print("preset show requires a name", file=sys.stderr)
        return 1
    cfg = apply_preset(VlConfig(), args.name)
    d = config_to_dict(cfg)
    d.pop("color_dir")
    print(f"# preset {args.name}")
    for key in ("shapes", "periodic", "micro", "textures", "depth", "perspective"):
        print(f"{key} = {str(d.pop(key)).lower()}")
    for key, value in d.items():
        if isinstance(value, dict):
            print(f"[{key}]")
            for k, v in value.items():
                print(f"  {k} = {v}")
        else:
            print(f"{key} = {value}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leafgen", description="Parametric dead-leaves image generator and statistics toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="render a deterministic image set")
    g.add_argument("--config", default=None, help="TOML or JSON config file")
    g.add_argument("--count", type=int, required=True, help="number of images")
    g.add_argument("--seed", type=int, required=True, help="global seed")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--preset", default=None, choices=sorted(PRESETS), help="ablation preset (overrides config toggles)")
    g.add_argument("--threads", type=int, default=1, help="parallel workers (default 1)")
    g.add_argument("--color-dir", default=None, help="directory of natural images for color sourcing")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("stats", help="compare a corpus against a reference folder")
    s.add_argument("--input", required=True, help="corpus directory")
    s.add_argument("--ref", required=True, help="natural reference directory")
    s.add_argument("--out", required=True, help="output JSON path (CSV and figures land next to it)")
    s.add_argument("--patch-size", type=int, default=500)
    s.add_argument("--patches", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_stats)

    p = sub.add_parser("preset", help="list or show built-in presets")
    p.add_argument("action", choices=["list", "show"])
    p.add_argument("name", nargs="?", default=None)
    p.set_defaults(func=cmd_preset)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
