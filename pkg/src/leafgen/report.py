"""Stats report rendering: JSON, CSV, and matplotlib figures.

The stats command writes one JSON report plus, next to it, a long-format
CSV of the radial spectra (corpus, freq, power) and two PNG figures: the
gradient-magnitude histograms (linear and log scale) and the radially
averaged power spectra in log-log with the fitted slopes.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .stats import GradHistogram, RadialSpectrum, SlopeFit


def write_stats_json(path: str, report: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_spectrum_csv(path: str, spectra: dict[str, RadialSpectrum]) -> None:
    """Long-format (corpus, freq, power) rows, reporting band only."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["corpus", "freq_cycles_per_pixel", "mean_power"])
        for name, rs in spectra.items():
            keep = rs.freqs <= 0.5
            for f, p in zip(rs.freqs[keep], rs.power[keep]):
                writer.writerow([name, f"{f:.6g}", f"{p:.8g}"])


def _hist_centers(h: GradHistogram):
    return 0.5 * (h.bin_edges[:-1] + h.bin_edges[1:])


def render_gradient_figure(path: str, hists: dict[str, GradHistogram]) -> None:
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for name, h in hists.items():
        centers = _hist_centers(h)
        for ax in axes:
            ax.plot(centers, h.densities, label=name, linewidth=1.2)
    axes[0].set_title("gradient magnitude histogram")
    axes[1].set_yscale("log")
    axes[1].set_title("log scale")
    for ax in axes:
        ax.set_xlabel(r"$\|\nabla I\|_2$")
        ax.set_ylabel("density")
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_spectrum_figure(path: str, spectra: dict[str, RadialSpectrum], fits: dict[str, SlopeFit]) -> None:
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for name, rs in spectra.items():
        keep = (rs.freqs <= 0.5) & (rs.power > 0)
        ax.loglog(rs.freqs[keep], rs.power[keep], label=name, linewidth=1.2)
        fit = fits.get(name)
        if fit is not None:
            lo, hi = fit.freq_range
            band = rs.freqs[keep]
            band = band[(band >= lo) & (band <= hi)]
            if len(band):
                anchor_idx = int(np.argmin(np.abs(rs.freqs - band[0])))
                anchor = rs.power[anchor_idx]
                ax.loglog(
                    band,
                    anchor * (band / band[0]) ** (-fit.gamma),
                    "--",
                    linewidth=1.0,
                    label=f"{name} fit: $\\gamma$={fit.gamma:.2f}, $R^2$={fit.r2:.3f}",
                )
    ax.set_xlabel("frequency (cycles/pixel)")
    ax.set_ylabel("mean power")
    ax.set_title("radially averaged power spectrum")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_stats_outputs(
    out_json: str,
    report: dict,
    hists: dict[str, GradHistogram],
    spectra: dict[str, RadialSpectrum],
    fits: dict[str, SlopeFit],
) -> list[str]:
    """Write the JSON report and its side-car CSV and figures.

    Side-car names derive from the JSON path stem; the list of all written
    files is stored under report['outputs'] and returned.
    """
    out = Path(out_json)
    stem = out.with_suffix("")
    csv_path = f"{stem}.csv"
    grad_png = f"{stem}_gradient.png"
    spec_png = f"{stem}_spectrum.png"
    write_spectrum_csv(csv_path, spectra)
    render_gradient_figure(grad_png, hists)
    render_spectrum_figure(spec_png, spectra, fits)
    written = [str(out), csv_path, grad_png, spec_png]
    report = dict(report, outputs=[str(Path(p).name) for p in written])
    write_stats_json(str(out), report)
    return written
