"""Run manifest: JSON-lines reproducibility record for a generation run.

The first line is a header (tool version, global seed, preset, config hash,
requested count); each following line describes one image (index, derived
seed, preset, blur sigma, color-source id, output filename, leaf counts,
clipped-component fraction). Any single image can be regenerated
byte-identically from its record's seed and the run's config.
"""

from __future__ import annotations

import json

MANIFEST_NAME = "manifest.jsonl"

_HEADER_KEYS = ("version", "global_seed", "preset", "config_hash", "count")
_RECORD_KEYS = ("index", "seed", "preset", "sigma", "color_source", "path")


def write_manifest(path: str, header: dict, records: list[dict]) -> None:
    """Write header + records as JSON lines; records are sorted by index."""
    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise ValueError(f"header missing keys: {missing}")
    for rec in records:
        bad = [k for k in _RECORD_KEYS if k not in rec]
        if bad:
            raise ValueError(f"record {rec.get('index')} missing keys: {bad}")
    if header["count"] != len(records):
        raise ValueError(f"header count {header['count']} != {len(records)} records")
    lines = [json.dumps(header, sort_keys=True)]
    lines += [json.dumps(rec, sort_keys=True) for rec in sorted(records, key=lambda r: r["index"])]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_manifest(path: str) -> tuple[dict, list[dict]]:
    """Parse a manifest back into (header, records)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"empty manifest: {path}")
    header = json.loads(lines[0])
    records = [json.loads(ln) for ln in lines[1:]]
    if header.get("count") != len(records):
        raise ValueError(f"manifest {path}: header count {header.get('count')} != {len(records)} records")
    return header, records
