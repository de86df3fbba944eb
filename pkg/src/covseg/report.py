"""Serialisation of segmentation results and spectra.

All numbers are emitted with 12 significant digits so that reports are
byte-stable across runs.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import shutil
import tempfile
from pathlib import Path
from typing import Dict, Iterable, List, Optional

import numpy as np

from . import __version__
from .kernels import ReturnMatrix
from .segmentation import DeltaSpectrum, SegmentationResult, normalized_js

DIGITS = 12


def fmt(x) -> str:
    return f"{float(x):.{DIGITS}g}"


def num(x):
    """Round to 12 significant digits for JSON emission."""
    if x is None:
        return None
    return float(fmt(x))


def config_hash(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def run_metadata(data: ReturnMatrix, result: SegmentationResult, extra: Optional[dict] = None) -> dict:
    cfg = result.config
    margin = cfg.margin(data.M)
    settings = dict(cfg.to_dict())
    settings.update(extra or {})
    return {
        "tool": "covseg",
        "version": __version__,
        "M": data.M,
        "T": data.T,
        "delta0": num(cfg.delta0),
        "margin_factor": cfg.min_margin_factor,
        "t_min": margin,
        "t_max": f"n-{margin}",
        "refine": cfg.refine,
        "config_hash": config_hash(settings),
        "settings": {k: (num(v) if isinstance(v, float) else v) for k, v in sorted(settings.items())},
    }


def segment_rows(data: ReturnMatrix, result: SegmentationResult) -> List[dict]:
    rows = []
    for k, seg in enumerate(result.segments, start=1):
        a, b = seg.range
        rows.append(
            {
                "k": k,
                "start_column": a,
                "end_column": b,
                "start": data.timestamps[a],
                "end": data.timestamps[b - 1],
                "length": seg.length,
                "depth": seg.depth,
                "entropy": num(seg.entropy),
                "eigenvalues": [num(v) for v in seg.eigenvalues],
                "mean": [num(v) for v in seg.stats.mean],
            }
        )
    return rows


def build_report(data: ReturnMatrix, result: SegmentationResult, extra: Optional[dict] = None) -> dict:
    return {
        "metadata": run_metadata(data, result, extra),
        "labels": list(data.labels),
        "segments": segment_rows(data, result),
        "tree": result.tree.to_dict(),
    }


def _csv_text(header: List[str], rows: Iterable[List]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _tree_rows(node: dict, rows: List[List]) -> None:
    rows.append(
        [
            node["range"][0],
            node["range"][1],
            node["depth"],
            "" if node["delta_star"] is None else node["delta_star"],
            "accepted" if node["accepted"] else "rejected",
            node.get("split", ""),
            node.get("reason", ""),
        ]
    )
    if node["accepted"]:
        _tree_rows(node["left"], rows)
        _tree_rows(node["right"], rows)


def render_files(report: dict) -> Dict[str, str]:
    """File name -> contents for every artefact of a segment run."""
    meta = report["metadata"]
    segs = report["segments"]
    m = meta["M"]
    header_lines = "".join(
        f"# {key}={meta[key]}\n" for key in ("tool", "version", "M", "T", "delta0", "t_min", "t_max", "config_hash")
    )
    table = _csv_text(
        ["k", "start", "end", "start_column", "end_column", "length", "entropy"]
        + [f"lambda{i + 1}" for i in range(m)],
        (
            [s["k"], s["start"], s["end"], s["start_column"], s["end_column"], s["length"], s["entropy"]]
            + s["eigenvalues"]
            for s in segs
        ),
    )
    entropy = _csv_text(
        ["k", "start", "end", "start_column", "end_column", "entropy"],
        ([s["k"], s["start"], s["end"], s["start_column"], s["end_column"], s["entropy"]] for s in segs),
    )
    eig_cols = ["lambda1"] + (["lambda2"] if m > 1 else [])
    eigen = _csv_text(
        ["k", "start", "end", "start_column", "end_column"] + eig_cols,
        (
            [s["k"], s["start"], s["end"], s["start_column"], s["end_column"]] + s["eigenvalues"][: len(eig_cols)]
            for s in segs
        ),
    )
    tree_rows: List[List] = []
    _tree_rows(report["tree"], tree_rows)
    tree_csv = _csv_text(["start_column", "end_column", "depth", "delta_star", "status", "split", "reason"], tree_rows)
    return {
        "segments.csv": header_lines + table,
        "segments.json": json.dumps(report, indent=2, sort_keys=True) + "\n",
        "entropy.csv": entropy,
        "eigenvalues.csv": eigen,
        "tree.json": json.dumps(report["tree"], indent=2, sort_keys=True) + "\n",
        "tree.csv": tree_csv,
    }


def write_files(out_dir, files: Dict[str, str]) -> List[Path]:
    """Write every file or none: stage in a temp dir, then move into place."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=".covseg-", dir=out_dir))
    written: List[Path] = []
    try:
        for name, text in files.items():
            (staging / name).write_text(text)
        for name in files:
            target = out_dir / name
            (staging / name).replace(target)
            written.append(target)
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    return written


def spectrum_text(data: ReturnMatrix, spectrum: DeltaSpectrum) -> str:
    js = normalized_js(spectrum)
    start = spectrum.segment_range[0]
    rows = []
    for t, d, j in zip(spectrum.offsets, spectrum.values, js):
        col = start + int(t)
        rows.append([int(t), col, data.timestamps[col], float(d), float(j), int(int(t) == spectrum.best_offset)])
    head = (
        f"# range=[{spectrum.segment_range[0]}, {spectrum.segment_range[1]})\n"
        f"# best_offset={spectrum.best_offset}\n"
        f"# best_value={fmt(spectrum.best_value)}\n"
    )
    return head + _csv_text(["t", "column", "timestamp", "delta", "js", "best"], rows)


def series_text(data: ReturnMatrix, digits: int = DIGITS) -> str:
    """Delimited rate file whose log-returns reproduce ``data``.

    Rates start at 1.0 at timestamp 0; the return columns are stamped 1..T.
    """
    levels = np.concatenate([np.zeros((data.M, 1)), np.cumsum(data.values, axis=1)], axis=1)
    rates = np.exp(levels)
    rows = ([t] + [f"{v:.{digits}g}" for v in rates[:, t]] for t in range(data.T + 1))
    return _csv_text(["t"] + list(data.labels), rows)
